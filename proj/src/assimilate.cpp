#include "priceform/assimilate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double dt = t[k + 1] - t[k];
    if (dt <= 0.0)
      fail(ErrorCode::invalid_argument,
           "sample instants must be strictly increasing");
    w[k] += 0.5 * dt;
    w[k + 1] += 0.5 * dt;
  }
  return w;
}

/// Hat with peak 1 at nodes[j], falling linearly to the neighbouring nodes;
/// the first and last hats extend flat past the end of the range so that
/// roundoff in mapped coordinates cannot dent the boundary basis.
double hat_value(const std::vector<double>& nodes, std::size_t j, double x) {
  const double c = nodes[j];
  if (x <= c) {
    if (j == 0) return 1.0;
    const double lo = nodes[j - 1];
    return x <= lo ? 0.0 : (x - lo) / (c - lo);
  }
  if (j + 1 == nodes.size()) return 1.0;
  const double hi = nodes[j + 1];
  return x >= hi ? 0.0 : (hi - x) / (hi - c);
}

/// Piecewise-linear evaluation of coefficient values over the basis nodes.
double polyline(const std::vector<double>& nodes,
                const std::vector<double>& values, double x) {
  if (x <= nodes.front()) return values.front();
  if (x >= nodes.back()) return values.back();
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - nodes.begin()) - 1;
  const double t = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
  return values[j] + t * (values[j + 1] - values[j]);
}

void check_config(const AssimilationConfig& cfg) {
  if (cfg.n_cells < 2)
    fail(ErrorCode::invalid_argument, "need at least two density cells");
  if (cfg.half_width <= 0.0)
    fail(ErrorCode::invalid_argument, "half width must be positive");
  if (cfg.transaction_cost <= 0.0)
    fail(ErrorCode::invalid_argument, "transaction cost must be positive");
  if (!(cfg.start_time < cfg.final_time))
    fail(ErrorCode::invalid_argument,
         "the start instant must precede the final instant");
  if (cfg.basis_count < 2)
    fail(ErrorCode::invalid_argument, "need at least two basis functions");
  if (cfg.basis_count > static_cast<std::size_t>(cfg.n_cells) + 1)
    fail(ErrorCode::invalid_argument,
         "at most one basis function per grid node");
  if (cfg.refinement < 1)
    fail(ErrorCode::invalid_argument, "refinement stride must be at least 1");
}

}  // namespace

double duality_rhs(const ControlSolution& sol, const PriceSeries& data,
                   double transaction_cost, double half_width,
                   const NodalField* density_at_start) {
  if (data.size() < 2 || data.prices.size() != data.size() ||
      data.rates.size() != data.size())
    fail(ErrorCode::invalid_argument, "need at least two aligned data samples");
  if (sol.trajectory.size() != data.size() ||
      sol.control.size() != data.size())
    fail(ErrorCode::invalid_argument,
         "control solution and data must share the time grid");
  const double scale = std::max(1.0, std::abs(data.times.back()));
  for (std::size_t k = 0; k < data.size(); ++k)
    if (std::abs(sol.trajectory.times[k] - data.times[k]) > 1e-9 * scale)
      fail(ErrorCode::invalid_argument,
           "control solution and data must share the time grid");

  const Side side = sol.side;
  const double a = transaction_cost;
  const double L = half_width;
  const std::vector<double> theta = trapezoid_weights(data.times);

  double time_term = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double p = data.prices[k];
    const double x = (side == Side::left) ? p - a : p + a;
    if ((side == Side::left && x < -L - 1e-12) ||
        (side == Side::right && x > L + 1e-12))
      fail(ErrorCode::shift_out_of_domain,
           "transaction point leaves the subdomain at t = " +
               std::to_string(data.times[k]));
    double y = map_to_reference(x, p, L, side);
    y = std::min(1.0, std::max(0.0, y));
    const double state = interpolate(sol.trajectory.snapshots[k], y);
    const double gap = (side == Side::left) ? state - sol.control[k]
                                            : sol.control[k] - state;
    time_term += theta[k] * data.rates[k] * gap;
  }

  double space_term = 0.0;
  if (density_at_start != nullptr) {
    const double p0 = data.prices.front();
    const double width = (side == Side::left) ? p0 + L : L - p0;
    const NodalField& state0 = sol.trajectory.snapshots.front();
    const Grid& ref = sol.trajectory.grid;
    const double h = ref.h();
    for (int i = 0; i <= ref.n_cells; ++i) {
      double x = map_from_reference(ref.node(i), p0, L, side);
      x = std::min(density_at_start->grid.x_hi,
                   std::max(density_at_start->grid.x_lo, x));
      const double weight = (i == 0 || i == ref.n_cells) ? 0.5 * h : h;
      space_term += weight * interpolate(*density_at_start, x) *
                    state0.values[static_cast<std::size_t>(i)];
    }
    space_term *= width;
  }
  return time_term + space_term;
}

ReconstructionResult reconstruct_final_density(
    const PriceSeries& data, const AssimilationConfig& cfg,
    const NodalField* density_at_start) {
  check_config(cfg);
  if (cfg.mode == ReconstructionMode::verification &&
      density_at_start == nullptr)
    fail(ErrorCode::invalid_argument,
         "verification mode needs the density at the start instant");
  if (data.size() < 2)
    fail(ErrorCode::invalid_argument, "need at least two data samples");
  const double scale = std::max(1.0, std::abs(cfg.final_time));
  if (std::abs(data.times.back() - cfg.final_time) > 1e-9 * scale)
    fail(ErrorCode::invalid_argument,
         "data must end at the reconstruction instant");

  std::size_t start = data.size();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (std::abs(data.times[i] - cfg.start_time) <= 1e-9 * scale) {
      start = i;
      break;
    }
  if (start == data.size())
    fail(ErrorCode::invalid_argument,
         "the start instant must lie on the data time grid");
  if ((data.size() - 1 - start) % cfg.refinement != 0)
    fail(ErrorCode::invalid_argument,
         "refinement stride must divide the data range evenly");
  const std::size_t n_steps = (data.size() - 1 - start) / cfg.refinement;
  if (n_steps < 1)
    fail(ErrorCode::invalid_argument, "need at least one time step");

  PriceSeries sliced;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const std::size_t i = start + k * cfg.refinement;
    sliced.times.push_back(data.times[i]);
    sliced.prices.push_back(data.prices[i]);
    sliced.rates.push_back(data.rates[i]);
  }

  const double L = cfg.half_width;
  const double split = sliced.prices.back();
  const Grid grid = build_uniform_grid(L, cfg.n_cells);
  const Grid reference = build_interval_grid(0.0, 1.0, cfg.n_cells);

  const std::size_t count = cfg.basis_count;
  std::vector<double> nodes(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double pos = static_cast<double>(j) *
                       static_cast<double>(cfg.n_cells) /
                       static_cast<double>(count - 1);
    nodes[j] = grid.node(static_cast<int>(std::llround(pos)));
  }
  std::size_t n_left = 0;
  while (n_left < count && nodes[n_left] <= split) ++n_left;

  // Both needed side maps are built up front so the basis solves share
  // immutable inputs; a side with no hats routed to it is never built.
  MapCoefficients by_side[2];
  if (n_left > 0)
    by_side[0] = coefficients(sliced, L, Side::left, cfg.price_margin);
  if (n_left < count)
    by_side[1] = coefficients(sliced, L, Side::right, cfg.price_margin);

  ReconstructionResult out;
  out.split = split;
  out.basis_nodes = nodes;
  out.coefficients.assign(count, 0.0);
  out.diagnostics.resize(count);
  out.controls.resize(count);
  out.control_times = sliced.times;
  std::vector<double> rhs(count, 0.0);

  const NodalField* known =
      cfg.mode == ReconstructionMode::verification ? density_at_start : nullptr;
  auto solve_one = [&](std::size_t j) {
    const Side side = j < n_left ? Side::left : Side::right;
    const NodalField psi = sample_field(reference, [&](double y) {
      return hat_value(nodes, j, map_from_reference(y, split, L, side));
    });
    const MapCoefficients& coeffs = by_side[side == Side::left ? 0 : 1];
    ControlSolution sol = solve_null_control(psi, coeffs, cfg.settings);
    rhs[j] = duality_rhs(sol, sliced, cfg.transaction_cost, L, known);
    out.diagnostics[j] = {nodes[j],      side,
                          sol.iterations, sol.converged,
                          sol.residual,  sol.objective_history.back(),
                          rhs[j]};
    out.controls[j] = std::move(sol.control);
  };
  const std::size_t workers = std::min<std::size_t>(
      std::max<std::size_t>(cfg.parallel, 1), count);
  if (workers <= 1) {
    for (std::size_t j = 0; j < count; ++j) solve_one(j);
  } else {
    // Each index is claimed once and written to its own slot, so the result
    // does not depend on how the indices land on the threads.
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = next.fetch_add(1); j < count;
               j = next.fetch_add(1))
            solve_one(j);
        } catch (...) {
          errors[w] = std::current_exception();
          next.store(count);  // stop handing out work
        }
      });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Per-side clipped mass systems. Each side's mesh borrows one node across
  // the split so the interface hat keeps its true falling edge; the borrowed
  // row and column are then dropped: the two sides stay uncoupled, as the
  // identities treat them.
  if (n_left > 0) {
    std::vector<double> mesh(nodes.begin(),
                             nodes.begin() + static_cast<long>(n_left));
    if (n_left < count) mesh.push_back(nodes[n_left]);
    TridiagonalSystem gram = assemble_p1_mass(mesh, -L, split);
    gram.diag.resize(n_left);
    gram.sub.resize(n_left - 1);
    gram.super.resize(n_left - 1);
    const std::vector<double> part = solve_tridiagonal(
        gram, std::span<const double>(rhs.data(), n_left));
    std::copy(part.begin(), part.end(), out.coefficients.begin());
  }
  if (n_left < count) {
    const std::size_t n_right = count - n_left;
    std::vector<double> mesh;
    if (n_left > 0) mesh.push_back(nodes[n_left - 1]);
    mesh.insert(mesh.end(), nodes.begin() + static_cast<long>(n_left),
                nodes.end());
    const TridiagonalSystem gram = assemble_p1_mass(mesh, split, L);
    const std::size_t off = mesh.size() - n_right;
    TridiagonalSystem block;
    block.diag.assign(gram.diag.begin() + static_cast<long>(off),
                      gram.diag.end());
    block.sub.assign(gram.sub.begin() + static_cast<long>(off),
                     gram.sub.end());
    block.super.assign(gram.super.begin() + static_cast<long>(off),
                       gram.super.end());
    const std::vector<double> part = solve_tridiagonal(
        block, std::span<const double>(rhs.data() + n_left, n_right));
    std::copy(part.begin(), part.end(),
              out.coefficients.begin() + static_cast<long>(n_left));
  }

  std::vector<double> values(static_cast<std::size_t>(grid.n_nodes()));
  for (int i = 0; i < grid.n_nodes(); ++i)
    values[static_cast<std::size_t>(i)] =
        polyline(nodes, out.coefficients, grid.node(i));
  out.density = make_field(grid, std::move(values));
  return out;
}

double reconstruction_error(const NodalField& reconstructed,
                            const NodalField& reference, ErrorRegion region,
                            double split) {
  if (!reconstructed.grid.same_as(reference.grid))
    fail(ErrorCode::invalid_argument, "fields must share one grid");
  const Grid& grid = reconstructed.grid;
  const double h = grid.h();
  double num = 0.0;
  double den = 0.0;
  for (int c = 0; c < grid.n_cells; ++c) {
    if (region == ErrorRegion::interior) {
      if (c == 0 || c == grid.n_cells - 1) continue;
      if (grid.node(c) <= split && split <= grid.node(c + 1)) continue;
    }
    for (int i = c; i <= c + 1; ++i) {
      const double d = reconstructed.values[static_cast<std::size_t>(i)] -
                       reference.values[static_cast<std::size_t>(i)];
      const double r = reference.values[static_cast<std::size_t>(i)];
      num += 0.5 * h * d * d;
      den += 0.5 * h * r * r;
    }
  }
  if (den == 0.0)
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

}  // namespace priceform
