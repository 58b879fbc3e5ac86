#include "priceform/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

double waveform(PerturbationMode mode, std::size_t k, double t) {
  constexpr double pi = std::numbers::pi;
  if (mode == PerturbationMode::slow)
    return static_cast<double>(k) * std::sin(pi * t);
  return std::sin(4.0 * static_cast<double>(k) * pi * t);
}

/// max|a - b| plus the largest divided difference of a - b.
double c1_gap(const std::vector<double>& t, const std::vector<double>& a,
              const std::vector<double>& b) {
  double sup = 0.0;
  double slope = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sup = std::max(sup, std::abs(a[i] - b[i]));
    if (i + 1 < a.size()) {
      const double d = (a[i + 1] - b[i + 1]) - (a[i] - b[i]);
      slope = std::max(slope, std::abs(d / (t[i + 1] - t[i])));
    }
  }
  return sup + slope;
}

double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    sup = std::max(sup, std::abs(a[i] - b[i]));
  return sup;
}

/// Squared trapezoidal time integral of (a - b)^2.
double control_gap_sq(const std::vector<double>& t,
                      const std::vector<double>& a,
                      const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    acc += 0.5 * (t[i + 1] - t[i]) * (d0 * d0 + d1 * d1);
  }
  return acc;
}

}  // namespace

/// Pointwise node-scale differences of two hat expansions are dominated by
/// the weights adjacent to the two final prices, which the clipped mass
/// systems determine poorly; the cumulative profile integrates that wiggle
/// away.  The divided differences live on the basis mesh — the resolution
/// at which the expansions carry information — so the derivative part of
/// the norm is the largest gap in mean density over a basis cell.
double reconstruction_distance(const NodalField& a, const NodalField& b,
                               const std::vector<double>& basis_nodes) {
  const Grid& grid = a.grid;
  const double h = grid.h();
  const std::size_t n = a.values.size();
  std::vector<double> anti(n, 0.0);
  double sup = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d0 = a.values[i - 1] - b.values[i - 1];
    const double d1 = a.values[i] - b.values[i];
    anti[i] = anti[i - 1] + 0.5 * h * (d0 + d1);
    sup = std::max(sup, std::abs(anti[i]));
  }
  auto at_node = [&](double x) {
    const std::size_t i = static_cast<std::size_t>(
        std::lround((x - grid.node(0)) / h));
    return anti[std::min(i, n - 1)];
  };
  double slope = 0.0;
  for (std::size_t j = 0; j + 1 < basis_nodes.size(); ++j) {
    const double dx = basis_nodes[j + 1] - basis_nodes[j];
    slope = std::max(
        slope, std::abs(at_node(basis_nodes[j + 1]) - at_node(basis_nodes[j])) / dx);
  }
  return sup + slope;
}

PriceSeries perturb_price(const PriceSeries& base, double delta,
                          std::size_t k, PerturbationMode mode,
                          double half_width, double transaction_cost,
                          double rate_delta) {
  if (base.size() == 0)
    fail(ErrorCode::invalid_argument, "need a nonempty series to disturb");
  if (base.prices.size() != base.size() || base.rates.size() != base.size())
    fail(ErrorCode::invalid_argument, "series columns must have equal length");
  if (delta < 0.0)
    fail(ErrorCode::invalid_argument, "noise level must be nonnegative");
  if (!(half_width > 0.0) || transaction_cost < 0.0 ||
      !(transaction_cost < half_width))
    fail(ErrorCode::invalid_argument,
         "need 0 <= transaction cost < half width");
  const double lo = -half_width + transaction_cost;
  const double hi = half_width - transaction_cost;
  PriceSeries out = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double w = waveform(mode, k, base.times[i]);
    const double p = base.prices[i] + delta * w;
    if (!(p > lo && p < hi))
      fail(ErrorCode::price_escaped,
           "disturbed price leaves the margin band at t = " +
               std::to_string(base.times[i]));
    out.prices[i] = p;
    if (rate_delta != 0.0) out.rates[i] = base.rates[i] + rate_delta * w;
  }
  return out;
}

std::vector<StabilityRow> stability_sweep(const PriceSeries& clean,
                                          const AssimilationConfig& cfg,
                                          const NodalField* density_at_start,
                                          double delta, std::size_t count,
                                          PerturbationMode mode) {
  const ReconstructionResult base =
      reconstruct_final_density(clean, cfg, density_at_start);
  std::vector<StabilityRow> rows;
  rows.reserve(count + 1);
  rows.push_back(StabilityRow{0, 0.0, 0.0, 0.0});
  for (std::size_t k = 1; k <= count; ++k) {
    const PriceSeries noisy = perturb_price(
        clean, delta, k, mode, cfg.half_width, cfg.transaction_cost);
    const ReconstructionResult rec =
        reconstruct_final_density(noisy, cfg, density_at_start);
    StabilityRow row;
    row.index = k;
    row.delta_effective = c1_gap(clean.times, noisy.prices, clean.prices) +
                          sup_gap(noisy.rates, clean.rates);
    double acc = 0.0;
    // Controls are compared hat by hat. A hat whose peak changes sides
    // between the runs is still compared against its clean counterpart:
    // the index, not the side, identifies the basis function.
    for (std::size_t j = 0; j < base.controls.size(); ++j)
      acc += control_gap_sq(base.control_times, rec.controls[j],
                            base.controls[j]);
    row.control_error = std::sqrt(acc);
    row.density_error =
        reconstruction_distance(rec.density, base.density, base.basis_nodes);
    rows.push_back(row);
  }
  return rows;
}

Prediction predict_price(const NodalField& fhat, double transaction_cost,
                         double t_start, double horizon, int n_steps,
                         BoundaryMode bc, double margin) {
  const Grid& grid = fhat.grid;
  if (fhat.values.size() != static_cast<std::size_t>(grid.n_nodes()))
    fail(ErrorCode::invalid_argument, "field values must match its grid");
  if (!(transaction_cost > 0.0))
    fail(ErrorCode::invalid_argument, "transaction cost must be positive");
  if (!(horizon > 0.0) || n_steps < 1)
    fail(ErrorCode::invalid_argument,
         "need a positive horizon and at least one step");

  // The price restarts from the steepest downward zero crossing; smaller
  // wrong-sign wiggles elsewhere are reconstruction artefacts.
  double best_drop = 0.0;
  double crossing = 0.0;
  bool found = false;
  for (int i = 0; i + 1 < grid.n_nodes(); ++i) {
    const double v0 = fhat.values[static_cast<std::size_t>(i)];
    const double v1 = fhat.values[static_cast<std::size_t>(i + 1)];
    if (!(v0 >= 0.0 && v1 <= 0.0 && (v0 > 0.0 || v1 < 0.0))) continue;
    const double drop = v0 - v1;
    if (!found || drop > best_drop) {
      found = true;
      best_drop = drop;
      crossing = grid.node(i) + grid.h() * v0 / (v0 - v1);
    }
  }
  if (!found)
    fail(ErrorCode::incompatible_reconstruction,
         "the density never crosses from buyers to vendors");

  const double aligned =
      transaction_cost * std::round(crossing / transaction_cost);
  if (std::abs(aligned) >= grid.half_width())
    fail(ErrorCode::incompatible_reconstruction,
         "the crossing aligns onto the domain boundary");

  Prediction out;
  out.crossing = crossing;
  out.restart_price = aligned;
  out.restart = fhat;
  int last_left = -1;          // rightmost node left of the aligned price
  int first_right = grid.n_nodes();  // leftmost node right of it
  for (int i = 0; i < grid.n_nodes(); ++i) {
    double& v = out.restart.values[static_cast<std::size_t>(i)];
    const double x = grid.node(i);
    if (x < aligned - 1e-10) {
      v = std::max(v, 0.0);
      last_left = i;
    } else if (x > aligned + 1e-10) {
      v = std::min(v, 0.0);
      first_right = std::min(first_right, i);
    } else {
      v = 0.0;
    }
  }
  // The forward dynamics need a strict crossing at the restart price: a
  // zero plateau next to it would park the extracted price mid-cell where
  // the local slope — the transaction rate — vanishes. Fill any plateau by
  // ramping linearly to zero from the nearest strictly signed node.
  std::vector<double>& vals = out.restart.values;
  int left = last_left;
  while (left >= 0 && vals[static_cast<std::size_t>(left)] <= 0.0) --left;
  int right = first_right;
  while (right < grid.n_nodes() && vals[static_cast<std::size_t>(right)] >= 0.0)
    ++right;
  if (left < 0 || right >= grid.n_nodes())
    fail(ErrorCode::incompatible_reconstruction,
         "one side of the restart price carries no mass");
  for (int i = left + 1; i <= last_left; ++i)
    vals[static_cast<std::size_t>(i)] =
        vals[static_cast<std::size_t>(left)] * (aligned - grid.node(i)) /
        (aligned - grid.node(left));
  for (int i = first_right; i < right; ++i)
    vals[static_cast<std::size_t>(i)] =
        vals[static_cast<std::size_t>(right)] * (grid.node(i) - aligned) /
        (grid.node(right) - aligned);

  const TransformSpec spec =
      make_transform_spec(transaction_cost, aligned, grid.half_width());
  const double guard = margin > 0.0 ? margin : transaction_cost;
  ForwardResult run = run_forward(out.restart, spec, t_start,
                                  t_start + horizon, n_steps, bc, guard);
  out.series = std::move(run.series);
  return out;
}

}  // namespace priceform
