#include "priceform/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

constexpr double kNodeTol = 1e-10;

int checked_shift_count(double ratio, const std::string& what) {
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
    fail(ErrorCode::misaligned_transform,
         what + " = " + std::to_string(ratio) + " is not an integer");
  return static_cast<int>(rounded);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_sign_structure(const NodalField& f0, double p0) {
  const double tol = 1e-9 * (1.0 + max_abs(f0.values));
  for (int i = 0; i < f0.grid.n_nodes(); ++i) {
    const double x = f0.grid.node(i);
    const double v = f0.values[static_cast<std::size_t>(i)];
    const bool bad = (x < p0 - kNodeTol && v < -tol) ||
                     (x > p0 + kNodeTol && v > tol) ||
                     (std::abs(x - p0) <= kNodeTol && std::abs(v) > tol);
    if (bad)
      fail(ErrorCode::incompatible_initial_datum,
           "datum violates the sign structure at x = " + std::to_string(x));
  }
}

void require_symmetric_interval(const Grid& grid) {
  if (std::abs(grid.x_lo + grid.x_hi) > kNodeTol)
    fail(ErrorCode::invalid_argument,
         "transform requires a symmetric interval [-L, L]");
}

TridiagonalSystem stiffness_matrix(const Grid& grid) {
  const std::size_t n = static_cast<std::size_t>(grid.n_nodes());
  const double inv_h = 1.0 / grid.h();
  TridiagonalSystem k;
  k.diag.assign(n, 2.0 * inv_h);
  k.diag.front() = inv_h;
  k.diag.back() = inv_h;
  k.sub.assign(n - 1, -inv_h);
  k.super.assign(n - 1, -inv_h);
  return k;
}

int checked_cell_multiple(const Grid& grid, double length) {
  if (length <= 0.0)
    fail(ErrorCode::invalid_argument, "transaction cost must be positive");
  const double ratio = length / grid.h();
  const int m = checked_shift_count(ratio, "jump/cell ratio");
  if (m < 1 || m >= grid.n_cells)
    fail(ErrorCode::misaligned_transform,
         "jump covers " + std::to_string(m) + " cells of " +
             std::to_string(grid.n_cells));
  return m;
}

double sparse_dot(const std::vector<std::pair<int, double>>& row,
                  const std::vector<double>& v) {
  double s = 0.0;
  for (const auto& [j, c] : row) s += c * v[static_cast<std::size_t>(j)];
  return s;
}

}  // namespace

TransformSpec make_transform_spec(double transaction_cost, double initial_price,
                                  double half_width) {
  if (transaction_cost <= 0.0 || half_width <= 0.0)
    fail(ErrorCode::invalid_argument,
         "transaction cost and half-width must be positive");
  if (initial_price <= -half_width + transaction_cost ||
      initial_price >= half_width - transaction_cost)
    fail(ErrorCode::invalid_argument,
         "initial price outside (-L + a, L - a)");
  TransformSpec spec;
  spec.transaction_cost = transaction_cost;
  spec.initial_price = initial_price;
  spec.k_left = checked_shift_count(
      (initial_price + half_width) / transaction_cost, "(p0 + L)/a");
  spec.k_right = checked_shift_count(
      (half_width - initial_price) / transaction_cost, "(L - p0)/a");
  return spec;
}

NodalField transform(const NodalField& f0, const TransformSpec& spec) {
  require_symmetric_interval(f0.grid);
  const double L = f0.grid.half_width();
  const double a = spec.transaction_cost;
  const double p0 = spec.initial_price;
  const int k_left =
      checked_shift_count((p0 + L) / a, "(p0 + L)/a");
  const int k_right =
      checked_shift_count((L - p0) / a, "(L - p0)/a");
  if (k_left != spec.k_left || k_right != spec.k_right)
    fail(ErrorCode::misaligned_transform,
         "shift counts do not match the field's interval");
  check_sign_structure(f0, p0);

  NodalField out = make_field(f0.grid, std::vector<double>(
                                           f0.values.size(), 0.0));
  for (int i = 0; i < f0.grid.n_nodes(); ++i) {
    const double x = f0.grid.node(i);
    double sum = 0.0;
    if (x < p0 - kNodeTol) {
      for (int n = 0; n <= k_left; ++n) {
        const double v = eval_extended(f0, x + n * a);
        if (v > 0.0) sum += v;
      }
    } else if (x > p0 + kNodeTol) {
      for (int n = 0; n <= k_right; ++n) {
        const double v = eval_extended(f0, x - n * a);
        if (v < 0.0) sum += v;
      }
    }
    out.values[static_cast<std::size_t>(i)] = sum;
  }
  return out;
}

NodalField back_transform(const NodalField& F, const TransformSpec& spec) {
  if (max_abs(F.values) == 0.0)
    return make_field(F.grid, std::vector<double>(F.values.size(), 0.0));
  zero_crossing(F);  // validates the single sign change
  const double a = spec.transaction_cost;
  NodalField out = make_field(F.grid, F.values);
  for (int i = 0; i < F.grid.n_nodes(); ++i) {
    const double x = F.grid.node(i);
    const double up = eval_extended(F, x + a);
    const double down = eval_extended(F, x - a);
    out.values[static_cast<std::size_t>(i)] =
        F.values[static_cast<std::size_t>(i)] - std::max(up, 0.0) -
        std::min(down, 0.0);
  }
  return out;
}

HeatStepper::HeatStepper(const Grid& grid, double dt, BoundaryMode bc,
                         double transaction_cost)
    : grid_(grid),
      dt_(dt),
      bc_(bc),
      mass_(assemble_mass_matrix(grid, grid.x_lo, grid.x_hi)),
      natural_([&] {
        if (dt <= 0.0)
          fail(ErrorCode::invalid_argument, "time step must be positive");
        TridiagonalSystem t = stiffness_matrix(grid);
        const std::size_t n = t.diag.size();
        const TridiagonalSystem m =
            assemble_mass_matrix(grid, grid.x_lo, grid.x_hi);
        for (std::size_t j = 0; j < n; ++j)
          t.diag[j] = m.diag[j] + dt * t.diag[j];
        for (std::size_t j = 0; j + 1 < n; ++j) {
          t.sub[j] = m.sub[j] + dt * t.sub[j];
          t.super[j] = m.super[j] + dt * t.super[j];
        }
        return TridiagonalFactorization(t);
      }()) {
  if (bc_ != BoundaryMode::nonlocal) return;

  const int m = checked_cell_multiple(grid_, transaction_cost);
  shift_cells_ = m;
  const int last = grid_.n_cells;
  const std::size_t n = static_cast<std::size_t>(grid_.n_nodes());

  // Constraint rows: slope over the first cell equals the slope over the
  // cell one jump inward, and mirrored at the other end.
  auto build_row = [&](std::vector<std::pair<int, double>> entries,
                       int row_index) {
    // fold duplicate columns (the m = 1 case overlaps), then subtract the
    // natural row so the pair (e_row, delta) is a rank-1 update
    std::vector<std::pair<int, double>> folded;
    std::sort(entries.begin(), entries.end());
    for (const auto& e : entries) {
      if (!folded.empty() && folded.back().first == e.first)
        folded.back().second += e.second;
      else
        folded.push_back(e);
    }
    const TridiagonalSystem mfull =
        assemble_mass_matrix(grid_, grid_.x_lo, grid_.x_hi);
    const TridiagonalSystem k = stiffness_matrix(grid_);
    auto natural_entry = [&](int col) {
      if (col == row_index)
        return mfull.diag[static_cast<std::size_t>(col)] +
               dt_ * k.diag[static_cast<std::size_t>(col)];
      if (col == row_index + 1)
        return mfull.super[static_cast<std::size_t>(row_index)] +
               dt_ * k.super[static_cast<std::size_t>(row_index)];
      if (col == row_index - 1)
        return mfull.sub[static_cast<std::size_t>(col)] +
               dt_ * k.sub[static_cast<std::size_t>(col)];
      return 0.0;
    };
    for (int col : {row_index - 1, row_index, row_index + 1}) {
      if (col < 0 || col >= grid_.n_nodes()) continue;
      const double nat = natural_entry(col);
      if (nat == 0.0) continue;
      auto it = std::find_if(folded.begin(), folded.end(),
                             [&](const auto& e) { return e.first == col; });
      if (it == folded.end())
        folded.emplace_back(col, -nat);
      else
        it->second -= nat;
    }
    return folded;
  };

  row_lo_ = build_row({{0, -1.0}, {1, 1.0}, {m, 1.0}, {m + 1, -1.0}}, 0);
  row_hi_ = build_row({{last, 1.0},
                       {last - 1, -1.0},
                       {last - m, -1.0},
                       {last - m - 1, 1.0}},
                      last);

  std::vector<double> e(n, 0.0);
  e[0] = 1.0;
  z_lo_ = natural_.solve(e);
  e[0] = 0.0;
  e[n - 1] = 1.0;
  z_hi_ = natural_.solve(e);

  // capacity matrix C = I + [delta_i . z_j], inverted once
  const double c00 = 1.0 + sparse_dot(row_lo_, z_lo_);
  const double c01 = sparse_dot(row_lo_, z_hi_);
  const double c10 = sparse_dot(row_hi_, z_lo_);
  const double c11 = 1.0 + sparse_dot(row_hi_, z_hi_);
  const double det = c00 * c11 - c01 * c10;
  const double scale = std::abs(c00 * c11) + std::abs(c01 * c10);
  if (scale == 0.0 || std::abs(det) <= 1e-14 * scale)
    fail(ErrorCode::singular_system, "boundary constraint rows are singular");
  cap_inv_[0][0] = c11 / det;
  cap_inv_[0][1] = -c01 / det;
  cap_inv_[1][0] = -c10 / det;
  cap_inv_[1][1] = c00 / det;
}

void HeatStepper::step_in_place(std::vector<double>& values) const {
  if (values.size() != static_cast<std::size_t>(grid_.n_nodes()))
    fail(ErrorCode::invalid_argument, "field size does not match the grid");
  std::vector<double> rhs = mass_.apply(values);
  if (bc_ == BoundaryMode::nonlocal) {
    rhs.front() = 0.0;
    rhs.back() = 0.0;
  }
  natural_.solve(rhs, values);
  if (bc_ == BoundaryMode::nonlocal) {
    const double s0 = sparse_dot(row_lo_, values);
    const double s1 = sparse_dot(row_hi_, values);
    const double c0 = cap_inv_[0][0] * s0 + cap_inv_[0][1] * s1;
    const double c1 = cap_inv_[1][0] * s0 + cap_inv_[1][1] * s1;
    for (std::size_t j = 0; j < values.size(); ++j)
      values[j] -= c0 * z_lo_[j] + c1 * z_hi_[j];
  }
}

NodalField HeatStepper::step(const NodalField& field) const {
  if (!field.grid.same_as(grid_))
    fail(ErrorCode::invalid_argument, "field grid does not match the stepper");
  NodalField out = field;
  step_in_place(out.values);
  return out;
}

NodalField step_heat(const NodalField& field, double dt, BoundaryMode bc,
                     double transaction_cost) {
  return HeatStepper(field.grid, dt, bc, transaction_cost).step(field);
}

double transaction_rate(const NodalField& F, double price) {
  const Grid& g = F.grid;
  if (price <= g.x_lo || price >= g.x_hi)
    fail(ErrorCode::out_of_domain, "price outside the interval");
  const double h = g.h();
  const int cell = g.cell_of(price);
  const auto& v = F.values;
  double slope;
  if (std::abs(price - g.node(cell)) <= kNodeTol && cell > 0) {
    slope = (v[static_cast<std::size_t>(cell + 1)] -
             v[static_cast<std::size_t>(cell - 1)]) /
            (2.0 * h);
  } else if (std::abs(price - g.node(cell + 1)) <= kNodeTol &&
             cell + 2 <= g.n_cells) {
    slope = (v[static_cast<std::size_t>(cell + 2)] -
             v[static_cast<std::size_t>(cell)]) /
            (2.0 * h);
  } else {
    slope = (v[static_cast<std::size_t>(cell + 1)] -
             v[static_cast<std::size_t>(cell)]) /
            h;
  }
  const double rate = -slope;
  if (rate <= 0.0)
    fail(ErrorCode::hopf_violation,
         "nonpositive transaction rate at the price");
  return rate;
}

ForwardResult run_forward(const NodalField& f0, const TransformSpec& spec,
                          double t_start, double t_end, int n_steps,
                          BoundaryMode bc, double margin) {
  if (!(t_end > t_start) || n_steps < 1)
    fail(ErrorCode::invalid_argument, "empty time horizon");
  const double L = f0.grid.half_width();
  if (!(margin > 0.0) || margin >= L)
    fail(ErrorCode::invalid_argument, "margin must lie in (0, L)");
  const double lo = -L + margin;
  const double hi = L - margin;
  const double dt = (t_end - t_start) / n_steps;

  ForwardResult result;
  result.trajectory.reserve(static_cast<std::size_t>(n_steps) + 1);
  result.trajectory.push_back(transform(f0, spec));
  const HeatStepper stepper(f0.grid, dt, bc, spec.transaction_cost);

  auto record = [&](const NodalField& F, double t) {
    const double p = zero_crossing(F);
    if (p <= lo || p >= hi)
      fail(ErrorCode::price_escaped,
           "price " + std::to_string(p) + " left the margin band at t = " +
               std::to_string(t));
    result.series.times.push_back(t);
    result.series.prices.push_back(p);
    result.series.rates.push_back(transaction_rate(F, p));
  };

  record(result.trajectory.front(), t_start);
  std::vector<double> state = result.trajectory.front().values;
  for (int k = 1; k <= n_steps; ++k) {
    stepper.step_in_place(state);
    result.trajectory.push_back(make_field(f0.grid, state));
    record(result.trajectory.back(),
           t_start + (t_end - t_start) * k / n_steps);
  }
  result.final_density = back_transform(result.trajectory.back(), spec);
  return result;
}

ForwardResult run_forward(const NodalField& f0, const TransformSpec& spec,
                          double t_end, int n_steps, BoundaryMode bc) {
  return run_forward(f0, spec, 0.0, t_end, n_steps, bc,
                     spec.transaction_cost);
}

double stationary_price(double mass_left, double mass_right,
                        double transaction_cost, double half_width) {
  if (mass_left < 0.0 || mass_right < 0.0)
    fail(ErrorCode::invalid_argument, "masses must be nonnegative");
  if (mass_left + mass_right == 0.0)
    fail(ErrorCode::invalid_argument, "at least one mass must be positive");
  if (transaction_cost < 0.0 || half_width <= 0.0)
    fail(ErrorCode::invalid_argument, "bad geometry parameters");
  // Zero of the linear long-time profile: the strip integrals over
  // [-L, -L+a] and [L-a, L] are conserved and equal the buyer mass and
  // minus the vendor mass, which pins the equilibrium line.
  const double total = mass_left + mass_right;
  return (2.0 * half_width - transaction_cost) * (mass_left - mass_right) /
         (2.0 * total);
}

double integrate(const NodalField& field) {
  const double h = field.grid.h();
  double sum = 0.5 * (field.values.front() + field.values.back());
  for (std::size_t j = 1; j + 1 < field.values.size(); ++j)
    sum += field.values[j];
  return h * sum;
}

FieldMasses field_masses(const NodalField& field) {
  FieldMasses masses;
  const double h = field.grid.h();
  for (int i = 0; i < field.grid.n_cells; ++i) {
    const double va = field.values[static_cast<std::size_t>(i)];
    const double vb = field.values[static_cast<std::size_t>(i + 1)];
    if (va >= 0.0 && vb >= 0.0) {
      masses.positive += 0.5 * h * (va + vb);
    } else if (va <= 0.0 && vb <= 0.0) {
      masses.negative += 0.5 * h * std::abs(va + vb);
    } else {
      const double s = va / (va - vb);  // crossing fraction inside the cell
      const double area_a = 0.5 * s * h * std::abs(va);
      const double area_b = 0.5 * (1.0 - s) * h * std::abs(vb);
      if (va > 0.0) {
        masses.positive += area_a;
        masses.negative += area_b;
      } else {
        masses.negative += area_a;
        masses.positive += area_b;
      }
    }
  }
  return masses;
}

std::pair<double, double> strip_counts(const NodalField& F,
                                       double transaction_cost) {
  const int m = checked_cell_multiple(F.grid, transaction_cost);
  const TridiagonalSystem mass =
      assemble_mass_matrix(F.grid, F.grid.x_lo, F.grid.x_hi);
  const std::vector<double> mf = mass.apply(F.values);
  const int last = F.grid.n_cells;
  double left = 0.0;
  for (int j = 1; j <= m; ++j) left += mf[static_cast<std::size_t>(j)];
  double right = 0.0;
  for (int j = last - m; j <= last - 1; ++j)
    right += mf[static_cast<std::size_t>(j)];
  return {left, -right};
}

}  // namespace priceform
