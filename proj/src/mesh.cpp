#include "priceform/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

constexpr double kDomainSlack = 1e-12;

}  // namespace

int Grid::cell_of(double x) const {
  int i = static_cast<int>(std::floor((x - x_lo) / h()));
  return std::clamp(i, 0, n_cells - 1);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> out(static_cast<std::size_t>(n_nodes()));
  for (int i = 0; i < n_nodes(); ++i) out[static_cast<std::size_t>(i)] = node(i);
  return out;
}

bool Grid::same_as(const Grid& other) const {
  const double tol = kDomainSlack * (x_hi - x_lo);
  return n_cells == other.n_cells && std::abs(x_lo - other.x_lo) <= tol &&
         std::abs(x_hi - other.x_hi) <= tol;
}

Grid build_uniform_grid(double half_width, int n_cells) {
  return build_interval_grid(-half_width, half_width, n_cells);
}

Grid build_interval_grid(double x_lo, double x_hi, int n_cells) {
  if (!(x_hi > x_lo))
    fail(ErrorCode::invalid_argument, "grid interval must have positive length");
  if (n_cells < 1) fail(ErrorCode::invalid_argument, "grid needs at least one cell");
  return Grid{x_lo, x_hi, n_cells};
}

NodalField make_field(const Grid& grid, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(grid.n_nodes()))
    fail(ErrorCode::invalid_argument, "nodal value count does not match the grid");
  return NodalField{grid, std::move(values)};
}

double interpolate(const NodalField& field, double x) {
  const Grid& g = field.grid;
  const double slack = kDomainSlack * (g.x_hi - g.x_lo);
  if (x < g.x_lo - slack || x > g.x_hi + slack)
    fail(ErrorCode::out_of_domain, "interpolation point outside the grid interval");
  const double xc = std::clamp(x, g.x_lo, g.x_hi);
  const int i = g.cell_of(xc);
  const double x0 = g.node(i);
  const double x1 = g.node(i + 1);
  const double t = (xc - x0) / (x1 - x0);
  const auto& v = field.values;
  return v[static_cast<std::size_t>(i)] * (1.0 - t) + v[static_cast<std::size_t>(i + 1)] * t;
}

double eval_extended(const NodalField& field, double x) {
  const Grid& g = field.grid;
  if (x < g.x_lo || x > g.x_hi) return 0.0;
  return interpolate(field, x);
}

double zero_crossing(const NodalField& field) {
  const auto& v = field.values;
  const Grid& g = field.grid;
  double vmax = 0.0;
  for (double value : v) vmax = std::max(vmax, std::abs(value));
  if (vmax == 0.0) fail(ErrorCode::no_price, "field is identically zero");
  const double tol = 1e-12 * vmax;

  int prev_idx = -1;
  int prev_sign = 0;
  int down_count = 0;
  int up_count = 0;
  double down_pos = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i) {
    const double value = v[static_cast<std::size_t>(i)];
    const int s = value > tol ? 1 : (value < -tol ? -1 : 0);
    if (s == 0) continue;
    if (prev_sign > 0 && s < 0) {
      ++down_count;
      if (i == prev_idx + 1) {
        const double a = v[static_cast<std::size_t>(prev_idx)];
        const double x0 = g.node(prev_idx);
        down_pos = x0 + (g.node(i) - x0) * a / (a - value);
      } else {
        // A run of zero nodes separates the regions; take its midpoint.
        down_pos = 0.5 * (g.node(prev_idx + 1) + g.node(i - 1));
      }
    } else if (prev_sign < 0 && s > 0) {
      ++up_count;
    }
    prev_sign = s;
    prev_idx = i;
  }

  if (down_count == 1 && up_count == 0) return down_pos;
  if (down_count == 0)
    fail(ErrorCode::no_price, "field never changes sign from positive to negative");
  fail(ErrorCode::ambiguous_price, "field changes sign more than once");
}

std::vector<double> TridiagonalSystem::apply(std::span<const double> x) const {
  const std::size_t n = size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = diag[i] * x[i];
    if (i > 0) acc += sub[i - 1] * x[i - 1];
    if (i + 1 < n) acc += super[i] * x[i + 1];
    y[i] = acc;
  }
  return y;
}

TridiagonalFactorization::TridiagonalFactorization(const TridiagonalSystem& system) {
  const std::size_t n = system.size();
  if (n == 0) fail(ErrorCode::invalid_argument, "cannot factor an empty system");
  if (system.sub.size() != n - 1 || system.super.size() != n - 1)
    fail(ErrorCode::invalid_argument, "tridiagonal band sizes are inconsistent");
  sub_.assign(n > 1 ? n - 1 : 0, 0.0);
  pivot_.assign(n, 0.0);
  super_ = system.super;

  auto check = [&](std::size_t i, double pivot) {
    double scale = std::abs(system.diag[i]);
    if (i > 0) scale += std::abs(system.sub[i - 1]);
    if (i + 1 < n) scale += std::abs(system.super[i]);
    if (scale == 0.0 || std::abs(pivot) <= 1e-14 * scale)
      fail(ErrorCode::singular_system, "tridiagonal pivot vanished during elimination");
  };

  pivot_[0] = system.diag[0];
  check(0, pivot_[0]);
  for (std::size_t i = 1; i < n; ++i) {
    const double m = system.sub[i - 1] / pivot_[i - 1];
    sub_[i - 1] = m;
    pivot_[i] = system.diag[i] - m * system.super[i - 1];
    check(i, pivot_[i]);
  }
}

void TridiagonalFactorization::solve(std::span<const double> rhs,
                                     std::span<double> out) const {
  const std::size_t n = pivot_.size();
  if (rhs.size() != n || out.size() != n)
    fail(ErrorCode::invalid_argument, "right-hand side size does not match the system");
  out[0] = rhs[0];
  for (std::size_t i = 1; i < n; ++i) out[i] = rhs[i] - sub_[i - 1] * out[i - 1];
  out[n - 1] /= pivot_[n - 1];
  for (std::size_t i = n - 1; i-- > 0;)
    out[i] = (out[i] - super_[i] * out[i + 1]) / pivot_[i];
}

std::vector<double> TridiagonalFactorization::solve(std::span<const double> rhs) const {
  std::vector<double> out(rhs.size(), 0.0);
  solve(rhs, out);
  return out;
}

std::vector<double> solve_tridiagonal(const TridiagonalSystem& system,
                                      std::span<const double> rhs) {
  TridiagonalFactorization factorization(system);
  return factorization.solve(rhs);
}

TridiagonalSystem assemble_p1_mass(std::span<const double> nodes, double clip_lo,
                                   double clip_hi) {
  const std::size_t n = nodes.size();
  if (n < 2) fail(ErrorCode::invalid_argument, "mass assembly needs at least two nodes");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(nodes[i + 1] > nodes[i]))
      fail(ErrorCode::invalid_argument, "mass assembly nodes must be strictly increasing");

  TridiagonalSystem m;
  m.sub.assign(n - 1, 0.0);
  m.diag.assign(n, 0.0);
  m.super.assign(n - 1, 0.0);

  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double c0 = std::max(clip_lo, nodes[k]);
    const double c1 = std::min(clip_hi, nodes[k + 1]);
    if (c1 <= c0) continue;
    const double width = nodes[k + 1] - nodes[k];
    const double s0 = (c0 - nodes[k]) / width;
    const double s1 = (c1 - nodes[k]) / width;
    // Exact integrals of the two local hats over the clipped sub-cell.
    const double left_sq =
        width * (std::pow(1.0 - s0, 3) - std::pow(1.0 - s1, 3)) / 3.0;
    const double cross =
        width * ((s1 * s1 / 2.0 - s1 * s1 * s1 / 3.0) - (s0 * s0 / 2.0 - s0 * s0 * s0 / 3.0));
    const double right_sq = width * (s1 * s1 * s1 - s0 * s0 * s0) / 3.0;
    m.diag[k] += left_sq;
    m.diag[k + 1] += right_sq;
    m.sub[k] += cross;
    m.super[k] += cross;
  }
  return m;
}

TridiagonalSystem assemble_mass_matrix(const Grid& grid, double clip_lo,
                                       double clip_hi) {
  const std::vector<double> nodes = grid.nodes();
  return assemble_p1_mass(nodes, clip_lo, clip_hi);
}

}  // namespace priceform
