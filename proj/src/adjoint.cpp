#include "priceform/adjoint.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

constexpr double kEndpointTol = 1e-12;

void check_reference_grid(const Grid& g) {
  if (std::abs(g.x_lo) > kEndpointTol || std::abs(g.x_hi - 1.0) > kEndpointTol)
    fail(ErrorCode::invalid_argument,
         "reference-domain fields must live on [0, 1]");
  if (g.n_cells < 2)
    fail(ErrorCode::invalid_argument,
         "reference grid needs at least two cells");
}

void check_series_shape(const MapCoefficients& coeffs) {
  if (coeffs.size() < 2)
    fail(ErrorCode::invalid_argument, "need at least two sample instants");
  for (std::size_t k = 0; k + 1 < coeffs.size(); ++k)
    if (coeffs.times[k + 1] <= coeffs.times[k])
      fail(ErrorCode::invalid_argument,
           "sample instants must be strictly increasing");
}

}  // namespace

TridiagonalSystem implicit_step_rows(const Grid& reference, double dt,
                                     double diffusion, double advection) {
  check_reference_grid(reference);
  if (dt <= 0.0) fail(ErrorCode::invalid_argument, "time step must be positive");
  if (diffusion <= 0.0)
    fail(ErrorCode::invalid_argument, "diffusion must be positive");
  const int m = reference.n_cells;
  const double h = reference.h();
  const double r = dt * diffusion / (h * h);
  const double tau = dt / h;

  TridiagonalSystem sys;
  sys.sub.assign(static_cast<std::size_t>(m), 0.0);
  sys.diag.assign(static_cast<std::size_t>(m) + 1, 0.0);
  sys.super.assign(static_cast<std::size_t>(m), 0.0);

  // zero one-sided slope at y = 0
  sys.diag[0] = 1.0;
  sys.super[0] = -1.0;
  for (int j = 1; j < m; ++j) {
    const double c = advection * reference.node(j);
    const double sigma = (c >= 0.0) ? r + tau * c : r;
    const double rho = (c >= 0.0) ? r : r - tau * c;
    sys.sub[static_cast<std::size_t>(j - 1)] = -sigma;
    sys.diag[static_cast<std::size_t>(j)] = 1.0 + sigma + rho;
    sys.super[static_cast<std::size_t>(j)] = -rho;
  }
  // Dirichlet row at y = 1
  sys.sub[static_cast<std::size_t>(m - 1)] = 0.0;
  sys.diag[static_cast<std::size_t>(m)] = 1.0;
  return sys;
}

AdjointTrajectory solve_adjoint(const NodalField& terminal,
                                const std::vector<double>& control,
                                const MapCoefficients& coeffs) {
  check_reference_grid(terminal.grid);
  check_series_shape(coeffs);
  const std::size_t n_samples = coeffs.size();
  if (control.size() != n_samples)
    fail(ErrorCode::invalid_argument,
         "control must have one value per sample instant");

  const int m = terminal.grid.n_cells;
  AdjointTrajectory traj;
  traj.side = coeffs.side;
  traj.grid = terminal.grid;
  traj.times = coeffs.times;
  traj.boundary_values = control;
  traj.snapshots.resize(n_samples);
  traj.snapshots[n_samples - 1] = terminal;

  std::vector<double> rhs(static_cast<std::size_t>(m) + 1);
  for (std::size_t k = n_samples - 1; k-- > 0;) {
    const double dt = coeffs.times[k + 1] - coeffs.times[k];
    const TridiagonalSystem sys = implicit_step_rows(
        terminal.grid, dt, coeffs.diffusion[k], coeffs.drift[k]);
    rhs = traj.snapshots[k + 1].values;
    rhs.front() = 0.0;
    rhs.back() = control[k];
    traj.snapshots[k] =
        make_field(terminal.grid, solve_tridiagonal(sys, rhs));
  }
  return traj;
}

AdjointTrajectory solve_companion(const NodalField& initial,
                                  const MapCoefficients& coeffs) {
  check_reference_grid(initial.grid);
  check_series_shape(coeffs);
  const std::size_t n_samples = coeffs.size();
  const int m = initial.grid.n_cells;

  AdjointTrajectory traj;
  traj.side = coeffs.side;
  traj.grid = initial.grid;
  traj.times = coeffs.times;
  traj.boundary_values.assign(n_samples, 0.0);
  traj.snapshots.resize(n_samples);
  traj.snapshots[0] = initial;
  traj.snapshots[0].values.back() = 0.0;

  std::vector<double> rhs(static_cast<std::size_t>(m) + 1);
  for (std::size_t k = 1; k < n_samples; ++k) {
    const double dt = coeffs.times[k] - coeffs.times[k - 1];
    const TridiagonalSystem sys = implicit_step_rows(
        initial.grid, dt, coeffs.diffusion[k], -coeffs.drift[k]);
    rhs = traj.snapshots[k - 1].values;
    rhs.front() = 0.0;
    rhs.back() = 0.0;
    traj.snapshots[k] = make_field(initial.grid, solve_tridiagonal(sys, rhs));
  }
  return traj;
}

std::vector<double> boundary_flux(const AdjointTrajectory& trajectory) {
  if (trajectory.snapshots.empty())
    fail(ErrorCode::invalid_argument, "empty trajectory");
  const Grid& g = trajectory.grid;
  check_reference_grid(g);
  const double h = g.h();
  const std::size_t m = static_cast<std::size_t>(g.n_cells);
  std::vector<double> out;
  out.reserve(trajectory.snapshots.size());
  for (const NodalField& snap : trajectory.snapshots) {
    const std::vector<double>& v = snap.values;
    out.push_back((3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * h));
  }
  return out;
}

}  // namespace priceform
