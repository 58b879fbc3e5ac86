#pragma once

#include <cstddef>
#include <vector>

#include "priceform/domain_map.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

/// Snapshots of a reference-domain solve, one per sample instant, together
/// with the Dirichlet data that was imposed at y = 1.
struct AdjointTrajectory {
  Side side = Side::left;
  Grid grid;
  std::vector<double> times;
  std::vector<NodalField> snapshots;       ///< index k = 0..n
  std::vector<double> boundary_values;     ///< value imposed at y = 1 per step

  std::size_t size() const { return snapshots.size(); }
};

/// Implicit-Euler step matrix on the reference grid for
///   V_new - dt * (diffusion * V_yy - advection * y * V_y) = V_old,
/// with the drift upwinded node by node, a zero one-sided-slope row at y = 0
/// and an identity row at y = 1 (Dirichlet, value supplied via the rhs).
/// The backward-in-time solve uses advection = +b, the forward one -b.
TridiagonalSystem implicit_step_rows(const Grid& reference, double dt,
                                     double diffusion, double advection);

/// Backward implicit Euler for
///   -dPhi/dt - a(t) Phi_yy + b(t) y Phi_y = 0,   Phi(., T) = terminal,
/// with Phi(1, t_k) = control[k] and zero slope at y = 0. Coefficients are
/// taken at the target instant of each step.
AdjointTrajectory solve_adjoint(const NodalField& terminal,
                                const std::vector<double>& control,
                                const MapCoefficients& coeffs);

/// Forward implicit Euler for
///   dG/dt - a(t) G_yy - b(t) y G_y = 0,   G(., t_0) = initial,
/// with G(1, t_k) = 0 and zero slope at y = 0. The stored initial snapshot
/// has its y = 1 node forced to zero (the Dirichlet row takes precedence).
AdjointTrajectory solve_companion(const NodalField& initial,
                                  const MapCoefficients& coeffs);

/// One-sided second-order slope estimate dV/dy at y = 1 per snapshot.
std::vector<double> boundary_flux(const AdjointTrajectory& trajectory);

}  // namespace priceform
