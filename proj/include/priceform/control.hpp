#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "priceform/adjoint.hpp"
#include "priceform/domain_map.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

/// Tuning of the regularized descent loop.
struct OptimizerSettings {
  double alpha = 0.1;        ///< Tikhonov weight on the control
  double beta0 = 0.25;       ///< initial line-search step
  double gamma = 0.2;        ///< sufficient-decrease fraction, in (0, 1]
  std::size_t max_iterations = 250;
  double tolerance = 1e-5;   ///< stop when the gradient norm drops below
  int max_halvings = 4;
  /// Drop the 1/w(t) rescaling of the dual term in the descent direction
  /// (the update then follows the raw boundary-flux pairing).
  bool unweighted_update = false;
};

/// Result of one null-control solve: the boundary control, the terminal
/// residual it achieves, and the bookkeeping of the descent loop.
struct ControlSolution {
  Side side = Side::left;
  std::vector<double> control;            ///< u(t_k)
  double residual = 0.0;                  ///< ||Phi(., t_0)||_{L2}
  double gradient_norm = 0.0;             ///< last measured gradient norm
  std::vector<double> objective_history;  ///< value per outer iteration
  std::size_t iterations = 0;             ///< accepted update steps
  bool converged = false;
  bool descended = true;   ///< false if some line search exhausted halvings
  AdjointTrajectory trajectory;           ///< state snapshots at the final u
};

struct ArmijoResult {
  double step = 0.0;
  double objective = 0.0;
  bool descended = true;
};

/// One half of the optimization target: half the squared L2 norm of the
/// state at the initial instant plus (alpha/2) times the squared L2 norm of
/// the control in time; both integrals by the trapezoid rule.
double objective(const NodalField& phi_at_start,
                 const std::vector<double>& control,
                 const std::vector<double>& times, double alpha);

/// Exact gradient of `objective` composed with the backward solve, as the
/// Riesz representative in the trapezoid-weighted time inner product. The
/// dual term is evaluated through the transpose of the discrete solve, so
/// the result differentiates the implemented objective to roundoff; the
/// companion trajectory supplies the state at the initial instant
/// (its first snapshot is the negated state). Pass unweighted = true to
/// rescale the dual part by the subdomain width.
std::vector<double> gradient(const std::vector<double>& control,
                             const AdjointTrajectory& companion,
                             const MapCoefficients& coeffs, double alpha,
                             bool unweighted = false);

/// Backtracking line search: the largest step in {beta0, beta0/2, ...,
/// beta0/2^max_halvings} whose objective drops at least gamma times the
/// linear prediction. The direction must be the negative gradient (the
/// predicted slope is computed from it). If every candidate fails, the
/// smallest one is returned with descended = false.
ArmijoResult armijo_step(
    const std::vector<double>& control, const std::vector<double>& direction,
    const std::vector<double>& times,
    const std::function<double(const std::vector<double>&)>& evaluate,
    const OptimizerSettings& settings);

/// Steepest-descent loop driving the state at the initial instant to zero:
/// starts from u = 0 and iterates backward solve -> exact gradient ->
/// line search -> update until the gradient norm meets the tolerance or the
/// iteration cap is hit.
ControlSolution solve_null_control(const NodalField& terminal,
                                   const MapCoefficients& coeffs,
                                   const OptimizerSettings& settings);

}  // namespace priceform
