#pragma once

#include <utility>
#include <vector>

#include "priceform/mesh.hpp"

namespace priceform {

enum class BoundaryMode { nonlocal, neumann };

/// Shift structure of the summation transform: jump size, initial price, and
/// the number of shifted copies entering on each side of the price.
struct TransformSpec {
  double transaction_cost = 0.0;
  double initial_price = 0.0;
  int k_left = 0;
  int k_right = 0;
};

/// Validates alignment of (a, p0) with the interval [-L, L] and fills in the
/// shift counts. (p0 + L)/a and (L - p0)/a must be integers.
TransformSpec make_transform_spec(double transaction_cost, double initial_price,
                                  double half_width);

/// Time-indexed price and transaction-rate observations.
struct PriceSeries {
  std::vector<double> times;
  std::vector<double> prices;
  std::vector<double> rates;

  std::size_t size() const { return times.size(); }
};

struct ForwardResult {
  PriceSeries series;
  std::vector<NodalField> trajectory;  ///< transformed state per step
  NodalField final_density;            ///< back-transformed state at t_end
};

/// Summation transform: accumulates shifted positive parts left of the price
/// and shifted negative parts right of it, turning the transport-with-sources
/// model into a plain heat equation. The result is positive left of p0 and
/// negative right of it.
NodalField transform(const NodalField& f0, const TransformSpec& spec);

/// Inverse of the transform: f(x) = F(x) - F+(x + a) - F-(x - a), with F
/// extended by zero outside the interval. Exact round trip at the nodes when
/// the jump is a whole number of cells.
NodalField back_transform(const NodalField& F, const TransformSpec& spec);

/// One implicit Euler step of the heat equation, piecewise-linear elements
/// with a consistent mass matrix, factored once at construction.
///
/// neumann: natural boundary rows; conserves the trapezoidal integral of the
/// state to roundoff. nonlocal: the boundary rows are replaced by constraints
/// equating the one-sided slope at each end with the slope one jump inward;
/// solved through a rank-2 correction of the factored natural system.
class HeatStepper {
 public:
  HeatStepper(const Grid& grid, double dt, BoundaryMode bc,
              double transaction_cost = 0.0);

  NodalField step(const NodalField& field) const;
  void step_in_place(std::vector<double>& values) const;

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  double dt_ = 0.0;
  BoundaryMode bc_ = BoundaryMode::neumann;
  int shift_cells_ = 0;
  TridiagonalSystem mass_;
  TridiagonalFactorization natural_;
  // rank-2 correction data for the nonlocal rows
  std::vector<double> z_lo_, z_hi_;          // T^{-1} e_0, T^{-1} e_N
  std::vector<std::pair<int, double>> row_lo_, row_hi_;  // replaced-row deltas
  double cap_inv_[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
};

/// Convenience single step (factors the system on every call).
NodalField step_heat(const NodalField& field, double dt, BoundaryMode bc,
                     double transaction_cost = 0.0);

/// Negative slope of the transformed state across the price; the centered
/// two-node slope when the price falls at a node. Positive for any valid
/// state; nonpositive values signal discretization breakdown.
double transaction_rate(const NodalField& F, double price);

/// Full forward solve: transform, repeated implicit steps, price and rate
/// extraction per step, back-transform at the end. The price must stay inside
/// (-L + margin, L - margin) at every step.
ForwardResult run_forward(const NodalField& f0, const TransformSpec& spec,
                          double t_start, double t_end, int n_steps,
                          BoundaryMode bc, double margin);

/// Same, starting at t = 0 with margin equal to the transaction cost.
ForwardResult run_forward(const NodalField& f0, const TransformSpec& spec,
                          double t_end, int n_steps, BoundaryMode bc);

/// Long-time equilibrium price from the buyer and vendor masses (absolute).
double stationary_price(double mass_left, double mass_right,
                        double transaction_cost, double half_width);

/// Exact integral of the piecewise-linear interpolant (trapezoid rule).
double integrate(const NodalField& field);

struct FieldMasses {
  double positive = 0.0;
  double negative = 0.0;  ///< absolute value of the negative part's integral
};

/// Exact integrals of the positive and negative parts of the interpolant,
/// splitting cells at interior sign changes.
FieldMasses field_masses(const NodalField& field);

/// Discrete buyer and vendor counts of the transformed state: the mass-matrix
/// row sums over the first and last strip of shift_cells = a/h rows. Both are
/// conserved exactly by the nonlocal boundary rows.
std::pair<double, double> strip_counts(const NodalField& F,
                                       double transaction_cost);

}  // namespace priceform
