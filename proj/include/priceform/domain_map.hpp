#pragma once

#include <cstddef>
#include <vector>

#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

/// Which moving subdomain a quantity lives on: `left` is the buyer side
/// [-L, p(t)], `right` the vendor side [p(t), L].
enum class Side { left, right };

/// Time-dependent data of the fixed-domain change of variables: per sample
/// instant the price, its discrete derivative, the subdomain width, and the
/// diffusion/drift coefficients of the transformed equation
///   dPhi/dt = a(t) Phi_yy + b(t) y Phi_y  on the reference interval [0,1].
struct MapCoefficients {
  Side side = Side::left;
  std::vector<double> times;
  std::vector<double> price;
  std::vector<double> price_rate;  ///< discrete p'(t_k)
  std::vector<double> diffusion;   ///< a(t_k) = 1/w(t_k)^2
  std::vector<double> drift;       ///< b(t_k)
  std::vector<double> weight;      ///< w(t_k): p+L (left) or L-p (right)

  std::size_t size() const { return times.size(); }
};

/// Maps a physical coordinate into [0,1]; the outer wall goes to 0 and the
/// price to 1 on both sides (the right map flips orientation).
double map_to_reference(double x, double price, double half_width, Side side);

/// Inverse of map_to_reference.
double map_from_reference(double y, double price, double half_width,
                          Side side);

/// Discrete derivative of the price samples: three-point Lagrange formulas,
/// centered at interior instants and one-sided at the ends; exact for
/// quadratic price curves. Requires at least three samples.
std::vector<double> price_derivative(const std::vector<double>& times,
                                     const std::vector<double>& values);

/// Per-instant transformed-equation coefficients for one side. `margin`
/// is the required distance between the price and the walls; the series
/// must keep strictly inside (-L + margin, L - margin).
MapCoefficients coefficients(const PriceSeries& series, double half_width,
                             Side side, double margin = 0.0);

/// weight * trapezoidal integral of u*v on the shared grid.
double weighted_inner_product(const NodalField& u, const NodalField& v,
                              double weight);

}  // namespace priceform
