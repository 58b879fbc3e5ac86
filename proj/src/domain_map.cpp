#include "priceform/domain_map.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

constexpr double kDomainSlack = 1e-12;

void check_interval(double x, double lo, double hi, const char* what) {
  if (x < lo - kDomainSlack || x > hi + kDomainSlack)
    fail(ErrorCode::out_of_domain,
         std::string(what) + " coordinate " + std::to_string(x) +
             " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
             "]");
}

/// Derivative at `t` of the quadratic through (t0,f0), (t1,f1), (t2,f2).
double lagrange3_derivative(double t0, double t1, double t2, double f0,
                            double f1, double f2, double t) {
  return f0 * (2.0 * t - t1 - t2) / ((t0 - t1) * (t0 - t2)) +
         f1 * (2.0 * t - t0 - t2) / ((t1 - t0) * (t1 - t2)) +
         f2 * (2.0 * t - t0 - t1) / ((t2 - t0) * (t2 - t1));
}

}  // namespace

double map_to_reference(double x, double price, double half_width, Side side) {
  const double L = half_width;
  if (L <= 0.0) fail(ErrorCode::invalid_argument, "half width must be positive");
  if (side == Side::left) {
    check_interval(x, -L, price, "left-side");
    return (x + L) / (L + price);
  }
  check_interval(x, price, L, "right-side");
  return (x - L) / (price - L);
}

double map_from_reference(double y, double price, double half_width,
                          Side side) {
  const double L = half_width;
  if (L <= 0.0) fail(ErrorCode::invalid_argument, "half width must be positive");
  check_interval(y, 0.0, 1.0, "reference");
  if (side == Side::left) return -L + y * (L + price);
  return L + y * (price - L);
}

std::vector<double> price_derivative(const std::vector<double>& times,
                                     const std::vector<double>& values) {
  const std::size_t n = times.size();
  if (values.size() != n)
    fail(ErrorCode::invalid_argument, "times and values must align");
  if (n < 3)
    fail(ErrorCode::invalid_argument,
         "need at least three samples to differentiate");
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = (k == 0) ? 1 : (k == n - 1) ? n - 2 : k;
    out[k] = lagrange3_derivative(times[c - 1], times[c], times[c + 1],
                                  values[c - 1], values[c], values[c + 1],
                                  times[k]);
  }
  return out;
}

MapCoefficients coefficients(const PriceSeries& series, double half_width,
                             Side side, double margin) {
  const double L = half_width;
  if (L <= 0.0) fail(ErrorCode::invalid_argument, "half width must be positive");
  if (margin < 0.0 || margin >= L)
    fail(ErrorCode::invalid_argument, "margin must lie in [0, L)");
  const std::size_t n = series.size();
  if (series.prices.size() != n)
    fail(ErrorCode::invalid_argument, "price series sizes must align");

  MapCoefficients mc;
  mc.side = side;
  mc.times = series.times;
  mc.price = series.prices;
  mc.price_rate = price_derivative(series.times, series.prices);
  mc.diffusion.resize(n);
  mc.drift.resize(n);
  mc.weight.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double p = series.prices[k];
    if (p <= -L + margin || p >= L - margin)
      fail(ErrorCode::price_escaped,
           "price " + std::to_string(p) + " at t=" +
               std::to_string(series.times[k]) +
               " violates the margin band");
    const double w = (side == Side::left) ? p + L : L - p;
    mc.weight[k] = w;
    mc.diffusion[k] = 1.0 / (w * w);
    // b = p'/(p+L) on the left, p'/(p-L) on the right
    mc.drift[k] = (side == Side::left) ? mc.price_rate[k] / w
                                       : -mc.price_rate[k] / w;
  }
  return mc;
}

double weighted_inner_product(const NodalField& u, const NodalField& v,
                              double weight) {
  if (!u.grid.same_as(v.grid))
    fail(ErrorCode::invalid_argument, "fields must share a grid");
  const std::size_t n = u.values.size();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    sum += 0.5 * (u.values[i] * v.values[i] + u.values[i + 1] * v.values[i + 1]);
  return weight * sum * u.grid.h();
}

}  // namespace priceform
