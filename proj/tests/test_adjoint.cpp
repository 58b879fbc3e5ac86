#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "priceform/adjoint.hpp"
#include "priceform/domain_map.hpp"
#include "priceform/errors.hpp"
#include "priceform/mesh.hpp"
#include "support/oracles.hpp"

using namespace priceform;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  REQUIRE(false);
  return ErrorCode::invalid_argument;
}

PriceSeries sampled_series(const std::function<double(double)>& p,
                           double t_final, std::size_t n_steps) {
  PriceSeries s;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    s.times.push_back(t_final * static_cast<double>(k) /
                      static_cast<double>(n_steps));
    s.prices.push_back(p(s.times.back()));
    s.rates.push_back(1.0);
  }
  return s;
}

/// Coefficients with diffusion exactly 1 and drift exactly 0: resting price
/// one quarter-width away from the wall of a width-3/2 interval.
MapCoefficients unit_coefficients(double t_final, std::size_t n_steps) {
  return coefficients(sampled_series([](double) { return 0.25; }, t_final,
                                     n_steps),
                      0.75, Side::left);
}

}  // namespace

TEST_SUITE("adjoint") {

TEST_CASE("constants solve both equations") {
  const PriceSeries s =
      sampled_series([](double t) { return 0.1 * std::sin(2.0 * t); }, 1.0, 60);
  const MapCoefficients mc = coefficients(s, 0.5, Side::right);
  const Grid ref = build_interval_grid(0.0, 1.0, 30);
  const NodalField c = sample_field(ref, [](double) { return 2.5; });
  const std::vector<double> u(61, 2.5);
  const AdjointTrajectory traj = solve_adjoint(c, u, mc);
  REQUIRE(traj.size() == 61);
  for (const NodalField& snap : traj.snapshots)
    for (double v : snap.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("zero data give the zero trajectory") {
  const MapCoefficients mc = unit_coefficients(0.5, 20);
  const Grid ref = build_interval_grid(0.0, 1.0, 16);
  const NodalField zero = sample_field(ref, [](double) { return 0.0; });
  const std::vector<double> u(21, 0.0);
  for (const NodalField& snap : solve_adjoint(zero, u, mc).snapshots)
    for (double v : snap.values) CHECK(v == 0.0);
  for (const NodalField& snap : solve_companion(zero, mc).snapshots)
    for (double v : snap.values) CHECK(v == 0.0);
}

TEST_CASE("backward solve pins the boundary rows exactly") {
  auto gen = oracle::rng(911);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const PriceSeries s =
      sampled_series([](double t) { return 0.15 * std::cos(4.0 * t); }, 0.8,
                     40);
  const MapCoefficients mc = coefficients(s, 0.5, Side::left);
  const Grid ref = build_interval_grid(0.0, 1.0, 25);
  std::vector<double> psi(26), u(41);
  for (auto& v : psi) v = val(gen);
  for (auto& v : u) v = val(gen);
  const AdjointTrajectory traj = solve_adjoint(make_field(ref, psi), u, mc);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    CHECK(traj.snapshots[k].values.back() == u[k]);
    CHECK(traj.snapshots[k].values[0] == traj.snapshots[k].values[1]);
  }
  CHECK(traj.boundary_values == u);
}

TEST_CASE("backward decay matches the first mode rate") {
  const std::size_t n = 500;
  const double t_final = 0.5;
  const MapCoefficients mc = unit_coefficients(t_final, n);
  const Grid ref = build_interval_grid(0.0, 1.0, 200);
  const NodalField psi =
      sample_field(ref, [](double y) { return std::cos(M_PI * y / 2.0); });
  const std::vector<double> u(n + 1, 0.0);
  const AdjointTrajectory traj = solve_adjoint(psi, u, mc);
  const double lambda = M_PI * M_PI / 4.0;
  for (double y : {0.1, 0.3, 0.5}) {
    const double start = interpolate(traj.snapshots[0], y);
    const double end = interpolate(traj.snapshots[n], y);
    const double lambda_est = -std::log(start / end) / t_final;
    CHECK(std::abs(lambda_est - lambda) / lambda <= 0.01);
  }
}

TEST_CASE("forward solve pins the price-side value to zero") {
  auto gen = oracle::rng(912);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const PriceSeries s =
      sampled_series([](double t) { return -0.1 + 0.2 * t; }, 1.0, 35);
  const MapCoefficients mc = coefficients(s, 0.5, Side::right);
  const Grid ref = build_interval_grid(0.0, 1.0, 20);
  std::vector<double> g0(21);
  for (auto& v : g0) v = val(gen);
  const AdjointTrajectory traj = solve_companion(make_field(ref, g0), mc);
  for (const NodalField& snap : traj.snapshots) {
    CHECK(snap.values.back() == 0.0);
  }
  for (std::size_t i = 0; i + 1 < g0.size(); ++i)
    CHECK(traj.snapshots[0].values[i] == g0[i]);
}

TEST_CASE("forward decay matches the first mode rate") {
  const std::size_t n = 500;
  const double t_final = 0.5;
  const MapCoefficients mc = unit_coefficients(t_final, n);
  const Grid ref = build_interval_grid(0.0, 1.0, 200);
  const NodalField g0 =
      sample_field(ref, [](double y) { return std::cos(M_PI * y / 2.0); });
  const AdjointTrajectory traj = solve_companion(g0, mc);
  const double lambda = M_PI * M_PI / 4.0;
  for (double y : {0.1, 0.3, 0.5}) {
    const double start = interpolate(traj.snapshots[0], y);
    const double end = interpolate(traj.snapshots[n], y);
    const double lambda_est = -std::log(end / start) / t_final;
    CHECK(std::abs(lambda_est - lambda) / lambda <= 0.01);
  }
}

TEST_CASE("drift-free solves are mutually transposed") {
  auto gen = oracle::rng(913);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const MapCoefficients mc = unit_coefficients(0.3, 40);
  const Grid ref = build_interval_grid(0.0, 1.0, 60);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> psi(61), g(61);
    for (auto& v : psi) v = val(gen);
    for (auto& v : g) v = val(gen);
    psi.front() = psi.back() = 0.0;
    g.front() = g.back() = 0.0;
    const std::vector<double> u(41, 0.0);
    const auto phi0 =
        solve_adjoint(make_field(ref, psi), u, mc).snapshots.front();
    const auto gn = solve_companion(make_field(ref, g), mc).snapshots.back();
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      lhs += phi0.values[i] * g[i];
      rhs += psi[i] * gn.values[i];
      scale += std::abs(psi[i] * g[i]);
    }
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("nonnegative data stay nonnegative") {
  auto gen = oracle::rng(914);
  std::uniform_real_distribution<double> val(0.0, 2.0);
  const PriceSeries s =
      sampled_series([](double t) { return 0.2 * std::sin(3.0 * t); }, 1.0,
                     100);
  const MapCoefficients mc = coefficients(s, 0.5, Side::left);
  const Grid ref = build_interval_grid(0.0, 1.0, 50);
  std::vector<double> psi(51);
  for (auto& v : psi) v = val(gen);
  const std::vector<double> u(101, 0.0);
  const AdjointTrajectory traj = solve_adjoint(make_field(ref, psi), u, mc);
  for (const NodalField& snap : traj.snapshots)
    for (double v : snap.values) CHECK(v >= -1e-12);
}

TEST_CASE("solutions never exceed the data bounds") {
  auto gen = oracle::rng(915);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  // violent price swings: the upwind rows must stay monotone
  const PriceSeries s =
      sampled_series([](double t) { return 0.3 * std::sin(20.0 * t); }, 1.0,
                     200);
  const MapCoefficients mc = coefficients(s, 0.5, Side::right);
  const Grid ref = build_interval_grid(0.0, 1.0, 40);
  std::vector<double> psi(41), u(201);
  for (auto& v : psi) v = val(gen);
  for (auto& v : u) v = val(gen);
  double bound = 0.0;
  for (double v : psi) bound = std::max(bound, std::abs(v));
  for (double v : u) bound = std::max(bound, std::abs(v));
  const AdjointTrajectory traj = solve_adjoint(make_field(ref, psi), u, mc);
  for (const NodalField& snap : traj.snapshots)
    for (double v : snap.values) CHECK(std::abs(v) <= bound + 1e-12);
}

TEST_CASE("boundary flux reads one-sided slopes") {
  const Grid ref = build_interval_grid(0.0, 1.0, 100);
  AdjointTrajectory traj;
  traj.grid = ref;
  traj.times = {0.0};
  traj.snapshots.push_back(
      sample_field(ref, [](double) { return 0.0; }));
  traj.snapshots.push_back(
      sample_field(ref, [](double y) { return 1.0 - y * y; }));
  traj.snapshots.push_back(
      sample_field(ref, [](double y) { return std::cos(M_PI * y / 2.0); }));
  const std::vector<double> flux = boundary_flux(traj);
  REQUIRE(flux.size() == 3);
  CHECK(std::abs(flux[0]) <= 1e-12);
  CHECK(flux[1] == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(std::abs(flux[2] - (-M_PI / 2.0)) <= 3e-4);
}

TEST_CASE("input validation") {
  const MapCoefficients mc = unit_coefficients(0.5, 10);
  const Grid ref = build_interval_grid(0.0, 1.0, 8);
  const Grid off = build_uniform_grid(0.5, 8);
  const NodalField zero = sample_field(ref, [](double) { return 0.0; });
  CHECK(code_of([&] {
          solve_adjoint(zero, std::vector<double>(5, 0.0), mc);
        }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] {
          solve_adjoint(sample_field(off, [](double) { return 0.0; }),
                        std::vector<double>(11, 0.0), mc);
        }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] {
          MapCoefficients bad = mc;
          bad.times[3] = bad.times[2];
          solve_companion(zero, bad);
        }) == ErrorCode::invalid_argument);
}

}  // TEST_SUITE
