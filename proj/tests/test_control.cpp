#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "priceform/adjoint.hpp"
#include "priceform/control.hpp"
#include "priceform/domain_map.hpp"
#include "priceform/errors.hpp"
#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"
#include "support/oracles.hpp"

using namespace priceform;

namespace {

PriceSeries series_on(const std::function<double(double)>& p, double t_lo,
                      double t_hi, std::size_t n_steps) {
  PriceSeries s;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = t_lo + (t_hi - t_lo) * static_cast<double>(k) /
                                static_cast<double>(n_steps);
    s.times.push_back(t);
    s.prices.push_back(p(t));
    s.rates.push_back(1.0);
  }
  return s;
}

/// A gently moving price well inside (-1/2, 1/2).
MapCoefficients moving_coeffs(Side side, std::size_t n_steps) {
  return coefficients(
      series_on([](double t) { return 0.05 + 0.08 * std::sin(3.0 * t); }, 0.0,
                0.4, n_steps),
      0.5, side);
}

/// Independent trapezoid weights for the time quadrature.
std::vector<double> theta_of(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    w[k] += 0.5 * (t[k + 1] - t[k]);
    w[k + 1] += 0.5 * (t[k + 1] - t[k]);
  }
  return w;
}

double objective_through_solver(const NodalField& psi,
                                const std::vector<double>& u,
                                const MapCoefficients& coeffs, double alpha) {
  const AdjointTrajectory traj = solve_adjoint(psi, u, coeffs);
  return objective(traj.snapshots.front(), u, coeffs.times, alpha);
}

std::vector<double> gradient_through_companion(const NodalField& psi,
                                               const std::vector<double>& u,
                                               const MapCoefficients& coeffs,
                                               double alpha,
                                               bool unweighted = false) {
  const AdjointTrajectory traj = solve_adjoint(psi, u, coeffs);
  NodalField neg = traj.snapshots.front();
  for (double& v : neg.values) v = -v;
  return gradient(u, solve_companion(neg, coeffs), coeffs, alpha, unweighted);
}

NodalField hat_field(const Grid& ref) {
  return sample_field(ref, [](double y) {
    return std::max(0.0, 1.0 - 2.0 * std::abs(y - 0.5));
  });
}

ErrorCode code_of(const std::function<void()>& run) {
  try {
    run();
  } catch (const Error& e) {
    return e.code();
  }
  REQUIRE(false);
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("objective evaluates both quadratures") {
  const Grid ref = build_interval_grid(0.0, 1.0, 8);
  const NodalField zero = sample_field(ref, [](double) { return 0.0; });

  CHECK(objective(zero, {0.0, 0.0, 0.0}, {0.0, 0.5, 1.0}, 0.1) == 0.0);

  // flat unit control over a quarter unit of time, alpha = 0.1
  const std::vector<double> times = {0.0, 0.1, 0.25};
  CHECK(objective(zero, {1.0, 1.0, 1.0}, times, 0.1) ==
        doctest::Approx(0.0125).epsilon(1e-14));

  CHECK(code_of([&] { objective(zero, {1.0, 1.0}, times, 0.1); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { objective(zero, {1.0}, {0.0}, 0.1); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] {
          objective(zero, {1.0, 1.0, 1.0}, {0.0, 0.2, 0.2}, 0.1);
        }) == ErrorCode::invalid_argument);
}

TEST_CASE("objective matches analytic integrals on smooth data") {
  const std::size_t m = 16;
  const std::size_t n = 20;
  const Grid ref = build_interval_grid(0.0, 1.0, m);
  const NodalField phi = sample_field(ref, [](double y) { return std::cos(y); });
  std::vector<double> times, u;
  for (std::size_t k = 0; k <= n; ++k) {
    times.push_back(0.5 * static_cast<double>(k) / static_cast<double>(n));
    u.push_back(std::exp(times.back()));
  }
  const double alpha = 0.1;
  // int cos^2 over [0,1] and int e^{2t} over [0,1/2] in closed form
  const double exact = 0.5 * (0.5 + std::sin(2.0) / 4.0) +
                       0.5 * alpha * (std::exp(1.0) - 1.0) / 2.0;
  const double h = ref.h();
  const double dt = times[1] - times[0];
  CHECK(std::abs(objective(phi, u, times, alpha) - exact) <=
        0.5 * (h * h + dt * dt));
}

TEST_CASE("gradient reduces to the penalty term when the state vanishes") {
  const std::size_t n = 15;
  const MapCoefficients mc = moving_coeffs(Side::left, n);
  const Grid ref = build_interval_grid(0.0, 1.0, 12);

  AdjointTrajectory comp;
  comp.side = Side::left;
  comp.grid = ref;
  comp.times = mc.times;
  comp.boundary_values.assign(n + 1, 0.0);
  for (std::size_t k = 0; k <= n; ++k)
    comp.snapshots.push_back(sample_field(ref, [](double) { return 0.0; }));

  auto gen = oracle::rng(301);
  std::uniform_real_distribution<double> pick(-1.0, 1.0);
  std::vector<double> u(n + 1);
  for (double& v : u) v = pick(gen);
  u[0] = 0.0;  // boundary data consistent with a vanishing state

  const double alpha = 0.3;
  const std::vector<double> g = gradient(u, comp, mc, alpha);
  REQUIRE(g.size() == u.size());
  for (std::size_t k = 0; k <= n; ++k)
    CHECK(std::abs(g[k] - alpha * u[k]) <= 1e-14);

  // a nonzero start value adds exactly the trapezoid weight of the y = 1
  // node of the state norm, nothing else
  std::vector<double> u2 = u;
  u2[0] = 0.8;
  const std::vector<double> g2 = gradient(u2, comp, mc, alpha);
  const double theta0 = 0.5 * (mc.times[1] - mc.times[0]);
  CHECK(g2[0] == doctest::Approx(alpha * 0.8 + 0.5 * ref.h() * 0.8 / theta0)
                     .epsilon(1e-12));
  for (std::size_t k = 1; k <= n; ++k)
    CHECK(g2[k] == doctest::Approx(g[k]).epsilon(1e-13));
}

TEST_CASE("gradient splits linearly in the penalty weight") {
  const std::size_t n = 18;
  const MapCoefficients mc = moving_coeffs(Side::right, n);
  const Grid ref = build_interval_grid(0.0, 1.0, 14);
  const NodalField psi =
      sample_field(ref, [](double y) { return 0.3 * std::sin(3.14 * y); });

  auto gen = oracle::rng(302);
  std::uniform_real_distribution<double> pick(-0.5, 0.5);
  std::vector<double> u(n + 1);
  for (double& v : u) v = pick(gen);

  const std::vector<double> g0 = gradient_through_companion(psi, u, mc, 0.0);
  const std::vector<double> g1 = gradient_through_companion(psi, u, mc, 0.2);
  for (std::size_t k = 0; k <= n; ++k)
    CHECK(std::abs(g1[k] - g0[k] - 0.2 * u[k]) <= 1e-13);
}

TEST_CASE("gradient matches central differences of the objective") {
  struct Config {
    std::size_t m;
    std::size_t n;
    Side side;
    unsigned seed;
  };
  const Config configs[] = {{20, 25, Side::left, 401},
                            {20, 25, Side::right, 402},
                            {50, 40, Side::left, 403}};
  const double alpha = 0.1;
  const double eps = 1e-6;

  for (const Config& c : configs) {
    CAPTURE(c.m);
    CAPTURE(c.n);
    const MapCoefficients mc = moving_coeffs(c.side, c.n);
    const Grid ref = build_interval_grid(0.0, 1.0, c.m);
    const NodalField psi =
        sample_field(ref, [](double y) { return 0.5 * std::cos(1.3 * y); });

    auto gen = oracle::rng(c.seed);
    std::uniform_real_distribution<double> pick(-0.5, 0.5);
    std::vector<double> u(c.n + 1);
    for (double& v : u) v = pick(gen);

    const std::vector<double> g =
        gradient_through_companion(psi, u, mc, alpha);
    const std::vector<double> theta = theta_of(mc.times);

    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k <= c.n; ++k) {
      std::vector<double> up = u;
      std::vector<double> dn = u;
      up[k] += eps;
      dn[k] -= eps;
      const double fd = (objective_through_solver(psi, up, mc, alpha) -
                         objective_through_solver(psi, dn, mc, alpha)) /
                        (2.0 * eps);
      const double diff = theta[k] * g[k] - fd;
      num += diff * diff;
      den += fd * fd;
    }
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
}

TEST_CASE("gradient dual term tracks the companion flux under refinement") {
  // resting price: the forward companion equation is then the exact dual of
  // the backward solve up to discretization, so the flux term of the
  // gradient must approach diffusion * dG/dy(1, t). The comparison stays
  // away from the initial instant: the companion clamps its y = 1 node to
  // zero while the state carries u there, and that corner makes the flux
  // singular as t drops to the start.
  const double alpha = 0.1;
  auto dual_gap = [&](std::size_t m, std::size_t n, double& scale) {
    const MapCoefficients mc = coefficients(
        series_on([](double) { return 0.1; }, 0.0, 0.4, n), 0.5, Side::left);
    const Grid ref = build_interval_grid(0.0, 1.0, m);
    const NodalField psi =
        sample_field(ref, [](double y) { return std::sin(3.14159265 * y); });
    std::vector<double> u(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
      u[k] = 0.2 * std::sin(2.0 * mc.times[k]) + 0.1;

    const AdjointTrajectory traj = solve_adjoint(psi, u, mc);
    NodalField neg = traj.snapshots.front();
    for (double& v : neg.values) v = -v;
    const AdjointTrajectory comp = solve_companion(neg, mc);
    const std::vector<double> flux = boundary_flux(comp);
    const std::vector<double> g = gradient(u, comp, mc, alpha);

    double gap = 0.0;
    scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mc.times[k] < 0.1 || mc.times[k] > 0.3) continue;
      const double dual = g[k] - alpha * u[k];
      gap = std::max(gap, std::abs(dual - mc.diffusion[k] * flux[k]));
      scale = std::max(scale, std::abs(dual));
    }
    return gap;
  };

  double scale_a = 0.0;
  double scale_b = 0.0;
  const double gap_a = dual_gap(24, 30, scale_a);
  const double gap_b = dual_gap(48, 60, scale_b);
  CHECK(gap_b <= 0.6 * gap_a);
  CHECK(gap_b <= 0.05 * scale_b);
}

TEST_CASE("line search accepts the full step on a well-scaled quadratic") {
  const std::size_t n = 10;
  std::vector<double> times, u, d;
  for (std::size_t k = 0; k <= n; ++k) {
    times.push_back(static_cast<double>(k) / static_cast<double>(n));
    u.push_back(1.0 + 0.5 * std::cos(times.back()));
    d.push_back(-u.back());
  }
  const std::vector<double> theta = theta_of(times);
  auto quad = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k <= n; ++k) s += 0.5 * theta[k] * v[k] * v[k];
    return s;
  };
  double full = quad(u);

  const ArmijoResult r = armijo_step(u, d, times, quad, OptimizerSettings{});
  CHECK(r.step == 0.25);
  CHECK(r.descended);
  CHECK(r.objective == doctest::Approx(0.75 * 0.75 * full).epsilon(1e-13));
}

TEST_CASE("line search keeps a zero direction in place") {
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const std::vector<double> u = {0.3, -0.2, 0.7};
  const std::vector<double> d = {0.0, 0.0, 0.0};
  std::size_t calls = 0;
  auto evaluate = [&](const std::vector<double>& v) {
    ++calls;
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };
  const ArmijoResult r = armijo_step(u, d, times, evaluate, OptimizerSettings{});
  CHECK(r.step == 0.25);
  CHECK(r.descended);
  CHECK(r.objective == doctest::Approx(0.3 * 0.3 + 0.2 * 0.2 + 0.7 * 0.7));
  CHECK(calls == 2);  // base value plus the immediately accepted probe
}

TEST_CASE("line search exhausts its halvings on a flat objective") {
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const std::vector<double> u = {0.3, -0.2, 0.7};
  const std::vector<double> d = {1.0, 1.0, 1.0};
  std::size_t calls = 0;
  auto evaluate = [&](const std::vector<double>&) {
    ++calls;
    return 1.0;
  };
  const ArmijoResult r = armijo_step(u, d, times, evaluate, OptimizerSettings{});
  CHECK(r.step == doctest::Approx(0.25 / 16.0).epsilon(1e-15));
  CHECK_FALSE(r.descended);
  CHECK(r.objective == 1.0);
  CHECK(calls == 1 + 5);  // base value plus every candidate step
}

TEST_CASE("loop settings are validated at entry") {
  const MapCoefficients mc = moving_coeffs(Side::left, 10);
  const Grid ref = build_interval_grid(0.0, 1.0, 8);
  const NodalField psi = hat_field(ref);
  auto flat = [](const std::vector<double>&) { return 0.0; };
  const std::vector<double> times = {0.0, 1.0};
  const std::vector<double> z = {0.0, 0.0};

  OptimizerSettings s;
  s.alpha = 0.0;
  CHECK(code_of([&] { solve_null_control(psi, mc, s); }) ==
        ErrorCode::invalid_argument);
  s = OptimizerSettings{};
  s.beta0 = 0.0;
  CHECK(code_of([&] { armijo_step(z, z, times, flat, s); }) ==
        ErrorCode::invalid_argument);
  s = OptimizerSettings{};
  s.gamma = 0.0;
  CHECK(code_of([&] { armijo_step(z, z, times, flat, s); }) ==
        ErrorCode::invalid_argument);
  s = OptimizerSettings{};
  s.gamma = 1.0;  // the closed end of the admissible range
  CHECK(armijo_step(z, z, times, flat, s).step == 0.25);
  s = OptimizerSettings{};
  s.max_halvings = -1;
  CHECK(code_of([&] { solve_null_control(psi, mc, s); }) ==
        ErrorCode::invalid_argument);
  s = OptimizerSettings{};
  s.tolerance = -1.0;
  CHECK(code_of([&] { solve_null_control(psi, mc, s); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("a vanishing terminal datum is already optimal") {
  const MapCoefficients mc = moving_coeffs(Side::left, 20);
  const Grid ref = build_interval_grid(0.0, 1.0, 16);
  const NodalField zero = sample_field(ref, [](double) { return 0.0; });

  const ControlSolution sol =
      solve_null_control(zero, mc, OptimizerSettings{});
  CHECK(sol.iterations == 0);
  CHECK(sol.converged);
  CHECK(sol.residual == 0.0);
  CHECK(sol.gradient_norm == 0.0);
  REQUIRE(sol.objective_history.size() == 1);
  CHECK(sol.objective_history[0] == 0.0);
  for (double v : sol.control) CHECK(v == 0.0);
}

TEST_CASE("descent history decreases on a hat datum") {
  const MapCoefficients mc = moving_coeffs(Side::left, 25);
  const Grid ref = build_interval_grid(0.0, 1.0, 20);
  const NodalField psi = hat_field(ref);

  OptimizerSettings s;
  const ControlSolution sol = solve_null_control(psi, mc, s);

  OptimizerSettings s0 = s;
  s0.max_iterations = 0;
  const double untouched = solve_null_control(psi, mc, s0).residual;


  REQUIRE(sol.iterations >= 1);
  REQUIRE(sol.objective_history.size() == sol.iterations + 1);
  for (std::size_t i = 0; i + 1 < sol.objective_history.size(); ++i)
    CHECK(sol.objective_history[i + 1] <= sol.objective_history[i] + 1e-15);
  CHECK(sol.objective_history.back() <
        0.999 * sol.objective_history.front());
  CHECK(sol.converged);
  CHECK(sol.descended);
  CHECK(sol.gradient_norm <= s.tolerance);
  CHECK(sol.residual < 0.2 * untouched);
}

TEST_CASE("solution trajectory replays the backward solve at the final control") {
  const MapCoefficients mc = moving_coeffs(Side::right, 25);
  const Grid ref = build_interval_grid(0.0, 1.0, 20);
  const NodalField psi = hat_field(ref);

  const ControlSolution sol = solve_null_control(psi, mc, OptimizerSettings{});
  const AdjointTrajectory replay = solve_adjoint(psi, sol.control, mc);

  REQUIRE(sol.trajectory.size() == replay.size());
  CHECK(sol.trajectory.side == Side::right);
  double gap = 0.0;
  for (std::size_t k = 0; k < replay.size(); ++k)
    for (std::size_t i = 0; i < replay.snapshots[k].values.size(); ++i)
      gap = std::max(gap, std::abs(sol.trajectory.snapshots[k].values[i] -
                                   replay.snapshots[k].values[i]));
  CHECK(gap <= 1e-11);
  CHECK(sol.trajectory.boundary_values == sol.control);
  for (std::size_t i = 0; i < psi.values.size(); ++i)
    CHECK(sol.trajectory.snapshots.back().values[i] == psi.values[i]);

  // the reported numbers are the objective and state norm of that trajectory
  const NodalField& front = sol.trajectory.snapshots.front();
  CHECK(objective(front, sol.control, mc.times, 0.1) ==
        doctest::Approx(sol.objective_history.back()).epsilon(1e-12));
  const std::vector<double> zero_u(sol.control.size(), 0.0);
  CHECK(sol.residual ==
        doctest::Approx(std::sqrt(2.0 * objective(front, zero_u, mc.times, 0.1)))
            .epsilon(1e-12));
}

TEST_CASE("weaker penalties drive the state closer to zero") {
  const MapCoefficients mc = moving_coeffs(Side::left, 25);
  const Grid ref = build_interval_grid(0.0, 1.0, 20);
  const NodalField psi = hat_field(ref);

  OptimizerSettings s;
  s.tolerance = 1e-7;
  s.max_iterations = 400;
  std::vector<double> residuals;
  for (double alpha : {0.1, 0.05, 0.025}) {
    s.alpha = alpha;
    residuals.push_back(solve_null_control(psi, mc, s).residual);
  }
  CHECK(residuals[1] < residuals[0]);
  CHECK(residuals[2] < residuals[1]);
}

TEST_CASE("controls depend stably on the observed price") {
  // two price curves agreeing at the start; the control problem's combined
  // state-plus-penalty gap must shrink at least quadratically in the
  // perturbation size over the upper half of the sweep
  const std::size_t m = 20;
  const std::size_t n = 25;
  const Grid ref = build_interval_grid(0.0, 1.0, m);
  const NodalField psi = hat_field(ref);
  auto base_price = [](double t) { return 0.05 + 0.08 * std::sin(3.0 * t); };

  OptimizerSettings s;
  s.tolerance = 1e-8;
  s.max_iterations = 800;

  auto solve_for = [&](double delta) {
    const MapCoefficients mc = coefficients(
        series_on(
            [&](double t) {
              return base_price(t) + delta * std::sin(3.14159265 * t / 0.4);
            },
            0.0, 0.4, n),
        0.5, Side::left);
    return solve_null_control(psi, mc, s);
  };

  const ControlSolution base = solve_for(0.0);
  const std::vector<double> theta = theta_of(base.trajectory.times);
  std::vector<double> deltas, gaps;
  for (double delta : {0.02, 0.01, 0.005, 0.0025, 0.00125}) {
    const ControlSolution other = solve_for(delta);
    double state = 0.0;
    const std::vector<double>& a = base.trajectory.snapshots.front().values;
    const std::vector<double>& b = other.trajectory.snapshots.front().values;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double w =
          (i == 0 || i + 1 == a.size()) ? 0.5 * ref.h() : ref.h();
      state += w * (a[i] - b[i]) * (a[i] - b[i]);
    }
    double penalty = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      const double d = base.control[k] - other.control[k];
      penalty += theta[k] * d * d;
    }
    deltas.push_back(delta);
    gaps.push_back(state + 0.5 * s.alpha * penalty);
  }

  // least-squares slope of log(gap) against log(delta), largest three sizes
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double x = std::log(deltas[j]);
    const double y = std::log(gaps[j]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
  CHECK(slope >= 1.5);
}

TEST_CASE("the raw flux update variant still makes progress") {
  const MapCoefficients mc = moving_coeffs(Side::left, 25);
  const Grid ref = build_interval_grid(0.0, 1.0, 20);
  const NodalField psi = hat_field(ref);

  OptimizerSettings s;
  s.unweighted_update = true;
  const ControlSolution raw = solve_null_control(psi, mc, s);
  const ControlSolution weighted =
      solve_null_control(psi, mc, OptimizerSettings{});

  OptimizerSettings s0;
  s0.max_iterations = 0;
  const double untouched = solve_null_control(psi, mc, s0).residual;


  REQUIRE(raw.iterations >= 1);
  for (std::size_t i = 0; i + 1 < raw.objective_history.size(); ++i)
    CHECK(raw.objective_history[i + 1] <= raw.objective_history[i] + 1e-15);
  CHECK(raw.residual < untouched);
  // the two variants walk different paths
  double diff = 0.0;
  for (std::size_t k = 0; k < raw.control.size(); ++k)
    diff = std::max(diff, std::abs(raw.control[k] - weighted.control[k]));
  CHECK(diff > 1e-10);
}

TEST_CASE("production-size run removes most of the terminal state") {
  const std::size_t m = 200;
  const std::size_t n = 125;
  const MapCoefficients mc = coefficients(
      series_on([](double t) { return 0.05 + 0.08 * std::sin(3.0 * t); }, 0.04,
                0.54, n),
      0.5, Side::left);
  const Grid ref = build_interval_grid(0.0, 1.0, m);
  const NodalField psi =
      sample_field(ref, [](double y) { return std::sin(3.14159265 * y); });

  OptimizerSettings s0;
  s0.max_iterations = 0;
  const double untouched = solve_null_control(psi, mc, s0).residual;

  const ControlSolution sol = solve_null_control(psi, mc, OptimizerSettings{});
  CHECK(sol.iterations <= 250);
  CHECK(sol.residual <= 0.1 * untouched);
}

}  // TEST_SUITE
