#include "priceform/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double dt = t[k + 1] - t[k];
    if (dt <= 0.0)
      fail(ErrorCode::invalid_argument,
           "sample instants must be strictly increasing");
    w[k] += 0.5 * dt;
    w[k + 1] += 0.5 * dt;
  }
  return w;
}

void check_reference(const Grid& g) {
  if (std::abs(g.x_lo) > 1e-12 || std::abs(g.x_hi - 1.0) > 1e-12)
    fail(ErrorCode::invalid_argument,
         "reference-domain fields must live on [0, 1]");
  if (g.n_cells < 2)
    fail(ErrorCode::invalid_argument, "reference grid needs at least two cells");
}

void check_settings(const OptimizerSettings& s) {
  if (s.alpha <= 0.0) fail(ErrorCode::invalid_argument, "alpha must be positive");
  if (s.beta0 <= 0.0) fail(ErrorCode::invalid_argument, "beta0 must be positive");
  if (s.gamma <= 0.0 || s.gamma > 1.0)
    fail(ErrorCode::invalid_argument, "gamma must lie in (0, 1]");
  if (s.max_halvings < 0)
    fail(ErrorCode::invalid_argument, "max_halvings must be nonnegative");
  if (s.tolerance < 0.0)
    fail(ErrorCode::invalid_argument, "tolerance must be nonnegative");
}

/// Interior block of the implicit step matrix after folding the zero-slope
/// row into the first unknown; the Dirichlet column moves to the rhs.
TridiagonalSystem reduce_interior(const TridiagonalSystem& full, int m) {
  TridiagonalSystem red;
  red.diag.resize(static_cast<std::size_t>(m - 1));
  red.sub.resize(static_cast<std::size_t>(m - 2));
  red.super.resize(static_cast<std::size_t>(m - 2));
  red.diag[0] = full.diag[1] + full.sub[0];
  for (int i = 1; i < m - 1; ++i)
    red.diag[static_cast<std::size_t>(i)] =
        full.diag[static_cast<std::size_t>(i) + 1];
  for (int i = 0; i < m - 2; ++i) {
    red.sub[static_cast<std::size_t>(i)] =
        full.sub[static_cast<std::size_t>(i) + 1];
    red.super[static_cast<std::size_t>(i)] =
        full.super[static_cast<std::size_t>(i) + 1];
  }
  return red;
}

TridiagonalSystem transpose_of(const TridiagonalSystem& s) {
  TridiagonalSystem t;
  t.diag = s.diag;
  t.sub = s.super;
  t.super = s.sub;
  return t;
}

/// Prefactored per-step solvers for one control problem: the interior step
/// systems, their transposes (for the exact gradient chain), the Dirichlet
/// feed-in weights, and the quadrature weights of the objective.
class DescentEngine {
 public:
  DescentEngine(const Grid& reference, const MapCoefficients& coeffs,
                double alpha)
      : grid_(reference),
        coeffs_(&coeffs),
        alpha_(alpha),
        m_(reference.n_cells),
        h_(reference.h()),
        theta_(trapezoid_weights(coeffs.times)) {
    check_reference(reference);
    if (coeffs.size() < 2)
      fail(ErrorCode::invalid_argument, "need at least two sample instants");
    const std::size_t n = coeffs.size() - 1;
    forward_.reserve(n);
    transposed_.reserve(n);
    feed_.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double dt = coeffs.times[k + 1] - coeffs.times[k];
      const TridiagonalSystem full = implicit_step_rows(
          reference, dt, coeffs.diffusion[k], coeffs.drift[k]);
      const TridiagonalSystem red = reduce_interior(full, m_);
      forward_.emplace_back(red);
      transposed_.emplace_back(transpose_of(red));
      feed_.push_back(-full.super[static_cast<std::size_t>(m_) - 1]);
    }
    interior_weights_.assign(static_cast<std::size_t>(m_) - 1, h_);
    interior_weights_[0] = 1.5 * h_;  // absorbs the folded y = 0 node
  }

  std::size_t steps() const { return forward_.size(); }
  const std::vector<double>& theta() const { return theta_; }

  /// Backward sweep: interior snapshots x^k for k = 0..n (x^n = interior of
  /// the terminal datum).
  std::vector<std::vector<double>> sweep(const NodalField& terminal,
                                         const std::vector<double>& u) const {
    const std::size_t n = steps();
    std::vector<std::vector<double>> snaps(n + 1);
    snaps[n].assign(terminal.values.begin() + 1,
                    terminal.values.end() - 1);
    std::vector<double> rhs;
    for (std::size_t k = n; k-- > 0;) {
      rhs = snaps[k + 1];
      rhs.back() += feed_[k] * u[k];
      snaps[k].resize(rhs.size());
      forward_[k].solve(rhs, snaps[k]);
    }
    return snaps;
  }

  double objective_of(const std::vector<std::vector<double>>& snaps,
                      const std::vector<double>& u) const {
    double space = squared_state_norm(snaps, u);
    double time = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) time += theta_[k] * u[k] * u[k];
    return 0.5 * space + 0.5 * alpha_ * time;
  }

  double residual_of(const std::vector<std::vector<double>>& snaps,
                     const std::vector<double>& u) const {
    return std::sqrt(squared_state_norm(snaps, u));
  }

  /// Exact derivative of the objective: `pairing` gets dJ/du_k (so that
  /// sum pairing_k d_k is the exact directional derivative), `riesz` the
  /// trapezoid-metric representative, `direction_base` the vector actually
  /// negated for the descent step (differs only in unweighted mode).
  void gradient_of(const std::vector<std::vector<double>>& snaps,
                   const std::vector<double>& u, bool unweighted,
                   std::vector<double>& pairing, std::vector<double>& riesz,
                   std::vector<double>& direction_base) const {
    const std::size_t n = steps();
    pairing.assign(n + 1, 0.0);
    riesz.assign(n + 1, 0.0);
    direction_base.assign(n + 1, 0.0);

    std::vector<double> xi(static_cast<std::size_t>(m_) - 1);
    for (std::size_t i = 0; i < xi.size(); ++i)
      xi[i] = interior_weights_[i] * snaps[0][i];
    std::vector<double> buf(xi.size());
    for (std::size_t k = 0; k < n; ++k) {
      transposed_[k].solve(xi, buf);
      xi.swap(buf);
      const double dual = feed_[k] * xi.back() / theta_[k];
      const double boundary = (k == 0) ? 0.5 * h_ * u[0] / theta_[0] : 0.0;
      pairing[k] = theta_[k] * (alpha_ * u[k] + boundary + dual);
      riesz[k] = alpha_ * u[k] + boundary + dual;
      direction_base[k] =
          alpha_ * u[k] + boundary +
          (unweighted ? (*coeffs_).weight[k] * dual : dual);
    }
    pairing[n] = theta_[n] * alpha_ * u[n];
    riesz[n] = alpha_ * u[n];
    direction_base[n] = riesz[n];
  }

  double norm_of(const std::vector<double>& riesz) const {
    double s = 0.0;
    for (std::size_t k = 0; k < riesz.size(); ++k)
      s += theta_[k] * riesz[k] * riesz[k];
    return std::sqrt(s);
  }

  AdjointTrajectory assemble(const NodalField& terminal,
                             const std::vector<std::vector<double>>& snaps,
                             const std::vector<double>& u) const {
    AdjointTrajectory traj;
    traj.side = coeffs_->side;
    traj.grid = grid_;
    traj.times = coeffs_->times;
    traj.boundary_values = u;
    traj.snapshots.resize(snaps.size());
    const std::size_t n = steps();
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> full(static_cast<std::size_t>(m_) + 1);
      full[0] = snaps[k][0];
      std::copy(snaps[k].begin(), snaps[k].end(), full.begin() + 1);
      full.back() = u[k];
      traj.snapshots[k] = make_field(grid_, std::move(full));
    }
    traj.snapshots[n] = terminal;
    return traj;
  }

 private:
  double squared_state_norm(const std::vector<std::vector<double>>& snaps,
                            const std::vector<double>& u) const {
    double s = 0.5 * h_ * u[0] * u[0];  // the Dirichlet node at y = 1
    for (std::size_t i = 0; i < interior_weights_.size(); ++i)
      s += interior_weights_[i] * snaps[0][i] * snaps[0][i];
    return s;
  }

  Grid grid_;
  const MapCoefficients* coeffs_;
  double alpha_;
  int m_;
  double h_;
  std::vector<double> theta_;
  std::vector<TridiagonalFactorization> forward_;
  std::vector<TridiagonalFactorization> transposed_;
  std::vector<double> feed_;              ///< Dirichlet rhs weight per step
  std::vector<double> interior_weights_;  ///< trapezoid weights, y=0 folded
};

/// Candidate steps beta0/2^j in order; returns on the first sufficient
/// decrease, else the smallest candidate flagged as not descended.
template <typename Probe>
ArmijoResult backtrack(double objective_at_zero, double slope,
                       const OptimizerSettings& settings, Probe&& probe) {
  ArmijoResult result;
  double beta = settings.beta0;
  for (int j = 0;; ++j) {
    const double value = probe(beta);
    if (value <= objective_at_zero + beta * settings.gamma * slope) {
      result.step = beta;
      result.objective = value;
      result.descended = true;
      return result;
    }
    if (j == settings.max_halvings) {
      result.step = beta;
      result.objective = value;
      result.descended = false;
      return result;
    }
    beta *= 0.5;
  }
}

}  // namespace

double objective(const NodalField& phi_at_start,
                 const std::vector<double>& control,
                 const std::vector<double>& times, double alpha) {
  if (control.size() != times.size() || times.size() < 2)
    fail(ErrorCode::invalid_argument,
         "control and times must align with at least two samples");
  const std::vector<double> theta = trapezoid_weights(times);
  double time = 0.0;
  for (std::size_t k = 0; k < control.size(); ++k)
    time += theta[k] * control[k] * control[k];

  const double h = phi_at_start.grid.h();
  double space = 0.0;
  const std::vector<double>& v = phi_at_start.values;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    space += 0.5 * h * (v[i] * v[i] + v[i + 1] * v[i + 1]);
  return 0.5 * space + 0.5 * alpha * time;
}

std::vector<double> gradient(const std::vector<double>& control,
                             const AdjointTrajectory& companion,
                             const MapCoefficients& coeffs, double alpha,
                             bool unweighted) {
  if (companion.snapshots.empty())
    fail(ErrorCode::invalid_argument, "companion trajectory is empty");
  if (control.size() != coeffs.size())
    fail(ErrorCode::invalid_argument,
         "control must have one value per sample instant");
  if (alpha < 0.0) fail(ErrorCode::invalid_argument, "alpha must be nonnegative");
  const DescentEngine engine(companion.grid, coeffs, alpha);

  // the companion starts from the negated state at the initial instant
  const NodalField& g0 = companion.snapshots.front();
  std::vector<std::vector<double>> snaps(engine.steps() + 1);
  snaps[0].assign(g0.values.begin() + 1, g0.values.end() - 1);
  for (double& v : snaps[0]) v = -v;

  std::vector<double> pairing, riesz, base;
  engine.gradient_of(snaps, control, unweighted, pairing, riesz, base);
  return base;
}

ArmijoResult armijo_step(
    const std::vector<double>& control, const std::vector<double>& direction,
    const std::vector<double>& times,
    const std::function<double(const std::vector<double>&)>& evaluate,
    const OptimizerSettings& settings) {
  check_settings(settings);
  if (control.size() != direction.size() || control.size() != times.size())
    fail(ErrorCode::invalid_argument, "control, direction, times must align");
  const std::vector<double> theta = trapezoid_weights(times);
  // the direction is the negative gradient in the trapezoid metric
  double slope = 0.0;
  for (std::size_t k = 0; k < direction.size(); ++k)
    slope -= theta[k] * direction[k] * direction[k];

  const double base = evaluate(control);
  std::vector<double> trial(control.size());
  return backtrack(base, slope, settings, [&](double beta) {
    for (std::size_t k = 0; k < control.size(); ++k)
      trial[k] = control[k] + beta * direction[k];
    return evaluate(trial);
  });
}

ControlSolution solve_null_control(const NodalField& terminal,
                                   const MapCoefficients& coeffs,
                                   const OptimizerSettings& settings) {
  check_settings(settings);
  check_reference(terminal.grid);
  const DescentEngine engine(terminal.grid, coeffs, settings.alpha);
  const std::size_t n = engine.steps();

  ControlSolution sol;
  sol.side = coeffs.side;
  sol.control.assign(n + 1, 0.0);
  auto snaps = engine.sweep(terminal, sol.control);
  double value = engine.objective_of(snaps, sol.control);
  sol.objective_history.push_back(value);

  std::vector<double> pairing, riesz, base, direction(n + 1), trial(n + 1);
  std::vector<std::vector<double>> trial_snaps;
  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    engine.gradient_of(snaps, sol.control, settings.unweighted_update, pairing,
                       riesz, base);
    sol.gradient_norm = engine.norm_of(riesz);
    if (sol.gradient_norm <= settings.tolerance) {
      sol.converged = true;
      break;
    }
    double slope = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      direction[k] = -base[k];
      slope += pairing[k] * direction[k];
    }
    if (slope >= 0.0) break;  // no descent available along this direction

    const ArmijoResult step =
        backtrack(value, slope, settings, [&](double beta) {
          for (std::size_t k = 0; k <= n; ++k)
            trial[k] = sol.control[k] + beta * direction[k];
          trial_snaps = engine.sweep(terminal, trial);
          return engine.objective_of(trial_snaps, trial);
        });
    sol.control = trial;
    snaps = std::move(trial_snaps);
    value = step.objective;
    sol.objective_history.push_back(value);
    sol.iterations = it;
    if (!step.descended) sol.descended = false;
  }
  if (!sol.converged) {
    engine.gradient_of(snaps, sol.control, settings.unweighted_update, pairing,
                       riesz, base);
    sol.gradient_norm = engine.norm_of(riesz);
    sol.converged = sol.gradient_norm <= settings.tolerance;
  }
  sol.residual = engine.residual_of(snaps, sol.control);
  sol.trajectory = engine.assemble(terminal, snaps, sol.control);
  return sol;
}

}  // namespace priceform
