#pragma once

#include <cstddef>
#include <vector>

#include "priceform/assimilate.hpp"
#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

/// Shape of the synthetic disturbance added to a price path.
enum class PerturbationMode {
  /// p + k * delta * sin(pi t): amplitude grows with the index, one arch
  /// over a unit horizon.
  slow,
  /// p + delta * sin(4 k pi t): fixed amplitude, oscillating faster with
  /// the index.
  fast,
};

/// Returns a copy of `base` with the prices moved by the chosen waveform.
/// Both waveforms vanish at t = 0, so the disturbed series agrees with the
/// base exactly at the first instant when the series starts there. The
/// transaction rates are carried over unchanged unless `rate_delta` is
/// nonzero, in which case the same waveform (scaled by `rate_delta`) is
/// added to them. Fails with price_escaped when a disturbed price touches
/// or leaves (-L + a, L - a).
PriceSeries perturb_price(const PriceSeries& base, double delta,
                          std::size_t k, PerturbationMode mode,
                          double half_width, double transaction_cost,
                          double rate_delta = 0.0);

/// One row of a sensitivity sweep: how far the data moved and how far the
/// recovered controls and density moved with it.
struct StabilityRow {
  std::size_t index = 0;  ///< disturbance index k (0 = the clean run)
  /// C1-type distance of the data: max price gap plus max divided
  /// difference of the gap, plus the max rate gap.
  double delta_effective = 0.0;
  /// Root of the summed squared L2-in-time distances between matching
  /// boundary controls of the disturbed and the clean reconstruction.
  double control_error = 0.0;
  /// C1-type distance of the reconstructions through their cumulative
  /// profiles: max-norm of the antiderivative of the density difference
  /// over the grid plus its largest first divided difference between
  /// consecutive basis nodes. Node-scale pointwise comparisons are
  /// dominated by the poorly determined hat weights next to the two final
  /// prices; the cumulative profile integrates that wiggle away while the
  /// basis-mesh divided differences retain a derivative-level comparison
  /// at the resolution the expansions actually carry.
  double density_error = 0.0;
};

/// Reconstructs once from the clean series and once from each of `count`
/// disturbed copies (indices 1..count) and measures the movement of the
/// outputs against the clean run. Row 0 is the clean run itself, all
/// distances zero. `density_at_start` is forwarded to the reconstructions
/// and may be null in assimilation mode.
std::vector<StabilityRow> stability_sweep(const PriceSeries& clean,
                                          const AssimilationConfig& cfg,
                                          const NodalField* density_at_start,
                                          double delta, std::size_t count,
                                          PerturbationMode mode);

/// The distance StabilityRow.density_error is built from: C1-type gap of
/// two densities on the same grid through their cumulative profiles —
/// max-norm of the antiderivative of the difference plus its largest first
/// divided difference between consecutive basis nodes.
double reconstruction_distance(const NodalField& a, const NodalField& b,
                               const std::vector<double>& basis_nodes);

/// Forward continuation of a reconstructed density past the data window.
struct Prediction {
  PriceSeries series;     ///< predicted price and rate over the new window
  NodalField restart;     ///< cleaned density the continuation starts from
  double crossing = 0.0;  ///< interpolated zero crossing of the input
  double restart_price = 0.0;  ///< crossing moved to a jump multiple
};

/// Cleans a reconstructed density into a valid initial state and runs the
/// forward dynamics from it over [t_start, t_start + horizon].
///
/// Cleanup: the steepest downward zero crossing of the input is taken as
/// the price (none at all fails with incompatible_reconstruction), moved to
/// the nearest multiple of the transaction cost so the shift counts line
/// up, and the values are clamped to the positive-left / negative-right
/// sign structure around it. The initial jump of the predicted price
/// against the measured one is genuine output: it reports the
/// reconstruction error, it is not removed.
///
/// `margin` guards the predicted price away from the walls; any
/// nonpositive value (the default) stands for the transaction cost, the
/// forward solver's own default guard.
Prediction predict_price(const NodalField& fhat, double transaction_cost,
                         double t_start, double horizon, int n_steps,
                         BoundaryMode bc, double margin = 0.0);

}  // namespace priceform
