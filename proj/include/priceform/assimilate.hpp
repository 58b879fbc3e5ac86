#pragma once

#include <cstddef>
#include <vector>

#include "priceform/control.hpp"
#include "priceform/domain_map.hpp"
#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

/// How the duality right-hand sides treat the state at the initial instant.
enum class ReconstructionMode {
  /// Include the integral of the known density against the state at the
  /// start — possible with synthetic data only.
  verification,
  /// Drop that term; the null control makes the state small, so the term is
  /// a controlled error. This is the mode a real measurement allows.
  assimilation,
};

struct AssimilationConfig {
  int n_cells = 200;              ///< cells of the density grid on [-L, L]
  double half_width = 0.5;        ///< L
  double transaction_cost = 0.05; ///< jump distance a of the duality terms
  double price_margin = 0.0;      ///< guard band passed to the domain maps
  double start_time = 0.0;        ///< first instant used by the control runs
  double final_time = 0.25;       ///< instant whose density is reconstructed
  std::size_t basis_count = 50;   ///< number of hat functions J
  std::size_t refinement = 1;     ///< index stride into finer-sampled data
  std::size_t parallel = 1;       ///< worker threads for the basis solves
  ReconstructionMode mode = ReconstructionMode::verification;
  OptimizerSettings settings;
};

/// Per-basis record of the inner null-control solve and its duality value.
struct BasisDiagnostic {
  double node = 0.0;  ///< physical position of the hat's peak
  Side side = Side::left;
  std::size_t iterations = 0;
  bool converged = false;
  double residual = 0.0;   ///< terminal state norm of the control solve
  double objective = 0.0;  ///< last value of the optimized functional
  double rhs = 0.0;        ///< duality right-hand side for this hat
};

struct ReconstructionResult {
  NodalField density;                 ///< reconstructed density at the end
  double split = 0.0;                 ///< price at the final instant
  std::vector<double> basis_nodes;    ///< hat peaks, ascending
  std::vector<double> coefficients;   ///< hat weights of the reconstruction
  std::vector<BasisDiagnostic> diagnostics;  ///< one per hat
  std::vector<std::vector<double>> controls; ///< boundary control per hat
  std::vector<double> control_times;  ///< instants the controls live on
};

/// Right-hand side of the duality identity for one solved control problem:
/// the trapezoidal time integral of rate(t) * (Phi(p(t) - a, t) - u(t)) on
/// the left (mirrored as rate * (u - Phi(p + a)) on the right), the state
/// evaluated through the side's map; plus, when a density at the start is
/// supplied, the integral of it against the state at the first instant over
/// the side's subdomain. Fails with shift_out_of_domain when the shifted
/// evaluation point leaves the subdomain.
double duality_rhs(const ControlSolution& sol, const PriceSeries& data,
                   double transaction_cost, double half_width,
                   const NodalField* density_at_start = nullptr);

/// The outer reconstruction loop: J hat functions on a coarse subsampling of
/// the density grid, each routed to the side of the final price its peak
/// falls on (ties go left), one null-control solve per hat, duality
/// right-hand sides, and clipped mass systems per side for the hat weights.
/// density_at_start is required in verification mode and ignored otherwise.
ReconstructionResult reconstruct_final_density(
    const PriceSeries& data, const AssimilationConfig& cfg,
    const NodalField* density_at_start = nullptr);

enum class ErrorRegion {
  full,
  /// Excludes the first and last cell and the cell(s) containing the split
  /// point — the locations the duality reconstruction leaves artefacts at.
  interior,
};

/// Relative L2 distance between two fields on one grid, trapezoidal rule per
/// cell over the chosen region. `split` locates the excluded interface cell
/// and only matters for the interior region.
double reconstruction_error(const NodalField& reconstructed,
                            const NodalField& reference, ErrorRegion region,
                            double split = 0.0);

}  // namespace priceform
