#pragma once

#include <string>

#include "priceform/assimilate.hpp"
#include "priceform/experiments.hpp"
#include "priceform/forward.hpp"

namespace priceform {

/// Which of the built-in starting densities a run uses.
enum class InitialDatum {
  cubic1,     ///< (x + 0.7)(x - 0.6)(x + 0.1), the monotone-price datum
  cubic2,     ///< (x + 0.75)(x - 0.65)(x + 0.05), the non-monotone one
  symmetric,  ///< -sin(2 pi x), equal masses, price pinned at zero
  file,       ///< nodal values read from datum_file
};

/// Full description of a run: the reconstruction configuration plus the
/// data generation, prediction, and sweep settings the commands need.
/// Defaults reproduce the first reference experiment.
struct RunConfig {
  std::string experiment = "experiment-1";  ///< free label
  InitialDatum initial_datum = InitialDatum::cubic1;
  std::string datum_file;  ///< x,f table when initial_datum == file
  std::string out_dir = ".";
  unsigned long seed = 0;  ///< reserved for future stochastic variants
  BoundaryMode bc = BoundaryMode::nonlocal;
  AssimilationConfig assimilation;  ///< includes the optimizer settings
  int n_steps = 125;          ///< forward steps from t = 0 to final_time
  double horizon = 0.25;      ///< prediction window past final_time
  int predict_steps = 125;    ///< forward steps across the horizon
  double delta = 0.01;        ///< sweep noise level (slow) or size (fast)
  std::size_t sweep_count = 13;  ///< disturbed copies in a sweep
  PerturbationMode perturbation = PerturbationMode::slow;
  std::string price_file;  ///< input override; default <out_dir>/price.csv
  std::string fhat_file;   ///< input override; default <out_dir>/fhat_T.csv
};

/// Parses `key = value` lines: one pair per line, `#` starts a comment,
/// blank lines ignored. Unknown keys, duplicate keys, and malformed values
/// fail with invalid_argument.
RunConfig parse_config_text(const std::string& text);

/// Same, reading the file at `path`.
RunConfig parse_config_file(const std::string& path);

}  // namespace priceform
