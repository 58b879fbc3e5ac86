#include "priceform/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "priceform/errors.hpp"

namespace priceform {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad(std::size_t line, const std::string& what) {
  fail(ErrorCode::invalid_argument,
       "config line " + std::to_string(line) + ": " + what);
}

double to_real(const std::string& v, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE)
    bad(line, "not a number: '" + v + "'");
  return x;
}

long to_integer(const std::string& v, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE)
    bad(line, "not an integer: '" + v + "'");
  return x;
}

long to_count(const std::string& v, std::size_t line) {
  const long x = to_integer(v, line);
  if (x < 0) bad(line, "must be nonnegative: '" + v + "'");
  return x;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) bad(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) bad(line_no, "empty key");
    if (value.empty()) bad(line_no, "empty value for '" + key + "'");
    if (!seen.insert(key).second) bad(line_no, "duplicate key '" + key + "'");

    AssimilationConfig& as = cfg.assimilation;
    OptimizerSettings& opt = as.settings;
    if (key == "experiment") {
      cfg.experiment = value;
    } else if (key == "initial_datum") {
      if (value == "cubic-1") cfg.initial_datum = InitialDatum::cubic1;
      else if (value == "cubic-2") cfg.initial_datum = InitialDatum::cubic2;
      else if (value == "symmetric") cfg.initial_datum = InitialDatum::symmetric;
      else if (value == "file") cfg.initial_datum = InitialDatum::file;
      else bad(line_no, "initial_datum must be cubic-1, cubic-2, symmetric, or file");
    } else if (key == "datum_file") {
      cfg.datum_file = value;
    } else if (key == "out_dir") {
      cfg.out_dir = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<unsigned long>(to_count(value, line_no));
    } else if (key == "bc") {
      if (value == "nonlocal") cfg.bc = BoundaryMode::nonlocal;
      else if (value == "neumann") cfg.bc = BoundaryMode::neumann;
      else bad(line_no, "bc must be nonlocal or neumann");
    } else if (key == "mode") {
      if (value == "verification") as.mode = ReconstructionMode::verification;
      else if (value == "assimilation") as.mode = ReconstructionMode::assimilation;
      else bad(line_no, "mode must be verification or assimilation");
    } else if (key == "perturbation") {
      if (value == "slow") cfg.perturbation = PerturbationMode::slow;
      else if (value == "fast") cfg.perturbation = PerturbationMode::fast;
      else bad(line_no, "perturbation must be slow or fast");
    } else if (key == "n_cells") {
      as.n_cells = static_cast<int>(to_count(value, line_no));
    } else if (key == "half_width") {
      as.half_width = to_real(value, line_no);
    } else if (key == "transaction_cost") {
      as.transaction_cost = to_real(value, line_no);
    } else if (key == "price_margin") {
      as.price_margin = to_real(value, line_no);
    } else if (key == "start_time") {
      as.start_time = to_real(value, line_no);
    } else if (key == "final_time") {
      as.final_time = to_real(value, line_no);
    } else if (key == "basis_count") {
      as.basis_count = static_cast<std::size_t>(to_count(value, line_no));
    } else if (key == "refinement") {
      as.refinement = static_cast<std::size_t>(to_count(value, line_no));
    } else if (key == "parallel") {
      as.parallel = static_cast<std::size_t>(to_count(value, line_no));
    } else if (key == "alpha") {
      opt.alpha = to_real(value, line_no);
    } else if (key == "beta0") {
      opt.beta0 = to_real(value, line_no);
    } else if (key == "gamma") {
      opt.gamma = to_real(value, line_no);
    } else if (key == "max_iterations") {
      opt.max_iterations = static_cast<std::size_t>(to_count(value, line_no));
    } else if (key == "tolerance") {
      opt.tolerance = to_real(value, line_no);
    } else if (key == "max_halvings") {
      opt.max_halvings = static_cast<int>(to_count(value, line_no));
    } else if (key == "unweighted_update") {
      if (value == "true") opt.unweighted_update = true;
      else if (value == "false") opt.unweighted_update = false;
      else bad(line_no, "unweighted_update must be true or false");
    } else if (key == "n_steps") {
      cfg.n_steps = static_cast<int>(to_count(value, line_no));
    } else if (key == "horizon") {
      cfg.horizon = to_real(value, line_no);
    } else if (key == "predict_steps") {
      cfg.predict_steps = static_cast<int>(to_count(value, line_no));
    } else if (key == "delta") {
      cfg.delta = to_real(value, line_no);
    } else if (key == "sweep_count") {
      cfg.sweep_count = static_cast<std::size_t>(to_count(value, line_no));
    } else if (key == "price_file") {
      cfg.price_file = value;
    } else if (key == "fhat_file") {
      cfg.fhat_file = value;
    } else {
      bad(line_no, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorCode::invalid_argument, "cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace priceform
