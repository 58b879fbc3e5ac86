#include "priceform/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "priceform/assimilate.hpp"
#include "priceform/config.hpp"
#include "priceform/csv.hpp"
#include "priceform/errors.hpp"
#include "priceform/experiments.hpp"
#include "priceform/forward.hpp"
#include "priceform/mesh.hpp"

namespace priceform {

namespace {

constexpr const char* kUsage =
    "usage: priceform <command> [--config PATH] [--out DIR]\n"
    "                 [--mode verification|assimilation]\n"
    "                 [--bc nonlocal|neumann] [--parallel N]\n"
    "\n"
    "commands\n"
    "  simulate     run the forward model; writes price.csv, density_T.csv,\n"
    "               transformed_T.csv\n"
    "  reconstruct  recover the final density from price.csv; writes\n"
    "               fhat_T.csv, controls.csv, recon_diag.csv\n"
    "  stability    reconstruction error under growing price noise; writes\n"
    "               stability.csv\n"
    "  predict      continue the price forward from fhat_T.csv; writes\n"
    "               predicted_price.csv\n"
    "  verify       run the built-in check suite; writes verify.txt\n";

// The three canonical initial data, all on [-1/2, 1/2].
double cubic1(double x) { return (x + 0.75) * (x - 0.65) * (x - 0.05); }
double cubic2(double x) { return (x + 0.75) * (x - 0.65) * (x + 0.05); }
double symmetric_wave(double x) {
  return -std::sin(2.0 * std::numbers::pi * x);
}

std::string join(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

std::string format17(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

/// A datum and the transform that carries it: what one experiment runs on.
struct Scenario {
  NodalField field;
  TransformSpec spec;
};

/// Nodal values from an x,f table, pinned to the configured grid.
NodalField read_field(const std::string& path, const AssimilationConfig& as) {
  const csv::Table table = csv::read_table(path);
  const std::vector<double> x = table.values("x");
  std::vector<double> f = table.values("f");
  const Grid grid = build_uniform_grid(as.half_width, as.n_cells);
  if (static_cast<int>(f.size()) != grid.n_nodes())
    fail(ErrorCode::parse_error,
         path + ": expected " + std::to_string(grid.n_nodes()) +
             " data rows for the configured grid, got " +
             std::to_string(f.size()));
  const double slack = 1e-9 * as.half_width;
  if (std::abs(x.front() - grid.node(0)) > slack ||
      std::abs(x.back() - grid.node(grid.n_nodes() - 1)) > slack)
    fail(ErrorCode::parse_error,
         path + ": x column does not span the configured interval");
  return make_field(grid, std::move(f));
}

Scenario build_scenario(const RunConfig& cfg) {
  const AssimilationConfig& as = cfg.assimilation;
  const Grid grid = build_uniform_grid(as.half_width, as.n_cells);
  switch (cfg.initial_datum) {
    case InitialDatum::cubic1:
      return {sample_field(grid, cubic1),
              make_transform_spec(as.transaction_cost, 0.05, as.half_width)};
    case InitialDatum::cubic2:
      return {sample_field(grid, cubic2),
              make_transform_spec(as.transaction_cost, -0.05, as.half_width)};
    case InitialDatum::symmetric:
      return {sample_field(grid, symmetric_wave),
              make_transform_spec(as.transaction_cost, 0.0, as.half_width)};
    case InitialDatum::file:
      break;
  }
  if (cfg.datum_file.empty())
    fail(ErrorCode::invalid_argument,
         "initial_datum = file needs a datum_file");
  NodalField field = read_field(cfg.datum_file, as);
  const double crossing = zero_crossing(field);
  const double aligned =
      as.transaction_cost * std::round(crossing / as.transaction_cost);
  return {std::move(field),
          make_transform_spec(as.transaction_cost, aligned, as.half_width)};
}

PriceSeries read_series(const std::string& path) {
  const csv::Table table = csv::read_table(path);
  PriceSeries series;
  series.times = table.values("t");
  series.prices = table.values("p");
  series.rates = table.values("lambda");
  if (series.size() < 2)
    fail(ErrorCode::parse_error, path + ": need at least two data rows");
  return series;
}

std::vector<std::vector<double>> series_rows(const PriceSeries& s) {
  std::vector<std::vector<double>> rows;
  rows.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    rows.push_back({s.times[i], s.prices[i], s.rates[i]});
  return rows;
}

std::vector<std::vector<double>> field_rows(const NodalField& f) {
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<std::size_t>(f.grid.n_nodes()));
  for (int i = 0; i < f.grid.n_nodes(); ++i)
    rows.push_back({f.grid.node(i), f.values[static_cast<std::size_t>(i)]});
  return rows;
}

ForwardResult forward_from_config(const RunConfig& cfg, const Scenario& sc) {
  const AssimilationConfig& as = cfg.assimilation;
  const double margin =
      as.price_margin > 0.0 ? as.price_margin : as.transaction_cost;
  return run_forward(sc.field, sc.spec, as.start_time, as.final_time,
                     cfg.n_steps, cfg.bc, margin);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const Scenario sc = build_scenario(cfg);
  const ForwardResult fwd = forward_from_config(cfg, sc);

  std::filesystem::create_directories(cfg.out_dir);
  csv::write_table(join(cfg.out_dir, "price.csv"), {"t", "p", "lambda"},
                   series_rows(fwd.series));
  csv::write_table(join(cfg.out_dir, "density_T.csv"), {"x", "f"},
                   field_rows(fwd.final_density));
  csv::write_table(join(cfg.out_dir, "transformed_T.csv"), {"x", "F"},
                   field_rows(fwd.trajectory.back()));
  out << "simulated " << cfg.experiment << ": " << fwd.series.size()
      << " instants, final price " << fwd.series.prices.back() << "\n";
  return 0;
}

int cmd_reconstruct(const RunConfig& cfg, std::ostream& out) {
  const std::string price_path = cfg.price_file.empty()
                                     ? join(cfg.out_dir, "price.csv")
                                     : cfg.price_file;
  const PriceSeries series = read_series(price_path);
  const AssimilationConfig& as = cfg.assimilation;

  ReconstructionResult rec;
  if (as.mode == ReconstructionMode::verification) {
    const Scenario sc = build_scenario(cfg);
    rec = reconstruct_final_density(series, as, &sc.field);
  } else {
    rec = reconstruct_final_density(series, as, nullptr);
  }

  std::vector<std::vector<double>> control_rows;
  control_rows.reserve(rec.controls.size() * rec.control_times.size());
  for (std::size_t j = 0; j < rec.controls.size(); ++j)
    for (std::size_t i = 0; i < rec.control_times.size(); ++i)
      control_rows.push_back({static_cast<double>(j), rec.control_times[i],
                              rec.controls[j][i]});
  std::vector<std::vector<double>> diag_rows;
  diag_rows.reserve(rec.diagnostics.size());
  for (std::size_t j = 0; j < rec.diagnostics.size(); ++j) {
    const BasisDiagnostic& d = rec.diagnostics[j];
    diag_rows.push_back({static_cast<double>(j),
                         static_cast<double>(d.iterations), d.objective,
                         d.residual});
  }

  std::filesystem::create_directories(cfg.out_dir);
  csv::write_table(join(cfg.out_dir, "fhat_T.csv"), {"x", "f"},
                   field_rows(rec.density));
  csv::write_table(join(cfg.out_dir, "controls.csv"),
                   {"basis_index", "t", "u"}, control_rows);
  csv::write_table(join(cfg.out_dir, "recon_diag.csv"),
                   {"basis_index", "iterations", "objective", "residual"},
                   diag_rows);
  out << "reconstructed from " << price_path << ": "
      << rec.diagnostics.size() << " basis solves, final price " << rec.split
      << "\n";
  return 0;
}

int cmd_stability(const RunConfig& cfg, std::ostream& out) {
  const Scenario sc = build_scenario(cfg);
  const ForwardResult fwd = forward_from_config(cfg, sc);
  const AssimilationConfig& as = cfg.assimilation;
  const NodalField* f0 =
      as.mode == ReconstructionMode::verification ? &sc.field : nullptr;
  const std::vector<StabilityRow> rows =
      stability_sweep(fwd.series, as, f0, cfg.delta, cfg.sweep_count,
                      cfg.perturbation);

  std::vector<std::vector<double>> csv_rows;
  csv_rows.reserve(rows.size());
  for (const StabilityRow& r : rows)
    csv_rows.push_back({r.delta_effective, r.control_error, r.density_error});

  std::filesystem::create_directories(cfg.out_dir);
  csv::write_table(join(cfg.out_dir, "stability.csv"),
                   {"delta", "err_u", "err_f"}, csv_rows);
  out << "stability sweep: " << rows.size() << " rows, last errors "
      << rows.back().control_error << " / " << rows.back().density_error
      << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const std::string fhat_path = cfg.fhat_file.empty()
                                    ? join(cfg.out_dir, "fhat_T.csv")
                                    : cfg.fhat_file;
  const AssimilationConfig& as = cfg.assimilation;
  const NodalField fhat = read_field(fhat_path, as);
  const Prediction pred =
      predict_price(fhat, as.transaction_cost, as.final_time, cfg.horizon,
                    cfg.predict_steps, cfg.bc, as.price_margin);

  std::filesystem::create_directories(cfg.out_dir);
  csv::write_table(join(cfg.out_dir, "predicted_price.csv"),
                   {"t", "p", "lambda"}, series_rows(pred.series));
  out << "predicted from " << fhat_path << ": restart price "
      << pred.restart_price << ", terminal price "
      << pred.series.prices.back() << "\n";
  return 0;
}

/// One check of the built-in suite: a pass flag and a reported witness line.
struct CheckLine {
  bool ok;
  std::string text;
};

CheckLine check(bool ok, const std::string& name, const std::string& detail) {
  return {ok, std::string(ok ? "ok   " : "FAIL ") + name + ": " + detail};
}

/// The fixed reduced check suite behind `verify`: transform round trips,
/// Neumann conservation, the symmetric equilibrium, one reconstruction with
/// its full coefficient list as a determinism witness, and restart
/// consistency of the prediction path. Only the worker count is taken from
/// the run configuration, so reports from different --parallel settings
/// must match byte for byte.
int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  std::vector<CheckLine> lines;
  std::vector<std::string> witness;

  {  // transform round trip on the three canonical data
    double worst = 0.0;
    const Grid grid = build_uniform_grid(0.5, 100);
    const struct {
      double (*f)(double);
      double price;
    } data[] = {{cubic1, 0.05}, {cubic2, -0.05}, {symmetric_wave, 0.0}};
    for (const auto& d : data) {
      const NodalField f = sample_field(grid, d.f);
      const TransformSpec spec = make_transform_spec(0.05, d.price, 0.5);
      const NodalField back = back_transform(transform(f, spec), spec);
      for (int i = 0; i < grid.n_nodes(); ++i)
        worst = std::max(worst, std::abs(back.values[static_cast<std::size_t>(
                                             i)] -
                                         f.values[static_cast<std::size_t>(i)]));
    }
    lines.push_back(check(worst <= 1e-12, "transform round trip",
                          "max nodal gap " + format17(worst) +
                              " (tolerance 1e-12)"));
  }

  {  // conservation of the transformed integral under natural boundaries
    const Grid grid = build_uniform_grid(0.5, 200);
    const NodalField f = sample_field(grid, cubic1);
    const TransformSpec spec = make_transform_spec(0.05, 0.05, 0.5);
    NodalField state = transform(f, spec);
    const double first = integrate(state);
    const HeatStepper stepper(grid, 0.25 / 125.0, BoundaryMode::neumann);
    double drift = 0.0;
    for (int k = 0; k < 125; ++k) {
      state = stepper.step(state);
      drift = std::max(drift, std::abs(integrate(state) - first));
    }
    const double rel = drift / std::abs(first);
    lines.push_back(check(rel <= 1e-10, "conserved transformed mass",
                          "relative drift " + format17(rel) +
                              " (tolerance 1e-10)"));
  }

  Prediction restart_pred;  // reused by the restart check below
  PriceSeries symmetric_series;
  {  // symmetric market stays at the equilibrium price
    const Grid grid = build_uniform_grid(0.5, 100);
    const NodalField f = sample_field(grid, symmetric_wave);
    const TransformSpec spec = make_transform_spec(0.05, 0.0, 0.5);
    const ForwardResult fwd =
        run_forward(f, spec, 0.5, 100, BoundaryMode::nonlocal);
    double worst = 0.0;
    for (double p : fwd.series.prices) worst = std::max(worst, std::abs(p));
    lines.push_back(check(worst <= 0.01, "symmetric equilibrium",
                          "max |price| " + format17(worst) +
                              " (tolerance 2h = 0.01)"));
    symmetric_series = fwd.series;
    restart_pred = predict_price(fwd.final_density, 0.05, 0.5, 0.5, 100,
                                 BoundaryMode::nonlocal);
  }

  {  // restart consistency: prediction continues the measured price
    const double gap = std::abs(restart_pred.series.prices.front() -
                                symmetric_series.prices.back());
    lines.push_back(check(gap <= 0.01, "restart consistency",
                          "price gap at the restart " + format17(gap) +
                              " (tolerance 2h = 0.01)"));
  }

  {  // one reconstruction, with every hat weight as determinism witness
    const Grid grid = build_uniform_grid(0.5, 100);
    const NodalField f = sample_field(grid, cubic1);
    const TransformSpec spec = make_transform_spec(0.05, 0.05, 0.5);
    const ForwardResult fwd =
        run_forward(f, spec, 0.25, 60, BoundaryMode::nonlocal);
    AssimilationConfig as;
    as.n_cells = 100;
    as.basis_count = 25;
    as.final_time = 0.25;
    as.mode = ReconstructionMode::verification;
    as.parallel = cfg.assimilation.parallel;
    const ReconstructionResult rec =
        reconstruct_final_density(fwd.series, as, &f);
    const double err = reconstruction_error(
        rec.density, fwd.final_density, ErrorRegion::interior, rec.split);
    lines.push_back(check(err <= 0.31, "reconstruction quality",
                          "interior relative L2 error " + format17(err) +
                              " (tolerance 0.31)"));
    witness.push_back("final price " + format17(rec.split));
    for (std::size_t j = 0; j < rec.coefficients.size(); ++j)
      witness.push_back("weight " + std::to_string(j) + " " +
                        format17(rec.coefficients[j]));
  }

  bool all_ok = true;
  std::ostringstream report;
  for (const CheckLine& line : lines) {
    all_ok = all_ok && line.ok;
    report << line.text << "\n";
  }
  report << "determinism witness\n";
  for (const std::string& line : witness) report << "  " << line << "\n";
  report << (all_ok ? "all checks passed\n" : "CHECKS FAILED\n");

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream file(join(cfg.out_dir, "verify.txt"));
  file << report.str();
  file.close();
  if (!file)
    fail(ErrorCode::parse_error,
         "cannot write " + join(cfg.out_dir, "verify.txt"));
  out << report.str();
  return all_ok ? 0 : 4;
}

std::size_t parse_worker_count(const std::string& value) {
  std::size_t pos = 0;
  unsigned long n = 0;
  try {
    n = std::stoul(value, &pos);
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_argument, "--parallel needs a number, got '" +
                                          value + "'");
  }
  if (pos != value.size() || n == 0)
    fail(ErrorCode::invalid_argument,
         "--parallel needs a positive integer, got '" + value + "'");
  return static_cast<std::size_t>(n);
}

RunConfig assemble_config(const std::vector<std::string>& args,
                          std::string* command) {
  *command = args.front();
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& flag = args[i];
    if (flag != "--config" && flag != "--out" && flag != "--mode" &&
        flag != "--bc" && flag != "--parallel")
      fail(ErrorCode::invalid_argument, "unknown flag '" + flag + "'");
    if (i + 1 >= args.size())
      fail(ErrorCode::invalid_argument, flag + " needs a value");
    const std::string& value = args[++i];
    if (flag == "--config")
      config_path = value;
    else
      overrides.emplace_back(flag, value);
  }
  RunConfig cfg;
  if (!config_path.empty()) cfg = parse_config_file(config_path);
  for (const auto& [flag, value] : overrides) {
    if (flag == "--out") {
      cfg.out_dir = value;
    } else if (flag == "--mode") {
      if (value == "verification")
        cfg.assimilation.mode = ReconstructionMode::verification;
      else if (value == "assimilation")
        cfg.assimilation.mode = ReconstructionMode::assimilation;
      else
        fail(ErrorCode::invalid_argument,
             "--mode must be verification or assimilation");
    } else if (flag == "--bc") {
      if (value == "nonlocal")
        cfg.bc = BoundaryMode::nonlocal;
      else if (value == "neumann")
        cfg.bc = BoundaryMode::neumann;
      else
        fail(ErrorCode::invalid_argument, "--bc must be nonlocal or neumann");
    } else {
      cfg.assimilation.parallel = parse_worker_count(value);
    }
  }
  return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  if (args.empty()) {
    err << kUsage;
    return 1;
  }
  if (args[0] == "help" || args[0] == "--help") {
    out << kUsage;
    return 0;
  }

  std::string command;
  RunConfig cfg;
  try {
    cfg = assemble_config(args, &command);
    if (command != "simulate" && command != "reconstruct" &&
        command != "stability" && command != "predict" && command != "verify")
      fail(ErrorCode::invalid_argument, "unknown command '" + command + "'");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n" << kUsage;
    return 1;
  }

  try {
    if (command == "simulate") return cmd_simulate(cfg, out);
    if (command == "reconstruct") return cmd_reconstruct(cfg, out);
    if (command == "stability") return cmd_stability(cfg, out);
    if (command == "predict") return cmd_predict(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::invalid_argument:
        return 1;
      case ErrorCode::parse_error:
        return 2;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace priceform
