#include "erode/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "erode/experiment_store.hpp"
#include "erode/optimizer.hpp"
#include "erode/polyfit.hpp"
#include "erode/reference_models.hpp"
#include "erode/report.hpp"
#include "text_util.hpp"

namespace erode {

namespace {

using detail::fixed;
using detail::sig;

enum class Format { kText, kCsv };

/// Failure that maps to a specific exit code.
struct CommandError : std::runtime_error {
  CommandError(int code, const std::string& message) : std::runtime_error(message), code(code) {}
  int code;
};

struct FilterFlags {
  std::optional<std::string> po_material, to_material, machine, operation, regime;

  void attach(CLI::App& cmd) {
    cmd.add_option("--po-material", po_material, "Processed-object material");
    cmd.add_option("--to-material", to_material, "Transfer-object (tool) material");
    cmd.add_option("--machine", machine, "Processing machine");
    cmd.add_option("--operation", operation, "Processing operation");
    cmd.add_option("--regime", regime, "Working regime label");
  }

  QueryFilter filter() const { return {po_material, to_material, machine, operation, regime}; }
};

struct RangeFlags {
  double lo = kDefaultRange.lo();
  double hi = kDefaultRange.hi();

  void attach(CLI::App& cmd) {
    cmd.add_option("--lo", lo, "Lower end of the admissible power range [W]")
        ->capture_default_str();
    cmd.add_option("--hi", hi, "Upper end of the admissible power range [W]")
        ->capture_default_str();
  }

  Range range() const {
    if (!(lo > 0.0)) {
      throw CommandError(2, "--lo must be a positive power");
    }
    try {
      return Range(lo, hi);
    } catch (const ValidationError& e) {
      throw CommandError(2, e.what());
    }
  }
};

std::string resolve_store(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kStoreEnvVar); env != nullptr && *env != '\0') return env;
  return kDefaultStorePath;
}

ExperimentStore open_existing_store(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw CommandError(1, "store not found: " + path);
  }
  return ExperimentStore::load(std::filesystem::path(path));
}

Dataset read_validation(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CommandError(1, "cannot read validation file: " + path);
  }
  Dataset data = read_dataset_csv(in, path);
  data.validate();
  return data;
}

std::vector<int> parse_degrees(const std::vector<int>& degrees) {
  if (degrees.empty()) {
    throw CommandError(2, "at least one degree is required");
  }
  for (const int d : degrees) {
    if (d < 1 || d > kMaxFitDegree) {
      throw CommandError(2, "degree " + std::to_string(d) + " is outside 1.." +
                                std::to_string(kMaxFitDegree));
    }
  }
  return degrees;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& csv_path, const std::string& store_path, std::ostream& out,
               std::ostream& err) {
  std::ifstream in(csv_path);
  if (!in) {
    throw CommandError(1, "cannot read " + csv_path);
  }
  const CsvParseOutcome parsed = parse_csv_lenient(in);
  ExperimentStore store = std::filesystem::exists(store_path)
                              ? ExperimentStore::load(std::filesystem::path(store_path))
                              : ExperimentStore{};
  for (const auto& r : parsed.records) store.add(r);
  store.save(std::filesystem::path(store_path));
  for (const auto& reject : parsed.rejects) {
    err << csv_path << ": rejected " << reject.reason << '\n';
  }
  out << parsed.records.size() << " added, " << parsed.rejects.size() << " rejected\n";
  return parsed.rejects.empty() ? 0 : 1;
}

void print_records(std::ostream& out, const std::vector<ExperimentRecord>& records,
                   Format format) {
  if (format == Format::kCsv) {
    out << "id," << kCsvHeader << '\n';
    for (const auto& r : records) {
      out << r.id << ',' << r.po_material << ',' << r.to_material << ',' << r.machine << ','
          << r.operation << ',' << r.regime << ',' << format_exact(r.voltage_u) << ','
          << format_exact(r.current_i) << ',' << format_exact(r.power_p) << ','
          << format_exact(r.time_tp) << '\n';
    }
    return;
  }
  out << std::left << std::setw(5) << "id" << std::setw(8) << "PO" << std::setw(8) << "TO"
      << std::setw(10) << "machine" << std::setw(11) << "operation" << std::setw(8) << "regime"
      << std::right << std::setw(8) << "U[V]" << std::setw(8) << "I[A]" << std::setw(10)
      << "P[W]" << std::setw(9) << "t_p[s]" << '\n';
  for (const auto& r : records) {
    out << std::left << std::setw(5) << r.id << std::setw(8) << r.po_material << std::setw(8)
        << r.to_material << std::setw(10) << r.machine << std::setw(11) << r.operation
        << std::setw(8) << r.regime << std::right << std::setw(8) << format_exact(r.voltage_u)
        << std::setw(8) << format_exact(r.current_i) << std::setw(10)
        << format_exact(r.power_p) << std::setw(9) << format_exact(r.time_tp) << '\n';
  }
}

int cmd_fit(const ExperimentStore& store, const QueryFilter& filter,
            const std::vector<int>& degrees, const std::optional<std::string>& validation_path,
            DeviationMetric metric, const std::optional<std::string>& save_model, Format format,
            std::ostream& out, std::ostream& err) {
  const auto records = store.query(filter);
  if (records.empty()) {
    throw CommandError(1, "no records match the filter");
  }
  const Dataset data = extract_dataset(records);
  const std::optional<Dataset> validation =
      validation_path ? std::optional(read_validation(*validation_path)) : std::nullopt;
  const Dataset& compare = validation ? *validation : data;

  std::vector<FitReport> reports;
  for (const int d : degrees) {
    try {
      reports.push_back(fit(data, d));
    } catch (const ValidationError& e) {
      err << "warning: degree " << d << " skipped: " << e.what() << '\n';
    } catch (const SingularSystemError& e) {
      err << "warning: degree " << d << " skipped: " << e.what() << '\n';
    }
  }
  if (reports.empty()) {
    throw CommandError(1, "no requested degree could be fitted");
  }
  std::vector<double> devs;
  for (const auto& r : reports) devs.push_back(deviation(r.model, compare, metric));
  const std::size_t best = select_best_index(reports, devs);

  const char* metric_name = metric == DeviationMetric::kRmse ? "rmse" : "root-sum-squares";
  const std::string source = validation ? "validation file " + *validation_path
                                        : std::string("training data");
  if (format == Format::kCsv) {
    out << "# data: " << data.label << ", " << data.points.size() << " points; deviation: "
        << metric_name << " on " << source << '\n';
    out << "degree,rss,deviation,condition_estimate,optimum,coefficients\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      out << r.model.degree() << ',' << fixed(r.rss, 4) << ',' << fixed(devs[i], 4) << ','
          << sig(r.condition_estimate, 4) << ',' << (i == best ? "optimum" : "") << ',';
      for (std::size_t k = 0; k < r.model.coefficients().size(); ++k) {
        out << (k ? " " : "") << sig(r.model.coefficients()[k], 10);
      }
      out << '\n';
    }
  } else {
    out << "data: " << data.label << " (" << data.points.size() << " points)\n";
    out << "deviation: " << metric_name << " on " << source << "\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      out << "\ndegree " << r.model.degree() << (i == best ? "  [optimum]" : "") << '\n';
      out << "  t_p(P) =";
      for (std::size_t k = 0; k < r.model.coefficients().size(); ++k) {
        const double c = r.model.coefficients()[k];
        if (k == 0) {
          out << ' ' << sig(c, 10);
        } else {
          out << (c < 0 ? " - " : " + ") << sig(std::abs(c), 10);
        }
        if (k == 1) out << "*P";
        if (k > 1) out << "*P^" << k;
      }
      out << "\n  rss: " << fixed(r.rss, 4) << "\n  deviation: " << fixed(devs[i], 4)
          << "\n  condition estimate: " << sig(r.condition_estimate, 4) << '\n';
    }
  }
  if (save_model) {
    std::ofstream m(*save_model);
    write_model(m, reports[best].model);
    if (!m) {
      throw CommandError(1, "cannot write model file " + *save_model);
    }
  }
  return 0;
}

struct ModelSource {
  std::optional<std::string> model_path;
  std::optional<std::string> reference_name;
  std::optional<int> degree;
  std::string store_flag;
  FilterFlags filters;

  void attach(CLI::App& cmd) {
    auto* m = cmd.add_option("--model", model_path, "Model file written by `fit --save-model`");
    auto* r = cmd.add_option("--reference", reference_name,
                             "Built-in reference model: linear, quadratic or cubic");
    auto* d = cmd.add_option("--degree", degree, "Fit this degree to the store and use it");
    m->excludes(r)->excludes(d);
    r->excludes(d);
    cmd.add_option("--store", store_flag, "Store file (with --degree)");
    filters.attach(cmd);
  }

  std::pair<PolynomialModel, std::string> load() const {
    if (model_path) {
      std::ifstream in(*model_path);
      if (!in) throw CommandError(1, "cannot read model file " + *model_path);
      return {read_model(in), "model file " + *model_path};
    }
    if (reference_name) {
      try {
        return {reference::by_name(*reference_name), "reference " + *reference_name};
      } catch (const ValidationError& e) {
        throw CommandError(2, e.what());
      }
    }
    if (degree) {
      const auto store = open_existing_store(resolve_store(store_flag));
      const auto records = store.query(filters.filter());
      if (records.empty()) throw CommandError(1, "no records match the filter");
      const Dataset data = extract_dataset(records);
      return {fit(data, *degree).model, "degree-" + std::to_string(*degree) + " fit of " + data.label};
    }
    throw CommandError(2, "one of --model, --reference or --degree is required");
  }
};

void print_results(std::ostream& out, const std::vector<OptimizationResult>& results,
                   Format format) {
  if (format == Format::kCsv) {
    out << "method,argmin_p_w,min_time_s,evaluations,converged,physically_valid\n";
    for (const auto& r : results) {
      out << to_string(r.method) << ',' << fixed(r.argmin_p, 4) << ',' << fixed(r.min_value, 4)
          << ',' << r.evaluations << ',' << (r.converged ? "true" : "false") << ','
          << (r.physically_valid ? "true" : "false") << '\n';
    }
    return;
  }
  out << std::left << std::setw(19) << "method" << std::right << std::setw(12) << "P* [W]"
      << std::setw(12) << "t* [s]" << std::setw(13) << "evaluations" << std::setw(11)
      << "converged" << std::setw(18) << "physically_valid" << '\n';
  for (const auto& r : results) {
    out << std::left << std::setw(19) << to_string(r.method) << std::right << std::setw(12)
        << fixed(r.argmin_p, 4) << std::setw(12) << fixed(r.min_value, 4) << std::setw(13)
        << r.evaluations << std::setw(11) << yes_no(r.converged) << std::setw(18)
        << yes_no(r.physically_valid) << '\n';
  }
}

struct OptimizeFlags {
  std::string method = "analytic";
  std::size_t grid_points = 66501;
  std::size_t samples = 100000;
  RandomSearchParams params;
};

int cmd_optimize(const PolynomialModel& model, const std::string& description,
                 const Range& range, const OptimizeFlags& flags, Format format,
                 std::ostream& out, std::ostream& err) {
  const std::vector<std::string> known{"analytic", "grid", "pure-random", "controlled-random",
                                       "all"};
  if (std::find(known.begin(), known.end(), flags.method) == known.end()) {
    throw CommandError(2, "unknown method \"" + flags.method + "\"");
  }
  const bool all = flags.method == "all";
  try {
    flags.params.validate();
  } catch (const ValidationError& e) {
    throw CommandError(2, e.what());
  }

  std::vector<OptimizationResult> results;
  std::optional<OptimizationResult> analytic;
  if (all || flags.method == "analytic") {
    try {
      analytic = minimize_analytic(model, range);
      results.push_back(*analytic);
    } catch (const UnsupportedDegreeError& e) {
      if (!all) throw CommandError(2, e.what());
      err << "warning: " << e.what() << '\n';
    }
  }
  if (all || flags.method == "grid") {
    results.push_back(minimize_grid(model, range, flags.grid_points));
  }
  if (all || flags.method == "pure-random") {
    results.push_back(minimize_pure_random(model, range, flags.samples, flags.params.seed));
  }
  if (all || flags.method == "controlled-random") {
    results.push_back(minimize_controlled_random(model, range, flags.params));
  }

  if (format == Format::kText) {
    out << "model: " << description << " (degree " << model.degree() << ")\n";
    out << "range: [" << format_exact(range.lo()) << ", " << format_exact(range.hi())
        << "] W\n";
  }
  print_results(out, results, format);
  if (format == Format::kText && analytic && results.size() > 1) {
    double spread = 0.0;
    for (const auto& r : results) spread = std::max(spread, std::abs(r.min_value - analytic->min_value));
    out << "max |t* - analytic t*|: " << fixed(spread, 4) << " s\n";
  }
  for (const auto& r : results) {
    if (!r.physically_valid) {
      err << "warning: " << to_string(r.method) << " minimum " << fixed(r.min_value, 4)
          << " s is not a positive processing time (model artifact)\n";
    }
  }
  return 0;
}

int cmd_invert(const PolynomialModel& model, double target, const Range& range, Format format,
               std::ostream& out) {
  const auto roots = inverse_solve(model, target, range);
  if (format == Format::kCsv) {
    out << "power_w\n";
    for (const double p : roots) out << format_exact(p) << '\n';
    return 0;
  }
  if (roots.empty()) {
    out << "no power in [" << format_exact(range.lo()) << ", " << format_exact(range.hi())
        << "] W gives t_p = " << format_exact(target) << " s\n";
    return 0;
  }
  for (const double p : roots) {
    out << "P = " << fixed(p, 4) << " W  (t_p = " << fixed(model.evaluate(p), 4) << " s)\n";
  }
  return 0;
}

int cmd_report(const ExperimentStore& store, const QueryFilter& filter,
               const std::string& out_dir, ReportOptions options, std::ostream& out) {
  const auto records = store.query(filter);
  if (records.empty()) {
    throw CommandError(1, "no records to report on; nothing written");
  }
  const auto written = write_report(extract_dataset(records), out_dir, options);
  for (const auto& p : written) out << p.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"erode: experiment store, polynomial models and optimum regimes for debiting"};
  app.name("erode");
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a CSV file and append it to the store");
  std::string ingest_csv, ingest_store;
  ingest->add_option("csv", ingest_csv, "Experiment CSV file")->required();
  ingest->add_option("--store", ingest_store, "Store file");

  // query
  auto* query = app.add_subcommand("query", "List stored experiments matching a filter");
  std::string query_store;
  FilterFlags query_filters;
  query->add_option("--store", query_store, "Store file");
  query_filters.attach(*query);
  std::string query_format = "csv";
  query->add_option("--format", query_format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit polynomial models and pick the best one");
  std::string fit_store;
  FilterFlags fit_filters;
  std::vector<int> fit_degrees{1, 2, 3};
  std::optional<std::string> fit_validation, fit_save;
  std::string fit_metric = "rmse";
  std::string fit_format = "text";
  fitc->add_option("--store", fit_store, "Store file");
  fit_filters.attach(*fitc);
  fitc->add_option("--degrees", fit_degrees, "Polynomial degrees to fit")
      ->delimiter(',')
      ->capture_default_str();
  fitc->add_option("--validation", fit_validation,
                   "Held-out CSV (power_w,time_s or experiment schema)");
  fitc->add_option("--metric", fit_metric, "Deviation metric")
      ->check(CLI::IsMember({"rmse", "rss"}))
      ->capture_default_str();
  fitc->add_option("--save-model", fit_save, "Write the selected model to this file");
  fitc->add_option("--format", fit_format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  // optimize
  auto* optc = app.add_subcommand("optimize", "Minimize processing time over a power range");
  ModelSource opt_source;
  RangeFlags opt_range;
  OptimizeFlags opt_flags;
  std::string opt_format = "text";
  opt_source.attach(*optc);
  opt_range.attach(*optc);
  optc->add_option("--method", opt_flags.method,
                   "analytic, grid, pure-random, controlled-random or all")
      ->capture_default_str();
  optc->add_option("--grid-points", opt_flags.grid_points, "Grid size")->capture_default_str();
  optc->add_option("--samples", opt_flags.samples, "Pure random sample count")
      ->capture_default_str();
  optc->add_option("--k", opt_flags.params.samples_per_iteration,
                   "Controlled random: samples per iteration")
      ->capture_default_str();
  optc->add_option("--rho", opt_flags.params.shrink_factor, "Controlled random: shrink factor")
      ->capture_default_str();
  optc->add_option("--eps", opt_flags.params.width_tolerance,
                   "Controlled random: stop width [W]")
      ->capture_default_str();
  optc->add_option("--max-iter", opt_flags.params.max_iterations,
                   "Controlled random: iteration cap")
      ->capture_default_str();
  optc->add_option("--seed", opt_flags.params.seed, "Seed for the random methods")
      ->capture_default_str();
  optc->add_option("--format", opt_format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  // invert
  auto* invc = app.add_subcommand("invert", "Find the powers that give a target processing time");
  ModelSource inv_source;
  RangeFlags inv_range;
  double inv_target = 0.0;
  std::string inv_format = "text";
  inv_source.attach(*invc);
  inv_range.attach(*invc);
  invc->add_option("--target", inv_target, "Target processing time [s]")->required();
  invc->add_option("--format", inv_format, "Output format")
      ->check(CLI::IsMember({"text", "csv"}))
      ->capture_default_str();

  // report
  auto* repc = app.add_subcommand("report", "Write plot data, SVG plots and the discrepancy report");
  std::string rep_store, rep_out;
  FilterFlags rep_filters;
  RangeFlags rep_range;
  std::vector<int> rep_degrees{1, 2, 3};
  std::size_t rep_points = 267;
  std::optional<std::string> rep_validation;
  repc->add_option("--store", rep_store, "Store file");
  repc->add_option("--out", rep_out, "Output directory")->required();
  rep_filters.attach(*repc);
  rep_range.attach(*repc);
  repc->add_option("--degrees", rep_degrees, "Polynomial degrees to plot")
      ->delimiter(',')
      ->capture_default_str();
  repc->add_option("--curve-points", rep_points, "Samples per curve (>= 200)")
      ->capture_default_str();
  repc->add_option("--validation", rep_validation, "Held-out CSV for the comparison");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "erode: " << e.what() << '\n';
    if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front()) {
      err << "run `erode " << (sub == &app ? "" : sub->get_name() + " ") << "--help` for usage\n";
    }
    return 2;
  }

  const auto fmt = [](const std::string& name) {
    return name == "csv" ? Format::kCsv : Format::kText;
  };

  try {
    if (ingest->parsed()) {
      return cmd_ingest(ingest_csv, resolve_store(ingest_store), out, err);
    }
    if (query->parsed()) {
      const auto store = open_existing_store(resolve_store(query_store));
      print_records(out, store.query(query_filters.filter()), fmt(query_format));
      return 0;
    }
    if (fitc->parsed()) {
      const auto degrees = parse_degrees(fit_degrees);
      const auto store = open_existing_store(resolve_store(fit_store));
      return cmd_fit(store, fit_filters.filter(), degrees, fit_validation,
                     fit_metric == "rss" ? DeviationMetric::kRootSumSquares
                                         : DeviationMetric::kRmse,
                     fit_save, fmt(fit_format), out, err);
    }
    if (optc->parsed()) {
      const Range range = opt_range.range();
      const auto [model, description] = opt_source.load();
      return cmd_optimize(model, description, range, opt_flags, fmt(opt_format), out, err);
    }
    if (invc->parsed()) {
      const Range range = inv_range.range();
      const auto [model, description] = inv_source.load();
      return cmd_invert(model, inv_target, range, fmt(inv_format), out);
    }
    if (repc->parsed()) {
      if (rep_points < 200) {
        throw CommandError(2, "--curve-points must be at least 200");
      }
      ReportOptions options;
      options.range = rep_range.range();
      options.degrees = parse_degrees(rep_degrees);
      options.curve_points = rep_points;
      if (rep_validation) options.validation = read_validation(*rep_validation);
      const auto store = open_existing_store(resolve_store(rep_store));
      return cmd_report(store, rep_filters.filter(), rep_out, options, out);
    }
  } catch (const CommandError& e) {
    err << "erode: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    err << "erode: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace erode
