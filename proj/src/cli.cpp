#include "fetcpm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>

#include "fetcpm/bench.hpp"
#include "fetcpm/bundled_tables.hpp"
#include "fetcpm/calibration.hpp"
#include "fetcpm/cpm_detector.hpp"
#include "fetcpm/cusum.hpp"
#include "fetcpm/random.hpp"
#include "fetcpm/stream_io.hpp"
#include "fetcpm/threshold_table.hpp"

namespace fetcpm {
namespace {

// Binds "-" to the caller's streams and anything else to a file.
class Input {
 public:
  Input(const std::string& path, std::istream& fallback) : stream_(&fallback) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open input " + path);
      stream_ = &file_;
    }
  }
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_;
};

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw std::runtime_error("cannot open output " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish(const std::string& path) {
    stream_->flush();
    if (!*stream_) throw std::runtime_error("failed writing " + path);
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct CalibrateArgs {
  double alpha = 0.0;
  double lambda = 0.1;
  std::uint64_t streams = 100000;
  std::uint64_t length = 2000;
  std::uint64_t seed = 1;
  std::uint64_t t_min = 20;
  std::uint64_t window = FetAccumulator::kDefaultWindow;
  std::uint64_t floor = 500;
  double theta0 = 0.5;
  unsigned threads = 0;
  std::string out;
};

struct DetectArgs {
  std::string thresholds;
  double arl0 = 500;
  double lambda = 0.1;
  std::uint64_t window = FetAccumulator::kDefaultWindow;
  std::uint64_t t_min = 20;
  std::string input = "-";
  bool restart = false;
};

struct CusumArgs {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double arl0 = 500;
  std::optional<double> limit;
  std::uint64_t sims = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string input = "-";
  bool calibrate_only = false;
  bool restart = false;
};

struct BenchArgs {
  std::string table;
  std::uint64_t runs = 2000;
  std::uint64_t seed = 1;
  std::string thresholds_dir;
  std::string out = "-";
  std::vector<double> lambdas;
  std::vector<std::string> cells;
  bool no_cusum = false;
  double arl0 = 500;
  std::uint64_t cusum_sims = 10000;
  std::uint64_t calibration_streams = 100000;
  std::uint64_t calibration_length = 500;
  unsigned threads = 0;
  bool throughput = false;
  std::uint64_t window = FetAccumulator::kDefaultWindow;
  std::uint64_t observations = 200000;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out, std::ostream& err) {
  SimulationPlan plan;
  plan.n_streams = a.streams;
  plan.length = a.length;
  plan.theta0 = a.theta0;
  plan.seed = a.seed;
  plan.threads = a.threads;
  CalibrationSettings settings;
  settings.t_min = a.t_min;
  settings.window = a.window;
  settings.survivor_floor = a.floor;
  err << "calibrating " << a.streams << " streams of length " << a.length << " (about "
      << (calibration_memory_bytes(plan, a.t_min) >> 20) << " MiB)" << std::endl;
  const auto result = calibrate_thresholds(a.alpha, a.lambda, plan, settings);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (result.truncated_at) err << "truncated at t=" << *result.truncated_at << '\n';
  Output sink(a.out, out);
  write_threshold_table(sink.get(), *result.table);
  sink.finish(a.out);
  err << "wrote " << result.table->entries().size() << " thresholds";
  if (a.out != "-") err << " to " << a.out;
  err << '\n';
  return kExitNoChange;
}

int cmd_detect(const DetectArgs& a, bool lambda_given, std::istream& in, std::ostream& out) {
  CpmConfig config;
  config.window = a.window;
  config.t_min = a.t_min;
  if (!a.thresholds.empty()) {
    config.thresholds = std::make_shared<const ThresholdTable>(read_threshold_table(a.thresholds));
    config.lambda = lambda_given ? a.lambda : config.thresholds->lambda();
  } else {
    config.lambda = a.lambda;
    config.thresholds = load_thresholds(std::nullopt, a.arl0, a.lambda);
  }
  CpmDetector detector(config);

  Input source(a.input, in);
  ObservationReader reader(source.get());
  std::uint64_t offset = 0;
  bool changed = false;
  while (const auto x = reader.next()) {
    const auto verdict = detector.step(*x);
    if (verdict.state != DetectorState::changed) continue;
    changed = true;
    out << "CHANGE t=" << offset + *verdict.detection_time
        << " tau_hat=" << offset + *verdict.change_estimate << '\n';
    if (!a.restart) return kExitChange;
    offset += detector.time();
    detector.reset();
  }
  if (changed) return kExitChange;
  out << "NO CHANGE n=" << offset + detector.time()
      << " Y=" << format_double(detector.last_verdict().statistic) << '\n';
  return kExitNoChange;
}

int cmd_cusum(const CusumArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  CusumConfig config;
  if (a.limit) {
    config = CusumConfig::design(a.theta0, a.theta1, *a.limit);
    out << "k=" << format_double(config.reference_k) << " h=" << format_double(config.limit) << '\n';
  } else {
    CusumLimitSearch search;
    search.target_arl0 = a.arl0;
    search.n_sims = a.sims;
    search.seed = a.seed;
    search.threads = a.threads;
    const auto chart = calibrate_limit(a.theta0, a.theta1, search);
    config = CusumConfig::design(a.theta0, a.theta1, chart.limit);
    config.achieved_arl0 = chart.achieved_arl0;
    out << "k=" << format_double(chart.reference_k) << " h=" << format_double(chart.limit)
        << " achieved_arl0=" << format_double(std::round(chart.achieved_arl0 * 10) / 10)
        << " coarse=" << (chart.coarse ? "true" : "false") << '\n';
    if (chart.coarse) {
      err << "warning: the CUSUM statistic is coarse here; no limit gives an ARL0 in ["
          << format_double(a.arl0) << ", " << format_double(2 * a.arl0)
          << "]: ARL0 " << format_double(std::round(chart.arl0_below * 10) / 10) << " at h="
          << format_double(chart.limit - search.resolution) << ", "
          << format_double(std::round(chart.achieved_arl0 * 10) / 10) << " at h="
          << format_double(chart.limit) << '\n';
    }
  }
  if (a.calibrate_only) return kExitNoChange;

  CusumDetector detector(config);
  Input source(a.input, in);
  ObservationReader reader(source.get());
  std::uint64_t offset = 0;
  bool changed = false;
  while (const auto x = reader.next()) {
    const auto verdict = detector.step(*x);
    if (verdict.state != DetectorState::changed) continue;
    changed = true;
    out << "CHANGE t=" << offset + *verdict.detection_time << '\n';
    if (!a.restart) return kExitChange;
    offset += detector.time();
    detector.reset();
  }
  if (changed) return kExitChange;
  out << "NO CHANGE n=" << offset + detector.time() << " C=" << format_double(detector.statistic())
      << '\n';
  return kExitNoChange;
}

Cell parse_cell(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("cell '" + text + "' must look like theta0:theta1");
  }
  try {
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw std::invalid_argument("cell '" + text + "' must look like theta0:theta1");
  }
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  if (a.throughput) {
    const auto r = measure_throughput(a.window, a.observations, a.seed);
    out << "throughput window=" << r.window << " observations=" << r.observations
        << " seconds=" << format_double(r.seconds)
        << " obs_per_sec=" << static_cast<std::uint64_t>(r.obs_per_second)
        << " memory_bytes=" << r.memory_bytes << " memory_bound_bytes=" << r.memory_bound_bytes
        << '\n';
    return kExitNoChange;
  }
  if (a.table.empty()) throw std::invalid_argument("bench needs --table or --throughput");
  ExperimentSpec spec;
  spec.table = parse_table_name(a.table);
  for (const auto& c : a.cells) spec.grid.push_back(parse_cell(c));
  if (spec.table == ExperimentTable::arl0_conservative) {
    for (auto& c : spec.grid) c.theta1 = 0.0;
  }
  spec.n_runs = a.runs;
  spec.seed = a.seed;
  if (!a.lambdas.empty()) spec.lambdas = a.lambdas;
  spec.include_cusum = !a.no_cusum;
  spec.target_arl0 = a.arl0;
  spec.cusum_sims = a.cusum_sims;
  if (!a.thresholds_dir.empty()) spec.thresholds_dir = a.thresholds_dir;
  spec.calibration_streams = a.calibration_streams;
  spec.calibration_length = a.calibration_length;
  spec.threads = a.threads;
  const auto rows = run_experiment(spec, &err);
  Output sink(a.out, out);
  write_results_csv(sink.get(), rows);
  sink.finish(a.out);
  return kExitNoChange;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Change detection for Bernoulli streams with the Fisher exact test CPM", "fetcpm"};
  app.require_subcommand(1);

  CalibrateArgs ca;
  auto* calibrate = app.add_subcommand("calibrate", "Simulate a threshold table");
  calibrate->add_option("--alpha", ca.alpha, "Per-step false-alarm rate (1/ARL0)")->required();
  calibrate->add_option("--lambda", ca.lambda, "Smoothing weight")->capture_default_str();
  calibrate->add_option("--streams", ca.streams, "Simulated streams")->capture_default_str();
  calibrate->add_option("--length", ca.length, "Stream length")->capture_default_str();
  calibrate->add_option("--seed", ca.seed, "Random seed")->capture_default_str();
  calibrate->add_option("--t-min", ca.t_min, "First tested time")->capture_default_str();
  calibrate->add_option("--window", ca.window, "Detector window")->capture_default_str();
  calibrate->add_option("--floor", ca.floor, "Minimum surviving streams")->capture_default_str();
  calibrate->add_option("--theta0", ca.theta0, "Stream success rate")->capture_default_str();
  calibrate->add_option("--threads", ca.threads, "Worker threads (0 = all cores)");
  calibrate->add_option("--out", ca.out, "Output file, - for stdout")->required();

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Run the CPM detector over a 0/1 stream");
  detect->add_option("--thresholds", da.thresholds, "Threshold table file (default: bundled)");
  detect->add_option("--arl0", da.arl0, "Bundled table to use: 370, 500, 1000 or 5000")
      ->capture_default_str();
  auto* lambda_opt = detect->add_option("--lambda", da.lambda, "Smoothing weight (must match the table)");
  detect->add_option("--window", da.window, "Window size")->capture_default_str();
  detect->add_option("--t-min", da.t_min, "First tested time")->capture_default_str();
  detect->add_option("--input", da.input, "Input file, - for stdin")->capture_default_str();
  detect->add_flag("--restart", da.restart, "Keep monitoring after each change");

  CusumArgs ua;
  auto* cusum = app.add_subcommand("cusum", "Calibrate and run a Bernoulli CUSUM chart");
  cusum->add_option("--theta0", ua.theta0, "In-control rate")->required();
  cusum->add_option("--theta1", ua.theta1, "Out-of-control rate")->required();
  cusum->add_option("--arl0", ua.arl0, "Target in-control ARL")->capture_default_str();
  cusum->add_option("--limit", ua.limit, "Use this control limit instead of calibrating");
  cusum->add_option("--sims", ua.sims, "Calibration runs")->capture_default_str();
  cusum->add_option("--seed", ua.seed, "Random seed")->capture_default_str();
  cusum->add_option("--threads", ua.threads, "Worker threads (0 = all cores)");
  cusum->add_option("--input", ua.input, "Input file, - for stdin")->capture_default_str();
  cusum->add_flag("--calibrate-only", ua.calibrate_only, "Only report the calibrated chart");
  cusum->add_flag("--restart", ua.restart, "Keep monitoring after each change");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Reproduce run-length tables");
  bench->add_option("--table", ba.table,
                    "delay_tau300, delay_tau50, cusum_misspec, arl0_conservative or thresholds");
  bench->add_option("--runs", ba.runs, "Runs per cell")->capture_default_str();
  bench->add_option("--seed", ba.seed, "Random seed")->capture_default_str();
  bench->add_option("--thresholds-dir", ba.thresholds_dir, "Directory of arl<N>_lambda<L>.csv tables");
  bench->add_option("--out", ba.out, "Results CSV, - for stdout")->capture_default_str();
  bench->add_option("--lambda", ba.lambdas, "CPM smoothing weights")->delimiter(',');
  bench->add_option("--cells", ba.cells, "Cells as theta0:theta1, comma separated")->delimiter(',');
  bench->add_flag("--no-cusum", ba.no_cusum, "Skip CUSUM rows in delay tables");
  bench->add_option("--arl0", ba.arl0, "Target in-control ARL")->capture_default_str();
  bench->add_option("--cusum-sims", ba.cusum_sims, "Runs per CUSUM limit search")->capture_default_str();
  bench->add_option("--calibration-streams", ba.calibration_streams, "Streams for the thresholds table")
      ->capture_default_str();
  bench->add_option("--calibration-length", ba.calibration_length, "Length for the thresholds table")
      ->capture_default_str();
  bench->add_option("--threads", ba.threads, "Worker threads (0 = all cores)");
  bench->add_flag("--throughput", ba.throughput, "Measure detector throughput instead");
  bench->add_option("--window", ba.window, "Window for --throughput")->capture_default_str();
  bench->add_option("--observations", ba.observations, "Observations for --throughput")
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitNoChange : kExitError;
  }

  try {
    if (calibrate->parsed()) return cmd_calibrate(ca, out, err);
    if (detect->parsed()) return cmd_detect(da, lambda_opt->count() > 0, in, out);
    if (cusum->parsed()) return cmd_cusum(ua, in, out, err);
    if (bench->parsed()) return cmd_bench(ba, out, err);
  } catch (const std::exception& e) {
    out.flush();
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace fetcpm
