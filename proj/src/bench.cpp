#include "fetcpm/bench.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "fetcpm/bundled_tables.hpp"
#include "fetcpm/cpm_detector.hpp"
#include "fetcpm/random.hpp"

namespace fetcpm {
namespace {

constexpr std::pair<ExperimentTable, std::string_view> kTableNames[] = {
    {ExperimentTable::delay_tau300, "delay_tau300"},
    {ExperimentTable::delay_tau50, "delay_tau50"},
    {ExperimentTable::cusum_misspec, "cusum_misspec"},
    {ExperimentTable::arl0_conservative, "arl0_conservative"},
    {ExperimentTable::thresholds, "thresholds"},
};

// Offset between the design of a misspecified chart and the data.
constexpr double kMisspecShift = 0.1;

bool is_delay_table(ExperimentTable t) {
  return t == ExperimentTable::delay_tau300 || t == ExperimentTable::delay_tau50 ||
         t == ExperimentTable::cusum_misspec;
}

std::uint64_t change_time(ExperimentTable t) { return t == ExperimentTable::delay_tau300 ? 300 : 50; }

bool on_grid(double v) {
  for (const double g : {0.1, 0.2, 0.3, 0.4}) {
    if (std::abs(v - g) < 1e-9) return true;
  }
  return false;
}

std::string cell_text(const Cell& c) {
  return "(" + format_double(c.theta0) + " -> " + format_double(c.theta1) + ")";
}

std::uint64_t arl0_cap(double target) { return static_cast<std::uint64_t>(std::ceil(50.0 * target)); }

}  // namespace

std::string_view table_name(ExperimentTable table) noexcept {
  for (const auto& [t, name] : kTableNames) {
    if (t == table) return name;
  }
  return "?";
}

ExperimentTable parse_table_name(std::string_view name) {
  std::string valid;
  for (const auto& [t, n] : kTableNames) {
    if (n == name) return t;
    valid += valid.empty() ? "" : ", ";
    valid += n;
  }
  throw std::invalid_argument("unknown table '" + std::string(name) + "' (expected one of: " + valid + ")");
}

std::vector<Cell> default_grid(ExperimentTable table) {
  std::vector<Cell> grid;
  switch (table) {
    case ExperimentTable::delay_tau300:
    case ExperimentTable::delay_tau50:
    case ExperimentTable::cusum_misspec: {
      const int top = table == ExperimentTable::cusum_misspec ? 8 : 9;
      for (int a = 1; a <= 4; ++a) {
        for (int b = a + 1; b <= top; ++b) grid.push_back({a / 10.0, b / 10.0});
      }
      break;
    }
    case ExperimentTable::arl0_conservative:
      for (const double th : {0.01, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50}) grid.push_back({th, 0.0});
      break;
    case ExperimentTable::thresholds:
      grid.push_back({0.5, 0.0});
      break;
  }
  return grid;
}

void ExperimentSpec::validate() const {
  if (n_runs < 100) throw std::invalid_argument("n_runs must be at least 100");
  if (!(target_arl0 > 1.0)) throw std::invalid_argument("target ARL0 must exceed 1");
  const bool uses_cpm = table != ExperimentTable::cusum_misspec;
  if (uses_cpm && lambdas.empty()) throw std::invalid_argument("no lambda values given");
  for (const double l : lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  }
  for (const auto& c : grid) {
    if (is_delay_table(table)) {
      if (!on_grid(c.theta0)) {
        throw std::invalid_argument("cell " + cell_text(c) + ": theta0 must be one of 0.1, 0.2, 0.3, 0.4");
      }
      if (!(c.theta1 > c.theta0 && c.theta1 <= 0.9 + 1e-12)) {
        throw std::invalid_argument("cell " + cell_text(c) + ": need theta0 < theta1 <= 0.9");
      }
      if (table == ExperimentTable::cusum_misspec && !(c.theta1 + kMisspecShift < 1.0 - 1e-12)) {
        throw std::invalid_argument("cell " + cell_text(c) +
                                    ": misspecified chart needs theta1 + 0.1 < 1");
      }
    } else if (!(c.theta0 > 0.0 && c.theta0 < 1.0)) {
      throw std::invalid_argument("theta0 must lie in (0, 1)");
    }
  }
}

std::shared_ptr<const ThresholdTable> load_thresholds(const std::optional<std::filesystem::path>& dir,
                                                      double arl0, double lambda) {
  const auto rounded = static_cast<std::uint64_t>(std::llround(arl0));
  const std::string command = "fetcpm calibrate --alpha " + format_double(1.0 / arl0) +
                              " --lambda " + format_double(lambda);
  if (dir) {
    const auto path = *dir / bundled_table_filename(rounded, lambda);
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("missing threshold table " + path.string() + "; create it with: " +
                               command + " --out " + path.string());
    }
    auto table = std::make_shared<const ThresholdTable>(read_threshold_table(path));
    if (std::abs(table->lambda() - lambda) > 1e-9) {
      throw std::runtime_error(path.string() + " was calibrated for lambda=" +
                               format_double(table->lambda()));
    }
    return table;
  }
  try {
    return bundled_threshold_table(rounded, lambda);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string(e.what()) + "; create one with: " + command +
                             " --out <dir>/" + bundled_table_filename(rounded, lambda) +
                             " and pass --thresholds-dir <dir>");
  }
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::ostream* log) {
  spec.validate();
  const auto grid = spec.grid.empty() ? default_grid(spec.table) : spec.grid;
  const std::string name(table_name(spec.table));
  // Chart calibration uses streams unrelated to the experiment's.
  const std::uint64_t chart_seed = spec.seed ^ 0x9e3779b97f4a7c15ULL;
  std::vector<ResultRow> rows;
  auto note = [&](const std::string& line) {
    if (log) *log << name << ": " << line << std::endl;
  };

  if (spec.table == ExperimentTable::thresholds) {
    for (const double lambda : spec.lambdas) {
      SimulationPlan plan;
      plan.n_streams = spec.calibration_streams;
      plan.length = spec.calibration_length;
      plan.theta0 = grid.front().theta0;
      plan.seed = spec.seed;
      plan.threads = spec.threads;
      note("calibrating lambda=" + format_double(lambda));
      const auto result = calibrate_thresholds(1.0 / spec.target_arl0, lambda, plan);
      for (const auto& w : result.warnings) note("warning: " + w);
      for (std::size_t i = 0; i < result.steps.size(); ++i) {
        const auto& step = result.steps[i];
        ResultRow row;
        row.table = name;
        row.detector = "cpm";
        row.lambda = lambda;
        row.theta0 = plan.theta0;
        row.tau = step.t;
        row.summary.mean = result.table->entries()[i].h;
        row.summary.n_runs = step.survivors;
        row.summary.n_effective = step.survivors;
        row.summary.false_alarm_rate =
            static_cast<double>(step.exceedances) / static_cast<double>(step.survivors);
        row.seed = spec.seed;
        rows.push_back(std::move(row));
      }
    }
    return rows;
  }

  if (spec.table == ExperimentTable::arl0_conservative) {
    const std::uint64_t cap = arl0_cap(spec.target_arl0);
    for (const double lambda : spec.lambdas) {
      CpmConfig config;
      config.lambda = lambda;
      config.thresholds = load_thresholds(spec.thresholds_dir, spec.target_arl0, lambda);
      const auto factory = cpm_factory(config);
      for (const auto& cell : grid) {
        note("lambda=" + format_double(lambda) + " theta0=" + format_double(cell.theta0));
        ResultRow row;
        row.table = name;
        row.detector = "cpm";
        row.lambda = lambda;
        row.theta0 = cell.theta0;
        row.summary = empirical_arl0(factory, cell.theta0, spec.n_runs, cap, spec.seed, spec.threads);
        row.seed = spec.seed;
        rows.push_back(std::move(row));
      }
    }
    return rows;
  }

  const std::uint64_t tau = change_time(spec.table);
  const std::uint64_t cap = tau + arl0_cap(spec.target_arl0);
  const bool misspec = spec.table == ExperimentTable::cusum_misspec;
  CusumLimitSearch search;
  search.target_arl0 = spec.target_arl0;
  search.n_sims = spec.cusum_sims;
  search.seed = chart_seed;
  search.threads = spec.threads;

  std::map<double, DetectorFactory> cpm;
  if (!misspec) {
    for (const double lambda : spec.lambdas) {
      CpmConfig config;
      config.lambda = lambda;
      config.thresholds = load_thresholds(spec.thresholds_dir, spec.target_arl0, lambda);
      cpm.emplace(lambda, cpm_factory(config));
    }
  }

  for (const auto& cell : grid) {
    auto base = [&] {
      ResultRow row;
      row.table = name;
      row.theta0 = cell.theta0;
      row.theta1 = cell.theta1;
      row.tau = tau;
      row.seed = spec.seed;
      return row;
    };
    if (misspec || spec.include_cusum) {
      const double d0 = misspec ? cell.theta0 + kMisspecShift : cell.theta0;
      const double d1 = misspec ? cell.theta1 + kMisspecShift : cell.theta1;
      note("cell " + cell_text(cell) + ": calibrating chart for " + format_double(d0) + " -> " +
           format_double(d1));
      const auto chart = calibrate_limit(d0, d1, search);
      if (chart.coarse) {
        note("warning: chart for " + format_double(d0) + " -> " + format_double(d1) +
             " is coarse: ARL0 jumps from " + format_double(chart.arl0_below) + " to " +
             format_double(chart.achieved_arl0));
      }
      auto config = CusumConfig::design(d0, d1, chart.limit);
      config.achieved_arl0 = chart.achieved_arl0;
      auto row = base();
      row.detector = misspec ? "cusum_misspec" : "cusum";
      row.summary = empirical_delay(cusum_factory(config), cell.theta0, cell.theta1, tau, spec.n_runs,
                                    cap, spec.seed, spec.threads);
      row.cusum = chart;
      rows.push_back(std::move(row));
    }
    for (const auto& [lambda, factory] : cpm) {
      note("cell " + cell_text(cell) + ": cpm lambda=" + format_double(lambda));
      auto row = base();
      row.detector = "cpm";
      row.lambda = lambda;
      row.summary =
          empirical_delay(factory, cell.theta0, cell.theta1, tau, spec.n_runs, cap, spec.seed, spec.threads);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.table << ',' << r.detector << ',' << (r.lambda ? format_double(*r.lambda) : "") << ','
        << format_double(r.theta0) << ',' << (r.theta1 ? format_double(*r.theta1) : "") << ','
        << (r.tau ? std::to_string(*r.tau) : "") << ',' << format_double(r.summary.mean) << ','
        << format_double(r.summary.sd) << ',' << r.summary.n_effective << ','
        << format_double(r.summary.false_alarm_rate) << ',' << r.seed << '\n';
  }
}

ThroughputReport measure_throughput(std::uint64_t window, std::uint64_t observations,
                                    std::uint64_t seed, double lambda) {
  // h = 1 is never exceeded, so the detector keeps monitoring throughout.
  ThresholdMetadata meta;
  meta.alpha = 1.0;
  meta.lambda = lambda;
  meta.generator = "none";
  CpmConfig config;
  config.lambda = lambda;
  config.window = window;
  config.thresholds =
      std::make_shared<const ThresholdTable>(meta, std::vector<ThresholdEntry>{{1, 1.0}});
  CpmDetector detector(config);

  auto rng = substream(seed, 0);
  for (std::uint64_t i = 0; i < window; ++i) detector.step(bernoulli(rng, 0.5));
  std::vector<std::uint8_t> xs(observations);
  for (auto& x : xs) x = static_cast<std::uint8_t>(bernoulli(rng, 0.5));

  const auto start = std::chrono::steady_clock::now();
  for (const auto x : xs) detector.step(x);
  const auto stop = std::chrono::steady_clock::now();

  ThroughputReport report;
  report.window = window;
  report.observations = observations;
  report.seconds = std::chrono::duration<double>(stop - start).count();
  report.obs_per_second = static_cast<double>(observations) / report.seconds;
  report.memory_bytes = detector.statistic().memory_bytes();
  report.memory_bound_bytes = kBytesPerSplit * window;
  return report;
}

}  // namespace fetcpm
