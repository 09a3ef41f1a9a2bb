#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fetcpm/calibration.hpp"
#include "fetcpm/cusum.hpp"
#include "fetcpm/threshold_table.hpp"

namespace fetcpm {

enum class ExperimentTable { delay_tau300, delay_tau50, cusum_misspec, arl0_conservative, thresholds };

std::string_view table_name(ExperimentTable table) noexcept;
/// Throws std::invalid_argument listing the valid ids.
ExperimentTable parse_table_name(std::string_view name);

struct Cell {
  double theta0;
  double theta1;  // ignored by arl0_conservative and thresholds
};

struct ExperimentSpec {
  ExperimentTable table = ExperimentTable::delay_tau300;
  std::vector<Cell> grid;  // empty: the table's default grid
  std::uint64_t n_runs = 2000;
  std::uint64_t seed = 1;
  std::vector<double> lambdas = {0.1, 0.3};
  bool include_cusum = true;  // delay tables only
  double target_arl0 = 500.0;
  std::uint64_t cusum_sims = 10000;
  /// Directory holding arl<N>_lambda<L>.csv tables; unset uses the bundled ones.
  std::optional<std::filesystem::path> thresholds_dir;
  std::uint64_t calibration_streams = 100000;  // thresholds table only
  std::uint64_t calibration_length = 500;
  unsigned threads = 0;

  /// Throws std::invalid_argument for cells outside the table's domain.
  void validate() const;
};

std::vector<Cell> default_grid(ExperimentTable table);

struct ResultRow {
  std::string table;
  std::string detector;  // cpm, cusum or cusum_misspec
  std::optional<double> lambda;
  double theta0 = 0.0;
  std::optional<double> theta1;
  std::optional<std::uint64_t> tau;
  RunLengthSummary summary;
  std::uint64_t seed = 0;
  std::optional<CusumCalibration> cusum;  // chart used for cusum rows
};

/// Threshold table for (arl0, lambda): from `dir` when given, else bundled.
/// A missing table raises an error naming the calibrate command to run.
std::shared_ptr<const ThresholdTable> load_thresholds(const std::optional<std::filesystem::path>& dir,
                                                      double arl0, double lambda);

/// Fills every requested cell. Progress lines go to `log` when given.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr);

inline constexpr std::string_view kResultsHeader =
    "table,detector,lambda,theta0,theta1,tau,mean_delay,sd,n_effective,false_alarm_rate,seed";

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);

struct ThroughputReport {
  std::uint64_t window = 0;
  std::uint64_t observations = 0;
  double seconds = 0.0;
  double obs_per_second = 0.0;
  std::size_t memory_bytes = 0;        // detector heap after the run
  std::size_t memory_bound_bytes = 0;  // kBytesPerSplit * window
};

inline constexpr std::size_t kBytesPerSplit = 256;

/// Times CpmDetector::step on a Bernoulli(0.5) stream after the window has
/// filled, i.e. with every split retained.
ThroughputReport measure_throughput(std::uint64_t window = 2000, std::uint64_t observations = 200000,
                                    std::uint64_t seed = 1, double lambda = 0.1);

}  // namespace fetcpm
