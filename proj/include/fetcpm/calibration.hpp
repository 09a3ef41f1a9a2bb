#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fetcpm/cpm_detector.hpp"
#include "fetcpm/cusum.hpp"
#include "fetcpm/threshold_table.hpp"

namespace fetcpm {

/// Design of a batch of simulated Bernoulli streams.
struct SimulationPlan {
  std::uint64_t n_streams = 100000;
  std::uint64_t length = 2000;
  double theta0 = 0.5;
  std::optional<double> theta1;     // post-change rate, with tau
  std::optional<std::uint64_t> tau; // observations 1..tau use theta0, later ones theta1
  std::uint64_t seed = 1;
  std::uint64_t batch_size = 256;   // streams per scheduling unit
  unsigned threads = 0;             // 0 = one per hardware thread

  void validate() const;
};

struct CalibrationSettings {
  std::uint64_t t_min = 20;
  std::uint64_t window = FetAccumulator::kDefaultWindow;
  std::uint64_t survivor_floor = 500;
};

struct CalibrationStep {
  std::uint64_t t;
  std::uint64_t survivors;   // streams still without a signal entering t
  std::uint64_t exceedances; // of those, streams with Y_t > h_t
};

struct CalibrationResult {
  std::shared_ptr<const ThresholdTable> table;
  std::vector<CalibrationStep> steps;
  std::optional<std::uint64_t> truncated_at;  // first t not calibrated
  std::vector<std::string> warnings;
};

/// Bytes held by the per-stream statistic matrix during calibration.
std::uint64_t calibration_memory_bytes(const SimulationPlan& plan, std::uint64_t t_min);

/// Threshold sequence with conditional per-step false-alarm rate at most
/// alpha among streams that have not yet signalled.
///
/// At each t >= t_min, h_t is the smallest observed Y_t leaving at most
/// floor(alpha * survivors) survivors strictly above it; those are then
/// discarded. Y_t does not depend on earlier thresholds, so every stream's
/// Y_t sequence is simulated first (in parallel) and the sequential discard
/// pass runs afterwards over the stored values. Stops early, with a warning,
/// once fewer than survivor_floor streams remain. alpha = 1 yields one entry
/// holding the smallest Y_{t_min}.
CalibrationResult calibrate_thresholds(double alpha, double lambda, const SimulationPlan& plan,
                                       const CalibrationSettings& settings = {});

/// Monte-Carlo run-length estimates. Run lengths beyond the cap count as the
/// cap.
struct RunLengthSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  std::uint64_t n_runs = 0;
  std::uint64_t n_effective = 0;  // runs counted in mean/sd
  double false_alarm_rate = 0.0;  // fraction of runs with T <= tau
  std::uint64_t capped_count = 0;

  double standard_error() const noexcept;
};

/// A fresh detector for one run: called with each observation in turn,
/// returns true once it signals.
using RunDetector = std::function<bool(int)>;
using DetectorFactory = std::function<RunDetector()>;

DetectorFactory cpm_factory(CpmConfig config);
DetectorFactory cusum_factory(CusumConfig config);

struct RunLength {
  std::uint64_t time;  // signal time, or the cap when the run never signalled
  bool signalled;
};

/// One run per stream of the plan (n_streams runs of at most `length`
/// observations). Run i always sees the same stream for a given seed.
std::vector<RunLength> simulate_run_lengths(const DetectorFactory& factory,
                                            const SimulationPlan& plan);

/// Mean and SD of all run lengths.
RunLengthSummary summarize_arl0(const std::vector<RunLength>& runs);
/// Mean and SD of T - tau over runs with T > tau.
RunLengthSummary summarize_delay(const std::vector<RunLength>& runs, std::uint64_t tau);

RunLengthSummary empirical_arl0(const DetectorFactory& factory, double theta0, std::uint64_t n_runs,
                                std::uint64_t cap, std::uint64_t seed, unsigned threads = 0);
RunLengthSummary empirical_delay(const DetectorFactory& factory, double theta0, double theta1,
                                 std::uint64_t tau, std::uint64_t n_runs, std::uint64_t cap,
                                 std::uint64_t seed, unsigned threads = 0);

}  // namespace fetcpm
