#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fetcpm/detector_state.hpp"
#include "fetcpm/fet_accumulator.hpp"
#include "fetcpm/threshold_table.hpp"

namespace fetcpm {

struct SmoothedMax {
  double value;       // max_k Y_{k,t}
  std::size_t index;  // position of the first maximizer in the input
};

/// Exponential smoothing across splits in k order:
///   Y_first = F_first,  Y_k = (1 - lambda) Y_{k-1} + lambda F_k.
/// Returns the maximum and the smallest position attaining it.
/// Throws std::invalid_argument on empty input or lambda outside [0, 1].
SmoothedMax smoothed_max(std::span<const double> fet_values, double lambda);

/// Y_t = max_k Y_{k,t} over the retained splits of a stream, maintained
/// alongside its FetAccumulator. No thresholds, no state machine.
class CpmStatistic {
 public:
  explicit CpmStatistic(double lambda, std::uint64_t window = FetAccumulator::kDefaultWindow,
                        std::uint64_t reanchor_interval = FetAccumulator::kDefaultReanchorInterval);

  /// Appends one observation and recomputes Y_t.
  void update(int x);
  void reset();

  double lambda() const noexcept { return lambda_; }
  std::uint64_t time() const noexcept { return acc_.time(); }
  /// Y_t, or 0 while no split exists (t <= 2).
  double value() const noexcept { return value_; }
  /// Split maximizing the smoothed statistic; 0 while no split exists.
  std::uint64_t argmax_split() const noexcept { return argmax_; }
  const FetAccumulator& accumulator() const noexcept { return acc_; }
  /// Heap bytes held, accumulator included.
  std::size_t memory_bytes() const noexcept {
    return acc_.memory_bytes() + (local_.capacity() + keep_pow_.capacity()) * sizeof(double);
  }

 private:
  static constexpr std::size_t kSegmentedFrom = 64;

  void smooth();

  double lambda_;
  FetAccumulator acc_;
  double value_ = 0.0;
  std::uint64_t argmax_ = 0;
  std::vector<double> local_;     // per-segment smoothed values
  std::vector<double> keep_pow_;  // (1 - lambda)^m
};

struct CpmConfig {
  double lambda = 0.1;
  std::uint64_t window = FetAccumulator::kDefaultWindow;
  std::uint64_t t_min = 20;  // no test before this many observations
  std::uint64_t reanchor_interval = FetAccumulator::kDefaultReanchorInterval;
  std::shared_ptr<const ThresholdTable> thresholds;

  /// Throws std::invalid_argument if any field is out of range or the
  /// table was calibrated for a different lambda.
  void validate() const;
};

struct CpmVerdict {
  DetectorState state = DetectorState::monitoring;
  std::optional<std::uint64_t> detection_time;
  std::optional<std::uint64_t> change_estimate;
  double statistic = 0.0;  // Y_t after this step
};

/// Online FET change-point detector for an increase in a Bernoulli rate.
///
/// Signals at the first t >= t_min with Y_t > h_t. Once changed it refuses
/// further observations until reset().
class CpmDetector {
 public:
  explicit CpmDetector(CpmConfig config);

  /// Throws std::logic_error after a change has been signalled, and
  /// std::invalid_argument for observations other than 0/1.
  CpmVerdict step(int x);
  void reset();

  const CpmConfig& config() const noexcept { return config_; }
  DetectorState state() const noexcept { return last_.state; }
  const CpmVerdict& last_verdict() const noexcept { return last_; }
  std::uint64_t time() const noexcept { return stat_.time(); }
  const CpmStatistic& statistic() const noexcept { return stat_; }

 private:
  CpmConfig config_;
  CpmStatistic stat_;
  CpmVerdict last_;
};

}  // namespace fetcpm
