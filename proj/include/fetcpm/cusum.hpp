#pragma once

#include <cstdint>
#include <optional>

#include "fetcpm/detector_state.hpp"

namespace fetcpm {

/// k = r1 / r2 with r1 = -log((1 - theta1) / (1 - theta0)) and
/// r2 = log(theta1 (1 - theta0) / (theta0 (1 - theta1))).
/// Requires 0 < theta0 < theta1 < 1; throws std::invalid_argument otherwise.
double reference_value(double theta0, double theta1);

/// C <- max(0, C + x - k).
inline double cusum_step(double c, int x, double k) noexcept {
  const double next = c + static_cast<double>(x) - k;
  return next > 0.0 ? next : 0.0;
}

/// Bernoulli CUSUM chart tuned to detect a shift from theta0 to theta1.
struct CusumConfig {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double reference_k = 0.0;
  double limit = 0.0;                   // signal when C > limit
  std::optional<double> achieved_arl0;  // as estimated by calibrate_limit

  /// Fills reference_k from (theta0, theta1).
  static CusumConfig design(double theta0, double theta1, double limit);
  void validate() const;
};

struct CusumVerdict {
  DetectorState state = DetectorState::monitoring;
  std::optional<std::uint64_t> detection_time;
  double statistic = 0.0;  // C_t
};

class CusumDetector {
 public:
  explicit CusumDetector(CusumConfig config);

  /// Throws std::logic_error after a change has been signalled, and
  /// std::invalid_argument for observations other than 0/1.
  CusumVerdict step(int x);
  void reset() noexcept;

  const CusumConfig& config() const noexcept { return config_; }
  DetectorState state() const noexcept { return last_.state; }
  std::uint64_t time() const noexcept { return t_; }
  double statistic() const noexcept { return last_.statistic; }

 private:
  CusumConfig config_;
  std::uint64_t t_ = 0;
  CusumVerdict last_;
};

struct CusumLimitSearch {
  double target_arl0 = 500.0;
  std::uint64_t n_sims = 10000;
  std::uint64_t max_len = 0;  // run-length cap; 0 means 50 * target
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double resolution = 1e-4;  // grid step for candidate limits
};

struct CusumCalibration {
  double reference_k = 0.0;
  double limit = 0.0;           // smallest grid limit with estimated ARL0 >= target
  double achieved_arl0 = 0.0;   // at `limit`
  double achieved_se = 0.0;     // Monte-Carlo standard error of achieved_arl0
  double arl0_below = 0.0;      // at limit - resolution (below target)
  std::uint64_t capped_runs = 0;
  std::uint64_t cap = 0;
  /// No grid limit gives an ARL0 in [target, 2 target]: the statistic is too
  /// coarse for the requested target.
  bool coarse = false;
};

/// Finds the smallest limit h on the grid whose simulated in-control ARL0
/// (Bernoulli(theta0) streams) reaches the target. Every candidate is
/// evaluated on the same streams, which makes the estimate monotone in h and
/// the bisection exact on the simulated sample.
CusumCalibration calibrate_limit(double theta0, double theta1, const CusumLimitSearch& search);

}  // namespace fetcpm
