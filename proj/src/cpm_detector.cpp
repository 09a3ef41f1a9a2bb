#include "fetcpm/cpm_detector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fetcpm {
namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0, 1], got " + format_double(lambda));
  }
}

}  // namespace

SmoothedMax smoothed_max(std::span<const double> fet_values, double lambda) {
  check_lambda(lambda);
  if (fet_values.empty()) throw std::invalid_argument("smoothed_max: empty sequence");
  const double keep = 1.0 - lambda;
  double y = fet_values[0];
  SmoothedMax best{y, 0};
  for (std::size_t i = 1; i < fet_values.size(); ++i) {
    y = keep * y + lambda * fet_values[i];
    if (y > best.value) best = {y, i};
  }
  return best;
}

CpmStatistic::CpmStatistic(double lambda, std::uint64_t window, std::uint64_t reanchor_interval)
    : lambda_(lambda), acc_(window, reanchor_interval) {
  check_lambda(lambda);
}

void CpmStatistic::update(int x) {
  acc_.advance(x);
  smooth();
}

void CpmStatistic::reset() {
  acc_.reset();
  value_ = 0.0;
  argmax_ = 0;
}

// Same recurrence and tie rule as smoothed_max, reading F = 1 - p straight
// from the accumulator's columns. The serial recurrence is latency bound, so
// long ranges are cut into four segments smoothed side by side from a zero
// start; segment j's true values are then local_i + keep^(i+1) * (true value
// ending segment j-1).
void CpmStatistic::smooth() {
  const auto p = acc_.tracked_pvalues();
  const std::size_t n = p.size();
  if (n == 0) {
    value_ = 0.0;
    argmax_ = 0;
    return;
  }
  const double lam = lambda_;
  const double keep = 1.0 - lam;
  if (n < kSegmentedFrom) {
    double y = 1.0 - p[0];
    double best = y;
    std::size_t at = 0;
    for (std::size_t i = 1; i < n; ++i) {
      y = keep * y + lam * (1.0 - p[i]);
      if (y > best) {
        best = y;
        at = i;
      }
    }
    value_ = best;
    argmax_ = acc_.first_split() + at;
    return;
  }

  const std::size_t seg = n / 4;
  const std::size_t last = n - 3 * seg;
  if (local_.size() < n) local_.resize(n);
  if (keep_pow_.size() <= last) {
    keep_pow_.resize(std::max(last + 1, 2 * keep_pow_.size()));
    keep_pow_[0] = 1.0;
    for (std::size_t m = 1; m < keep_pow_.size(); ++m) keep_pow_[m] = keep_pow_[m - 1] * keep;
  }
  double* loc = local_.data();
  double y0 = 1.0 - p[0];
  double y1 = lam * (1.0 - p[seg]);
  double y2 = lam * (1.0 - p[2 * seg]);
  double y3 = lam * (1.0 - p[3 * seg]);
  loc[0] = y0;
  loc[seg] = y1;
  loc[2 * seg] = y2;
  loc[3 * seg] = y3;
  for (std::size_t i = 1; i < seg; ++i) {
    y0 = keep * y0 + lam * (1.0 - p[i]);
    y1 = keep * y1 + lam * (1.0 - p[seg + i]);
    y2 = keep * y2 + lam * (1.0 - p[2 * seg + i]);
    y3 = keep * y3 + lam * (1.0 - p[3 * seg + i]);
    loc[i] = y0;
    loc[seg + i] = y1;
    loc[2 * seg + i] = y2;
    loc[3 * seg + i] = y3;
  }
  for (std::size_t i = seg; i < last; ++i) {
    y3 = keep * y3 + lam * (1.0 - p[3 * seg + i]);
    loc[3 * seg + i] = y3;
  }

  for (std::size_t j = 1; j < 4; ++j) {
    double* __restrict y = loc + j * seg;
    const double* __restrict pw = keep_pow_.data() + 1;
    const std::size_t len = j == 3 ? last : seg;
    const double carry = y[-1];
    for (std::size_t i = 0; i < len; ++i) y[i] += pw[i] * carry;
  }

  // Independent running maxima hide the compare latency; max is exact, so
  // the first index holding it is the same smallest maximizer.
  double m0 = loc[0], m1 = loc[1], m2 = loc[2], m3 = loc[3];
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    m0 = loc[i] > m0 ? loc[i] : m0;
    m1 = loc[i + 1] > m1 ? loc[i + 1] : m1;
    m2 = loc[i + 2] > m2 ? loc[i + 2] : m2;
    m3 = loc[i + 3] > m3 ? loc[i + 3] : m3;
  }
  for (; i < n; ++i) m0 = loc[i] > m0 ? loc[i] : m0;
  const double best = std::max(std::max(m0, m1), std::max(m2, m3));
  std::size_t at = 0;
  while (loc[at] != best) ++at;
  value_ = best;
  argmax_ = acc_.first_split() + at;
}

void CpmConfig::validate() const {
  check_lambda(lambda);
  if (t_min < 3) throw std::invalid_argument("t_min must be at least 3");
  if (window < t_min) {
    throw std::invalid_argument("window (" + std::to_string(window) + ") must be at least t_min (" +
                                std::to_string(t_min) + ")");
  }
  if (!thresholds) throw std::invalid_argument("CpmConfig: no threshold table");
  if (std::abs(thresholds->lambda() - lambda) > 1e-9) {
    throw std::invalid_argument("lambda " + format_double(lambda) +
                                " does not match the threshold table's lambda " +
                                format_double(thresholds->lambda()));
  }
}

CpmDetector::CpmDetector(CpmConfig config)
    : config_((config.validate(), std::move(config))),
      stat_(config_.lambda, config_.window, config_.reanchor_interval) {}

CpmVerdict CpmDetector::step(int x) {
  if (last_.state == DetectorState::changed) {
    throw std::logic_error("CpmDetector::step after a change was signalled; call reset() first");
  }
  stat_.update(x);
  last_.statistic = stat_.value();
  const std::uint64_t t = stat_.time();
  if (t < config_.t_min) return last_;
  const auto h = config_.thresholds->threshold_at(t);
  if (h && stat_.value() > *h) {
    last_.state = DetectorState::changed;
    last_.detection_time = t;
    last_.change_estimate = stat_.argmax_split();
  }
  return last_;
}

void CpmDetector::reset() {
  stat_.reset();
  last_ = CpmVerdict{};
}

}  // namespace fetcpm
