#include "fetcpm/cusum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fetcpm/random.hpp"
#include "fetcpm/threshold_table.hpp"

namespace fetcpm {

double reference_value(double theta0, double theta1) {
  if (!(theta0 > 0.0 && theta1 < 1.0 && theta0 < theta1)) {
    throw std::invalid_argument("reference_value: need 0 < theta0 < theta1 < 1, got theta0=" +
                                format_double(theta0) + " theta1=" + format_double(theta1));
  }
  const double r1 = -std::log((1.0 - theta1) / (1.0 - theta0));
  const double r2 = std::log(theta1 * (1.0 - theta0) / (theta0 * (1.0 - theta1)));
  return r1 / r2;
}

CusumConfig CusumConfig::design(double theta0, double theta1, double limit) {
  CusumConfig c;
  c.theta0 = theta0;
  c.theta1 = theta1;
  c.reference_k = reference_value(theta0, theta1);
  c.limit = limit;
  c.validate();
  return c;
}

void CusumConfig::validate() const {
  reference_value(theta0, theta1);
  if (!(reference_k > 0.0 && reference_k < 1.0)) {
    throw std::invalid_argument("CusumConfig: reference value must lie in (0, 1)");
  }
  if (!(limit > 0.0) || !std::isfinite(limit)) {
    throw std::invalid_argument("CusumConfig: limit must be positive");
  }
}

CusumDetector::CusumDetector(CusumConfig config) : config_(std::move(config)) {
  config_.validate();
}

CusumVerdict CusumDetector::step(int x) {
  if (last_.state == DetectorState::changed) {
    throw std::logic_error("CusumDetector::step after a change was signalled; call reset() first");
  }
  if (x != 0 && x != 1) {
    throw std::invalid_argument("CusumDetector::step: observation must be 0 or 1, got " +
                                std::to_string(x));
  }
  ++t_;
  last_.statistic = cusum_step(last_.statistic, x, config_.reference_k);
  if (last_.statistic > config_.limit) {
    last_.state = DetectorState::changed;
    last_.detection_time = t_;
  }
  return last_;
}

void CusumDetector::reset() noexcept {
  t_ = 0;
  last_ = CusumVerdict{};
}

namespace {

// One simulated in-control path, extended on demand. Records holds each new
// running maximum of C with its time, so the first passage above any h
// already covered is a binary search.
struct Path {
  std::mt19937_64 rng;
  double c = 0.0;
  std::uint64_t t = 0;
  std::vector<std::pair<double, std::uint64_t>> records;

  double top() const noexcept { return records.empty() ? 0.0 : records.back().first; }

  void extend(double h, double theta, double k, std::uint64_t cap) {
    while (top() <= h && t < cap) {
      c = cusum_step(c, bernoulli(rng, theta), k);
      ++t;
      if (c > top()) records.emplace_back(c, t);
    }
  }

  // Signal time for limit h, or cap when the path never exceeds h in time.
  std::uint64_t run_length(double h, std::uint64_t cap) const {
    const auto it = std::upper_bound(records.begin(), records.end(), h,
                                     [](double v, const auto& r) { return v < r.first; });
    return it == records.end() ? cap : it->second;
  }
};

struct Estimate {
  double mean;
  double se;
  std::uint64_t capped;
};

}  // namespace

CusumCalibration calibrate_limit(double theta0, double theta1, const CusumLimitSearch& search) {
  const double k = reference_value(theta0, theta1);
  if (!(search.target_arl0 > 1.0)) throw std::invalid_argument("calibrate_limit: target ARL0 must exceed 1");
  if (search.n_sims < 1000) throw std::invalid_argument("calibrate_limit: need at least 1000 simulations");
  if (!(search.resolution > 0.0)) throw std::invalid_argument("calibrate_limit: resolution must be positive");
  const std::uint64_t cap =
      search.max_len > 0 ? search.max_len
                         : static_cast<std::uint64_t>(std::ceil(50.0 * search.target_arl0));

  std::vector<Path> paths(search.n_sims);
  for (std::size_t i = 0; i < paths.size(); ++i) paths[i].rng = substream(search.seed, i);

  auto estimate = [&](std::uint64_t j) {
    const double h = static_cast<double>(j) * search.resolution;
    parallel_for(
        paths.size(), [&](std::size_t i) { paths[i].extend(h, theta0, k, cap); }, search.threads);
    double sum = 0.0, sum_sq = 0.0;
    std::uint64_t capped = 0;
    for (const auto& p : paths) {
      const std::uint64_t len = p.run_length(h, cap);
      capped += p.top() <= h;
      const double v = static_cast<double>(len);
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(paths.size());
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return Estimate{mean, std::sqrt(var / n), capped};
  };

  // Invariant: grid index lo falls short of the target, hi reaches it.
  std::uint64_t lo = 0;
  std::uint64_t hi = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(1.0 / search.resolution)));
  while (estimate(hi).mean < search.target_arl0) {
    lo = hi;
    hi *= 2;
    if (static_cast<double>(hi) * search.resolution > 1e6) {
      throw std::runtime_error("calibrate_limit: no limit reaches the target ARL0 within the run cap");
    }
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (estimate(mid).mean >= search.target_arl0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  const Estimate at = estimate(hi);
  const Estimate below = estimate(hi - 1);
  CusumCalibration out;
  out.reference_k = k;
  out.limit = static_cast<double>(hi) * search.resolution;
  out.achieved_arl0 = at.mean;
  out.achieved_se = at.se;
  out.arl0_below = below.mean;
  out.capped_runs = at.capped;
  out.cap = cap;
  out.coarse = at.mean > 2.0 * search.target_arl0;
  return out;
}

}  // namespace fetcpm
