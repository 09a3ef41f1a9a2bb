#include "fetcpm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fetcpm/random.hpp"

namespace fetcpm {

void SimulationPlan::validate() const {
  if (n_streams < 1) throw std::invalid_argument("SimulationPlan: n_streams must be at least 1");
  if (length < 1) throw std::invalid_argument("SimulationPlan: length must be at least 1");
  auto probability = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string("SimulationPlan: ") + name + " must lie in [0, 1]");
    }
  };
  probability(theta0, "theta0");
  if (theta1.has_value() != tau.has_value()) {
    throw std::invalid_argument("SimulationPlan: theta1 and tau go together");
  }
  if (theta1) probability(*theta1, "theta1");
  if (tau && *tau >= length) {
    throw std::invalid_argument("SimulationPlan: tau (" + std::to_string(*tau) +
                                ") must be below length (" + std::to_string(length) + ")");
  }
  if (batch_size < 1) throw std::invalid_argument("SimulationPlan: batch_size must be at least 1");
}

std::uint64_t calibration_memory_bytes(const SimulationPlan& plan, std::uint64_t t_min) {
  const std::uint64_t cols = plan.length >= t_min ? plan.length - t_min + 1 : 0;
  return plan.n_streams * cols * sizeof(double);
}

CalibrationResult calibrate_thresholds(double alpha, double lambda, const SimulationPlan& plan,
                                       const CalibrationSettings& settings) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("calibrate_thresholds: alpha must lie in (0, 1]");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("calibrate_thresholds: lambda must lie in [0, 1]");
  }
  plan.validate();
  if (plan.tau) throw std::invalid_argument("calibrate_thresholds: streams must not contain a change");
  const std::uint64_t t_min = settings.t_min;
  if (t_min < 3) throw std::invalid_argument("calibrate_thresholds: t_min must be at least 3");
  if (plan.length < t_min) {
    throw std::invalid_argument("calibrate_thresholds: length must be at least t_min");
  }
  if (settings.window < t_min) {
    throw std::invalid_argument("calibrate_thresholds: window must be at least t_min");
  }

  CalibrationResult result;
  if (plan.theta0 != 0.5) {
    result.warnings.push_back("theta0=" + format_double(plan.theta0) +
                              " is not the conservative design point 0.5");
  }

  // y[(t - t_min) * n + i] = Y_t of stream i.
  const std::size_t n = plan.n_streams;
  const std::size_t cols = plan.length - t_min + 1;
  std::vector<double> y(n * cols);
  const std::size_t batches = (n + plan.batch_size - 1) / plan.batch_size;
  parallel_for(
      batches,
      [&](std::size_t b) {
        CpmStatistic stat(lambda, settings.window);
        const std::size_t end = std::min(n, (b + 1) * plan.batch_size);
        for (std::size_t i = b * plan.batch_size; i < end; ++i) {
          stat.reset();
          auto rng = substream(plan.seed, i);
          for (std::uint64_t t = 1; t <= plan.length; ++t) {
            stat.update(bernoulli(rng, plan.theta0));
            if (t >= t_min) y[(t - t_min) * n + i] = stat.value();
          }
        }
      },
      plan.threads, 1);

  std::vector<ThresholdEntry> entries;
  std::vector<std::uint32_t> survivors(n);
  for (std::size_t i = 0; i < n; ++i) survivors[i] = static_cast<std::uint32_t>(i);
  std::vector<double> values;
  values.reserve(n);
  for (std::uint64_t t = t_min; t <= plan.length; ++t) {
    if (survivors.size() < settings.survivor_floor) {
      result.truncated_at = t;
      result.warnings.push_back("only " + std::to_string(survivors.size()) +
                                " surviving streams at t=" + std::to_string(t) +
                                " (floor " + std::to_string(settings.survivor_floor) +
                                "); table truncated");
      break;
    }
    const double* row = y.data() + (t - t_min) * n;
    values.clear();
    for (const auto i : survivors) values.push_back(row[i]);

    double h;
    if (alpha >= 1.0) {
      h = *std::min_element(values.begin(), values.end());
    } else {
      // The (m+1)-th largest value leaves at most m strictly above it.
      const auto m = static_cast<std::size_t>(
          std::floor(alpha * static_cast<double>(values.size()) * (1.0 + 1e-12)));
      std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m), values.end(),
                       std::greater<>());
      h = values[m];
    }
    entries.push_back({t, h});
    const std::size_t before = survivors.size();
    std::erase_if(survivors, [&](std::uint32_t i) { return row[i] > h; });
    result.steps.push_back({t, before, before - survivors.size()});
    if (alpha >= 1.0) break;
  }
  if (entries.empty()) {
    throw std::runtime_error("calibrate_thresholds: fewer than " +
                             std::to_string(settings.survivor_floor) + " streams to calibrate with");
  }

  ThresholdMetadata meta;
  meta.alpha = alpha;
  meta.lambda = lambda;
  meta.n_streams = plan.n_streams;
  meta.length = plan.length;
  meta.seed = plan.seed;
  meta.generator = std::string(kGeneratorName);
  meta.t_min = t_min;
  if (plan.theta0 != 0.5) meta.extra["theta0"] = format_double(plan.theta0);
  if (settings.window < plan.length) meta.extra["window"] = std::to_string(settings.window);
  result.table = std::make_shared<const ThresholdTable>(std::move(meta), std::move(entries));
  return result;
}

double RunLengthSummary::standard_error() const noexcept {
  return n_effective > 0 ? sd / std::sqrt(static_cast<double>(n_effective)) : 0.0;
}

DetectorFactory cpm_factory(CpmConfig config) {
  config.validate();
  return [config = std::move(config)]() -> RunDetector {
    auto detector = std::make_shared<CpmDetector>(config);
    return [detector](int x) { return detector->step(x).state == DetectorState::changed; };
  };
}

DetectorFactory cusum_factory(CusumConfig config) {
  config.validate();
  return [config]() -> RunDetector {
    auto detector = std::make_shared<CusumDetector>(config);
    return [detector](int x) { return detector->step(x).state == DetectorState::changed; };
  };
}

std::vector<RunLength> simulate_run_lengths(const DetectorFactory& factory,
                                            const SimulationPlan& plan) {
  plan.validate();
  std::vector<RunLength> runs(plan.n_streams);
  const std::uint64_t change = plan.tau.value_or(plan.length);
  const double after = plan.theta1.value_or(plan.theta0);
  parallel_for(
      runs.size(),
      [&](std::size_t i) {
        auto rng = substream(plan.seed, i);
        auto detector = factory();
        RunLength run{plan.length, false};
        for (std::uint64_t t = 1; t <= plan.length; ++t) {
          if (detector(bernoulli(rng, t <= change ? plan.theta0 : after))) {
            run = {t, true};
            break;
          }
        }
        runs[i] = run;
      },
      plan.threads, 16);
  return runs;
}

namespace {

RunLengthSummary summarize(const std::vector<double>& values, std::uint64_t n_runs,
                           std::uint64_t false_alarms, std::uint64_t capped) {
  RunLengthSummary s;
  s.n_runs = n_runs;
  s.n_effective = values.size();
  s.capped_count = capped;
  s.false_alarm_rate = n_runs > 0 ? static_cast<double>(false_alarms) / static_cast<double>(n_runs) : 0.0;
  if (values.empty()) return s;
  double sum = 0.0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

RunLengthSummary summarize_arl0(const std::vector<RunLength>& runs) {
  std::vector<double> values;
  values.reserve(runs.size());
  std::uint64_t capped = 0;
  for (const auto& r : runs) {
    values.push_back(static_cast<double>(r.time));
    capped += !r.signalled;
  }
  return summarize(values, runs.size(), 0, capped);
}

RunLengthSummary summarize_delay(const std::vector<RunLength>& runs, std::uint64_t tau) {
  std::vector<double> values;
  values.reserve(runs.size());
  std::uint64_t false_alarms = 0;
  std::uint64_t capped = 0;
  for (const auto& r : runs) {
    if (r.signalled && r.time <= tau) {
      ++false_alarms;
      continue;
    }
    values.push_back(static_cast<double>(r.time - tau));
    capped += !r.signalled;
  }
  return summarize(values, runs.size(), false_alarms, capped);
}

RunLengthSummary empirical_arl0(const DetectorFactory& factory, double theta0, std::uint64_t n_runs,
                                std::uint64_t cap, std::uint64_t seed, unsigned threads) {
  if (n_runs < 100) throw std::invalid_argument("empirical_arl0: need at least 100 runs");
  SimulationPlan plan;
  plan.n_streams = n_runs;
  plan.length = cap;
  plan.theta0 = theta0;
  plan.seed = seed;
  plan.threads = threads;
  return summarize_arl0(simulate_run_lengths(factory, plan));
}

RunLengthSummary empirical_delay(const DetectorFactory& factory, double theta0, double theta1,
                                 std::uint64_t tau, std::uint64_t n_runs, std::uint64_t cap,
                                 std::uint64_t seed, unsigned threads) {
  if (tau < 1) throw std::invalid_argument("empirical_delay: tau must be at least 1");
  if (theta1 == theta0) throw std::invalid_argument("empirical_delay: theta1 must differ from theta0");
  SimulationPlan plan;
  plan.n_streams = n_runs;
  plan.length = cap;
  plan.theta0 = theta0;
  plan.theta1 = theta1;
  plan.tau = tau;
  plan.seed = seed;
  plan.threads = threads;
  return summarize_delay(simulate_run_lengths(factory, plan), tau);
}

}  // namespace fetcpm
