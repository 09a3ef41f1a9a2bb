// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fetcpm/bench.hpp"
#include "fetcpm/bundled_tables.hpp"
#include "fetcpm/calibration.hpp"
#include "fetcpm/fet_accumulator.hpp"
#include "fetcpm/hypergeometric.hpp"
#include "oracles.hpp"

using namespace fetcpm;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool pass;
  std::string detail;
};

double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * target; }

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (unsigned t = 3; t <= 12; ++t) {
    for (std::uint32_t mask = 0; mask < (1u << t); ++mask) {
      FetAccumulator acc(64);
      for (unsigned i = 0; i < t; ++i) acc.advance(static_cast<int>((mask >> i) & 1u));
      const auto ones = static_cast<unsigned>(acc.total_ones());
      for (unsigned k = 2; k < t; ++k) {
        const auto sk = static_cast<unsigned>(std::popcount(mask & ((1u << k) - 1u)));
        if (acc.split_ones(k) != sk) return {false, "s_k bookkeeping wrong"};
        worst = std::max(worst, rel_err(acc.split_pmf(k), oracle::enumerated_pmf(ones, t, k, sk)));
      }
    }
  }
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> theta(0.02, 0.98);
  for (int rep = 0; rep < 1000; ++rep) {
    std::bernoulli_distribution coin(theta(rng));
    FetAccumulator acc;
    for (int i = 0; i < 200; ++i) {
      acc.advance(coin(rng) ? 1 : 0);
      for (std::uint64_t k = acc.first_split(); acc.split_count() > 0 && k <= acc.last_split(); ++k) {
        const double direct = hypergeom_pmf(acc.total_ones(), acc.time(), k, acc.split_ones(k));
        worst = std::max(worst, rel_err(acc.split_pmf(k), direct));
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-10 && secs < 60.0,
          "max rel error " + fmt("%.3g", worst) + " (limit 1e-10), " + fmt("%.1f", secs) + " s"};
}

Outcome pivotality() {
  const auto start = std::chrono::steady_clock::now();
  std::uint64_t checked = 0;
  for (unsigned t = 1; t <= 12; ++t) {
    for (unsigned ones = 0; ones <= t; ++ones) {
      for (unsigned k = 0; k <= t; ++k) {
        const auto counts = oracle::arrangement_counts(ones, t, k);
        for (unsigned j = 0; j <= k; ++j) {
          // counts[j] / C(t, ones) == C(ones, j) C(t - ones, k - j) / C(t, k), cross-multiplied.
          const std::uint64_t lhs = counts[j] * oracle::binomial(t, k);
          const std::uint64_t rhs = oracle::binomial(ones, j) * oracle::binomial(t - ones, k - j) *
                                    oracle::binomial(t, ones);
          if (lhs != rhs) {
            return {false, "mismatch at t=" + std::to_string(t) + " s_t=" + std::to_string(ones) +
                               " k=" + std::to_string(k) + " j=" + std::to_string(j)};
          }
          if (counts[j] > 0 &&
              rel_err(hypergeom_pmf(ones, t, k, j), oracle::enumerated_pmf(ones, t, k, j)) > 4e-16) {
            return {false, "pmf evaluation off at t=" + std::to_string(t)};
          }
          ++checked;
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {secs < 60.0, std::to_string(checked) + " (t, s_t, k, j) points equal as rationals, " +
                           fmt("%.1f", secs) + " s"};
}

Outcome window_equivalence() {
  std::mt19937_64 rng(kSeed + 3);
  std::uniform_real_distribution<double> theta(0.05, 0.95);
  std::uint64_t compared = 0;
  for (int rep = 0; rep < 100; ++rep) {
    std::bernoulli_distribution coin(theta(rng));
    FetAccumulator windowed(2000);
    FetAccumulator full(10000);
    for (int i = 1; i <= 5000; ++i) {
      const int x = coin(rng) ? 1 : 0;
      windowed.advance(x);
      full.advance(x);
      if (i % 1000 != 0) continue;
      for (std::uint64_t k = windowed.first_split(); k <= windowed.last_split(); ++k) {
        if (windowed.fet_statistic(k) != full.fet_statistic(k) ||
            windowed.split_pmf(k) != full.split_pmf(k)) {
          return {false, "stream " + std::to_string(rep) + " differs at t=" + std::to_string(i) +
                             " k=" + std::to_string(k)};
        }
        ++compared;
      }
    }
  }
  return {true, std::to_string(compared) + " split statistics bit-identical"};
}

Outcome threshold_reproduction() {
  SimulationPlan plan;
  plan.n_streams = 100000;
  plan.length = 500;
  plan.seed = kSeed;
  const auto start = std::chrono::steady_clock::now();
  const auto result = calibrate_thresholds(1.0 / 500.0, 0.1, plan);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto published = bundled_threshold_table(500, 0.1);
  bool pass = !result.truncated_at.has_value();
  std::string detail;
  for (const std::uint64_t t : {20u, 50u, 100u, 300u, 500u}) {
    const double ours = *result.table->threshold_at(t);
    const double ref = *published->threshold_at(t);
    pass = pass && std::abs(ours - ref) <= 0.015;
    detail += "h_" + std::to_string(t) + "=" + fmt("%.4f", ours) + " vs " + fmt("%.4f", ref) + "; ";
  }
  return {pass, detail + fmt("%.0f", secs) + " s"};
}

RunLengthSummary bundled_arl0(double theta0) {
  CpmConfig config;
  config.lambda = 0.1;
  config.thresholds = bundled_threshold_table(500, 0.1);
  return empirical_arl0(cpm_factory(config), theta0, 10000, 50 * 500, kSeed);
}

std::string describe(const RunLengthSummary& s) {
  return fmt("%.1f", s.mean) + " (sd " + fmt("%.0f", s.sd) + ", se " + fmt("%.1f", s.standard_error()) + ")";
}

Outcome arl0_reproduction() {
  const auto s = bundled_arl0(0.5);
  return {s.mean >= 450.0 && s.mean <= 550.0, "ARL0 at theta0=0.5: " + describe(s) + ", target [450, 550]"};
}

Outcome conservativeness() {
  const auto a = bundled_arl0(0.2);
  const auto b = bundled_arl0(0.05);
  const bool pass = a.mean >= 460.0 && within(a.mean, 512.0, 0.10) && b.mean >= 560.0;
  return {pass, "theta0=0.2: " + describe(a) + " (>= 460, 512 +-10%); theta0=0.05: " + describe(b) +
                    " (>= 560)"};
}

std::vector<ResultRow> experiment(ExperimentTable table, std::vector<Cell> grid, std::vector<double> lambdas,
                                  bool cusum) {
  ExperimentSpec spec;
  spec.table = table;
  spec.grid = std::move(grid);
  spec.lambdas = std::move(lambdas);
  spec.include_cusum = cusum;
  spec.n_runs = 2000;
  spec.seed = kSeed;
  return run_experiment(spec);
}

const ResultRow& find_row(const std::vector<ResultRow>& rows, const std::string& detector, Cell c) {
  for (const auto& r : rows) {
    if (r.detector == detector && r.theta0 == c.theta0 && r.theta1 && *r.theta1 == c.theta1) return r;
  }
  throw std::runtime_error("no row for " + detector);
}

Outcome check_delays(const std::vector<ResultRow>& rows, const std::string& detector,
                     const std::vector<std::pair<Cell, double>>& targets, double rel) {
  bool pass = true;
  std::string detail;
  for (const auto& [cell, target] : targets) {
    const auto& r = find_row(rows, detector, cell);
    pass = pass && within(r.summary.mean, target, rel);
    detail += fmt("%.1f", cell.theta0) + "->" + fmt("%.1f", cell.theta1) + ": " + fmt("%.2f", r.summary.mean) +
              " vs " + fmt("%.1f", target) + "; ";
  }
  return {pass, detail + "tolerance +-" + fmt("%.0f", rel * 100) + "%"};
}

Outcome cpm_delay() {
  const std::vector<std::pair<Cell, double>> targets = {
      {{0.1, 0.5}, 9.5}, {{0.2, 0.4}, 28.2}, {{0.3, 0.6}, 18.5}};
  std::vector<Cell> grid;
  for (const auto& t : targets) grid.push_back(t.first);
  return check_delays(experiment(ExperimentTable::delay_tau300, grid, {0.1}, false), "cpm", targets, 0.10);
}

Outcome early_change_delay() {
  const std::vector<std::pair<Cell, double>> targets = {{{0.1, 0.3}, 43.5}, {{0.3, 0.5}, 85.3}};
  std::vector<Cell> grid;
  for (const auto& t : targets) grid.push_back(t.first);
  return check_delays(experiment(ExperimentTable::delay_tau50, grid, {0.3}, false), "cpm", targets, 0.12);
}

Outcome cusum_baseline() {
  const std::vector<std::pair<Cell, double>> targets = {{{0.1, 0.2}, 43.9}, {{0.4, 0.5}, 70.8}};
  std::vector<Cell> grid;
  for (const auto& t : targets) grid.push_back(t.first);
  const auto rows = experiment(ExperimentTable::delay_tau300, grid, {0.1}, true);
  auto out = check_delays(rows, "cusum", targets, 0.10);
  for (const auto& r : rows) {
    if (r.detector != "cusum" || r.cusum->coarse) continue;
    const double a = r.cusum->achieved_arl0;
    out.pass = out.pass && a >= 500.0 && a <= 600.0;
    out.detail += "; achieved ARL0 " + fmt("%.1f", a);
  }
  return out;
}

Outcome misspecified_cusum() {
  const auto grid = default_grid(ExperimentTable::cusum_misspec);
  const auto mis = experiment(ExperimentTable::cusum_misspec, grid, {0.1}, false);
  const auto cpm = experiment(ExperimentTable::delay_tau50, grid, {0.1}, false);
  auto out = check_delays(mis, "cusum_misspec", {{{0.2, 0.4}, 80.2}}, 0.15);
  int ordered = 0;
  std::string violations;
  for (const auto& c : grid) {
    const auto& m = find_row(mis, "cusum_misspec", c).summary;
    const auto& p = find_row(cpm, "cpm", c).summary;
    // Ordering up to Monte-Carlo noise: two combined standard errors.
    const double slack = 2.0 * std::hypot(m.standard_error(), p.standard_error());
    if (m.mean >= p.mean - slack) {
      ++ordered;
    } else {
      violations += " " + fmt("%.1f", c.theta0) + "->" + fmt("%.1f", c.theta1) + " (" +
                    fmt("%.1f", m.mean) + " < " + fmt("%.1f", p.mean) + ")";
    }
  }
  out.pass = out.pass && ordered == static_cast<int>(grid.size());
  out.detail += "; ordering holds on " + std::to_string(ordered) + "/" + std::to_string(grid.size()) +
                " cells" + violations;
  return out;
}

Outcome performance() {
  const auto r = measure_throughput(2000, 200000, kSeed);
  const bool pass = r.obs_per_second >= 1e5 && r.memory_bytes <= r.memory_bound_bytes;
  return {pass, fmt("%.0f", r.obs_per_second) + " obs/s at w=2000 (>= 1e5); detector heap " +
                    std::to_string(r.memory_bytes) + " B <= " + std::to_string(r.memory_bound_bytes) + " B"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"pivotality", pivotality},
      {"window equivalence", window_equivalence},
      {"threshold reproduction", threshold_reproduction},
      {"ARL0 reproduction", arl0_reproduction},
      {"conservativeness", conservativeness},
      {"CPM delay, tau=300", cpm_delay},
      {"CPM delay, tau=50", early_change_delay},
      {"CUSUM baseline", cusum_baseline},
      {"misspecified CUSUM", misspecified_cusum},
      {"performance", performance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
