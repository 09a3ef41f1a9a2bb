#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fetcpm {

/// Streaming state for every Fisher-exact split statistic of a growing 0/1
/// sequence x_1..x_t.
///
/// Split k (1 < k < t) compares x_1..x_k with x_{k+1}..x_t. Conditional on the
/// total number of ones s_t, the number of ones s_k before the split is
/// hypergeometric and does not depend on the unknown success probability.
/// For each retained split the accumulator keeps
///
///   * d_{k,t} = P(S_k = s_k | S_t = s_t), the point mass at the observation;
///   * p_{k,t} = P(S_k <= s_k | S_t = s_t), the one-sided (lower tail) p-value.
///
/// Both are carried forward with closed-form ratio updates, so a steady-state
/// advance costs O(min(t, window)) multiply/divide pairs and no factorials.
/// Observations older than the window are folded into a single count, which
/// leaves every retained split's statistic unchanged.
///
/// Point masses are stored as mantissa * 2^exponent so that splits carrying
/// overwhelming evidence never underflow to zero.
///
/// Single writer; concurrent const access is safe between advances.
class FetAccumulator {
 public:
  static constexpr std::uint64_t kDefaultWindow = 2000;
  static constexpr std::uint64_t kDefaultReanchorInterval = 10000;

  /// `window` >= 2 is the number of most recent observations kept verbatim.
  /// Every `reanchor_interval` advances the recursive values are recomputed
  /// from the direct formula; 0 disables this.
  explicit FetAccumulator(std::uint64_t window = kDefaultWindow,
                          std::uint64_t reanchor_interval = kDefaultReanchorInterval);

  /// Appends one observation (0 or 1). Throws std::invalid_argument otherwise.
  void advance(int x);

  /// Discards all observations.
  void reset();

  /// Recomputes every retained d_{k,t} and p_{k,t} from the direct formula.
  void reanchor();

  std::uint64_t time() const noexcept { return t_; }
  std::uint64_t total_ones() const noexcept { return ones_; }
  std::uint64_t window_capacity() const noexcept { return window_; }
  std::uint64_t reanchor_interval() const noexcept { return reanchor_interval_; }
  /// Ones among observations that have left the window.
  std::uint64_t pre_window_ones() const noexcept { return pre_window_ones_; }
  /// The min(t, window) most recent observations, oldest first.
  std::vector<std::uint8_t> window_bits() const;

  std::size_t split_count() const noexcept { return count_; }
  /// Smallest retained split; meaningful only when split_count() > 0.
  std::uint64_t first_split() const noexcept { return first_split_; }
  std::uint64_t last_split() const noexcept { return first_split_ + count_ - 1; }
  bool has_split(std::uint64_t k) const noexcept {
    return count_ > 0 && k >= first_split_ && k < first_split_ + count_;
  }

  /// s_k for a retained split.
  std::uint64_t split_ones(std::uint64_t k) const;
  /// d_{k,t}; may round to zero for astronomically unlikely splits.
  double split_pmf(std::uint64_t k) const;
  /// ln d_{k,t}, always finite.
  double split_log_pmf(std::uint64_t k) const;

  /// p_{k,t} by summing point masses outward from the stored d_{k,t} with
  /// the within-distribution ratio (shorter tail, stops once terms are
  /// negligible). O(min(s_k, k - s_k) + 1).
  double split_pvalue(std::uint64_t k) const;
  /// F_{k,t} = 1 - split_pvalue(k).
  double fet_statistic(std::uint64_t k) const;

  /// p_{k,t} as carried by the O(1) per-split recursion.
  double tracked_pvalue(std::uint64_t k) const;
  /// Tracked p-values for first_split() .. last_split(), in split order.
  std::span<const double> tracked_pvalues() const noexcept {
    return {tail_.data() + head_, count_};
  }

  /// Heap bytes currently reserved by this accumulator.
  std::size_t memory_bytes() const noexcept;

 private:
  std::size_t index_of(std::uint64_t k) const;
  void reserve_split_slot();
  void pop_front_split();
  void push_split(std::uint64_t ones_before, double pmf, double pvalue);
  void renormalize();
  double tail_sum(std::size_t i) const;

  std::uint64_t window_;
  std::uint64_t reanchor_interval_;

  std::uint64_t t_ = 0;
  std::uint64_t ones_ = 0;
  std::uint64_t pre_window_ones_ = 0;
  std::uint64_t since_anchor_ = 0;

  // Most recent min(t, window) observations: a sliding region of bits_.
  std::vector<std::uint8_t> bits_;
  std::size_t bits_head_ = 0;
  std::size_t bits_count_ = 0;

  // Per-split columns sharing one sliding region [head_, head_ + count_).
  std::uint64_t first_split_ = 0;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  std::vector<double> mant_;   // d_{k,t} = mant * 2^exp
  std::vector<int> exp_;
  std::vector<double> scale_;  // 2^exp as a double (0 once it underflows)
  std::vector<double> tail_;   // p_{k,t}
  std::vector<double> split_index_;  // k
  std::vector<double> split_ones_;   // s_k
  std::size_t scaled_splits_ = 0;  // splits with a nonzero exponent

  std::vector<double> inv_gap_;  // inv_gap_[j] = 1 / j
};

}  // namespace fetcpm
