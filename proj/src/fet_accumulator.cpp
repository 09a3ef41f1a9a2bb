#include "fetcpm/fet_accumulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fetcpm/hypergeometric.hpp"

namespace fetcpm {
namespace {

// Point masses live in [2^-kShift, 1] * 2^exp with exp a multiple of -kShift.
constexpr int kShift = 512;
constexpr double kLow = 0x1p-512;
constexpr double kUp = 0x1p512;
// Relative size below which a decaying tail term no longer matters.
constexpr double kTailStop = 0x1p-60;
constexpr std::uint64_t kRenormalizeEvery = 4;

template <class T>
void slide_down(std::vector<T>& v, std::size_t head, std::size_t count) {
  std::copy(v.begin() + static_cast<std::ptrdiff_t>(head),
            v.begin() + static_cast<std::ptrdiff_t>(head + count), v.begin());
}

// Per-split updates for a new observation at time t; `prev` = s_{t-1}. Both loops are branch free so they
// vectorize; mantissa range is restored separately, see advance().
//
// x = 1:  d' = d (s+1)(t-k) / ((s+1-s_k) t);  p' = p - d (k-s_k) / t
void update_on_one(double* __restrict m, double* __restrict p, const double* __restrict sc,
                   const double* __restrict kc, const double* __restrict so, std::ptrdiff_t n,
                   double td, double prev) {
  const double a = prev + 1.0;
  const double inv_t = 1.0 / td;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double k = kc[i];
    const double sk = so[i];
    const double q = p[i] - m[i] * sc[i] * (k - sk) * inv_t;
    p[i] = q > 0.0 ? q : 0.0;
    const double mi = m[i] * (a * (td - k)) / ((a - sk) * td);
    m[i] = mi;
  }
}

// x = 0:  d' = d z (t-k) / ((z-k+s_k) t);  p' = p + d' (k-s_k)(s-s_k) / (z (t-k))
// with z = t - s zeros after this observation.
void update_on_zero(double* __restrict m, double* __restrict p, const double* __restrict sc,
                    const double* __restrict kc, const double* __restrict so,
                    const double* __restrict inv_gap, std::ptrdiff_t n, double td, double prev) {
  const double z = td - prev;
  const double inv_z = 1.0 / z;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double k = kc[i];
    const double sk = so[i];
    const double mi = m[i] * (z * (td - k)) / ((z - k + sk) * td);
    m[i] = mi;
    const double q = p[i] + mi * sc[i] * ((k - sk) * (prev - sk)) * inv_z * inv_gap[-i];
    p[i] = q < 1.0 ? q : 1.0;
  }
}

}  // namespace

FetAccumulator::FetAccumulator(std::uint64_t window, std::uint64_t reanchor_interval)
    : window_(window), reanchor_interval_(reanchor_interval) {
  if (window < 2) {
    throw std::invalid_argument("FetAccumulator: window must be at least 2, got " +
                                std::to_string(window));
  }
}

void FetAccumulator::reset() {
  t_ = 0;
  ones_ = 0;
  pre_window_ones_ = 0;
  since_anchor_ = 0;
  bits_head_ = 0;
  bits_count_ = 0;
  first_split_ = 0;
  head_ = 0;
  count_ = 0;
  scaled_splits_ = 0;
}

std::vector<std::uint8_t> FetAccumulator::window_bits() const {
  return {bits_.begin() + static_cast<std::ptrdiff_t>(bits_head_),
          bits_.begin() + static_cast<std::ptrdiff_t>(bits_head_ + bits_count_)};
}

std::size_t FetAccumulator::index_of(std::uint64_t k) const {
  if (!has_split(k)) {
    throw std::invalid_argument("FetAccumulator: split " + std::to_string(k) +
                                " is not retained at t=" + std::to_string(t_));
  }
  return head_ + static_cast<std::size_t>(k - first_split_);
}

std::uint64_t FetAccumulator::split_ones(std::uint64_t k) const {
  return static_cast<std::uint64_t>(split_ones_[index_of(k)]);
}

double FetAccumulator::split_pmf(std::uint64_t k) const {
  const std::size_t slot = index_of(k);
  return std::ldexp(mant_[slot], exp_[slot]);
}

double FetAccumulator::split_log_pmf(std::uint64_t k) const {
  const std::size_t slot = index_of(k);
  return std::log(mant_[slot]) + exp_[slot] * std::numbers::ln2;
}

double FetAccumulator::split_pvalue(std::uint64_t k) const {
  return tail_sum(index_of(k) - head_);
}

double FetAccumulator::fet_statistic(std::uint64_t k) const { return 1.0 - split_pvalue(k); }

double FetAccumulator::tracked_pvalue(std::uint64_t k) const { return tail_[index_of(k)]; }

std::size_t FetAccumulator::memory_bytes() const noexcept {
  return bits_.capacity() * sizeof(std::uint8_t) + mant_.capacity() * sizeof(double) +
         exp_.capacity() * sizeof(int) + scale_.capacity() * sizeof(double) +
         tail_.capacity() * sizeof(double) + split_index_.capacity() * sizeof(double) +
         split_ones_.capacity() * sizeof(double) +
         inv_gap_.capacity() * sizeof(double);
}

void FetAccumulator::reserve_split_slot() {
  const std::size_t size = mant_.size();
  if (head_ + count_ < size) return;
  if (head_ > 0 && head_ >= size / 2) {
    slide_down(mant_, head_, count_);
    slide_down(exp_, head_, count_);
    slide_down(scale_, head_, count_);
    slide_down(tail_, head_, count_);
    slide_down(split_index_, head_, count_);
    slide_down(split_ones_, head_, count_);
    head_ = 0;
    return;
  }
  const std::size_t grown = std::max<std::size_t>(16, 2 * size);
  mant_.resize(grown);
  exp_.resize(grown);
  scale_.resize(grown);
  tail_.resize(grown);
  split_index_.resize(grown);
  split_ones_.resize(grown);
}

void FetAccumulator::pop_front_split() {
  ++head_;
  --count_;
  ++first_split_;
  if (count_ == 0) head_ = 0;
}

void FetAccumulator::push_split(std::uint64_t ones_before, double pmf, double pvalue) {
  reserve_split_slot();
  if (count_ == 0) first_split_ = t_ - 1;
  const std::size_t slot = head_ + count_;
  mant_[slot] = pmf;
  exp_[slot] = 0;
  scale_[slot] = 1.0;
  tail_[slot] = pvalue;
  split_index_[slot] = static_cast<double>(first_split_ + count_);
  split_ones_[slot] = static_cast<double>(ones_before);
  ++count_;
}

void FetAccumulator::advance(int x) {
  if (x != 0 && x != 1) {
    throw std::invalid_argument("FetAccumulator::advance: observation must be 0 or 1, got " +
                                std::to_string(x));
  }
  const std::uint64_t t = t_ + 1;
  const std::uint64_t lo = t > window_ ? std::max<std::uint64_t>(2, t - window_ + 1) : 2;
  while (count_ > 0 && first_split_ < lo) pop_front_split();

  if (count_ > 0) {
    const std::uint64_t widest_gap = t - first_split_;
    if (inv_gap_.size() <= widest_gap) {
      const std::size_t old = inv_gap_.size();
      inv_gap_.resize(std::max<std::size_t>(widest_gap + 1, 2 * old));
      for (std::size_t j = std::max<std::size_t>(old, 1); j < inv_gap_.size(); ++j) {
        inv_gap_[j] = 1.0 / static_cast<double>(j);
      }
    }
    // inv_gap[-j] = 1 / (t - k) for split k = first_split_ + j.
    const double* inv_gap = inv_gap_.data() + widest_gap;
    const auto n = static_cast<std::ptrdiff_t>(count_);
    const double td = static_cast<double>(t);
    const double prev = static_cast<double>(ones_);
    double* m = mant_.data() + head_;
    double* p = tail_.data() + head_;
    const double* sc = scale_.data() + head_;
    const double* kc = split_index_.data() + head_;
    const double* so = split_ones_.data() + head_;
    if (x == 1) {
      update_on_one(m, p, sc, kc, so, n, td, prev);
    } else {
      update_on_zero(m, p, sc, kc, so, inv_gap, n, td, prev);
    }
    // One advance scales a mantissa by a factor in [1/t, t], so checking
    // every kRenormalizeEvery steps keeps mantissas far from denormals.
    if (t % kRenormalizeEvery == 0) renormalize();
  }

  t_ = t;
  ones_ += static_cast<std::uint64_t>(x);

  if (bits_head_ + bits_count_ == bits_.size()) {
    if (bits_head_ > 0 && bits_head_ >= bits_.size() / 2) {
      slide_down(bits_, bits_head_, bits_count_);
      bits_head_ = 0;
    } else {
      bits_.resize(std::max<std::size_t>(64, 2 * bits_.size()));
    }
  }
  bits_[bits_head_ + bits_count_++] = static_cast<std::uint8_t>(x);
  if (bits_count_ > window_) {
    pre_window_ones_ += bits_[bits_head_++];
    --bits_count_;
  }

  if (t >= 3) {
    // Newest split k = t-1: S_{t-1} = s_t - (colour of a uniformly placed
    // last observation), so both quantities are ratios of counts.
    const double td = static_cast<double>(t);
    const double ones = static_cast<double>(ones_);
    if (x == 1) {
      push_split(ones_ - 1, ones / td, ones / td);
    } else {
      push_split(ones_, (td - ones) / td, 1.0);
    }
  }

  if (reanchor_interval_ > 0 && ++since_anchor_ >= reanchor_interval_) reanchor();
}

void FetAccumulator::renormalize() {
  double* m = mant_.data() + head_;
  int* e = exp_.data() + head_;
  double* sc = scale_.data() + head_;
  scaled_splits_ = 0;
  for (std::size_t i = 0; i < count_; ++i) {
    if (m[i] >= kLow && (m[i] <= 1.0 || e[i] == 0)) [[likely]] {
      scaled_splits_ += e[i] != 0;
      continue;
    }
    while (m[i] < kLow && m[i] > 0.0) {
      m[i] *= kUp;
      e[i] -= kShift;
    }
    while (m[i] > 1.0 && e[i] < 0) {
      m[i] *= kLow;
      e[i] += kShift;
    }
    sc[i] = std::ldexp(1.0, e[i]);
    scaled_splits_ += e[i] != 0;
  }
}

void FetAccumulator::reanchor() {
  since_anchor_ = 0;
  for (std::size_t i = 0; i < count_; ++i) {
    const std::size_t slot = head_ + i;
    const std::uint64_t k = first_split_ + i;
    const auto sk = static_cast<std::uint64_t>(split_ones_[slot]);
    const double log2_pmf = hypergeom_log_pmf(ones_, t_, k, sk) / std::numbers::ln2;
    if (log2_pmf >= -kShift) {
      mant_[slot] = hypergeom_pmf(ones_, t_, k, sk);
      exp_[slot] = 0;
    } else {
      const double blocks = std::floor(-log2_pmf / kShift);
      mant_[slot] = std::exp2(log2_pmf + blocks * kShift);
      exp_[slot] = -kShift * static_cast<int>(blocks);
    }
    scale_[slot] = std::ldexp(1.0, exp_[slot]);
  }
  renormalize();
  for (std::size_t i = 0; i < count_; ++i) tail_[head_ + i] = tail_sum(i);
}

double FetAccumulator::tail_sum(std::size_t i) const {
  const std::size_t slot = head_ + i;
  const double k = static_cast<double>(first_split_ + i);
  const double t = static_cast<double>(t_);
  const double st = static_cast<double>(ones_);
  const double sk = split_ones_[slot];
  const double zeros = t - st;
  const double lo = std::max(0.0, k - zeros);
  const double hi = std::min(k, st);

  double term = mant_[slot];
  int e = exp_[slot];
  double prev = term;
  auto rescale = [&](double& sum) {
    if (sum > kUp) {
      sum *= kLow;
      term *= kLow;
      prev *= kLow;
      e += kShift;
    }
  };

  if (sk - lo <= hi - sk) {
    double sum = term;
    for (double j = sk; j > lo; j -= 1.0) {
      term *= j * (zeros - k + j) / ((st - j + 1.0) * (k - j + 1.0));
      sum += term;
      rescale(sum);
      if (term <= prev && term < sum * kTailStop) break;
      prev = term;
    }
    return std::min(1.0, std::ldexp(sum, e));
  }
  double sum = 0.0;
  for (double j = sk; j < hi; j += 1.0) {
    term *= (st - j) * (k - j) / ((j + 1.0) * (zeros - k + j + 1.0));
    sum += term;
    rescale(sum);
    if (term <= prev && term < sum * kTailStop) break;
    prev = term;
  }
  return std::clamp(1.0 - std::ldexp(sum, e), 0.0, 1.0);
}

}  // namespace fetcpm
