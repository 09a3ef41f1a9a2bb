#include "fetcpm/hypergeometric.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fetcpm {
namespace {

// Largest n for which every C(n, r) fits in an unsigned 64-bit integer.
constexpr std::uint64_t kExactLimit = 67;

std::uint64_t exact_binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n - r) r = n - r;
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    c = c * (n - r + i) / i;
  }
  return static_cast<std::uint64_t>(c);
}

long double log_binomial(std::uint64_t n, std::uint64_t r) {
  const auto ln = static_cast<long double>(n);
  const auto lr = static_cast<long double>(r);
  return std::lgamma(ln + 1.0L) - std::lgamma(lr + 1.0L) - std::lgamma(ln - lr + 1.0L);
}

void check_support(std::uint64_t ones, std::uint64_t t, std::uint64_t k, std::uint64_t j) {
  if (!hypergeom_in_support(ones, t, k, j)) {
    throw std::invalid_argument("hypergeom_pmf: (ones=" + std::to_string(ones) +
                                ", t=" + std::to_string(t) + ", k=" + std::to_string(k) +
                                ", j=" + std::to_string(j) + ") outside the support");
  }
}

}  // namespace

bool hypergeom_in_support(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                          std::uint64_t j) noexcept {
  if (ones > t || k > t) return false;
  if (j > k || j > ones) return false;
  return k - j <= t - ones;
}

double hypergeom_pmf(std::uint64_t ones, std::uint64_t t, std::uint64_t k, std::uint64_t j) {
  check_support(ones, t, k, j);
  if (t <= kExactLimit) {
    const std::uint64_t num = exact_binomial(ones, j) * exact_binomial(t - ones, k - j);
    const std::uint64_t den = exact_binomial(t, k);
    return static_cast<double>(num) / static_cast<double>(den);
  }
  return static_cast<double>(std::exp(log_binomial(ones, j) + log_binomial(t - ones, k - j) -
                                      log_binomial(t, k)));
}

double hypergeom_log_pmf(std::uint64_t ones, std::uint64_t t, std::uint64_t k, std::uint64_t j) {
  check_support(ones, t, k, j);
  if (t <= kExactLimit) {
    return std::log(hypergeom_pmf(ones, t, k, j));
  }
  return static_cast<double>(log_binomial(ones, j) + log_binomial(t - ones, k - j) -
                             log_binomial(t, k));
}

double split_step_ratio(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                        std::uint64_t ones_before, int next) {
  const double st = static_cast<double>(ones);
  const double td = static_cast<double>(t);
  const double kd = static_cast<double>(k);
  const double sk = static_cast<double>(ones_before);
  if (next == 1) return (st - sk) * (kd + 1.0) / ((sk + 1.0) * (td - kd));
  return (td - st - kd + sk) * (kd + 1.0) / ((kd - sk + 1.0) * (td - kd));
}

double time_step_ratio(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                       std::uint64_t ones_before, int next) {
  const double prev = static_cast<double>(ones);
  const double td = static_cast<double>(t);
  const double kd = static_cast<double>(k);
  const double sk = static_cast<double>(ones_before);
  if (next == 1) return (prev + 1.0) * (td - kd) / ((prev + 1.0 - sk) * td);
  return (td - prev) * (td - kd) / ((td - prev - kd + sk) * td);
}

}  // namespace fetcpm
