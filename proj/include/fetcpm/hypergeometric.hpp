#pragma once

#include <cstdint>

namespace fetcpm {

/// Probability that the first `k` of `t` exchangeable 0/1 observations hold
/// exactly `j` ones, given `ones` ones in total:
///
///     C(ones, j) * C(t - ones, k - j) / C(t, k)
///
/// Evaluated directly (exact integer binomials while C(t, k) fits in 64 bits,
/// log-gamma accumulation in extended precision otherwise). This is the
/// reference against which every recursive update is checked.
///
/// Throws std::invalid_argument when (ones, t, k, j) is outside the support.
double hypergeom_pmf(std::uint64_t ones, std::uint64_t t, std::uint64_t k, std::uint64_t j);

/// Natural log of hypergeom_pmf; finite even where the pmf underflows.
double hypergeom_log_pmf(std::uint64_t ones, std::uint64_t t, std::uint64_t k, std::uint64_t j);

/// True when (ones, t, k, j) lies in the support of hypergeom_pmf.
bool hypergeom_in_support(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                          std::uint64_t j) noexcept;

/// d_{k+1,t} / d_{k,t}: moving split k one step right over observation
/// x_{k+1} = `next`, where d_{k,t} = hypergeom_pmf(ones, t, k, ones_before).
double split_step_ratio(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                        std::uint64_t ones_before, int next);

/// d_{k,t} / d_{k,t-1}: the same split after observation x_t = `next`
/// arrives. `ones` counts ones among x_1..x_{t-1}.
double time_step_ratio(std::uint64_t ones, std::uint64_t t, std::uint64_t k,
                       std::uint64_t ones_before, int next);

}  // namespace fetcpm
