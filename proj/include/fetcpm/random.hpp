#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace fetcpm {

/// Name and version recorded in artifacts produced from simulated streams.
inline constexpr std::string_view kGeneratorName = "mt19937_64/seed_seq(seed,stream) v1";

/// Independent generator for one simulated stream. Depends only on
/// (seed, stream), never on which thread asks for it.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1p-53;
}

inline int bernoulli(std::mt19937_64& rng, double theta) { return uniform01(rng) < theta ? 1 : 0; }

/// Worker count for `requested` threads; 0 means one per hardware thread.
unsigned resolve_threads(unsigned requested) noexcept;

/// Calls body(i) for every i in [0, n), spread over `threads` workers.
/// Indices are handed out in chunks, so results are deterministic as long as
/// body(i) writes only to slots owned by i. The first exception thrown by a
/// body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads = 0,
                  std::size_t chunk = 64);

}  // namespace fetcpm
