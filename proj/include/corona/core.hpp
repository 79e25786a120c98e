#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace corona {

using Index = std::int64_t;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Spaces above this many points never materialize a dense distance matrix
/// and switch pair sups to the line or stratified path.
inline constexpr Index kDenseLimit = 5000;

// Error taxonomy. Every public operation throws one of these on a contract
// violation; the CLI maps them to exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : Error {
  using Error::Error;
};
struct DegenerateSpaceError : Error {
  using Error::Error;
};
struct ConstructionError : Error {
  using Error::Error;
};
struct EmptyScaleError : Error {
  using Error::Error;
};
struct ConnectivityError : Error {
  using Error::Error;
};
struct ResourceError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};

/// SplitMix64 finalizer. This is the single integer mixing function used for
/// every deterministic choice in the library (lattice offsets, hash noise,
/// sampled pairs).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL));
}

/// Uniform double in [0, 1) from a hash value (53 high bits).
constexpr double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// +1 or -1 from the low bit of mix64(seed, id).
constexpr double hash_sign(std::uint64_t seed, std::uint64_t id) noexcept {
  return (mix64(seed, id) & 1ULL) ? 1.0 : -1.0;
}

/// Index k of the dyadic annulus [2^k, 2^(k+1)) containing `norm`.
/// Norms below 1 belong to the core, reported as kCoreAnnulus.
inline constexpr int kCoreAnnulus = std::numeric_limits<int>::min();
int annulus_index(double norm) noexcept;

/// Least-squares slope of log(y) against log(x). Entries with x <= 0 or
/// y <= 0 are skipped; fewer than two usable entries yield 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

// Worker configuration. The count defaults to CORONA_LAB_THREADS or the
// hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(begin, end, chunk) over [0, n) split into contiguous chunks,
/// one per worker. Chunk boundaries depend only on n and the thread count;
/// callers that reduce per-chunk results in chunk order get results that do
/// not depend on scheduling.
void parallel_chunks(Index n, const std::function<void(Index, Index, int)>& body);

/// Number of chunks parallel_chunks will use for n items.
int chunk_count(Index n);

}  // namespace corona
