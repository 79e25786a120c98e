#include "corona/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace corona {

int annulus_index(double norm) noexcept {
  if (!(norm >= 1.0)) return kCoreAnnulus;
  int e = 0;
  std::frexp(norm, &e);
  return e - 1;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  const std::size_t n = std::min(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0) || !std::isfinite(y[i])) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) return 0.0;
  const double den = m * sxx - sx * sx;
  if (den <= 0) return 0.0;
  return (m * sxy - sx * sy) / den;
}

namespace {

int initial_threads() {
  if (const char* env = std::getenv("CORONA_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> value{initial_threads()};
  return value;
}

}  // namespace

int thread_count() { return thread_setting().load(); }

void set_thread_count(int n) { thread_setting().store(std::max(1, n)); }

int chunk_count(Index n) {
  if (n <= 0) return 0;
  // Small jobs are not worth a thread.
  const Index by_size = std::max<Index>(1, n / 64);
  return static_cast<int>(std::min<Index>(thread_count(), by_size));
}

void parallel_chunks(Index n, const std::function<void(Index, Index, int)>& body) {
  const int chunks = chunk_count(n);
  if (chunks <= 1) {
    if (n > 0) body(0, n, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  const Index base = n / chunks;
  const Index extra = n % chunks;
  Index begin = 0;
  std::vector<std::pair<Index, Index>> ranges;
  for (int c = 0; c < chunks; ++c) {
    const Index len = base + (c < extra ? 1 : 0);
    ranges.emplace_back(begin, begin + len);
    begin += len;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  auto run = [&](int c) {
    try {
      body(ranges[c].first, ranges[c].second, c);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  for (int c = 1; c < chunks; ++c) workers.emplace_back(run, c);
  run(0);
  for (auto& w : workers) w.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace corona
