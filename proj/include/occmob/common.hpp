#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace occmob {

// Exit/error categories used across the CLI and library.
enum class ErrorCode : int { Ok = 0, Config = 2, Numeric = 3, Io = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

// SplitMix64 finalizer; bijective avalanche mix.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based RNG stream. State is a pure function of the key tuple, so
// draws are reproducible regardless of scheduling or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b = 0,
            std::uint64_t stream_c = 0)
      : state_(mix64(mix64(mix64(seed ^ 0x853c49e6748fea9bULL) ^ stream_a) ^ stream_b) ^
               mix64(stream_c ^ 0xda3e39cb94b95bdbULL)),
        counter_(0) {}

  std::uint64_t next_u64() { return mix64(state_ ^ mix64(++counter_)); }

  // uniform in [0,1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // index i with probability weights given by a cumulative vector (last = 1)
  int next_index(const std::vector<double>& cdf) {
    double u = next_double();
    int lo = 0, hi = int(cdf.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cdf[std::size_t(mid)] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::uint64_t state_;
  std::uint64_t counter_;
};

// Deterministic parallel map: fixed block partition, no cross-thread
// reductions. Results must be written to disjoint slots.
inline void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (n_threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(std::size_t(n_threads), n);
  std::vector<std::thread> workers;
  workers.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    workers.emplace_back([=, &fn]() {
      for (std::size_t i = t; i < n; i += nt) fn(i);
    });
  }
  for (auto& w : workers) w.join();
}

inline int default_thread_count() {
  if (const char* env = std::getenv("OCCMOB_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

inline constexpr const char* kVersion = "0.1.0";

}  // namespace occmob
