#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>
#include <atomic>
#include <algorithm>

namespace heavyrisk {

using Engine = std::mt19937_64;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Engine& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(Engine& g);

std::uint64_t splitmix64(std::uint64_t& state);

/// Independent substream keyed by (seed, role, index). Distinct keys give
/// unrelated engine states; the same key always gives the same state.
Engine make_engine(std::uint64_t seed, std::uint64_t role, std::uint64_t index);

/// Default worker count: hardware concurrency, at least one.
unsigned default_threads();

/// Runs fn(chunk, begin, count) for every chunk of `chunk_size` items out of
/// `n`, on up to `threads` workers. Results come back indexed by chunk, so a
/// reduction in chunk order is independent of thread count and scheduling.
template <class Partial, class Fn>
std::vector<Partial> run_chunks(std::uint64_t n, std::uint64_t chunk_size,
                                unsigned threads, Fn&& fn) {
  const std::uint64_t chunks = chunk_size == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
  std::vector<Partial> out(chunks);
  if (chunks == 0) return out;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      const std::uint64_t begin = c * chunk_size;
      const std::uint64_t count = std::min(chunk_size, n - begin);
      try {
        out[c] = fn(c, begin, count);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace heavyrisk
