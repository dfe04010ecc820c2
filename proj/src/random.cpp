#include "heavyrisk/random.hpp"

#include <cmath>
#include <numbers>

namespace heavyrisk {

double standard_normal(Engine& g) {
  // Box-Muller, one variate per call so the stream position is a pure
  // function of the number of draws.
  const double u1 = uniform_open(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Engine make_engine(std::uint64_t seed, std::uint64_t role, std::uint64_t index) {
  std::uint64_t s = seed;
  const std::uint64_t a = splitmix64(s);
  s ^= role * 0xD1B54A32D192ED03ull;
  const std::uint64_t b = splitmix64(s);
  s ^= index * 0x8CB92BA72F3D8DD7ull;
  const std::uint64_t c = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Engine(seq);
}

unsigned default_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace heavyrisk
