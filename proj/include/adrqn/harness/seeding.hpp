#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "adrqn/numkit/parameter.hpp"

namespace adrqn::harness {

using numkit::Rng;
using numkit::Tensor;

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Independent generator for one named consumer of a run's randomness.
inline Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  const std::uint64_t h = fnv1a(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h),    static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

/// Seed value for a component that owns its own generator (the flicker coin).
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
  Rng r = substream(seed, name, index);
  return r();
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (!is) throw std::runtime_error("corrupt generator state");
  return rng;
}

}  // namespace adrqn::harness
