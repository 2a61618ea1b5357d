// Copyright 2026 The synfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace synfuse {

namespace detail {

// splitmix64 finalizer; full-period bijection on 64-bit state.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

// Counter-based generator: out_i = mix64(key + i*phi). The stream depends
// only on (key, draw index), so identical seeds give bit-identical streams
// on every platform. Labeled splits derive a child key without consuming
// parent state, so sibling order cannot matter.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed)
      : key_(detail::mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return detail::mix64(key_ + counter_);
  }

  SeededRng split(std::string_view label) const {
    return split(label, 0);
  }

  SeededRng split(std::string_view label, std::uint64_t index) const {
    std::uint64_t h = detail::fnv1a64(label);
    h = detail::mix64(h ^ (index * 0x9E3779B97F4A7C15ULL) ^
                      0xD6E8FEB86659FD93ULL);
    SeededRng child(0);
    child.key_ = detail::mix64(key_ ^ h);
    child.counter_ = 0;
    child.has_spare_ = false;
    return child;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Standard normal via Box-Muller; the spare draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t derive_seed() { return next_u64(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace synfuse
