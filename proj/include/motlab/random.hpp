// Copyright 2026 The motlab Authors. All Rights Reserved.
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
// =============================================================================
#ifndef MOTLAB_RANDOM_HPP_
#define MOTLAB_RANDOM_HPP_

// Portable random helpers. The standard distributions are implementation
// defined, so every draw that feeds an artifact goes through these instead.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace motlab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stage seed = hash(parent seed, stage name).
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage) {
  return splitmix64(fnv1a64(stage, splitmix64(parent)));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage,
                                 std::uint64_t index) {
  return splitmix64(derive_seed(parent, stage) ^ splitmix64(index + 1));
}

// Uniform in [0, 1) with 53 random bits.
template <class G>
double uniform01(G& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class G>
double uniform(G& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n) by rejection; n must be positive.
template <class G>
std::uint64_t uniform_index(G& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

template <class T, class G>
void shuffle(std::span<T> items, G& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace motlab

#endif  // MOTLAB_RANDOM_HPP_
