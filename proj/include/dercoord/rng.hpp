/* Copyright 2026 The dercoord Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dercoord {

// Named substreams. Each consumer of randomness in a run draws from its own
// stream so adding draws in one place never shifts another's sequence.
enum class RngStream : std::uint64_t {
  mask = 1,
  scenario = 2,
  trial = 3,
};

// Seedable generator: mt19937_64 keyed by splitmix64(seed, stream).
// The output sequence for a (seed, stream, index) triple is fixed by this
// version string; change it if the construction ever changes.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/splitmix64-v1";

  explicit Rng(std::uint64_t seed, RngStream stream = RngStream::mask, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }
  // One fair bit, taken from the top of a fresh 64-bit draw.
  bool next_bit() { return (engine_() >> 63) != 0; }
  // Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
  // Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  std::uint64_t seed() const { return seed_; }
  RngStream stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  RngStream stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace dercoord
