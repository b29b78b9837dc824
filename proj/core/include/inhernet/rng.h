// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INHERNET_RNG_H_
#define INHERNET_RNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace inhernet {

// Philox4x32-10 counter-based generator (Salmon et al., Random123 constants).
//
// The 64-bit seed is the key; `stream` selects an independent sequence. The
// output depends only on (seed, stream, draw index), so any implementation of
// the published algorithm reproduces the same numbers. Only IEEE-754 basic
// operations are used to turn bits into doubles.
class CounterRng {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  static Block philox(Block counter, std::array<std::uint32_t, 2> key);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Approximately standard normal: Irwin-Hall sum of 12 uniforms minus 6.
  // Bounded to [-6, 6]; uses no transcendental functions.
  double normal();
  // Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int buffered_ = 0;
};

// Fisher-Yates permutation of [0, n) drawn from CounterRng(seed, stream).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed,
                                     std::uint64_t stream);

// Stream tags keep the independent uses of one seed apart.
namespace rng_stream {
inline constexpr std::uint64_t kShuffleBase = 0x5348554646000000ULL;
inline constexpr std::uint64_t kInit = 0x494e495400000000ULL;
inline constexpr std::uint64_t kData = 0x4441544100000000ULL;
inline constexpr std::uint64_t kSplit = 0x53504c4954000000ULL;
inline constexpr std::uint64_t kTeacher = 0x5445414300000000ULL;
inline constexpr std::uint64_t kVerify = 0x5645524900000000ULL;
}  // namespace rng_stream

}  // namespace inhernet

#endif  // INHERNET_RNG_H_
