// Copyright 2026 The bpsim Authors
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

#include <array>
#include <cstdint>
#include <string_view>

namespace bpsim {

/// Philox4x32-10 block function (Salmon et al.).
class Philox4x32 {
 public:
  using Counter = std::array<uint32_t, 4>;
  using Key = std::array<uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const uint64_t p0 = uint64_t{kMul0} * ctr[0];
      const uint64_t p1 = uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<uint32_t>(p1),
             static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr uint32_t kMul0 = 0xD2511F53;
  static constexpr uint32_t kMul1 = 0xCD9E8D57;
  static constexpr uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr uint32_t kWeyl1 = 0xBB67AE85;
};

/// 64-bit finalizer from SplitMix64.
constexpr uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes, used for config digests and stream tags.
constexpr uint64_t fnv1a(std::string_view s, uint64_t h = 0xCBF29CE484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline double to_unit(uint32_t hi, uint32_t lo) {
  const uint64_t bits = (uint64_t{hi} << 32 | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Independent uniform fields indexed by (trial, site).
///
/// The key depends only on the seed and the stream tag, so every experiment
/// that shares a seed sees the same uniform at the same (trial, x, y). This is
/// the coupling used across box sizes, densities and boundary regions.
class SiteField {
 public:
  SiteField(uint64_t seed, uint64_t stream)
      : key_{static_cast<uint32_t>(mix64(seed ^ stream)),
             static_cast<uint32_t>(mix64(seed ^ stream) >> 32)} {}

  double uniform(uint64_t trial, int x, int y) const {
    const auto r = Philox4x32::block(
        {static_cast<uint32_t>(trial), static_cast<uint32_t>(x),
         static_cast<uint32_t>(y), static_cast<uint32_t>(trial >> 32)},
        key_);
    return to_unit(r[0], r[1]);
  }

  bool bernoulli(uint64_t trial, int x, int y, double q) const {
    return uniform(trial, x, y) < q;
  }

 private:
  Philox4x32::Key key_;
};

/// Sequential stream for one trial, e.g. exponential clocks or choices that
/// are not attached to a site. Each call consumes one Philox block counter.
class TrialStream {
 public:
  TrialStream(uint64_t seed, uint64_t stream, uint64_t trial)
      : key_{static_cast<uint32_t>(mix64(seed ^ stream)),
             static_cast<uint32_t>(mix64(seed ^ stream) >> 32)},
        trial_(trial) {}

  double uniform() {
    if (pos_ == 2) {
      buf_ = Philox4x32::block(
          {static_cast<uint32_t>(trial_), static_cast<uint32_t>(trial_ >> 32),
           static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32)},
          key_);
      ++block_;
      pos_ = 0;
    }
    const double u = to_unit(buf_[2 * pos_], buf_[2 * pos_ + 1]);
    ++pos_;
    return u;
  }

  /// Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return static_cast<uint64_t>(uniform() * n) % n; }

 private:
  Philox4x32::Key key_;
  uint64_t trial_;
  uint64_t block_ = 0;
  Philox4x32::Counter buf_{};
  int pos_ = 2;
};

namespace streams {
inline constexpr uint64_t kSample = fnv1a("sample");
inline constexpr uint64_t kNoiseMask = fnv1a("noise-mask");
inline constexpr uint64_t kNoiseFresh = fnv1a("noise-fresh");
inline constexpr uint64_t kAlgorithm = fnv1a("algorithm");
inline constexpr uint64_t kEdge = fnv1a("edge");
inline constexpr uint64_t kKcm = fnv1a("kcm");
}  // namespace streams

}  // namespace bpsim
