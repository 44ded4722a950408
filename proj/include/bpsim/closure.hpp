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

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bpsim/lattice.hpp"

namespace bpsim {

inline constexpr uint32_t kNever = std::numeric_limits<uint32_t>::max();

/// Synchronous-round infection times over B_n; kNever marks sites outside
/// the closure.
struct InfectionTimes {
  int n = 0;
  std::vector<uint32_t> t;

  int side() const { return 2 * n + 1; }
  uint32_t at(Site s) const {
    return t[static_cast<size_t>(s.y + n) * side() + static_cast<size_t>(s.x + n)];
  }
  /// Largest finite time, or 0 if there is none.
  uint32_t max_finite() const;
  bool operator==(const InfectionTimes&) const = default;
};

/// Site classification of B_n plus a halo, shared by every run on the same
/// box, boundary and clip.
class Geometry {
 public:
  enum : uint8_t { kFree = 0, kBoundary = 1, kFrozen = 2 };

  Geometry(int n, int halo, const Region& boundary, const std::optional<Region>& clip);

  int n() const { return n_; }
  int halo() const { return h_; }
  int box_side() const { return 2 * n_ + 1; }
  int ext_side() const { return e_; }
  size_t ext(Site s) const {
    return static_cast<size_t>(s.y + n_ + h_) * e_ + static_cast<size_t>(s.x + n_ + h_);
  }
  size_t ext_of_box(size_t i) const {
    return ext({static_cast<int>(i % box_side()) - n_, static_cast<int>(i / box_side()) - n_});
  }
  uint8_t status(size_t ext_index) const { return status_[ext_index]; }
  const std::vector<uint8_t>& status() const { return status_; }

 private:
  int n_, h_, e_;
  std::vector<uint8_t> status_;
};

/// Work-queue closure with per-rule unsatisfied-offset counters.
///
/// Reusable across runs to avoid reallocations in Monte Carlo loops. All
/// internal arrays are indexed by extended (haloed) coordinates.
class ClosureEngine {
 public:
  explicit ClosureEngine(const UpdateFamily& family);

  /// `infected` holds one byte per site of B_n in row-major order (1 =
  /// initially infected). Sites outside the domain are ignored. With
  /// `stop_at_origin`, propagation halts once the origin is infected and
  /// later times are left incomplete.
  void run(const Geometry& g, const uint8_t* infected, bool stop_at_origin = false);

  uint32_t time_ext(size_t ext_index) const { return times_[ext_index]; }
  uint32_t time(const Geometry& g, Site s) const { return times_[g.ext(s)]; }
  InfectionTimes extract(const Geometry& g) const;
  const UpdateFamily& family() const { return family_; }

 private:
  UpdateFamily family_;
  std::vector<std::vector<Site>> rules_;
  std::vector<uint32_t> times_;
  std::vector<uint16_t> counters_;
  std::vector<uint32_t> cur_, next_;
};

InfectionTimes close(const LatticeInstance& inst, const UpdateFamily& family);

/// Literal repeated full-grid synchronous sweeps; radius at most 16.
InfectionTimes close_naive(const LatticeInstance& inst, const UpdateFamily& family);

bool origin_escapes(const LatticeInstance& inst, const UpdateFamily& family);

/// Plain-text grid, top row first, '.' for sites never infected.
std::string dump_times(const InfectionTimes& times);

}  // namespace bpsim
