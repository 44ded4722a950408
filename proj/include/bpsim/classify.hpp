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

#include <optional>
#include <string>

#include "bpsim/lattice.hpp"

namespace bpsim {

enum class UniversalityClass { kSupercritical, kCritical, kSubcritical };

std::string to_string(UniversalityClass c);

struct Classification {
  ArcSet unstable;
  ArcSet stable;
  UniversalityClass cls = UniversalityClass::kSubcritical;
  bool trivial_subcritical = false;
};

/// Directions u with <x,u> < 0 for every offset x of the rule: one open arc
/// or empty.
ArcSet unstable_arc(const Rule& rule);

struct SemicircleReport {
  /// Widest maximal unstable arc; nullopt when nothing is unstable.
  std::optional<Arc> widest;
  double widest_width = 0.0;
  /// Some open semicircle consists of unstable directions.
  bool unstable_semicircle = false;
  /// Some closed semicircle meets the stable set in finitely many points.
  bool finite_stable_semicircle = false;
};

SemicircleReport semicircle_scan(const ArcSet& unstable);

Classification classify(const UpdateFamily& family);

/// "k/m pi" when the direction is a multiple of pi/4 or pi/6 style rational
/// angle with small denominator, else "(a,b)" for the primitive vector.
std::string format_direction(const Direction& d);
std::string format_arcset(const ArcSet& s);

}  // namespace bpsim
