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

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bpsim {

struct Site {
  int x = 0;
  int y = 0;
  auto operator<=>(const Site&) const = default;
};

inline Site operator+(Site a, Site b) { return {a.x + b.x, a.y + b.y}; }
inline Site operator-(Site a, Site b) { return {a.x - b.x, a.y - b.y}; }
inline Site operator-(Site a) { return {-a.x, -a.y}; }
int chebyshev(Site s);

/// Raised for malformed families, directions and geometry.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Rule {
  std::vector<Site> offsets;  // sorted, distinct, nonzero
};

/// Validating constructor: nonempty, origin-free, no duplicates.
Rule make_rule(std::vector<Site> offsets);

struct UpdateFamily {
  std::string name;
  std::vector<Rule> rules;

  int range() const;
  /// U = union of all rule offsets, sorted.
  std::vector<Site> union_offsets() const;
  bool operator==(const UpdateFamily&) const;
};

UpdateFamily make_family(std::string name, const std::vector<std::vector<Site>>& rules);

nlohmann::json family_to_json(const UpdateFamily& f);
UpdateFamily family_from_json(const nlohmann::json& j);
UpdateFamily load_family_file(const std::string& path);

/// A point of the circle S^1. Exact directions are primitive integer vectors
/// and compare with integer cross/dot products; angle directions carry
/// radians in (-pi, pi].
class Direction {
 public:
  static Direction exact(int64_t a, int64_t b);
  static Direction angle(double radians);

  bool is_exact() const { return exact_; }
  int64_t a() const { return a_; }
  int64_t b() const { return b_; }
  double radians() const { return theta_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  Direction opposite() const;
  /// Rotation by theta. Multiples of pi/4 keep exact directions exact.
  Direction rotated(double theta) const;

  /// Same point of the circle (exact comparison when both are exact).
  bool same(const Direction& o) const;

 private:
  Direction() = default;
  bool exact_ = false;
  int64_t a_ = 0, b_ = 0;
  double theta_ = 0, cx_ = 1, cy_ = 0;
};

/// Counter-clockwise order on [0, 2pi), starting at the direction (1,0).
bool ccw_less(const Direction& a, const Direction& b);
/// Sign of the cross product a x b; exact when both directions are exact.
int cross_sign(const Direction& a, const Direction& b);
int dot_sign(const Direction& a, const Direction& b);

struct Arc {
  Direction start;
  Direction end;  // counter-clockwise from start
  bool closed_start;
  bool closed_end;
};

/// Subset of S^1 made of finitely many arcs with exact endpoints.
///
/// Stored canonically as sorted breakpoints, each with a membership flag for
/// the point and for the open stretch up to the next breakpoint. Two sets are
/// equal iff their canonical forms are equal.
class ArcSet {
 public:
  static ArcSet empty();
  static ArcSet full();
  static ArcSet arc(const Direction& s, const Direction& e, bool closed_s, bool closed_e);
  static ArcSet open_arc(const Direction& s, const Direction& e) { return arc(s, e, false, false); }
  static ArcSet point(const Direction& d);

  ArcSet unite(const ArcSet& o) const;
  ArcSet intersect(const ArcSet& o) const;
  ArcSet complement() const;

  bool contains(const Direction& d) const;
  bool is_empty() const { return br_.empty() && !constant_; }
  bool is_full() const { return br_.empty() && constant_; }
  /// Maximal arcs in counter-clockwise order of their start.
  std::vector<Arc> arcs() const;

  bool operator==(const ArcSet& o) const;

 private:
  struct Break {
    Direction at;
    bool in_point;
    bool in_after;
  };
  bool value_at(const Direction& d) const;
  bool value_after(const Direction& d) const;
  template <class Op>
  ArcSet combine(const ArcSet& o, Op op) const;
  void canonicalize();

  std::vector<Break> br_;
  bool constant_ = false;
};

/// Exact direction when `radians` is within 1e-12 of a multiple of pi/4,
/// otherwise an angle direction.
Direction snapped_direction(double radians);

/// Width of the counter-clockwise arc from s to e in radians, in (0, 2pi].
double arc_width(const Direction& s, const Direction& e);

class Region {
 public:
  enum class Kind { kEmpty, kHalfPlane, kCone, kDroplet, kExplicit };

  static Region empty();
  /// {x : <x,u> < a}.
  static Region half_plane(const Direction& u, double a = 0.0);
  /// H_u intersected with H_v.
  static Region cone_between(const Direction& u, const Direction& v);
  /// Droplet D_L for directions u_0 < ... < u_{n+1}.
  static Region droplet(std::vector<Direction> dirs, double L);
  static Region explicit_set(std::vector<Site> sites);

  Kind kind() const { return kind_; }
  bool contains(Site s) const;
  const std::vector<Direction>& directions() const { return dirs_; }
  double offset() const { return a_; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::kEmpty;
  std::vector<Direction> dirs_;
  std::vector<double> rhs_;  // droplet: <x,u_i> < L * rhs_[i]
  double a_ = 0.0;
  std::vector<Site> sites_;  // sorted
};

/// cone(u, theta): Cone(u, u+theta) for theta > 0, Cone(u+theta, u) for
/// theta < 0 and the half-plane H_u for theta = 0.
Region cone(const Direction& u, double theta);

/// Checks the droplet ordering constraints; throws ConfigError otherwise.
void validate_droplet_directions(const std::vector<Direction>& dirs);
std::vector<Site> droplet_sites(const std::vector<Direction>& dirs, double L, int clip);

/// Square bitmap over B_n, row-major and bit-packed.
class Bitmap {
 public:
  Bitmap() = default;
  explicit Bitmap(int n);

  int radius() const { return n_; }
  int side() const { return side_; }
  size_t size() const { return static_cast<size_t>(side_) * side_; }
  bool in_box(Site s) const { return s.x >= -n_ && s.x <= n_ && s.y >= -n_ && s.y <= n_; }
  size_t index(Site s) const {
    return static_cast<size_t>(s.y + n_) * side_ + static_cast<size_t>(s.x + n_);
  }
  Site site(size_t i) const {
    return {static_cast<int>(i % side_) - n_, static_cast<int>(i / side_) - n_};
  }
  bool test(size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  bool get(Site s) const { return test(index(s)); }
  void set(size_t i, bool v) {
    if (v)
      words_[i >> 6] |= uint64_t{1} << (i & 63);
    else
      words_[i >> 6] &= ~(uint64_t{1} << (i & 63));
  }
  void set(Site s, bool v) { set(index(s), v); }
  void fill(bool v);
  size_t count() const;
  bool operator==(const Bitmap&) const = default;

 private:
  int n_ = 0;
  int side_ = 1;
  std::vector<uint64_t> words_;
};

/// Box B_n with initial infection and a permanently infected boundary region.
///
/// The domain is B_n, optionally shrunk to B_n ∩ clip. Sites outside the
/// domain are infected iff they lie in the boundary region; they never change.
struct LatticeInstance {
  int n = 0;
  Bitmap infected;
  Region boundary = Region::empty();
  std::optional<Region> clip;

  explicit LatticeInstance(int radius) : n(radius), infected(radius) {}
  bool in_domain(Site s) const {
    return infected.in_box(s) && (!clip || clip->contains(s));
  }
};

}  // namespace bpsim
