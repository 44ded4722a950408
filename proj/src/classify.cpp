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

#include "bpsim/classify.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bpsim {

namespace {

// Width of the counter-clockwise arc s -> e is at least pi.
bool at_least_half_turn(const Direction& s, const Direction& e) {
  if (s.same(e)) return true;
  const int c = cross_sign(s, e);
  return c < 0 || (c == 0 && dot_sign(s, e) < 0);
}

bool is_point(const Arc& a) { return a.start.same(a.end) && a.closed_start && a.closed_end; }

}  // namespace

std::string to_string(UniversalityClass c) {
  switch (c) {
    case UniversalityClass::kSupercritical:
      return "supercritical";
    case UniversalityClass::kCritical:
      return "critical";
    case UniversalityClass::kSubcritical:
      return "subcritical";
  }
  return "?";
}

ArcSet unstable_arc(const Rule& rule) {
  ArcSet acc = ArcSet::full();
  for (const Site& x : rule.offsets) {
    const Direction s = Direction::exact(-x.y, x.x);
    const Direction e = Direction::exact(x.y, -x.x);
    acc = acc.intersect(ArcSet::open_arc(s, e));
  }
  return acc;
}

SemicircleReport semicircle_scan(const ArcSet& unstable) {
  SemicircleReport rep;
  if (unstable.is_full()) {
    rep.widest_width = 2 * std::numbers::pi;
    rep.unstable_semicircle = true;
    rep.finite_stable_semicircle = true;
    return rep;
  }
  if (unstable.is_empty()) return rep;

  for (const Arc& a : unstable.arcs()) {
    const double w = is_point(a) ? 0.0 : arc_width(a.start, a.end);
    if (!rep.widest || w > rep.widest_width) {
      rep.widest = a;
      rep.widest_width = w;
    }
    if (!is_point(a) && at_least_half_turn(a.start, a.end)) rep.unstable_semicircle = true;
  }

  std::vector<Arc> thick;
  for (const Arc& a : unstable.complement().arcs())
    if (!is_point(a)) thick.push_back(a);
  if (thick.empty()) {
    rep.finite_stable_semicircle = true;
  } else {
    for (size_t i = 0; i < thick.size(); ++i) {
      const Arc& cur = thick[i];
      const Arc& nxt = thick[(i + 1) % thick.size()];
      if (thick.size() == 1 && cur.start.same(cur.end)) break;
      if (at_least_half_turn(cur.end, nxt.start)) rep.finite_stable_semicircle = true;
    }
  }
  return rep;
}

Classification classify(const UpdateFamily& family) {
  Classification c;
  c.unstable = ArcSet::empty();
  for (const Rule& r : family.rules) c.unstable = c.unstable.unite(unstable_arc(r));
  c.stable = c.unstable.complement();
  const SemicircleReport rep = semicircle_scan(c.unstable);
  if (rep.unstable_semicircle)
    c.cls = UniversalityClass::kSupercritical;
  else if (rep.finite_stable_semicircle)
    c.cls = UniversalityClass::kCritical;
  else
    c.cls = UniversalityClass::kSubcritical;
  c.trivial_subcritical = c.unstable.is_empty();
  return c;
}

std::string format_direction(const Direction& d) {
  std::ostringstream os;
  if (!d.is_exact()) {
    os << d.radians();
    return os.str();
  }
  const int64_t a = std::llabs(d.a()), b = std::llabs(d.b());
  const bool eighth = (a == 1 && b == 0) || (a == 0 && b == 1) || (a == 1 && b == 1);
  if (!eighth) {
    os << "(" << d.a() << "," << d.b() << ")";
    return os.str();
  }
  const int k = static_cast<int>(std::lround(d.radians() / (std::numbers::pi / 4)));
  switch (k) {
    case 0: return "0";
    case 1: return "pi/4";
    case 2: return "pi/2";
    case 3: return "3pi/4";
    case 4: return "pi";
    case -1: return "-pi/4";
    case -2: return "-pi/2";
    case -3: return "-3pi/4";
    default: break;
  }
  return "pi";
}

std::string format_arcset(const ArcSet& s) {
  if (s.is_empty()) return "empty";
  if (s.is_full()) return "full";
  std::ostringstream os;
  bool first = true;
  for (const Arc& a : s.arcs()) {
    if (!first) os << " u ";
    first = false;
    if (is_point(a)) {
      os << "{" << format_direction(a.start) << "}";
      continue;
    }
    os << (a.closed_start ? "[" : "(") << format_direction(a.start) << ", "
       << format_direction(a.end) << (a.closed_end ? "]" : ")");
  }
  return os.str();
}

}  // namespace bpsim
