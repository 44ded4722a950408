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

#include "bpsim/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "bpsim/closure.hpp"

namespace bpsim {

namespace models {

UpdateFamily op() { return make_family("OP", {{{-1, 1}, {1, 1}}}); }

UpdateFamily bidirectional_op() {
  return make_family("BidirectionalOP", {{{0, 1}, {1, 1}}, {{0, -1}, {-1, -1}}});
}

UpdateFamily dtbp() {
  return make_family("DTBP", {{{1, 0}, {0, 1}}, {{1, 0}, {-1, -1}}, {{0, 1}, {-1, -1}}});
}

UpdateFamily spiral() {
  const std::vector<Site> u1{{1, -1}, {1, 0}, {1, 1}, {0, 1}};
  const std::vector<Site> u2{{1, -1}, {1, 0}, {-1, -1}, {0, -1}};
  std::vector<Site> u3, u4;
  for (const Site& s : u1) u3.push_back(-s);
  for (const Site& s : u2) u4.push_back(-s);
  return make_family("Spiral", {u1, u2, u3, u4});
}

UpdateFamily two_neighbour() {
  const std::vector<Site> nb{{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
  std::vector<std::vector<Site>> rules;
  for (size_t i = 0; i < nb.size(); ++i)
    for (size_t j = i + 1; j < nb.size(); ++j) rules.push_back({nb[i], nb[j]});
  return make_family("TwoNeighbour", rules);
}

UpdateFamily site_perc_rule() {
  return make_family("SitePercRule", {{{0, 1}, {1, 0}, {-1, 0}, {0, -1}}});
}

UpdateFamily north_east() { return make_family("NorthEast", {{{1, 0}, {0, 1}}}); }

UpdateFamily gop(const Direction& u, int r) {
  if (r < 1) throw ConfigError("GOP radius must be positive");
  const Region h = Region::half_plane(u, 0.0);
  std::vector<Site> offs;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      if (h.contains({x, y})) offs.push_back({x, y});
  return make_family("GOP", {offs});
}

std::vector<std::string> builtin_names() {
  return {"op", "bidirectionalop", "dtbp", "spiral", "twoneighbour", "siteperc", "northeast"};
}

UpdateFamily builtin(const std::string& name) {
  std::string k;
  for (char ch : name)
    if (ch != '-' && ch != '_') k.push_back(static_cast<char>(std::tolower(ch)));
  if (k == "op") return op();
  if (k == "bidirectionalop" || k == "biop") return bidirectional_op();
  if (k == "dtbp") return dtbp();
  if (k == "spiral") return spiral();
  if (k == "twoneighbour" || k == "twoneighbor" || k == "2n") return two_neighbour();
  if (k == "siteperc" || k == "sitepercrule") return site_perc_rule();
  if (k == "northeast" || k == "ne") return north_east();
  throw ConfigError("unknown builtin family '" + name + "'");
}

}  // namespace models

UpdateFamily linear_transform(const UpdateFamily& family, const Mat2& m) {
  if (det(m) == 0) throw ConfigError("linear_transform: matrix is singular");
  std::vector<std::vector<Site>> rules;
  for (const Rule& r : family.rules) {
    std::vector<Site> offs;
    for (const Site& s : r.offsets) offs.push_back(apply(m, s));
    rules.push_back(std::move(offs));
  }
  return make_family(family.name, rules);
}

Direction transform_direction(const Mat2& m, const Direction& u) {
  if (det(m) == 0) throw ConfigError("transform_direction: matrix is singular");
  if (u.is_exact()) {
    const int64_t tx = u.b(), ty = -u.a();  // u - pi/2
    const int64_t wx = m[0] * tx + m[1] * ty, wy = m[2] * tx + m[3] * ty;
    return Direction::exact(-wy, wx);  // + pi/2
  }
  const double tx = u.cy(), ty = -u.cx();
  const double wx = m[0] * tx + m[1] * ty, wy = m[2] * tx + m[3] * ty;
  return Direction::angle(std::atan2(wy, wx) + std::numbers::pi / 2);
}

namespace {

constexpr double kPi = std::numbers::pi;

// Angle of d lifted into (-pi/2, 3pi/2].
double lift(double t) {
  while (t <= -kPi / 2) t += 2 * kPi;
  while (t > 3 * kPi / 2) t -= 2 * kPi;
  return t;
}

bool in_spiral_box(const SpiralParams& p, Site s) {
  double x = s.x, y = s.y;
  if (p.tilted) {
    const double a = -3 * kPi / 4;
    const double rx = std::cos(a) * x - std::sin(a) * y;
    const double ry = std::sin(a) * x + std::cos(a) * y;
    x = rx;
    y = ry;
  }
  constexpr double tol = 1e-9;
  return x >= -p.n - tol && x <= p.n + tol && y >= -tol && y <= p.c * p.n + tol;
}

}  // namespace

void validate_spiral_params(const SpiralParams& p) {
  const double u = lift(p.u.radians());
  if (!(u > kPi / 2 && u < 5 * kPi / 4))
    throw ConfigError("spiral: u must lie in (pi/2, 5pi/4)");
  if (!(p.theta > kPi / 2 - u && p.theta < 5 * kPi / 4 - u))
    throw ConfigError("spiral: theta must satisfy pi/2-u < theta < 5pi/4-u");
  if (!(p.c >= 0 && p.c <= 1)) throw ConfigError("spiral: aspect c must lie in [0,1]");
  if (p.n < 1) throw ConfigError("spiral: n must be positive");
  for (double w : {u, u + p.theta}) {
    if (w > kPi / 2 && w < kPi && !(p.c < std::tan(w - kPi / 2)))
      throw ConfigError("spiral: aspect c violates c < tan(w - pi/2) for w = " +
                        std::to_string(w));
  }
}

int spiral_sample_radius(const SpiralParams& p) {
  if (!p.tilted) return p.n;
  return static_cast<int>(std::ceil(p.n * std::hypot(1.0, p.c))) + 1;
}

SpiralEvents spiral_event_pair(const Bitmap& sample, const SpiralParams& p) {
  validate_spiral_params(p);
  const int m = spiral_sample_radius(p);
  if (sample.radius() < m) throw ConfigError("spiral: sample box too small");
  std::vector<Site> box;
  for (int y = -m; y <= m; ++y)
    for (int x = -m; x <= m; ++x)
      if (in_spiral_box(p, {x, y})) box.push_back({x, y});

  LatticeInstance inst(m);
  for (const Site& s : box) inst.infected.set(s, sample.get(s));
  inst.boundary = cone(p.u, p.theta);
  inst.clip = Region::explicit_set(box);

  const auto s = models::spiral();
  const UpdateFamily pair = make_family("Spiral12", {s.rules[0].offsets, s.rules[1].offsets});
  return {origin_escapes(inst, models::bidirectional_op()), origin_escapes(inst, pair)};
}

}  // namespace bpsim
