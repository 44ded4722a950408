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

#include "bpsim/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace bpsim {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double t) {
  t = std::remainder(t, 2 * kPi);
  if (t <= -kPi) t += 2 * kPi;
  return t;
}

// Angle in [0, 2pi).
double positive_angle(const Direction& d) {
  const double t = d.radians();
  return t < 0 ? t + 2 * kPi : t;
}

int half(const Direction& d) { return (d.b() < 0 || (d.b() == 0 && d.a() < 0)) ? 1 : 0; }

}  // namespace

int chebyshev(Site s) { return std::max(std::abs(s.x), std::abs(s.y)); }

Rule make_rule(std::vector<Site> offsets) {
  if (offsets.empty()) throw ConfigError("rule must contain at least one offset");
  std::sort(offsets.begin(), offsets.end());
  if (std::adjacent_find(offsets.begin(), offsets.end()) != offsets.end())
    throw ConfigError("rule contains a duplicate offset");
  for (const Site& s : offsets)
    if (s.x == 0 && s.y == 0) throw ConfigError("rule contains the origin");
  return Rule{std::move(offsets)};
}

int UpdateFamily::range() const {
  int r = 0;
  for (const Rule& rule : rules)
    for (const Site& s : rule.offsets) r = std::max(r, chebyshev(s));
  return r;
}

std::vector<Site> UpdateFamily::union_offsets() const {
  std::vector<Site> u;
  for (const Rule& rule : rules) u.insert(u.end(), rule.offsets.begin(), rule.offsets.end());
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

bool UpdateFamily::operator==(const UpdateFamily& o) const {
  if (name != o.name || rules.size() != o.rules.size()) return false;
  for (size_t i = 0; i < rules.size(); ++i)
    if (rules[i].offsets != o.rules[i].offsets) return false;
  return true;
}

UpdateFamily make_family(std::string name, const std::vector<std::vector<Site>>& rules) {
  if (rules.empty()) throw ConfigError("update family must contain at least one rule");
  UpdateFamily f{std::move(name), {}};
  for (const auto& r : rules) f.rules.push_back(make_rule(r));
  return f;
}

nlohmann::json family_to_json(const UpdateFamily& f) {
  nlohmann::json rules = nlohmann::json::array();
  for (const Rule& r : f.rules) {
    nlohmann::json offs = nlohmann::json::array();
    for (const Site& s : r.offsets) offs.push_back({s.x, s.y});
    rules.push_back(std::move(offs));
  }
  return {{"name", f.name}, {"rules", std::move(rules)}};
}

UpdateFamily family_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("family: expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "name" && it.key() != "rules")
      throw ConfigError("family: unknown field '" + it.key() + "'");
  if (!j.contains("name") || !j["name"].is_string())
    throw ConfigError("family: 'name' must be a string");
  if (!j.contains("rules") || !j["rules"].is_array())
    throw ConfigError("family: 'rules' must be an array of rules");
  std::vector<std::vector<Site>> rules;
  for (const auto& r : j["rules"]) {
    if (!r.is_array()) throw ConfigError("family: each rule must be an array of offsets");
    std::vector<Site> offs;
    for (const auto& o : r) {
      if (!o.is_array() || o.size() != 2 || !o[0].is_number_integer() ||
          !o[1].is_number_integer())
        throw ConfigError("family: each offset must be an integer pair [dx,dy]");
      offs.push_back({o[0].get<int>(), o[1].get<int>()});
    }
    rules.push_back(std::move(offs));
  }
  return make_family(j["name"].get<std::string>(), rules);
}

UpdateFamily load_family_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open family file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("family file '" + path + "' is not valid JSON: " + e.what());
  }
  return family_from_json(j);
}

// ---------------------------------------------------------------- Direction

Direction Direction::exact(int64_t a, int64_t b) {
  if (a == 0 && b == 0) throw ConfigError("direction (0,0) is undefined");
  const int64_t g = std::gcd(a, b);
  Direction d;
  d.exact_ = true;
  d.a_ = a / g;
  d.b_ = b / g;
  d.theta_ = std::atan2(static_cast<double>(d.b_), static_cast<double>(d.a_));
  const double h = std::hypot(static_cast<double>(d.a_), static_cast<double>(d.b_));
  d.cx_ = d.a_ / h;
  d.cy_ = d.b_ / h;
  return d;
}

Direction Direction::angle(double radians) {
  if (!std::isfinite(radians)) throw ConfigError("direction angle must be finite");
  Direction d;
  d.theta_ = wrap_angle(radians);
  d.cx_ = std::cos(d.theta_);
  d.cy_ = std::sin(d.theta_);
  return d;
}

Direction snapped_direction(double radians) {
  if (!std::isfinite(radians)) throw ConfigError("direction angle must be finite");
  const double k = radians / (kPi / 4);
  const double kr = std::round(k);
  if (std::abs(k - kr) > 1e-12) return Direction::angle(radians);
  static constexpr int kVec[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                     {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  int i = static_cast<int>(std::fmod(kr, 8.0));
  if (i < 0) i += 8;
  return Direction::exact(kVec[i][0], kVec[i][1]);
}

Direction Direction::opposite() const {
  if (exact_) return exact(-a_, -b_);
  return angle(theta_ + kPi);
}

Direction Direction::rotated(double theta) const {
  if (exact_) {
    const double k = theta / (kPi / 4);
    const double kr = std::round(k);
    if (std::abs(k - kr) < 1e-12) {
      int steps = static_cast<int>(std::fmod(kr, 8.0));
      if (steps < 0) steps += 8;
      int64_t a = a_, b = b_;
      for (int i = 0; i < steps; ++i) {
        const int64_t na = a - b, nb = a + b;
        const int64_t g = std::gcd(na, nb);
        a = na / g;
        b = nb / g;
      }
      return exact(a, b);
    }
  }
  return angle(theta_ + theta);
}

bool Direction::same(const Direction& o) const {
  if (exact_ && o.exact_) return a_ == o.a_ && b_ == o.b_;
  return std::abs(wrap_angle(theta_ - o.theta_)) < 1e-12;
}

bool ccw_less(const Direction& a, const Direction& b) {
  if (a.is_exact() && b.is_exact()) {
    const int ha = half(a), hb = half(b);
    if (ha != hb) return ha < hb;
    return a.a() * b.b() - a.b() * b.a() > 0;
  }
  return positive_angle(a) < positive_angle(b);
}

int cross_sign(const Direction& a, const Direction& b) {
  if (a.is_exact() && b.is_exact()) {
    const int64_t c = a.a() * b.b() - a.b() * b.a();
    return (c > 0) - (c < 0);
  }
  const double c = a.cx() * b.cy() - a.cy() * b.cx();
  return (c > 0) - (c < 0);
}

int dot_sign(const Direction& a, const Direction& b) {
  if (a.is_exact() && b.is_exact()) {
    const int64_t c = a.a() * b.a() + a.b() * b.b();
    return (c > 0) - (c < 0);
  }
  const double c = a.cx() * b.cx() + a.cy() * b.cy();
  return (c > 0) - (c < 0);
}

double arc_width(const Direction& s, const Direction& e) {
  if (s.same(e)) return 2 * kPi;
  double w = e.radians() - s.radians();
  while (w <= 0) w += 2 * kPi;
  while (w > 2 * kPi) w -= 2 * kPi;
  return w;
}

// ------------------------------------------------------------------- ArcSet

ArcSet ArcSet::empty() { return ArcSet{}; }

ArcSet ArcSet::full() {
  ArcSet s;
  s.constant_ = true;
  return s;
}

ArcSet ArcSet::arc(const Direction& s, const Direction& e, bool closed_s, bool closed_e) {
  if (!s.is_exact() || !e.is_exact()) throw ConfigError("arc endpoints must be exact directions");
  if (s.same(e)) {
    if (closed_s && closed_e) return point(s);
    throw ConfigError("arc with equal endpoints must be a closed point");
  }
  ArcSet r;
  r.br_.push_back({s, closed_s, true});
  r.br_.push_back({e, closed_e, false});
  std::sort(r.br_.begin(), r.br_.end(),
            [](const Break& x, const Break& y) { return ccw_less(x.at, y.at); });
  return r;
}

ArcSet ArcSet::point(const Direction& d) {
  if (!d.is_exact()) throw ConfigError("arc endpoints must be exact directions");
  ArcSet r;
  r.br_.push_back({d, true, false});
  return r;
}

bool ArcSet::value_after(const Direction& d) const {
  if (br_.empty()) return constant_;
  const Break* last = &br_.back();
  for (const Break& b : br_) {
    if (ccw_less(d, b.at)) break;
    last = &b;
  }
  return last->in_after;
}

bool ArcSet::value_at(const Direction& d) const {
  for (const Break& b : br_)
    if (b.at.same(d)) return b.in_point;
  return value_after(d);
}

bool ArcSet::contains(const Direction& d) const {
  if (br_.empty()) return constant_;
  return value_at(d);
}

template <class Op>
ArcSet ArcSet::combine(const ArcSet& o, Op op) const {
  std::vector<Direction> pts;
  for (const Break& b : br_) pts.push_back(b.at);
  for (const Break& b : o.br_) pts.push_back(b.at);
  std::sort(pts.begin(), pts.end(), ccw_less);
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Direction& x, const Direction& y) { return x.same(y); }),
            pts.end());
  ArcSet r;
  r.constant_ = op(constant_, o.constant_);
  for (const Direction& p : pts)
    r.br_.push_back({p, op(value_at(p), o.value_at(p)), op(value_after(p), o.value_after(p))});
  r.canonicalize();
  return r;
}

void ArcSet::canonicalize() {
  if (br_.empty()) return;
  const size_t m = br_.size();
  std::vector<Break> kept;
  for (size_t i = 0; i < m; ++i) {
    const bool prev_after = br_[(i + m - 1) % m].in_after;
    if (br_[i].in_point == br_[i].in_after && br_[i].in_after == prev_after) continue;
    kept.push_back(br_[i]);
  }
  if (kept.empty()) {
    constant_ = br_.front().in_after;
    br_.clear();
  } else {
    constant_ = false;
    br_ = std::move(kept);
  }
}

ArcSet ArcSet::unite(const ArcSet& o) const {
  return combine(o, [](bool a, bool b) { return a || b; });
}

ArcSet ArcSet::intersect(const ArcSet& o) const {
  return combine(o, [](bool a, bool b) { return a && b; });
}

ArcSet ArcSet::complement() const {
  ArcSet r = *this;
  r.constant_ = !constant_;
  for (Break& b : r.br_) {
    b.in_point = !b.in_point;
    b.in_after = !b.in_after;
  }
  if (!r.br_.empty()) r.constant_ = false;
  return r;
}

std::vector<Arc> ArcSet::arcs() const {
  std::vector<Arc> out;
  const size_t m = br_.size();
  for (size_t i = 0; i < m; ++i) {
    const Break& b = br_[i];
    const bool prev_after = br_[(i + m - 1) % m].in_after;
    const bool starts = (b.in_point || b.in_after) && !(prev_after && b.in_point);
    if (!starts) continue;
    if (!b.in_after) {
      out.push_back({b.at, b.at, true, true});
      continue;
    }
    size_t j = (i + 1) % m;
    while (br_[j].in_point && br_[j].in_after) j = (j + 1) % m;
    out.push_back({b.at, br_[j].at, b.in_point, br_[j].in_point});
  }
  return out;
}

bool ArcSet::operator==(const ArcSet& o) const {
  if (br_.size() != o.br_.size() || constant_ != o.constant_) return false;
  for (size_t i = 0; i < br_.size(); ++i) {
    if (!br_[i].at.same(o.br_[i].at) || br_[i].in_point != o.br_[i].in_point ||
        br_[i].in_after != o.br_[i].in_after)
      return false;
  }
  return true;
}

// ------------------------------------------------------------------- Region

Region Region::empty() { return Region{}; }

Region Region::half_plane(const Direction& u, double a) {
  Region r;
  r.kind_ = Kind::kHalfPlane;
  r.dirs_ = {u};
  r.a_ = a;
  return r;
}

Region Region::cone_between(const Direction& u, const Direction& v) {
  Region r;
  r.kind_ = Kind::kCone;
  r.dirs_ = {u, v};
  return r;
}

void validate_droplet_directions(const std::vector<Direction>& dirs) {
  if (dirs.size() < 5)
    throw ConfigError("droplet needs directions u_0..u_{n+1} with n >= 3");
  const size_t n = dirs.size() - 2;
  double total = 0;
  for (size_t i = 0; i + 1 < dirs.size(); ++i) {
    if (dirs[i].same(dirs[i + 1]))
      throw ConfigError("droplet directions must be strictly increasing");
    total += arc_width(dirs[i], dirs[i + 1]);
  }
  if (total >= 2 * kPi - 1e-12)
    throw ConfigError("droplet directions must wind less than one full turn");
  const Direction& u1 = dirs[1];
  const Direction& un = dirs[n];
  bool antipodal;
  if (u1.is_exact() && un.is_exact())
    antipodal = cross_sign(u1, un) == 0 && dot_sign(u1, un) < 0;
  else
    antipodal = std::abs(arc_width(u1, un) - kPi) < 1e-9;
  if (!antipodal) throw ConfigError("droplet directions need u_n = u_1 + pi");
}

Region Region::droplet(std::vector<Direction> dirs, double L) {
  validate_droplet_directions(dirs);
  if (!(L >= 0)) throw ConfigError("droplet size L must be nonnegative");
  const Direction& u = dirs.front();
  const Direction& v = dirs.back();
  // x_1 solves <x,u> = 1 and <x,v> = 1; x_L = L x_1.
  const double det = u.cx() * v.cy() - u.cy() * v.cx();
  const double x1 = (v.cy() - u.cy()) / det;
  const double y1 = (u.cx() - v.cx()) / det;
  Region r;
  r.kind_ = Kind::kDroplet;
  r.a_ = L;
  r.rhs_.resize(dirs.size(), 0.0);
  for (size_t i = 1; i + 1 < dirs.size(); ++i)
    r.rhs_[i] = 1.0 - (x1 * dirs[i].cx() + y1 * dirs[i].cy());
  r.dirs_ = std::move(dirs);
  return r;
}

Region Region::explicit_set(std::vector<Site> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  Region r;
  r.kind_ = Kind::kExplicit;
  r.sites_ = std::move(sites);
  return r;
}

namespace {

bool below(const Direction& u, Site s, double a) {
  if (u.is_exact()) {
    const int64_t d = u.a() * s.x + u.b() * s.y;
    if (a == 0.0) return d < 0;
    return static_cast<double>(d) / std::hypot(double(u.a()), double(u.b())) < a;
  }
  return s.x * u.cx() + s.y * u.cy() < a;
}

}  // namespace

bool Region::contains(Site s) const {
  switch (kind_) {
    case Kind::kEmpty:
      return false;
    case Kind::kHalfPlane:
      return below(dirs_[0], s, a_);
    case Kind::kCone:
      return below(dirs_[0], s, 0.0) && below(dirs_[1], s, 0.0);
    case Kind::kDroplet: {
      if (!below(dirs_.front(), s, 0.0) || !below(dirs_.back(), s, 0.0)) return false;
      for (size_t i = 1; i + 1 < dirs_.size(); ++i)
        if (!(s.x * dirs_[i].cx() + s.y * dirs_[i].cy() < a_ * rhs_[i])) return false;
      return true;
    }
    case Kind::kExplicit:
      return std::binary_search(sites_.begin(), sites_.end(), s);
  }
  return false;
}

std::string Region::describe() const {
  std::ostringstream os;
  auto dir = [&](const Direction& d) {
    if (d.is_exact())
      os << "(" << d.a() << "," << d.b() << ")";
    else
      os << d.radians();
  };
  switch (kind_) {
    case Kind::kEmpty:
      os << "none";
      break;
    case Kind::kHalfPlane:
      os << "halfplane:";
      dir(dirs_[0]);
      if (a_ != 0.0) os << ":" << a_;
      break;
    case Kind::kCone:
      os << "cone:";
      dir(dirs_[0]);
      os << ":";
      dir(dirs_[1]);
      break;
    case Kind::kDroplet:
      os << "droplet:L=" << a_;
      break;
    case Kind::kExplicit:
      os << "explicit:" << sites_.size();
      break;
  }
  return os.str();
}

Region cone(const Direction& u, double theta) {
  if (std::abs(theta) > kPi + 1e-12) throw ConfigError("cone opening must satisfy |theta| <= pi");
  if (theta == 0.0) return Region::half_plane(u, 0.0);
  if (theta > 0) return Region::cone_between(u, u.rotated(theta));
  return Region::cone_between(u.rotated(theta), u);
}

std::vector<Site> droplet_sites(const std::vector<Direction>& dirs, double L, int clip) {
  const Region d = Region::droplet(dirs, L);
  std::vector<Site> out;
  for (int y = -clip; y <= clip; ++y)
    for (int x = -clip; x <= clip; ++x)
      if (d.contains({x, y})) out.push_back({x, y});
  return out;
}

// ------------------------------------------------------------------- Bitmap

Bitmap::Bitmap(int n) : n_(n), side_(2 * n + 1) {
  if (n < 0) throw ConfigError("box radius must be nonnegative");
  words_.assign((size() + 63) / 64, 0);
}

void Bitmap::fill(bool v) {
  std::fill(words_.begin(), words_.end(), v ? ~uint64_t{0} : 0);
  if (v && size() % 64) words_.back() = (uint64_t{1} << (size() % 64)) - 1;
}

size_t Bitmap::count() const {
  size_t c = 0;
  for (uint64_t w : words_) c += std::popcount(w);
  return c;
}

}  // namespace bpsim
