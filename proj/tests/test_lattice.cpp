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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bpsim/lattice.hpp"
#include "bpsim/rng.hpp"

namespace bpsim {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Rule, RejectsMalformedOffsets) {
  EXPECT_THROW(make_rule({}), ConfigError);
  EXPECT_THROW(make_rule({{0, 0}}), ConfigError);
  EXPECT_THROW(make_rule({{1, 0}, {1, 0}}), ConfigError);
  EXPECT_NO_THROW(make_rule({{1, 0}, {0, 1}}));
}

TEST(Rule, OffsetsAreSorted) {
  const Rule r = make_rule({{1, 1}, {-1, 1}});
  ASSERT_EQ(r.offsets.size(), 2U);
  EXPECT_TRUE(r.offsets[0] < r.offsets[1]);
}

TEST(UpdateFamily, RangeAndUnion) {
  const UpdateFamily f = make_family("t", {{{1, 0}, {0, 2}}, {{-3, 1}, {1, 0}}});
  EXPECT_EQ(f.range(), 3);
  EXPECT_EQ(f.union_offsets().size(), 3U);
}

TEST(UpdateFamily, JsonRoundTrip) {
  const UpdateFamily f = make_family("rt", {{{1, 0}, {0, 1}}, {{-1, -1}}});
  EXPECT_EQ(family_from_json(family_to_json(f)), f);
}

TEST(UpdateFamily, StrictJson) {
  auto j = nlohmann::json::parse(R"({"name":"x","rules":[[[1,0]]],"extra":1})");
  EXPECT_THROW(family_from_json(j), ConfigError);
  j = nlohmann::json::parse(R"({"name":"x","rules":[[[1,0,2]]]})");
  EXPECT_THROW(family_from_json(j), ConfigError);
  j = nlohmann::json::parse(R"({"name":"x","rules":[[[0,0]]]})");
  EXPECT_THROW(family_from_json(j), ConfigError);
  j = nlohmann::json::parse(R"({"rules":[[[1,0]]]})");
  EXPECT_THROW(family_from_json(j), ConfigError);
}

TEST(Direction, ExactNormalizes) {
  const Direction d = Direction::exact(4, -6);
  EXPECT_EQ(d.a(), 2);
  EXPECT_EQ(d.b(), -3);
  EXPECT_THROW(Direction::exact(0, 0), ConfigError);
}

TEST(Direction, SnapsEighthTurns) {
  for (int k = -9; k <= 9; ++k) {
    const Direction d = snapped_direction(k * kPi / 4);
    EXPECT_TRUE(d.is_exact());
    EXPECT_NEAR(std::remainder(d.radians() - k * kPi / 4, 2 * kPi), 0.0, 1e-12);
  }
  EXPECT_FALSE(snapped_direction(0.3).is_exact());
  EXPECT_FALSE(Region::half_plane(snapped_direction(kPi / 2)).contains({-5, 0}));
}

TEST(Direction, AngleWraps) {
  EXPECT_NEAR(Direction::angle(3 * kPi).radians(), kPi, 1e-12);
  EXPECT_NEAR(Direction::angle(-kPi / 2 + 4 * kPi).radians(), -kPi / 2, 1e-12);
}

TEST(Direction, RotationByEighthsStaysExact) {
  const Direction d = Direction::exact(1, 0).rotated(3 * kPi / 4);
  ASSERT_TRUE(d.is_exact());
  EXPECT_EQ(d.a(), -1);
  EXPECT_EQ(d.b(), 1);
  EXPECT_TRUE(Direction::exact(2, 1).opposite().same(Direction::exact(-2, -1)));
}

TEST(Direction, CcwOrder) {
  const Direction e = Direction::exact(1, 0), n = Direction::exact(0, 1);
  const Direction w = Direction::exact(-1, 0), s = Direction::exact(0, -1);
  EXPECT_TRUE(ccw_less(e, n));
  EXPECT_TRUE(ccw_less(n, w));
  EXPECT_TRUE(ccw_less(w, s));
  EXPECT_FALSE(ccw_less(s, e));
  EXPECT_TRUE(ccw_less(Direction::angle(0.5), Direction::exact(1, 1)));
}

TEST(ArcSet, BasicAlgebra) {
  const Direction e = Direction::exact(1, 0), n = Direction::exact(0, 1);
  const Direction w = Direction::exact(-1, 0);
  const ArcSet a = ArcSet::open_arc(e, w);
  EXPECT_TRUE(a.contains(n));
  EXPECT_FALSE(a.contains(e));
  EXPECT_FALSE(a.contains(w));
  EXPECT_TRUE(a.unite(a.complement()).is_full());
  EXPECT_TRUE(a.intersect(a.complement()).is_empty());
  EXPECT_EQ(a.complement().complement(), a);
  EXPECT_TRUE(a.complement().contains(e));
  EXPECT_EQ(a.unite(ArcSet::point(e)).unite(ArcSet::point(w)).unite(ArcSet::open_arc(w, e)),
            ArcSet::full());
}

TEST(ArcSet, WrappingArcs) {
  const Direction s = Direction::exact(-1, -1), t = Direction::exact(1, -1);
  const ArcSet wrap = ArcSet::arc(t, s, true, false);
  EXPECT_TRUE(wrap.contains(Direction::exact(1, 0)));
  EXPECT_TRUE(wrap.contains(t));
  EXPECT_FALSE(wrap.contains(s));
  EXPECT_FALSE(wrap.contains(Direction::exact(0, -1)));
  const auto arcs = wrap.arcs();
  ASSERT_EQ(arcs.size(), 1U);
  EXPECT_TRUE(arcs[0].start.same(t));
  EXPECT_TRUE(arcs[0].closed_start);
  EXPECT_FALSE(arcs[0].closed_end);
}

TEST(ArcSet, PropertyDeMorgan) {
  TrialStream rs(7, streams::kAlgorithm, 0);
  auto rand_dir = [&] {
    for (;;) {
      const int x = static_cast<int>(rs.below(9)) - 4, y = static_cast<int>(rs.below(9)) - 4;
      if (x != 0 || y != 0) return Direction::exact(x, y);
    }
  };
  auto rand_set = [&] {
    ArcSet s = ArcSet::empty();
    for (int k = 0; k < 3; ++k) {
      const Direction a = rand_dir(), b = rand_dir();
      if (a.same(b)) continue;
      s = s.unite(ArcSet::arc(a, b, rs.uniform() < 0.5, rs.uniform() < 0.5));
    }
    return s;
  };
  for (int it = 0; it < 300; ++it) {
    const ArcSet a = rand_set(), b = rand_set();
    EXPECT_EQ(a.unite(b).complement(), a.complement().intersect(b.complement()));
    EXPECT_EQ(a.unite(b), b.unite(a));
    for (int k = 0; k < 10; ++k) {
      const Direction d = rand_dir();
      EXPECT_EQ(a.unite(b).contains(d), a.contains(d) || b.contains(d));
      EXPECT_EQ(a.intersect(b).contains(d), a.contains(d) && b.contains(d));
      EXPECT_EQ(a.complement().contains(d), !a.contains(d));
    }
  }
}

TEST(ArcSet, ArcWidth) {
  const Direction e = Direction::exact(1, 0);
  EXPECT_NEAR(arc_width(e, Direction::exact(0, 1)), kPi / 2, 1e-12);
  EXPECT_NEAR(arc_width(Direction::exact(0, 1), e), 3 * kPi / 2, 1e-12);
  EXPECT_NEAR(arc_width(e, e), 2 * kPi, 1e-12);
}

TEST(Region, HalfPlaneIsStrictAndExact) {
  const Region h = Region::half_plane(Direction::exact(0, 1));
  EXPECT_TRUE(h.contains({5, -1}));
  EXPECT_FALSE(h.contains({5, 0}));
  const Region g = Region::half_plane(Direction::exact(1, 1));
  EXPECT_FALSE(g.contains({3, -3}));
  EXPECT_TRUE(g.contains({3, -4}));
}

TEST(Region, ConeVariants) {
  const Direction n = Direction::exact(0, 1);
  const Region c = cone(n, kPi / 2);
  EXPECT_TRUE(c.contains({1, -1}));
  EXPECT_FALSE(c.contains({-1, -1}));
  EXPECT_FALSE(c.contains({1, 1}));
  const Region c2 = cone(n.rotated(kPi / 2), -kPi / 2);
  for (int y = -4; y <= 4; ++y)
    for (int x = -4; x <= 4; ++x) EXPECT_EQ(c.contains({x, y}), c2.contains({x, y}));
  const Region h = cone(n, 0.0);
  EXPECT_TRUE(h.contains({7, -1}));
  EXPECT_THROW(cone(n, 4.0), ConfigError);
}

TEST(Region, ExplicitSet) {
  const Region r = Region::explicit_set({{1, 2}, {0, 0}});
  EXPECT_TRUE(r.contains({1, 2}));
  EXPECT_FALSE(r.contains({2, 1}));
}

std::vector<Direction> op_droplet_dirs() {
  std::vector<Direction> d;
  for (int k : {3, 4, 5, 6, 7, 8, 9}) d.push_back(Direction::exact(1, 0).rotated(k * kPi / 4));
  return d;
}

TEST(Droplet, ValidatesDirections) {
  EXPECT_NO_THROW(validate_droplet_directions(op_droplet_dirs()));
  auto d = op_droplet_dirs();
  std::swap(d[1], d[2]);
  EXPECT_THROW(validate_droplet_directions(d), ConfigError);
  const std::vector<Direction> four{Direction::exact(-1, 0), Direction::exact(0, -1),
                                    Direction::exact(1, 0), Direction::exact(0, 1)};
  EXPECT_THROW(validate_droplet_directions(four), ConfigError);
}

TEST(Droplet, MonotoneInLAndInscribed) {
  const auto dirs = op_droplet_dirs();
  const Region c = Region::cone_between(dirs.front(), dirs.back());
  size_t prev = 0;
  for (double L : {0.0, 2.0, 5.0, 9.0, 20.0}) {
    const auto sites = droplet_sites(dirs, L, 40);
    EXPECT_GE(sites.size(), prev);
    prev = sites.size();
    for (const Site& s : sites) EXPECT_TRUE(c.contains(s));
    const Region big = Region::droplet(dirs, L + 1);
    for (const Site& s : sites) EXPECT_TRUE(big.contains(s));
  }
  EXPECT_GT(prev, 0U);
}

TEST(Bitmap, SetGetCount) {
  Bitmap b(3);
  EXPECT_EQ(b.size(), 49U);
  b.set({-3, 3}, true);
  b.set({0, 0}, true);
  EXPECT_TRUE(b.get({-3, 3}));
  EXPECT_EQ(b.count(), 2U);
  b.fill(true);
  EXPECT_EQ(b.count(), 49U);
  EXPECT_EQ(b.site(b.index({2, -1})), (Site{2, -1}));
}

TEST(Rng, PhiloxKnownAnswer) {
  const auto r = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5U);
  EXPECT_EQ(r[1], 0xe169c58dU);
  EXPECT_EQ(r[2], 0xbc57ac4cU);
  EXPECT_EQ(r[3], 0x9b00dbd8U);
  const auto s = Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                   {0xffffffff, 0xffffffff});
  EXPECT_EQ(s[0], 0x408f276dU);
  EXPECT_EQ(s[1], 0x41c83b0eU);
  EXPECT_EQ(s[2], 0xa20bc7c6U);
  EXPECT_EQ(s[3], 0x6d5451fdU);
}

TEST(Rng, SiteFieldReproducible) {
  const SiteField a(42, streams::kSample), b(42, streams::kSample), c(43, streams::kSample);
  EXPECT_EQ(a.uniform(3, -2, 5), b.uniform(3, -2, 5));
  EXPECT_NE(a.uniform(3, -2, 5), c.uniform(3, -2, 5));
  double mean = 0;
  for (int i = 0; i < 10000; ++i) mean += a.uniform(i, 0, 0);
  EXPECT_NEAR(mean / 10000, 0.5, 0.015);
}

}  // namespace
}  // namespace bpsim
