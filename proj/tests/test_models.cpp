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

#include "bpsim/classify.hpp"
#include "bpsim/closure.hpp"
#include "bpsim/models.hpp"
#include "test_util.hpp"

namespace bpsim {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Models, BuiltinsAreWellFormed) {
  for (const auto& name : models::builtin_names()) {
    const UpdateFamily f = models::builtin(name);
    EXPECT_FALSE(f.rules.empty());
    for (const Rule& r : f.rules) EXPECT_EQ(make_rule(r.offsets).offsets, r.offsets);
  }
  EXPECT_EQ(models::builtin("BidirectionalOP"), models::bidirectional_op());
  EXPECT_THROW(models::builtin("nope"), ConfigError);
}

TEST(Models, SpiralIsSymmetric) {
  const auto s = models::spiral();
  ASSERT_EQ(s.rules.size(), 4U);
  EXPECT_EQ(s.rules[0].offsets.size(), 4U);
  std::vector<Site> neg;
  for (const Site& x : s.rules[0].offsets) neg.push_back(-x);
  EXPECT_EQ(make_rule(neg).offsets, s.rules[2].offsets);
}

TEST(Models, ClassesOfBuiltins) {
  EXPECT_EQ(classify(models::spiral()).cls, UniversalityClass::kSubcritical);
  EXPECT_EQ(classify(models::gop(Direction::exact(-1, -1), 8)).cls,
            UniversalityClass::kSubcritical);
  EXPECT_EQ(classify(models::north_east()).cls, UniversalityClass::kSubcritical);
  EXPECT_EQ(classify(models::bidirectional_op()).cls, UniversalityClass::kSubcritical);
}

TEST(Models, GopRule) {
  const auto g = models::gop(Direction::exact(-1, -1), 2);
  ASSERT_EQ(g.rules.size(), 1U);
  for (const Site& s : g.rules[0].offsets) EXPECT_GT(s.x + s.y, 0);
  EXPECT_EQ(g.rules[0].offsets.size(), 10U);
  EXPECT_THROW(models::gop(Direction::exact(1, 0), 0), ConfigError);
}

TEST(LinearTransform, Identity) {
  EXPECT_EQ(linear_transform(models::dtbp(), {1, 0, 0, 1}), models::dtbp());
  EXPECT_THROW(linear_transform(models::op(), {1, 2, 2, 4}), ConfigError);
}

TEST(LinearTransform, NorthEastToOp) {
  const Mat2 m{-1, 1, 1, 1};
  const auto f = linear_transform(make_family("r", {{{1, 0}, {0, 1}}}), m);
  EXPECT_EQ(f.rules[0].offsets, models::op().rules[0].offsets);
}

TEST(LinearTransform, ShearFromDtbpProof) {
  const auto f = linear_transform(make_family("r", {{{1, 0}, {-1, -1}}}), {1, 0, 1, 1});
  EXPECT_EQ(f.rules[0].offsets, make_rule({{1, 1}, {-1, -2}}).offsets);
}

TEST(LinearTransform, SymmetriesPreserveClass) {
  const std::vector<Mat2> syms{{0, -1, 1, 0}, {-1, 0, 0, -1}, {1, 0, 0, -1}, {0, 1, 1, 0}};
  for (const auto& name : models::builtin_names())
    for (const Mat2& m : syms) {
      const auto f = models::builtin(name);
      EXPECT_EQ(classify(linear_transform(f, m)).cls, classify(f).cls) << name;
    }
}

TEST(TransformDirection, HalfPlaneImage) {
  // M maps H_u onto H_{u'} when det M > 0.
  const std::vector<Mat2> ms{{1, -1, 1, 1}, {-1, 0, 1, -2}, {0, 1, -2, 1}, {2, 1, 1, 1}};
  for (const Mat2& m : ms) {
    ASSERT_GT(det(m), 0);
    for (int a = -3; a <= 3; ++a)
      for (int b = -3; b <= 3; ++b) {
        if (a == 0 && b == 0) continue;
        const Direction u = Direction::exact(a, b);
        const Direction v = transform_direction(m, u);
        const Region hu = Region::half_plane(u), hv = Region::half_plane(v);
        for (int y = -4; y <= 4; ++y)
          for (int x = -4; x <= 4; ++x)
            EXPECT_EQ(hu.contains({x, y}), hv.contains(apply(m, {x, y})));
        const Direction w = transform_direction(m, Direction::angle(u.radians()));
        EXPECT_NEAR(std::remainder(w.radians() - v.radians(), 2 * kPi), 0.0, 1e-9);
      }
  }
}

SpiralParams params(double u, double theta, bool tilted) {
  SpiralParams p;
  p.u = Direction::angle(u);
  p.theta = theta;
  p.n = 20;
  p.c = 0.2;
  p.tilted = tilted;
  return p;
}

TEST(Spiral, RejectsBadParameters) {
  EXPECT_THROW(validate_spiral_params(params(0.5, 0.0, false)), ConfigError);
  EXPECT_THROW(validate_spiral_params(params(2.0, -0.6, false)), ConfigError);
  EXPECT_THROW(validate_spiral_params(params(7 * kPi / 8, 1.3, false)), ConfigError);
  auto p = params(1.7, 0.0, false);
  EXPECT_THROW(validate_spiral_params(p), ConfigError);
  p.c = 0.05;
  EXPECT_NO_THROW(validate_spiral_params(p));
}

TEST(Spiral, TrivialSamples) {
  for (bool tilted : {false, true}) {
    const auto p = params(2 * kPi / 3, 0.5, tilted);
    Bitmap healthy(spiral_sample_radius(p));
    auto ev = spiral_event_pair(healthy, p);
    EXPECT_TRUE(ev.e1);
    EXPECT_TRUE(ev.e2);
    Bitmap full(spiral_sample_radius(p));
    full.fill(true);
    ev = spiral_event_pair(full, p);
    EXPECT_FALSE(ev.e1);
    EXPECT_FALSE(ev.e2);
  }
}

TEST(Spiral, RegionOutsideBoxStaysInfected) {
  // (0,-1) and (-1,-1) lie in H_u ∩ H_{u+theta} here, so the origin is
  // infected at once under both families.
  const auto p = params(2 * kPi / 3, 0.0, false);
  const auto ev = spiral_event_pair(Bitmap(spiral_sample_radius(p)), p);
  EXPECT_FALSE(ev.e1);
  EXPECT_FALSE(ev.e2);
}

TEST(Spiral, EventsAgreeOnRandomSamples) {
  const std::vector<std::pair<double, std::vector<double>>> grid{
      {2 * kPi / 3, {-0.3, 0.0, 0.5, 1.5}},
      {7 * kPi / 8, {-0.9, 0.0, 0.6, 1.1}},
      {9 * kPi / 8, {-1.7, -0.5, 0.0, 0.35}}};
  uint64_t trial = 0;
  for (const auto& [u, thetas] : grid)
    for (double th : thetas)
      for (bool tilted : {false, true})
        for (double q : {0.2, 0.3, 0.4})
          for (int i = 0; i < 10; ++i) {
            const auto p = params(u, th, tilted);
            const Bitmap b = testing::random_bitmap(spiral_sample_radius(p), q, 3, trial++);
            const auto ev = spiral_event_pair(b, p);
            EXPECT_EQ(ev.e1, ev.e2) << "u=" << u << " theta=" << th << " q=" << q
                                    << " tilted=" << tilted << " trial=" << trial - 1;
          }
}

}  // namespace
}  // namespace bpsim
