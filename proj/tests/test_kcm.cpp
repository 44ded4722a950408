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

#include "bpsim/kcm.hpp"
#include "bpsim/models.hpp"

namespace bpsim {
namespace {

TEST(Kcm, GeneratorInvariants) {
  for (const auto& f : {models::north_east(), models::op(), models::two_neighbour()})
    for (int k : {2, 3})
      for (double q : {0.3, 0.6}) {
        if (f.name == "OP" && k == 2) continue;  // (-1,1) and (1,1) coincide mod 2
        const auto g = build_generator(f, k, q);
        EXPECT_LT(g.row_sum_error(), 1e-12);
        EXPECT_LT(g.detailed_balance_error(), 1e-12);
        double total = 0;
        for (double p : g.pi) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
}

TEST(Kcm, SizeCap) {
  EXPECT_THROW(build_generator(models::north_east(), 5, 0.5), ConfigError);
  EXPECT_THROW(build_generator(models::north_east(), 3, 1.0), ConfigError);
  EXPECT_THROW(build_generator(models::north_east(), 1, 0.5), ConfigError);
}

TEST(Kcm, ZeroEigenvaluesMatchClosedClasses) {
  for (const auto& f : {models::north_east(), models::two_neighbour(), models::dtbp()})
    for (int k : {2, 3})
      for (double q : {0.3, 0.7}) {
        const auto g = build_generator(f, k, q);
        const auto cs = communicating_classes(g);
        EXPECT_EQ(zero_eigenvalue_count(g), cs.num_closed()) << f.name << k << q;
      }
}

TEST(Kcm, SingleFreeSpinHasUnitGap) {
  const auto g = build_generator(1, 0.3, [](uint32_t, int) { return true; });
  const auto r = spectral_gap(g);
  EXPECT_NEAR(r.gap, 1.0, 1e-12);
  EXPECT_EQ(r.class_states, 2U);
}

TEST(Kcm, GapPositiveAndNonnegativeSpectrum) {
  for (double q : {0.3, 0.6, 0.8}) {
    const auto g = build_generator(models::north_east(), 3, q);
    const auto r = spectral_gap(g);
    EXPECT_GT(r.gap, 1e-10);
    std::vector<uint32_t> all(g.dim());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<uint32_t>(i);
    for (double v : symmetrised_spectrum(g, all)) EXPECT_GT(v, -1e-10);
  }
}

TEST(Kcm, SimulationTrivialCases) {
  const auto f = models::north_east();
  const auto geo = KcmGeometry::torus(3);
  TrialStream rng(1, streams::kKcm, 0);
  KcmSimOptions opt;
  opt.horizon = 50;
  const auto a = simulate(f, geo, 0.5, std::vector<uint8_t>(9, 1), opt, rng);
  ASSERT_TRUE(a.tau0);
  EXPECT_EQ(*a.tau0, 0.0);
  const auto b = simulate(f, geo, 0.5, std::vector<uint8_t>(9, 0), opt, rng);
  EXPECT_FALSE(b.tau0);
  EXPECT_EQ(b.flips, 0U);
  EXPECT_GT(b.rings, 0U);
  EXPECT_EQ(b.final_state, std::vector<uint8_t>(9, 0));
}

TEST(Kcm, BoxBoundaryDrivesDynamics) {
  // Box with the whole outside infected: NE constraint holds at the corner.
  const auto f = models::north_east();
  const auto geo = KcmGeometry::box(1, Region::half_plane(Direction::exact(0, 1), 100.0));
  TrialStream rng(2, streams::kKcm, 0);
  KcmSimOptions opt;
  opt.horizon = 1e4;
  const auto r = simulate(f, geo, 0.7, std::vector<uint8_t>(9, 0), opt, rng);
  EXPECT_TRUE(r.tau0);
  const auto closed = KcmGeometry::box(1);
  const auto s = simulate(f, closed, 0.7, std::vector<uint8_t>(9, 0), opt, rng);
  EXPECT_FALSE(s.tau0);
}

TEST(Kcm, HittingTimeMatchesSimulation) {
  const auto f = models::north_east();
  const auto g = build_generator(f, 2, 0.6);
  const double exact = exact_mean_hitting_time(g, 0, {true});
  const auto mc = mc_mean_hitting_time(f, 2, 0.6, {true}, 4000, 3, 1e6, 1);
  EXPECT_EQ(mc.censored, 0);
  EXPECT_LE(std::abs(mc.mean - exact), 3 * mc.stderr_);
}

TEST(Kcm, OriginOccupationMatchesClassMarginal) {
  // Long run inside the class of the all-infected state: the time fraction
  // with the origin infected approaches pi_q(origin infected | class).
  const auto f = models::north_east();
  const auto g = build_generator(f, 3, 0.6);
  const auto cs = communicating_classes(g);
  const int c = cs.class_of[g.all_infected()];
  double num = 0, den = 0;
  for (size_t s = 0; s < g.dim(); ++s) {
    if (cs.class_of[s] != c) continue;
    den += g.pi[s];
    if (s & 1U) num += g.pi[s];
  }
  const double target = num / den;
  EXPECT_GT(target, 0.6);
  const auto geo = KcmGeometry::torus(3);
  KcmSimOptions opt;
  opt.horizon = 1e5;
  opt.stop_at_tau0 = false;
  double sum = 0, sum2 = 0;
  const int runs = 8;
  for (int i = 0; i < runs; ++i) {
    TrialStream rng(4, streams::kKcm, static_cast<uint64_t>(i));
    const auto tr = simulate(f, geo, 0.6, std::vector<uint8_t>(9, 1), opt, rng);
    const double frac = tr.origin_infected_time / tr.end_time;
    sum += frac;
    sum2 += frac * frac;
  }
  const double mean = sum / runs;
  const double se = std::sqrt((sum2 / runs - mean * mean) / (runs - 1));
  EXPECT_LE(std::abs(mean - target), 3 * se + 1e-3);
}

TEST(Kcm, AutocorrelationMatchesGapScale) {
  // 2x2 NE torus: decay rate of the origin autocorrelation vs the gap.
  const auto f = models::north_east();
  const double q = 0.6;
  const auto gap = spectral_gap(build_generator(f, 2, q)).gap;
  const auto geo = KcmGeometry::torus(2);
  KcmSimOptions opt;
  opt.horizon = 2e5;
  opt.stop_at_tau0 = false;
  opt.sample_dt = 0.05;
  std::vector<uint8_t> xs;
  TrialStream rng(5, streams::kKcm, 0);
  simulate(f, geo, q, std::vector<uint8_t>(4, 1), opt, rng, &xs);
  double m = 0;
  for (uint8_t v : xs) m += v;
  m /= static_cast<double>(xs.size());
  auto acf = [&](size_t lag) {
    double c = 0, c0 = 0;
    for (size_t i = 0; i + lag < xs.size(); ++i) c += (xs[i] - m) * (xs[i + lag] - m);
    for (uint8_t v : xs) c0 += (v - m) * (v - m);
    return c / c0;
  };
  // Fit the rate between lags 0.5 and 2.0 time units.
  const double t1 = 0.5, t2 = 2.0;
  const double rate = std::log(acf(static_cast<size_t>(t1 / opt.sample_dt)) /
                               acf(static_cast<size_t>(t2 / opt.sample_dt))) /
                      (t2 - t1);
  EXPECT_GE(rate / gap, 0.5);
  EXPECT_LE(rate / gap, 2.0);
}

TEST(Kcm, TimescaleRecord) {
  const auto r = timescale_report(models::north_east(), 3, 0.8, 1000, 3, false, 1);
  EXPECT_GT(r.gap.gap, 0);
  EXPECT_TRUE(r.upper_holds);
  EXPECT_LE(std::abs(r.kcm.mean - r.kcm_exact), 3 * r.kcm.stderr_ + 1e-12);
  EXPECT_GE(r.bp_mean, 0);
  EXPECT_FALSE(r.note.empty());
}

}  // namespace
}  // namespace bpsim
