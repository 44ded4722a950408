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
#include <optional>
#include <string>
#include <vector>

#include "bpsim/lattice.hpp"

namespace bpsim {

/// Bernoulli Monte Carlo estimate. Site states for trial t are drawn from
/// SiteField(seed, sample stream) at (t, x, y), so estimates that share a seed
/// are coupled across q, n and boundary.
struct TrialEstimate {
  double value = 0;
  double stderr_ = 0;
  int samples = 0;
  int successes = 0;
  uint64_t seed = 0;
  uint64_t config_digest = 0;
};

TrialEstimate bernoulli_estimate(int successes, int samples, uint64_t seed, uint64_t digest);

/// P(origin escapes) on B_n with `boundary` forced infected.
TrialEstimate estimate_theta(const UpdateFamily& family, double q, int n, const Region& boundary,
                             int samples, uint64_t seed, unsigned threads = 0);
/// P(E_n); C defaults to range(family).
TrialEstimate estimate_tilde_theta(const UpdateFamily& family, double q, int n, int samples,
                                   uint64_t seed, unsigned threads = 0, int C = -1);
/// P(tau_0 > threshold) on B_radius; radius must be at least range * threshold.
TrialEstimate estimate_tau_tail(const UpdateFamily& family, double q, int threshold, int radius,
                                int samples, uint64_t seed, unsigned threads = 0);

enum class Summability { kSummable, kNotSummable, kInconclusive };
std::string to_string(Summability s);

struct DecayDiagnostic {
  double q = 0;
  std::vector<int> radii;
  std::vector<TrialEstimate> estimates;
  std::vector<double> exponents;  // log2(theta_r / theta_2r); +inf when theta_2r = 0
  Summability flag = Summability::kInconclusive;
};

inline constexpr double kSummabilityMargin = 0.25;

/// Local exponents and the summability heuristic (threshold 2 +- margin at the
/// two largest scales).
void fit_decay(DecayDiagnostic& d, double margin = kSummabilityMargin);

struct CriticalDensitySweep {
  std::vector<DecayDiagnostic> diagnostics;
  std::optional<double> q_lo;  // largest q judged not summable
  std::optional<double> q_hi;  // smallest q judged summable
  bool anomaly = false;        // q_lo >= q_hi
  std::string heuristic;
};

/// Radii must be dyadic (each twice the previous).
CriticalDensitySweep critical_density_sweep(const UpdateFamily& family, const Direction& u,
                                            double theta, const std::vector<double>& q_grid,
                                            const std::vector<int>& radii, int samples,
                                            uint64_t seed, unsigned threads = 0);

inline constexpr int kDropletC = 4;

/// P([D_L ∪ A ∩ B_{C Lambda}] contains C_{u,v} ∩ B_{Lambda/2}) with
/// u = directions.front(), v = directions.back().
TrialEstimate droplet_growth_probability(const UpdateFamily& family,
                                         const std::vector<Direction>& directions, int L,
                                         int Lambda, double q, int samples, uint64_t seed,
                                         unsigned threads = 0, int C = kDropletC);

/// Right-hand side of the revealment bound, (3/(n-1)) * sum_{k<n} theta_k,
/// from E_k estimates on the dyadic grid k = 2, 4, 8, ... < n. theta_k = 1 for
/// k <= C; grid estimates are made nonincreasing by a running minimum and each
/// k takes the value at the largest grid point not above it.
struct RevealmentBoundEstimate {
  int n = 0;
  int C = 0;
  std::vector<int> grid;
  std::vector<TrialEstimate> estimates;
  std::vector<double> theta;  // per k = 0..n-1
  double bound = 0;
  double stderr_ = 0;
};

RevealmentBoundEstimate estimate_revealment_bound(const UpdateFamily& family, int n, int C,
                                                  double q, int samples, uint64_t seed,
                                                  unsigned threads = 0);

/// Stable 64-bit digest of a parameter description.
uint64_t config_digest(const std::string& description);

}  // namespace bpsim
