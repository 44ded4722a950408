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
#include <string>
#include <vector>

#include "bpsim/closure.hpp"
#include "bpsim/lattice.hpp"
#include "bpsim/rng.hpp"

namespace bpsim {

struct OneArmConfig {
  int C = 1;
  int n = 16;
};

/// Config with C = range(family), the default margin.
OneArmConfig default_onearm_config(const UpdateFamily& family, int n);
void validate(const OneArmConfig& cfg);

/// E_n on infection times computed on B_n with an empty boundary region.
bool detect_E_n(const InfectionTimes& times, const UpdateFamily& family, const OneArmConfig& cfg);
/// Depth-bounded path search over (site, step) states; reference for small boxes.
bool detect_E_n_dfs(const InfectionTimes& times, const UpdateFamily& family,
                    const OneArmConfig& cfg);
/// Closes `sample` on B_n and runs detect_E_n.
bool sample_in_E_n(const Bitmap& sample, const UpdateFamily& family, const OneArmConfig& cfg);

/// Answers site states one query at a time; each site may be asked once.
class SampleOracle {
 public:
  explicit SampleOracle(const Bitmap& sample);
  bool reveal(Site s);
  bool revealed(Site s) const { return seen_.get(s); }
  const Bitmap& revealed_set() const { return seen_; }
  size_t reveals() const { return count_; }
  const Bitmap& sample() const { return sample_; }

 private:
  const Bitmap& sample_;
  Bitmap seen_;
  size_t count_ = 0;
};

struct ExplorationResult {
  bool decision = false;
  int k = 0;
  bool full_reveal = false;  // second stage ran
  Bitmap revealed;
};

/// Stage one for a fixed scale k: reveals every site that becomes a
/// candidate, in rounds. Candidacy only grows as V grows, so the final set
/// does not depend on the order of reveals.
void explore_stage_one(SampleOracle& oracle, const UpdateFamily& family, const OneArmConfig& cfg,
                       int k);
/// Same, one site at a time, always the lexicographically smallest candidate.
void explore_stage_one_sequential(SampleOracle& oracle, const UpdateFamily& family,
                                  const OneArmConfig& cfg, int k);

/// Randomised algorithm determining 1{E_n}; k is drawn uniformly from [1, n).
ExplorationResult explore_E_n(const Bitmap& sample, const UpdateFamily& family,
                              const OneArmConfig& cfg, TrialStream& rng);
ExplorationResult explore_E_n_at(const Bitmap& sample, const UpdateFamily& family,
                                 const OneArmConfig& cfg, int k);

/// Decides {0 in [A ∩ B_n]} with k drawn uniformly from [3 k0, 4 k0). The
/// decision is "infected" without a full reveal only when the revealed
/// sites certify that every site within C of the k-ring is infected by time
/// n / C.
ExplorationResult explore_origin_event(const Bitmap& sample, const UpdateFamily& family,
                                       const OneArmConfig& cfg, int k0, TrialStream& rng);
ExplorationResult explore_origin_event_at(const Bitmap& sample, const UpdateFamily& family,
                                          const OneArmConfig& cfg, int k0, int k);

struct RevealmentStats {
  int n = 0;
  int runs = 0;
  std::vector<uint32_t> counts;  // per site of B_n, row-major
  double max_revealment = 0;
  Site argmax;
  double bound_value = 0;  // (3/(n-1)) * sum_k theta_k, when supplied
  int mismatches = 0;      // decisions differing from the full-sample truth
  uint64_t seed = 0;
};

/// Runs the E_n algorithm on `runs` independent samples at density q.
RevealmentStats measure_revealment(const UpdateFamily& family, const OneArmConfig& cfg, double q,
                                   int runs, uint64_t seed, unsigned threads = 0);
/// (3/(n-1)) * sum_{k=0}^{n-1} theta[k].
double revealment_bound(const std::vector<double>& theta_tilde, int n);

enum class NoiseEvent { kEn, kOriginEscape };
std::string to_string(NoiseEvent e);

struct NoiseResult {
  double covariance = 0;
  double variance = 0;
  double ratio = 0;  // NaN when the variance vanishes
  double cov_stderr = 0;
  double var_stderr = 0;
  double ratio_stderr = 0;
  double p_hat = 0;
  int samples = 0;
  uint64_t seed = 0;
};

/// Cov(1_G(x), 1_G(N_eps(x))) / Var(1_G) over paired samples. Mask and fresh
/// bits come from their own streams, so runs at different eps are coupled.
NoiseResult noise_correlation(const UpdateFamily& family, NoiseEvent event, double q, double eps,
                              int n, int samples, uint64_t seed, unsigned threads = 0,
                              int C = -1);

/// Sample of B_n at density q from the coupled site field.
Bitmap sample_box(const SiteField& field, uint64_t trial, int n, double q);

}  // namespace bpsim
