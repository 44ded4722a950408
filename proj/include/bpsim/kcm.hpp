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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bpsim/lattice.hpp"
#include "bpsim/rng.hpp"

namespace bpsim {

/// Site set of a KCM: a k x k torus, or B_n whose outside is infected
/// exactly on the boundary region. Site i is (i % side - off, i / side - off).
class KcmGeometry {
 public:
  static KcmGeometry torus(int k);
  static KcmGeometry box(int n, Region boundary = Region::empty());

  bool is_torus() const { return torus_; }
  int side() const { return side_; }
  int sites() const { return side_ * side_; }
  int origin() const;
  Site site(int i) const;
  std::string describe() const;

  /// Per site and rule, the neighbour indices; kOutsideInfected or
  /// kOutsideHealthy for box sites beyond B_n.
  static constexpr int kOutsideInfected = -1;
  static constexpr int kOutsideHealthy = -2;
  std::vector<std::vector<std::vector<int>>> neighbours(const UpdateFamily& family) const;

 private:
  bool torus_ = true;
  int side_ = 1;
  Region boundary_ = Region::empty();
};

/// Constraint evaluator: some rule translated to x is fully infected now.
class KcmConstraint {
 public:
  KcmConstraint(const UpdateFamily& family, const KcmGeometry& geo);
  bool satisfied(const std::vector<uint8_t>& state, int x) const;
  bool satisfied(uint32_t state, int x) const;
  int sites() const { return static_cast<int>(nb_.size()); }

 private:
  std::vector<std::vector<std::vector<int>>> nb_;
};

struct KcmTrajectory {
  std::optional<double> tau0;  // empty when censored
  double horizon = 0;
  double end_time = 0;
  uint64_t rings = 0;
  uint64_t flips = 0;
  double origin_infected_time = 0;  // time the origin spent infected in [0, end_time]
  std::vector<uint8_t> final_state;
};

struct KcmSimOptions {
  double horizon = 1e3;
  bool stop_at_tau0 = true;
  /// Samples the origin indicator every `sample_dt` time units when > 0.
  double sample_dt = 0;
};

/// Event-driven simulation with rate-1 clocks per site.
KcmTrajectory simulate(const UpdateFamily& family, const KcmGeometry& geo, double q,
                       std::vector<uint8_t> initial, const KcmSimOptions& opt, TrialStream& rng,
                       std::vector<uint8_t>* origin_samples = nullptr);
/// Product Bernoulli(q) configuration.
std::vector<uint8_t> sample_equilibrium(int sites, double q, TrialStream& rng);

inline constexpr int kMaxGeneratorSites = 16;
inline constexpr size_t kMaxDenseStates = 4096;

/// Sparse rate matrix on {0,1}^sites, bit i of a state set iff site i is infected.
struct GeneratorMatrix {
  int sites = 0;
  double q = 0;
  std::vector<std::vector<std::pair<uint32_t, double>>> rates;  // off-diagonal, per row
  std::vector<double> diag;
  std::vector<double> pi;

  size_t dim() const { return diag.size(); }
  double row_sum_error() const;
  double detailed_balance_error() const;
  uint32_t all_infected() const { return (sites == 32 ? 0 : (uint32_t{1} << sites)) - 1; }
};

GeneratorMatrix build_generator(const UpdateFamily& family, int k, double q);
/// Generator for an arbitrary constraint on `sites` spins.
GeneratorMatrix build_generator(int sites, double q,
                                const std::function<bool(uint32_t, int)>& constraint);

struct ClassStructure {
  std::vector<int> class_of;  // per state
  std::vector<size_t> class_size;
  std::vector<bool> closed;
  size_t num_closed() const;
};

/// Strongly connected components of the transition graph.
ClassStructure communicating_classes(const GeneratorMatrix& g);

/// Eigenvalues of -S for the symmetrised generator S restricted to `states`,
/// ascending. Dense; at most kMaxDenseStates states.
std::vector<double> symmetrised_spectrum(const GeneratorMatrix& g,
                                         const std::vector<uint32_t>& states);
/// Number of eigenvalues of the full generator with |lambda| < tol.
size_t zero_eigenvalue_count(const GeneratorMatrix& g, double tol = 1e-9);

struct GapResult {
  double gap = 0;
  size_t class_states = 0;
  double relaxation_time = 0;  // 1 / gap
};

/// Smallest nonzero eigenvalue of -Q on the closed class of the all-infected state.
GapResult spectral_gap(const GeneratorMatrix& g, double tol = 1e-10);

/// Expected time until the origin is infected, per state (0 when already
/// infected, infinity when unreachable).
std::vector<double> hitting_times(const GeneratorMatrix& g, int origin);

struct InitialLaw {
  bool origin_healthy = false;  // condition on the origin being healthy
};

/// E[tau_0] under pi_q restricted to the all-infected class (and optionally
/// to an initially healthy origin).
double exact_mean_hitting_time(const GeneratorMatrix& g, int origin, const InitialLaw& law);

struct HittingEstimate {
  double mean = 0;
  double stderr_ = 0;
  int samples = 0;
  int censored = 0;
  uint64_t seed = 0;
};

/// MC counterpart of exact_mean_hitting_time on the k x k torus.
HittingEstimate mc_mean_hitting_time(const UpdateFamily& family, int k, double q,
                                     const InitialLaw& law, int samples, uint64_t seed,
                                     double horizon = 1e6, unsigned threads = 0);

struct TimescaleReport {
  std::string family;
  int k = 0;
  double q = 0;
  int samples = 0;
  uint64_t seed = 0;
  bool origin_healthy = false;
  HittingEstimate kcm;        // E_KCM[tau_0]
  double kcm_exact = 0;       // same quantity from the generator
  GapResult gap;              // T_rel = 1 / gap
  double bp_mean = 0;         // E_BP[tau_0] over bootstrap rounds, finite runs only
  double bp_stderr = 0;
  int bp_never = 0;           // runs where the origin is never infected
  double upper_ratio = 0;     // E_KCM / (T_rel / q)
  bool upper_holds = false;   // E_KCM <= T_rel / q + 3 stderr
  double lower_ratio = 0;     // E_BP / E_KCM, reported only
  std::string note;
};

TimescaleReport timescale_report(const UpdateFamily& family, int k, double q, int samples,
                             uint64_t seed, bool origin_healthy = false, unsigned threads = 0);

}  // namespace bpsim
