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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpsim/lattice.hpp"

namespace bpsim {

// ------------------------------------------------------------- right edge

/// One oriented-percolation run from the half-line {(y,0): y <= 0} on the
/// even sublattice, open sites i.i.d. Bernoulli(p).
struct EdgeRun {
  bool died = false;  // no open site reachable at generation n within the window
  int64_t r_n = 0;
  double slope = 0.0;  // r_n / n, meaningless when died
};

/// Open-site field shared by both right-edge implementations.
class EdgeField {
 public:
  EdgeField(uint64_t seed, double p);
  bool open(uint64_t trial, int64_t x, int64_t t) const;
  /// Open bits for columns 4*block .. 4*block+3 at generation t.
  unsigned open4(uint64_t trial, int64_t block, int64_t t) const;

 private:
  std::array<uint32_t, 2> key_;
  uint64_t threshold_;  // open iff 32-bit uniform < threshold_
};

/// Bitset frontier sweep. Requires width >= n; columns left of -width may be
/// affected by truncating the half-line and never count towards r_n.
EdgeRun right_edge_run(const EdgeField& field, uint64_t trial, int n, int width);
/// Full-grid reachability over the same open bits; reference oracle.
EdgeRun right_edge_run_grid(const EdgeField& field, uint64_t trial, int n, int width);

struct EdgeSpeedEstimate {
  double p = 0;
  int n = 0;
  int trials = 0;
  int died = 0;
  double mean_slope = 0;
  double stderr_ = 0;
  double bound = 0;
  uint64_t seed = 0;
};

EdgeSpeedEstimate estimate_edge_speed(double p, int n, int trials, uint64_t seed,
                                      unsigned threads = 0, int width = -1);

// --------------------------------------------------------- closed forms

/// (p^3+p-1)/(p^3-2p^2+3p-1).
double alpha_bound(double p);
/// Root in (0,1) of (p^3-p^2+2p-1)/(p-p^2) = (1+a)/(1-a); a lower bound on
/// the inverse edge speed at a.
double gws_root(double a);

// ------------------------------------------------------- density profiles

/// Real 2x2 matrix, row-major, acting on column vectors.
using Mat2d = std::array<double, 4>;

/// Monotone table of edge speeds alpha(p_i), inverted by linear interpolation.
struct AlphaTable {
  std::vector<double> p;
  std::vector<double> alpha;

  /// Smallest p with alpha(p) >= a (interpolated); clamps to the table range.
  double inverse(double a) const;
  /// Enforces monotonicity by a running maximum over increasing p.
  void make_monotone();
};

/// How psi and the constant q_c are evaluated. The mode is stamped into every
/// output that uses it.
struct PsiEvaluator {
  enum class Mode { kGws, kTable };
  Mode mode = Mode::kGws;
  AlphaTable table;
  /// Overrides 1 - p_c^OP (e.g. a literature value); otherwise derived from
  /// the mode: 1 - gws_root(0) or 1 - table.inverse(0).
  std::optional<double> qc_override;

  double alpha_inverse(double a) const;
  double qc() const;
  std::string describe() const;
};

/// One canonical OP profile pulled back through a rule transform, possibly
/// read at the antipode; or a constant.
struct ProfileSource {
  bool constant = false;
  double value = 0.0;       // constant sources
  Mat2d m{1, 0, 0, 1};      // target rule -> canonical rule
  bool antipodal = false;   // evaluate at -u
};

struct ProfilePiece {
  double start;  // radians in [-pi, pi)
  double end;    // next breakpoint, counter-clockwise
  ProfileSource source;
  std::string kind;  // "zero", "qc", "psi" or "const"
};

/// Piecewise critical-density function on the circle.
class DensityProfile {
 public:
  DensityProfile() = default;
  DensityProfile(std::vector<double> breakpoints, std::vector<ProfileSource> sources,
                 PsiEvaluator eval);

  double eval(double u) const;
  const std::vector<ProfilePiece>& pieces() const { return pieces_; }
  std::vector<double> breakpoints() const;
  const PsiEvaluator& evaluator() const { return eval_; }

  static DensityProfile constant(double c, PsiEvaluator eval = {});
  /// Pieces must already cover the circle in counter-clockwise order.
  static DensityProfile from_pieces(std::vector<ProfilePiece> pieces, PsiEvaluator eval);

 private:
  std::vector<ProfilePiece> pieces_;
  PsiEvaluator eval_;
};

/// Canonical OP value at direction angle u (rule {(-1,1),(1,1)}).
double canonical_op_density(double u, const PsiEvaluator& eval);
/// Canonical kind at u: "zero", "qc" or "psi".
std::string canonical_op_kind(double u);

/// Angle of M(u - pi/2) + pi/2.
double transform_angle(const Mat2d& m, double u);

/// A matrix with det > 0 taking the two offsets of `rule` onto {(-1,1),(1,1)}.
Mat2d op_transform_for(const Rule& rule);

/// Profile of the OP-type rule `rule`; `m` must map it onto the canonical
/// rule with det m > 0. The bidirectional flag takes the pointwise minimum
/// with the antipodal profile.
DensityProfile op_profile(const Rule& rule, const Mat2d& m, bool bidirectional,
                          const PsiEvaluator& eval = {});
DensityProfile op_profile(const Rule& rule, bool bidirectional, const PsiEvaluator& eval = {});

DensityProfile profile_min(const DensityProfile& a, const DensityProfile& b);

struct InfSupResult {
  double value = 0;
  double semicircle_start = 0;  // argmin closed semicircle [s, s + pi]
  std::vector<double> local_maxima;
  double sup = 0;
};

InfSupResult semicircle_infsup(const DensityProfile& profile);

/// min over the three DTBP rule profiles.
DensityProfile dtbp_profile(const PsiEvaluator& eval = {});

}  // namespace bpsim
