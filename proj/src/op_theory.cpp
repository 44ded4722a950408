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

#include "bpsim/op_theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "bpsim/models.hpp"
#include "bpsim/parallel.hpp"
#include "bpsim/rng.hpp"

namespace bpsim {

namespace {

constexpr double kPi = std::numbers::pi;

int64_t floor_div(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Wraps to [-pi, pi).
double wrap(double t) {
  t = std::fmod(t + kPi, 2 * kPi);
  if (t < 0) t += 2 * kPi;
  return t - kPi;
}

}  // namespace

// ------------------------------------------------------------- right edge

EdgeField::EdgeField(uint64_t seed, double p) {
  if (!(p >= 0 && p <= 1)) throw ConfigError("edge speed: p must lie in [0,1]");
  const uint64_t k = mix64(seed ^ streams::kEdge);
  key_ = {static_cast<uint32_t>(k), static_cast<uint32_t>(k >> 32)};
  threshold_ = static_cast<uint64_t>(std::llround(p * 4294967296.0));
}

unsigned EdgeField::open4(uint64_t trial, int64_t block, int64_t t) const {
  const auto r = Philox4x32::block(
      {static_cast<uint32_t>(trial), static_cast<uint32_t>(block), static_cast<uint32_t>(t),
       static_cast<uint32_t>(trial >> 32) ^ static_cast<uint32_t>(static_cast<uint64_t>(block) >> 32)},
      key_);
  unsigned bits = 0;
  for (int i = 0; i < 4; ++i)
    if (r[i] < threshold_) bits |= 1U << i;
  return bits;
}

bool EdgeField::open(uint64_t trial, int64_t x, int64_t t) const {
  const int64_t b = floor_div(x, 4);
  return (open4(trial, b, t) >> (x - 4 * b)) & 1U;
}

namespace {

struct EdgeWindow {
  int64_t xmin;
  int64_t cols;
};

EdgeWindow edge_window(int n, int width) {
  if (n < 1) throw ConfigError("edge speed: n must be positive");
  if (width < n) throw ConfigError("edge speed: width must be at least n");
  const int64_t xmin = floor_div(-static_cast<int64_t>(width) - n, 4) * 4;
  return {xmin, n - xmin + 1};
}

EdgeRun finish(int64_t best, bool any, int n) {
  EdgeRun r;
  r.died = !any;
  r.r_n = any ? best : 0;
  r.slope = any ? static_cast<double>(best) / n : 0.0;
  return r;
}

}  // namespace

EdgeRun right_edge_run(const EdgeField& field, uint64_t trial, int n, int width) {
  const EdgeWindow w = edge_window(n, width);
  const size_t words = static_cast<size_t>((w.cols + 63) / 64);
  std::vector<uint64_t> cur(words, 0), nxt(words, 0);
  for (int64_t x = w.xmin; x <= 0; ++x)
    if ((x & 1) == 0) {
      const int64_t c = x - w.xmin;
      cur[c >> 6] |= uint64_t{1} << (c & 63);
    }
  int64_t right = 0;  // rightmost reachable column so far
  for (int t = 1; t <= n; ++t) {
    const int64_t hi_col = std::min<int64_t>(right + 1, n) - w.xmin;
    const size_t hi_word = static_cast<size_t>(hi_col >> 6);
    uint64_t carry_lo = 0;
    bool any = false;
    for (size_t k = 0; k <= hi_word; ++k) {
      const uint64_t up = k + 1 < words ? cur[k + 1] : 0;
      uint64_t cand = (cur[k] << 1) | carry_lo | (cur[k] >> 1) | (up << 63);
      carry_lo = cur[k] >> 63;
      if (k == hi_word && (hi_col & 63) != 63) cand &= (uint64_t{1} << ((hi_col & 63) + 1)) - 1;
      uint64_t mask = 0;
      if (cand != 0) {
        const int64_t base = w.xmin + static_cast<int64_t>(k) * 64;
        for (int b = 0; b < 64; b += 4)
          if ((cand >> b) & 0xF)
            mask |= static_cast<uint64_t>(field.open4(trial, (base + b) / 4, t)) << b;
      }
      nxt[k] = cand & mask;
      any |= nxt[k] != 0;
    }
    for (size_t k = hi_word + 1; k < words; ++k) nxt[k] = 0;
    cur.swap(nxt);
    if (!any) return finish(0, false, n);
    for (size_t k = hi_word + 1; k-- > 0;)
      if (cur[k]) {
        right = w.xmin + static_cast<int64_t>(k) * 64 + 63 - std::countl_zero(cur[k]);
        break;
      }
  }
  if (right < -static_cast<int64_t>(width)) return finish(0, false, n);
  return finish(right, true, n);
}

EdgeRun right_edge_run_grid(const EdgeField& field, uint64_t trial, int n, int width) {
  const EdgeWindow w = edge_window(n, width);
  std::vector<std::vector<uint8_t>> reach(n + 1, std::vector<uint8_t>(w.cols, 0));
  for (int64_t x = w.xmin; x <= 0; ++x)
    if ((x & 1) == 0) reach[0][x - w.xmin] = 1;
  for (int t = 1; t <= n; ++t)
    for (int64_t c = 0; c < w.cols; ++c) {
      const bool from = (c > 0 && reach[t - 1][c - 1]) || (c + 1 < w.cols && reach[t - 1][c + 1]);
      reach[t][c] = from && field.open(trial, w.xmin + c, t);
    }
  for (int64_t c = w.cols - 1; c >= 0; --c)
    if (reach[n][c]) {
      const int64_t x = w.xmin + c;
      if (x < -static_cast<int64_t>(width)) break;
      return finish(x, true, n);
    }
  return finish(0, false, n);
}

EdgeSpeedEstimate estimate_edge_speed(double p, int n, int trials, uint64_t seed,
                                      unsigned threads, int width) {
  if (trials < 1) throw ConfigError("edge speed: trials must be positive");
  if (width < 0) width = n;
  const EdgeField field(seed, p);
  std::vector<EdgeRun> runs(trials);
  parallel_for(trials, threads, [&](size_t i) { runs[i] = right_edge_run(field, i, n, width); });
  EdgeSpeedEstimate e;
  e.p = p;
  e.n = n;
  e.trials = trials;
  e.seed = seed;
  e.bound = alpha_bound(p);
  double s = 0, s2 = 0;
  int k = 0;
  for (const EdgeRun& r : runs) {
    if (r.died) {
      ++e.died;
      continue;
    }
    s += r.slope;
    s2 += r.slope * r.slope;
    ++k;
  }
  if (k > 0) {
    e.mean_slope = s / k;
    const double var = k > 1 ? std::max(0.0, (s2 - s * s / k) / (k - 1)) : 0.0;
    e.stderr_ = std::sqrt(var / k);
  }
  return e;
}

// --------------------------------------------------------- closed forms

double alpha_bound(double p) {
  if (!(p >= 0 && p <= 1)) throw ConfigError("alpha_bound: p must lie in [0,1]");
  const double num = p * p * p + p - 1;
  const double den = p * p * p - 2 * p * p + 3 * p - 1;
  if (den == 0) throw ConfigError("alpha_bound: denominator vanishes");
  return num / den;
}

double gws_root(double a) {
  if (!(a >= 0 && a < 1)) throw ConfigError("gws_root: slope must lie in [0,1)");
  auto f = [a](double p) {
    return (1 - a) * (p * p * p - p * p + 2 * p - 1) - (1 + a) * (p - p * p);
  };
  double lo = 0, hi = 1;
  if (!(f(lo) < 0 && f(hi) > 0)) throw ConfigError("gws_root: no sign change on (0,1)");
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ------------------------------------------------------- density profiles

void AlphaTable::make_monotone() {
  std::vector<size_t> idx(p.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return p[a] < p[b]; });
  std::vector<double> np, na;
  double run = -1e300;
  for (size_t i : idx) {
    run = std::max(run, alpha[i]);
    np.push_back(p[i]);
    na.push_back(run);
  }
  p = std::move(np);
  alpha = std::move(na);
}

double AlphaTable::inverse(double a) const {
  if (p.empty() || p.size() != alpha.size()) throw ConfigError("alpha table is empty");
  if (a <= alpha.front()) return p.front();
  for (size_t i = 1; i < p.size(); ++i)
    if (alpha[i] >= a) {
      const double da = alpha[i] - alpha[i - 1];
      if (da <= 0) return p[i];
      return p[i - 1] + (a - alpha[i - 1]) / da * (p[i] - p[i - 1]);
    }
  return p.back();
}

double PsiEvaluator::alpha_inverse(double a) const {
  if (mode == Mode::kTable) return table.inverse(a);
  if (a >= 1) return 1.0;
  return gws_root(std::max(0.0, a));
}

double PsiEvaluator::qc() const {
  if (qc_override) return *qc_override;
  return 1 - alpha_inverse(0.0);
}

std::string PsiEvaluator::describe() const {
  std::ostringstream os;
  os << (mode == Mode::kGws ? "gws-lower-bound" : "mc-alpha-table");
  if (qc_override) os << ",qc=" << *qc_override << "(supplied)";
  return os.str();
}

std::string canonical_op_kind(double u) {
  u = wrap(u);
  constexpr double eps = 1e-12;
  if (u >= -3 * kPi / 4 - eps && u <= -kPi / 4 + eps) return "zero";
  if (u >= -eps || u <= -kPi + eps) return "qc";
  return "psi";
}

double canonical_op_density(double u, const PsiEvaluator& eval) {
  const std::string k = canonical_op_kind(u);
  if (k == "zero") return 0.0;
  if (k == "qc") return eval.qc();
  const double a = std::min(1.0, std::fabs(std::tan(wrap(u))));
  return 1 - eval.alpha_inverse(a);
}

double transform_angle(const Mat2d& m, double u) {
  const double tx = std::sin(u), ty = -std::cos(u);  // u - pi/2
  const double wx = m[0] * tx + m[1] * ty, wy = m[2] * tx + m[3] * ty;
  return wrap(std::atan2(wy, wx) + kPi / 2);
}

Mat2d op_transform_for(const Rule& rule) {
  if (rule.offsets.size() != 2) throw ConfigError("OP profile needs a two-offset rule");
  const Site a = rule.offsets[0], b = rule.offsets[1];
  const double dt = static_cast<double>(a.x) * b.y - static_cast<double>(a.y) * b.x;
  if (dt == 0) throw ConfigError("OP profile: the two offsets are proportional");
  // C has columns c1, c2 with det C = -2 for ((-1,1),(1,1)) and +2 swapped.
  const double c1x = dt < 0 ? -1 : 1, c1y = 1, c2x = dt < 0 ? 1 : -1, c2y = 1;
  // M = C T^{-1}, T = [a b].
  const double i00 = b.y / dt, i01 = -b.x / dt, i10 = -a.y / dt, i11 = a.x / dt;
  return {c1x * i00 + c2x * i10, c1x * i01 + c2x * i11, c1y * i00 + c2y * i10,
          c1y * i01 + c2y * i11};
}

namespace {

double source_value(const ProfileSource& s, double u, const PsiEvaluator& eval) {
  if (s.constant) return s.value;
  const double v = s.antipodal ? u + kPi : u;
  return canonical_op_density(transform_angle(s.m, v), eval);
}

std::string source_kind(const ProfileSource& s, double u) {
  if (s.constant) return "const";
  const double v = s.antipodal ? u + kPi : u;
  return canonical_op_kind(transform_angle(s.m, v));
}

bool same_source(const ProfileSource& a, const ProfileSource& b) {
  if (a.constant != b.constant) return false;
  if (a.constant) return a.value == b.value;
  return a.m == b.m && a.antipodal == b.antipodal;
}

std::vector<double> source_breakpoints(const ProfileSource& s) {
  if (s.constant) return {};
  const Mat2d adj{s.m[3], -s.m[1], -s.m[2], s.m[0]};
  std::vector<double> out;
  for (double b : {-3 * kPi / 4, -kPi / 4, 0.0, kPi}) {
    const double u = transform_angle(adj, b);
    out.push_back(wrap(s.antipodal ? u + kPi : u));
  }
  return out;
}

std::vector<double> normalize_breaks(std::vector<double> b) {
  for (double& x : b) x = wrap(x);
  std::sort(b.begin(), b.end());
  std::vector<double> out;
  for (double x : b)
    if (out.empty() || x - out.back() > 1e-12) out.push_back(x);
  if (out.size() > 1 && out.front() + 2 * kPi - out.back() <= 1e-12) out.pop_back();
  return out;
}

using Chooser = std::function<std::vector<ProfileSource>(double mid)>;

// Splits each arc between breakpoints where the argmin among the candidate
// sources changes; crossing points are located by bisection.
std::vector<ProfilePiece> build_pieces(std::vector<double> breaks, const Chooser& candidates,
                                       const PsiEvaluator& eval) {
  breaks = normalize_breaks(std::move(breaks));
  std::vector<std::pair<double, double>> arcs;
  if (breaks.empty()) {
    arcs.push_back({-kPi, kPi});
  } else {
    for (size_t i = 0; i < breaks.size(); ++i) {
      const double s = breaks[i];
      double e = i + 1 < breaks.size() ? breaks[i + 1] : breaks[0] + 2 * kPi;
      arcs.push_back({s, e});
    }
  }
  std::vector<ProfilePiece> out;
  for (const auto& [s, e] : arcs) {
    const auto cands = candidates(0.5 * (s + e));
    auto argmin = [&](double u) {
      size_t best = 0;
      double bv = source_value(cands[0], u, eval);
      for (size_t j = 1; j < cands.size(); ++j) {
        const double v = source_value(cands[j], u, eval);
        if (v < bv - 1e-13) {
          bv = v;
          best = j;
        }
      }
      return best;
    };
    constexpr int kSamples = 64;
    const double h = (e - s) / kSamples;
    double piece_start = s;
    size_t cur = argmin(s + 0.5 * h);
    for (int k = 1; k < kSamples; ++k) {
      const double mid = s + (k + 0.5) * h;
      const size_t nxt = argmin(mid);
      if (nxt == cur) continue;
      double lo = mid - h, hi = mid;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double m = 0.5 * (lo + hi);
        (argmin(m) == cur ? lo : hi) = m;
      }
      const double cut = 0.5 * (lo + hi);
      out.push_back({piece_start, cut, cands[cur], ""});
      piece_start = cut;
      cur = nxt;
    }
    out.push_back({piece_start, e, cands[cur], ""});
  }
  for (ProfilePiece& p : out) p.kind = source_kind(p.source, 0.5 * (p.start + p.end));
  std::vector<ProfilePiece> merged;
  for (const ProfilePiece& p : out) {
    if (!merged.empty() && same_source(merged.back().source, p.source) &&
        merged.back().kind == p.kind) {
      merged.back().end = p.end;
      continue;
    }
    merged.push_back(p);
  }
  if (merged.size() > 1 && same_source(merged.front().source, merged.back().source) &&
      merged.front().kind == merged.back().kind) {
    const ProfilePiece tail = merged.back();
    merged.pop_back();
    merged.front().end = tail.end + (merged.front().end - merged.front().start);
    merged.front().start = tail.start;
  }
  for (ProfilePiece& p : merged) {
    const double w = p.end - p.start;
    p.start = wrap(p.start);
    p.end = p.start + w;
  }
  std::sort(merged.begin(), merged.end(),
            [](const ProfilePiece& a, const ProfilePiece& b) { return a.start < b.start; });
  return merged;
}

}  // namespace

DensityProfile::DensityProfile(std::vector<double> breakpoints,
                               std::vector<ProfileSource> sources, PsiEvaluator eval)
    : eval_(std::move(eval)) {
  if (sources.empty()) throw ConfigError("profile needs at least one source");
  for (const auto& s : sources)
    for (double b : source_breakpoints(s)) breakpoints.push_back(b);
  pieces_ = build_pieces(std::move(breakpoints), [&](double) { return sources; }, eval_);
}

DensityProfile DensityProfile::from_pieces(std::vector<ProfilePiece> pieces, PsiEvaluator eval) {
  DensityProfile p;
  p.pieces_ = std::move(pieces);
  p.eval_ = std::move(eval);
  return p;
}

DensityProfile DensityProfile::constant(double c, PsiEvaluator eval) {
  ProfileSource s;
  s.constant = true;
  s.value = c;
  return DensityProfile({}, {s}, std::move(eval));
}

double DensityProfile::eval(double u) const {
  u = wrap(u);
  for (const ProfilePiece& p : pieces_) {
    double v = u;
    if (v < p.start) v += 2 * kPi;
    if (v >= p.start && v <= p.end) return source_value(p.source, u, eval_);
  }
  return source_value(pieces_.front().source, u, eval_);
}

std::vector<double> DensityProfile::breakpoints() const {
  std::vector<double> b;
  if (pieces_.size() > 1)
    for (const ProfilePiece& p : pieces_) b.push_back(p.start);
  return b;
}

DensityProfile op_profile(const Rule& rule, const Mat2d& m, bool bidirectional,
                          const PsiEvaluator& eval) {
  if (rule.offsets.size() != 2) throw ConfigError("OP profile needs a two-offset rule");
  const double d = m[0] * m[3] - m[1] * m[2];
  if (!(d > 0)) throw ConfigError("OP profile: transform must have positive determinant");
  std::vector<std::pair<double, double>> img;
  for (const Site& s : rule.offsets) img.push_back({m[0] * s.x + m[1] * s.y, m[2] * s.x + m[3] * s.y});
  std::sort(img.begin(), img.end());
  if (std::fabs(img[0].first + 1) > 1e-9 || std::fabs(img[0].second - 1) > 1e-9 ||
      std::fabs(img[1].first - 1) > 1e-9 || std::fabs(img[1].second - 1) > 1e-9)
    throw ConfigError("OP profile: transform does not map the rule onto {(-1,1),(1,1)}");
  ProfileSource s;
  s.m = m;
  std::vector<ProfileSource> sources{s};
  if (bidirectional) {
    s.antipodal = true;
    sources.push_back(s);
  }
  return DensityProfile({}, sources, eval);
}

DensityProfile op_profile(const Rule& rule, bool bidirectional, const PsiEvaluator& eval) {
  return op_profile(rule, op_transform_for(rule), bidirectional, eval);
}

DensityProfile profile_min(const DensityProfile& a, const DensityProfile& b) {
  if (a.evaluator().describe() != b.evaluator().describe())
    throw ConfigError("profile_min: profiles use different psi evaluation modes");
  std::vector<double> br = a.breakpoints();
  for (double x : b.breakpoints()) br.push_back(x);
  auto piece_at = [](const DensityProfile& p, double u) {
    u = wrap(u);
    for (const ProfilePiece& pc : p.pieces()) {
      double v = u;
      if (v < pc.start) v += 2 * kPi;
      if (v >= pc.start && v <= pc.end) return pc.source;
    }
    return p.pieces().front().source;
  };
  return DensityProfile::from_pieces(
      build_pieces(br,
                   [&](double mid) {
                     return std::vector<ProfileSource>{piece_at(a, mid), piece_at(b, mid)};
                   },
                   a.evaluator()),
      a.evaluator());
}

InfSupResult semicircle_infsup(const DensityProfile& profile) {
  InfSupResult r;
  std::vector<double> br = profile.breakpoints();
  auto d = [&](double u) { return profile.eval(u); };

  std::vector<double> cand;
  for (double b : br) {
    cand.push_back(wrap(b));
    cand.push_back(wrap(b - kPi));
  }
  cand.push_back(-kPi);
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](double x, double y) { return std::fabs(x - y) < 1e-13; }),
             cand.end());
  std::vector<double> all = cand;
  for (size_t i = 0; i < cand.size(); ++i) {
    const double s = cand[i];
    const double e = i + 1 < cand.size() ? cand[i + 1] : cand[0] + 2 * kPi;
    auto diff = [&](double x) { return d(x) - d(x + kPi); };
    double lo = s + 1e-12, hi = e - 1e-12;
    all.push_back(0.5 * (s + e));
    if (hi <= lo) continue;
    const double flo = diff(lo), fhi = diff(hi);
    if ((flo < 0) == (fhi < 0)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double m = 0.5 * (lo + hi);
      ((diff(m) < 0) == (flo < 0) ? lo : hi) = m;
    }
    all.push_back(0.5 * (lo + hi));
  }

  auto g = [&](double s) {
    double m = std::max(d(s), d(s + kPi));
    for (double b : br) {
      double v = wrap(b);
      double ss = wrap(s);
      if (v < ss) v += 2 * kPi;
      if (v <= ss + kPi) m = std::max(m, d(b));
    }
    return m;
  };
  r.value = 1e300;
  for (double s : all) {
    const double v = g(s);
    if (v < r.value - 1e-15) {
      r.value = v;
      r.semicircle_start = wrap(s);
    }
  }

  r.sup = 0;
  for (double b : br) r.sup = std::max(r.sup, d(b));
  for (int k = 0; k < 4096; ++k) r.sup = std::max(r.sup, d(-kPi + k * 2 * kPi / 4096));
  r.value = std::min(r.value, r.sup);

  constexpr double delta = 1e-7;
  for (double b : br) {
    const double v = d(b), vl = d(b - delta), vr = d(b + delta);
    if (v >= vl - 1e-12 && v >= vr - 1e-12 && (v > vl + 1e-12 || v > vr + 1e-12))
      r.local_maxima.push_back(wrap(b));
  }
  return r;
}

DensityProfile dtbp_profile(const PsiEvaluator& eval) {
  const auto f = models::dtbp();
  DensityProfile p = op_profile(f.rules[0], false, eval);
  for (size_t i = 1; i < f.rules.size(); ++i) p = profile_min(p, op_profile(f.rules[i], false, eval));
  return p;
}

}  // namespace bpsim
