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

#include "bpsim/onearm.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <limits>
#include <mutex>

#include "bpsim/parallel.hpp"

namespace bpsim {

OneArmConfig default_onearm_config(const UpdateFamily& family, int n) {
  return {std::max(1, family.range()), n};
}

void validate(const OneArmConfig& cfg) {
  if (cfg.C < 1) throw ConfigError("one-arm: C must be a positive integer");
  if (cfg.n <= cfg.C) throw ConfigError("one-arm: n must exceed C");
}

namespace {

// Row-major helpers over B_n.
struct Box {
  int n, w;
  explicit Box(int radius) : n(radius), w(2 * radius + 1) {}
  size_t size() const { return static_cast<size_t>(w) * w; }
  size_t idx(Site s) const { return static_cast<size_t>(s.y + n) * w + static_cast<size_t>(s.x + n); }
  Site site(size_t i) const { return {static_cast<int>(i % w) - n, static_cast<int>(i / w) - n}; }
  bool in(Site s) const { return std::abs(s.x) <= n && std::abs(s.y) <= n; }
};

bool near_ring(Site s, int k, int C) { return std::abs(chebyshev(s) - k) <= C; }

void check_times(const InfectionTimes& times, const OneArmConfig& cfg) {
  validate(cfg);
  if (times.n != cfg.n) throw ConfigError("one-arm: times computed on a different box");
}

}  // namespace

bool detect_E_n(const InfectionTimes& times, const UpdateFamily& family, const OneArmConfig& cfg) {
  check_times(times, cfg);
  const Box b(cfg.n);
  const auto U = family.union_offsets();
  const uint64_t horizon = uint64_t{times.max_finite()} + 2 * static_cast<uint64_t>(b.w);
  auto ok = [&](size_t i, uint64_t step) {
    const uint32_t t = times.t[i];
    return t == kNever || t >= step;
  };

  // Reachable at step i: x_i = x_{i-1} - o.
  std::vector<uint8_t> cur(b.size(), 0), nxt(b.size(), 0);
  cur[b.idx({0, 0})] = 1;
  if (near_ring({0, 0}, cfg.n, cfg.C)) return true;
  for (uint64_t step = 1; step <= horizon; ++step) {
    std::fill(nxt.begin(), nxt.end(), 0);
    bool any = false;
    for (size_t i = 0; i < b.size(); ++i) {
      if (!cur[i]) continue;
      const Site s = b.site(i);
      for (const Site& o : U) {
        const Site t{s.x - o.x, s.y - o.y};
        if (!b.in(t)) continue;
        const size_t j = b.idx(t);
        if (nxt[j] || !ok(j, step)) continue;
        if (near_ring(t, cfg.n, cfg.C)) return true;
        nxt[j] = 1;
        any = true;
      }
    }
    if (!any) return false;
    cur.swap(nxt);
  }
  // Past the horizon every constraint reads tau = infinity.
  std::deque<size_t> q;
  std::vector<uint8_t> seen(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i)
    if (cur[i]) {
      seen[i] = 1;
      q.push_back(i);
    }
  while (!q.empty()) {
    const Site s = b.site(q.front());
    q.pop_front();
    for (const Site& o : U) {
      const Site t{s.x - o.x, s.y - o.y};
      if (!b.in(t)) continue;
      const size_t j = b.idx(t);
      if (seen[j] || times.t[j] != kNever) continue;
      if (near_ring(t, cfg.n, cfg.C)) return true;
      seen[j] = 1;
      q.push_back(j);
    }
  }
  return false;
}

bool detect_E_n_dfs(const InfectionTimes& times, const UpdateFamily& family,
                    const OneArmConfig& cfg) {
  check_times(times, cfg);
  const Box b(cfg.n);
  const auto U = family.union_offsets();
  const size_t depth = times.max_finite() + 1 + b.size();
  std::vector<uint8_t> dead(b.size() * (depth + 1), 0);
  // Explicit stack of (site, step, next offset).
  struct Frame {
    size_t site;
    size_t step;
    size_t next;
  };
  std::vector<Frame> stack{{b.idx({0, 0}), 0, 0}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    const Site s = b.site(f.site);
    if (f.next == 0 && near_ring(s, cfg.n, cfg.C)) return true;
    if (f.next == U.size() || f.step == depth) {
      dead[f.site * (depth + 1) + f.step] = 1;
      stack.pop_back();
      continue;
    }
    const Site o = U[f.next++];
    const Site t{s.x - o.x, s.y - o.y};
    if (!b.in(t)) continue;
    const size_t j = b.idx(t), step = f.step + 1;
    const uint32_t tau = times.t[j];
    if (tau != kNever && tau < step) continue;
    if (dead[j * (depth + 1) + step]) continue;
    stack.push_back({j, step, 0});
  }
  return false;
}

bool sample_in_E_n(const Bitmap& sample, const UpdateFamily& family, const OneArmConfig& cfg) {
  validate(cfg);
  if (sample.radius() != cfg.n) throw ConfigError("one-arm: sample radius differs from n");
  LatticeInstance inst(cfg.n);
  inst.infected = sample;
  return detect_E_n(close(inst, family), family, cfg);
}

SampleOracle::SampleOracle(const Bitmap& sample) : sample_(sample), seen_(sample.radius()) {}

bool SampleOracle::reveal(Site s) {
  if (seen_.get(s)) throw std::logic_error("sample oracle: site revealed twice");
  seen_.set(s, true);
  ++count_;
  return sample_.get(s);
}

namespace {

constexpr int kInf = INT_MAX;

// Pessimistic or optimistic closure over B_n from the revealed data.
class RevealedClosure {
 public:
  RevealedClosure(const UpdateFamily& family, int n)
      : box_(n), geo_(n, family.range(), Region::empty(), std::nullopt), eng_(family),
        bytes_(box_.size()) {}

  // tau with unrevealed sites set to `unrevealed_infected`; kNever mapped to kInf.
  const std::vector<int>& run(const SampleOracle& o, bool unrevealed_infected) {
    const Bitmap& v = o.revealed_set();
    for (size_t i = 0; i < box_.size(); ++i)
      bytes_[i] = v.test(i) ? o.sample().test(i) : unrevealed_infected;
    eng_.run(geo_, bytes_.data());
    tau_.resize(box_.size());
    for (size_t i = 0; i < box_.size(); ++i) {
      const uint32_t t = eng_.time_ext(geo_.ext_of_box(i));
      tau_[i] = t == kNever ? kInf : static_cast<int>(t);
    }
    return tau_;
  }

 private:
  Box box_;
  Geometry geo_;
  ClosureEngine eng_;
  std::vector<uint8_t> bytes_;
  std::vector<int> tau_;
};

// Stage-one candidate computation for scale k.
class CandidateFinder {
 public:
  CandidateFinder(const UpdateFamily& family, const OneArmConfig& cfg, int k)
      : box_(cfg.n), cfg_(cfg), k_(k), U_(family.union_offsets()), closure_(family, cfg.n) {}

  // Unrevealed sites x_0 admitting a certified sequence, in row-major order.
  std::vector<size_t> find(const SampleOracle& o) {
    const auto& tau = closure_.run(o, true);
    // best[y]: largest i such that y can serve as x_i of a certified tail
    // ending within C of the k-ring; -1 if none.
    std::vector<int> best(box_.size(), -1);
    int tmax = 0;
    for (int t : tau)
      if (t != kInf) tmax = std::max(tmax, t);
    std::vector<std::vector<size_t>> bucket(static_cast<size_t>(tmax) + 1);
    std::deque<size_t> inf_q;
    auto push = [&](size_t i, int v) {
      best[i] = v;
      if (v == kInf)
        inf_q.push_back(i);
      else
        bucket[static_cast<size_t>(v)].push_back(i);
    };
    for (size_t i = 0; i < box_.size(); ++i)
      if (near_ring(box_.site(i), k_, cfg_.C)) push(i, tau[i]);
    auto relax = [&](size_t i, int m) {
      const Site y = box_.site(i);
      for (const Site& off : U_) {
        const Site z{y.x + off.x, y.y + off.y};
        if (!box_.in(z)) continue;
        const size_t j = box_.idx(z);
        const int cand = std::min(tau[j], m == kInf ? kInf : m - 1);
        if (cand > best[j]) push(j, cand);
      }
    };
    while (!inf_q.empty()) {
      const size_t i = inf_q.front();
      inf_q.pop_front();
      relax(i, kInf);
    }
    for (int v = tmax; v >= 2; --v) {
      auto& bk = bucket[static_cast<size_t>(v)];
      for (size_t p = 0; p < bk.size(); ++p) {
        const size_t i = bk[p];
        if (best[i] == v) relax(i, v);
      }
    }

    std::vector<size_t> out;
    const Bitmap& seen = o.revealed_set();
    for (size_t i = 0; i < box_.size(); ++i) {
      if (seen.test(i)) continue;
      const Site x = box_.site(i);
      bool c = near_ring(x, k_, cfg_.C);
      for (size_t u = 0; !c && u < U_.size(); ++u) {
        const Site y{x.x - U_[u].x, x.y - U_[u].y};
        c = box_.in(y) && best[box_.idx(y)] >= 1;
      }
      if (c) out.push_back(i);
    }
    return out;
  }

 private:
  Box box_;
  OneArmConfig cfg_;
  int k_;
  std::vector<Site> U_;
  RevealedClosure closure_;
};

void check_stage_one(const SampleOracle& oracle, const OneArmConfig& cfg, int k) {
  validate(cfg);
  if (oracle.sample().radius() != cfg.n) throw ConfigError("one-arm: sample radius differs from n");
  if (k < 0 || k > cfg.n) throw ConfigError("one-arm: scale k outside [0, n]");
}

void reveal_all(SampleOracle& o) {
  const Bitmap& seen = o.revealed_set();
  for (size_t i = 0; i < seen.size(); ++i)
    if (!seen.test(i)) o.reveal(seen.site(i));
}

}  // namespace

void explore_stage_one(SampleOracle& oracle, const UpdateFamily& family, const OneArmConfig& cfg,
                       int k) {
  check_stage_one(oracle, cfg, k);
  CandidateFinder finder(family, cfg, k);
  const Box b(cfg.n);
  for (;;) {
    const auto cand = finder.find(oracle);
    if (cand.empty()) return;
    for (size_t i : cand) oracle.reveal(b.site(i));
  }
}

void explore_stage_one_sequential(SampleOracle& oracle, const UpdateFamily& family,
                                  const OneArmConfig& cfg, int k) {
  check_stage_one(oracle, cfg, k);
  CandidateFinder finder(family, cfg, k);
  const Box b(cfg.n);
  for (;;) {
    const auto cand = finder.find(oracle);
    if (cand.empty()) return;
    oracle.reveal(b.site(cand.front()));
  }
}

ExplorationResult explore_E_n_at(const Bitmap& sample, const UpdateFamily& family,
                                 const OneArmConfig& cfg, int k) {
  SampleOracle oracle(sample);
  explore_stage_one(oracle, family, cfg, k);
  ExplorationResult r;
  r.k = k;
  if (oracle.revealed({0, 0})) {
    reveal_all(oracle);
    r.full_reveal = true;
    r.decision = sample_in_E_n(sample, family, cfg);
  }
  r.revealed = oracle.revealed_set();
  return r;
}

ExplorationResult explore_E_n(const Bitmap& sample, const UpdateFamily& family,
                              const OneArmConfig& cfg, TrialStream& rng) {
  validate(cfg);
  const int k = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n - 1)));
  return explore_E_n_at(sample, family, cfg, k);
}

namespace {

void check_origin_window(const OneArmConfig& cfg, int k0) {
  validate(cfg);
  if (!(cfg.C < k0 && 4 * cfg.C * k0 < cfg.n))
    throw ConfigError("origin event: need C < k0 < n/(4C)");
}

}  // namespace

ExplorationResult explore_origin_event_at(const Bitmap& sample, const UpdateFamily& family,
                                          const OneArmConfig& cfg, int k0, int k) {
  check_origin_window(cfg, k0);
  if (k < 3 * k0 || k >= 4 * k0) throw ConfigError("origin event: k outside [3k0, 4k0)");
  SampleOracle oracle(sample);
  explore_stage_one(oracle, family, cfg, k);
  ExplorationResult r;
  r.k = k;
  RevealedClosure opt(family, cfg.n);
  const Box b(cfg.n);
  if (opt.run(oracle, false)[b.idx({0, 0})] != kInf) {
    r.decision = true;
  } else {
    reveal_all(oracle);
    r.full_reveal = true;
    LatticeInstance inst(cfg.n);
    inst.infected = sample;
    r.decision = !origin_escapes(inst, family);
  }
  r.revealed = oracle.revealed_set();
  return r;
}

ExplorationResult explore_origin_event(const Bitmap& sample, const UpdateFamily& family,
                                       const OneArmConfig& cfg, int k0, TrialStream& rng) {
  check_origin_window(cfg, k0);
  const int k = 3 * k0 + static_cast<int>(rng.below(static_cast<uint64_t>(k0)));
  return explore_origin_event_at(sample, family, cfg, k0, k);
}

Bitmap sample_box(const SiteField& field, uint64_t trial, int n, double q) {
  Bitmap b(n);
  for (size_t i = 0; i < b.size(); ++i) {
    const Site s = b.site(i);
    b.set(i, field.bernoulli(trial, s.x, s.y, q));
  }
  return b;
}

RevealmentStats measure_revealment(const UpdateFamily& family, const OneArmConfig& cfg, double q,
                                   int runs, uint64_t seed, unsigned threads) {
  validate(cfg);
  if (runs < 1) throw ConfigError("revealment: runs must be positive");
  if (!(q >= 0 && q <= 1)) throw ConfigError("revealment: q must lie in [0,1]");
  const Box b(cfg.n);
  RevealmentStats st;
  st.n = cfg.n;
  st.runs = runs;
  st.seed = seed;
  st.counts.assign(b.size(), 0);
  const SiteField field(seed, streams::kSample);
  std::mutex mu;
  parallel_for(static_cast<size_t>(runs), threads, [&](size_t t) {
    const Bitmap sample = sample_box(field, t, cfg.n, q);
    TrialStream rng(seed, streams::kAlgorithm, t);
    const auto r = explore_E_n(sample, family, cfg, rng);
    const bool truth = r.full_reveal ? r.decision : sample_in_E_n(sample, family, cfg);
    std::lock_guard<std::mutex> lock(mu);
    for (size_t i = 0; i < b.size(); ++i) st.counts[i] += r.revealed.test(i);
    if (truth != r.decision) ++st.mismatches;
  });
  const auto it = std::max_element(st.counts.begin(), st.counts.end());
  st.max_revealment = static_cast<double>(*it) / runs;
  st.argmax = b.site(static_cast<size_t>(it - st.counts.begin()));
  return st;
}

double revealment_bound(const std::vector<double>& theta_tilde, int n) {
  if (n < 2) throw ConfigError("revealment bound: n must be at least 2");
  if (theta_tilde.size() < static_cast<size_t>(n))
    throw ConfigError("revealment bound: need theta estimates for k = 0..n-1");
  double s = 0;
  for (int k = 0; k < n; ++k) s += theta_tilde[static_cast<size_t>(k)];
  return 3.0 * s / (n - 1);
}

std::string to_string(NoiseEvent e) { return e == NoiseEvent::kEn ? "E_n" : "origin-escape"; }

NoiseResult noise_correlation(const UpdateFamily& family, NoiseEvent event, double q, double eps,
                              int n, int samples, uint64_t seed, unsigned threads, int C) {
  if (!(eps >= 0 && eps <= 1)) throw ConfigError("noise: epsilon must lie in [0,1]");
  if (!(q >= 0 && q <= 1)) throw ConfigError("noise: q must lie in [0,1]");
  if (samples < 2) throw ConfigError("noise: need at least two samples");
  OneArmConfig cfg{C < 0 ? std::max(1, family.range()) : C, n};
  if (event == NoiseEvent::kEn)
    validate(cfg);
  else if (n < 0)
    throw ConfigError("noise: n must be nonnegative");

  const SiteField base(seed, streams::kSample), mask(seed, streams::kNoiseMask), fresh(seed, streams::kNoiseFresh);
  auto holds = [&](const Bitmap& s) {
    if (event == NoiseEvent::kEn) return sample_in_E_n(s, family, cfg);
    LatticeInstance inst(n);
    inst.infected = s;
    return origin_escapes(inst, family);
  };
  std::vector<uint8_t> f(static_cast<size_t>(samples)), g(static_cast<size_t>(samples));
  parallel_for(static_cast<size_t>(samples), threads, [&](size_t t) {
    const Bitmap x = sample_box(base, t, n, q);
    Bitmap y = x;
    for (size_t i = 0; i < y.size(); ++i) {
      const Site s = y.site(i);
      if (mask.uniform(t, s.x, s.y) < eps) y.set(i, fresh.bernoulli(t, s.x, s.y, q));
    }
    f[t] = holds(x);
    g[t] = holds(y);
  });

  const double N = samples;
  double sf = 0, sg = 0, sfg = 0;
  for (size_t t = 0; t < f.size(); ++t) {
    sf += f[t];
    sg += g[t];
    sfg += f[t] * g[t];
  }
  const double mf = sf / N, mg = sg / N, mfg = sfg / N;
  NoiseResult r;
  r.samples = samples;
  r.seed = seed;
  r.p_hat = mf;
  r.covariance = mfg - mf * mg;
  r.variance = mf - mf * mf;
  r.ratio = r.variance > 0 ? r.covariance / r.variance : std::numeric_limits<double>::quiet_NaN();
  // Influence-function standard errors.
  double vc = 0, vv = 0, vr = 0;
  for (size_t t = 0; t < f.size(); ++t) {
    const double ic = (f[t] * g[t] - mfg) - mg * (f[t] - mf) - mf * (g[t] - mg);
    const double iv = (1 - 2 * mf) * (f[t] - mf);
    vc += ic * ic;
    vv += iv * iv;
    if (r.variance > 0) {
      const double ir = (ic - r.ratio * iv) / r.variance;
      vr += ir * ir;
    }
  }
  r.cov_stderr = std::sqrt(vc / (N - 1) / N);
  r.var_stderr = std::sqrt(vv / (N - 1) / N);
  r.ratio_stderr = r.variance > 0 ? std::sqrt(vr / (N - 1) / N)
                                  : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace bpsim
