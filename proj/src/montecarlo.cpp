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

#include "bpsim/montecarlo.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "bpsim/closure.hpp"
#include "bpsim/onearm.hpp"
#include "bpsim/parallel.hpp"
#include "bpsim/rng.hpp"

namespace bpsim {

uint64_t config_digest(const std::string& description) { return fnv1a(description); }

TrialEstimate bernoulli_estimate(int successes, int samples, uint64_t seed, uint64_t digest) {
  TrialEstimate e;
  e.samples = samples;
  e.successes = successes;
  e.seed = seed;
  e.config_digest = digest;
  if (samples > 0) {
    e.value = static_cast<double>(successes) / samples;
    e.stderr_ = std::sqrt(e.value * (1 - e.value) / samples);
  }
  return e;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string family_key(const UpdateFamily& f) { return family_to_json(f).dump(); }

void check_common(double q, int samples) {
  if (!(q >= 0 && q <= 1)) throw ConfigError("q must lie in [0,1]");
  if (samples < 1) throw ConfigError("samples must be positive");
}

// Runs `event(trial)` for every trial and counts successes.
template <class F>
int count_successes(int samples, unsigned threads, F&& event) {
  std::vector<uint8_t> hit(static_cast<size_t>(samples), 0);
  parallel_for(hit.size(), threads, [&](size_t t) { hit[t] = event(t); });
  int s = 0;
  for (uint8_t h : hit) s += h;
  return s;
}

}  // namespace

TrialEstimate estimate_theta(const UpdateFamily& family, double q, int n, const Region& boundary,
                             int samples, uint64_t seed, unsigned threads) {
  check_common(q, samples);
  if (n < 0) throw ConfigError("theta: n must be nonnegative");
  const SiteField field(seed, streams::kSample);
  const Geometry geo(n, family.range(), boundary, std::nullopt);
  const int s = count_successes(samples, threads, [&](size_t t) {
    ClosureEngine eng(family);
    const Bitmap a = sample_box(field, t, n, q);
    std::vector<uint8_t> bytes(a.size());
    for (size_t i = 0; i < a.size(); ++i) bytes[i] = a.test(i);
    eng.run(geo, bytes.data(), true);
    return eng.time(geo, {0, 0}) == kNever;
  });
  const std::string key = "theta|" + family_key(family) + "|" + num(q) + "|" + std::to_string(n) +
                          "|" + boundary.describe() + "|" + std::to_string(samples);
  return bernoulli_estimate(s, samples, seed, config_digest(key));
}

TrialEstimate estimate_tilde_theta(const UpdateFamily& family, double q, int n, int samples,
                                   uint64_t seed, unsigned threads, int C) {
  check_common(q, samples);
  const OneArmConfig cfg{C < 0 ? std::max(1, family.range()) : C, n};
  validate(cfg);
  const SiteField field(seed, streams::kSample);
  const int s = count_successes(samples, threads, [&](size_t t) {
    return sample_in_E_n(sample_box(field, t, n, q), family, cfg);
  });
  const std::string key = "tilde|" + family_key(family) + "|" + num(q) + "|" +
                          std::to_string(n) + "|" + std::to_string(cfg.C) + "|" +
                          std::to_string(samples);
  return bernoulli_estimate(s, samples, seed, config_digest(key));
}

TrialEstimate estimate_tau_tail(const UpdateFamily& family, double q, int threshold, int radius,
                                int samples, uint64_t seed, unsigned threads) {
  check_common(q, samples);
  if (threshold < 0) throw ConfigError("tau tail: threshold must be nonnegative");
  if (static_cast<int64_t>(radius) < static_cast<int64_t>(family.range()) * threshold)
    throw ConfigError("tau tail: radius must be at least range * threshold");
  const SiteField field(seed, streams::kSample);
  const Geometry geo(radius, family.range(), Region::empty(), std::nullopt);
  const int s = count_successes(samples, threads, [&](size_t t) {
    ClosureEngine eng(family);
    const Bitmap a = sample_box(field, t, radius, q);
    std::vector<uint8_t> bytes(a.size());
    for (size_t i = 0; i < a.size(); ++i) bytes[i] = a.test(i);
    eng.run(geo, bytes.data());
    const uint32_t tau = eng.time(geo, {0, 0});
    return tau == kNever || tau > static_cast<uint32_t>(threshold);
  });
  const std::string key = "tau|" + family_key(family) + "|" + num(q) + "|" +
                          std::to_string(threshold) + "|" + std::to_string(radius) + "|" +
                          std::to_string(samples);
  return bernoulli_estimate(s, samples, seed, config_digest(key));
}

std::string to_string(Summability s) {
  switch (s) {
    case Summability::kSummable:
      return "summable";
    case Summability::kNotSummable:
      return "not-summable";
    case Summability::kInconclusive:
      break;
  }
  return "inconclusive";
}

void fit_decay(DecayDiagnostic& d, double margin) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  d.exponents.clear();
  for (size_t i = 0; i + 1 < d.estimates.size(); ++i) {
    const double a = d.estimates[i].value, b = d.estimates[i + 1].value;
    if (b == 0)
      d.exponents.push_back(inf);
    else if (a == 0)
      d.exponents.push_back(-inf);
    else
      d.exponents.push_back(std::log2(a / b));
  }
  d.flag = Summability::kInconclusive;
  if (d.exponents.size() < 2) return;
  const double e1 = d.exponents[d.exponents.size() - 2], e2 = d.exponents.back();
  if (e1 > 2 + margin && e2 > 2 + margin)
    d.flag = Summability::kSummable;
  else if (e1 < 2 - margin && e2 < 2 - margin)
    d.flag = Summability::kNotSummable;
}

CriticalDensitySweep critical_density_sweep(const UpdateFamily& family, const Direction& u,
                                            double theta, const std::vector<double>& q_grid,
                                            const std::vector<int>& radii, int samples,
                                            uint64_t seed, unsigned threads) {
  if (q_grid.empty()) throw ConfigError("sweep: empty q grid");
  for (size_t i = 1; i < q_grid.size(); ++i)
    if (!(q_grid[i - 1] < q_grid[i])) throw ConfigError("sweep: q grid must be strictly increasing");
  if (radii.size() < 3) throw ConfigError("sweep: need at least three radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (radii[i] != 2 * radii[i - 1]) throw ConfigError("sweep: radii must be dyadic");
  if (radii.front() < 1) throw ConfigError("sweep: radii must be positive");
  const Region boundary = cone(u, theta);

  CriticalDensitySweep out;
  out.heuristic = "local log2 exponent vs 2 +- " + num(kSummabilityMargin) +
                  " at the two largest scales";
  for (double q : q_grid) {
    DecayDiagnostic d;
    d.q = q;
    d.radii = radii;
    for (int r : radii)
      d.estimates.push_back(estimate_theta(family, q, r, boundary, samples, seed, threads));
    fit_decay(d);
    if (d.flag == Summability::kNotSummable) out.q_lo = q;
    if (d.flag == Summability::kSummable && !out.q_hi) out.q_hi = q;
    out.diagnostics.push_back(std::move(d));
  }
  out.anomaly = out.q_lo && out.q_hi && *out.q_lo >= *out.q_hi;
  return out;
}

RevealmentBoundEstimate estimate_revealment_bound(const UpdateFamily& family, int n, int C,
                                                  double q, int samples, uint64_t seed,
                                                  unsigned threads) {
  if (C < 1 || n <= C) throw ConfigError("revealment bound: need 1 <= C < n");
  RevealmentBoundEstimate r;
  r.n = n;
  r.C = C;
  std::vector<double> value;
  std::vector<double> se;
  for (int k = 2; k < n; k *= 2) {
    r.grid.push_back(k);
    if (k <= C) {
      r.estimates.push_back(bernoulli_estimate(samples, samples, seed, 0));
    } else {
      r.estimates.push_back(
          estimate_tilde_theta(family, q, k, samples, mix64(seed + static_cast<uint64_t>(k)),
                               threads, C));
    }
    const double v = r.estimates.back().value;
    value.push_back(value.empty() ? v : std::min(value.back(), v));
    se.push_back(k <= C ? 0.0 : r.estimates.back().stderr_);
  }
  std::vector<double> weight(value.size(), 0.0);
  r.theta.assign(static_cast<size_t>(n), 1.0);
  double sum = 0;
  for (int k = 0; k < n; ++k) {
    if (k > C) {
      size_t j = 0;
      while (j + 1 < r.grid.size() && r.grid[j + 1] <= k) ++j;
      if (!r.grid.empty() && r.grid[j] <= k) {
        r.theta[static_cast<size_t>(k)] = value[j];
        weight[j] += 1;
      }
    }
    sum += r.theta[static_cast<size_t>(k)];
  }
  const double scale = 3.0 / (n - 1);
  r.bound = scale * sum;
  double var = 0;
  for (size_t j = 0; j < se.size(); ++j) var += weight[j] * weight[j] * se[j] * se[j];
  r.stderr_ = scale * std::sqrt(var);
  return r;
}

TrialEstimate droplet_growth_probability(const UpdateFamily& family,
                                         const std::vector<Direction>& directions, int L,
                                         int Lambda, double q, int samples, uint64_t seed,
                                         unsigned threads, int C) {
  check_common(q, samples);
  if (C < 1) throw ConfigError("droplet: C must be positive");
  if (L < 0) throw ConfigError("droplet: L must be nonnegative");
  if (static_cast<int64_t>(Lambda) < static_cast<int64_t>(C) * L || Lambda < 2)
    throw ConfigError("droplet: need Lambda >= C * L and Lambda >= 2");
  validate_droplet_directions(directions);
  const int big = C * Lambda, half = Lambda / 2;
  const Region target = Region::cone_between(directions.front(), directions.back());
  std::vector<Site> targets;
  for (int y = -half; y <= half; ++y)
    for (int x = -half; x <= half; ++x)
      if (target.contains({x, y})) targets.push_back({x, y});
  const auto drop = droplet_sites(directions, L, big);
  const SiteField field(seed, streams::kSample);
  const Geometry geo(big, family.range(), Region::empty(), std::nullopt);

  const int s = count_successes(samples, threads, [&](size_t t) {
    ClosureEngine eng(family);
    const Bitmap a = sample_box(field, t, big, q);
    std::vector<uint8_t> bytes(a.size());
    for (size_t i = 0; i < a.size(); ++i) bytes[i] = a.test(i);
    for (const Site& d : drop) bytes[a.index(d)] = 1;
    eng.run(geo, bytes.data());
    for (const Site& x : targets)
      if (eng.time(geo, x) == kNever) return false;
    return true;
  });
  std::string key = "droplet|" + family_key(family) + "|" + std::to_string(L) + "|" +
                    std::to_string(Lambda) + "|" + num(q) + "|" + std::to_string(C) + "|" +
                    std::to_string(samples);
  for (const Direction& d : directions) key += "|" + num(d.radians());
  return bernoulli_estimate(s, samples, seed, config_digest(key));
}

}  // namespace bpsim
