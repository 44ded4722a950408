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

// bpsim command-line front end.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bpsim/classify.hpp"
#include "bpsim/closure.hpp"
#include "bpsim/kcm.hpp"
#include "bpsim/models.hpp"
#include "bpsim/montecarlo.hpp"
#include "bpsim/onearm.hpp"
#include "bpsim/op_theory.hpp"
#include "bpsim/parallel.hpp"
#include "bpsim/rng.hpp"

namespace {

using nlohmann::json;
using namespace bpsim;

constexpr double kPi = 3.14159265358979323846;

// ------------------------------------------------------------------ parsing

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  return s;
}

double parse_number(const std::string& s, const std::string& what) {
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse " + what + " '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("cannot parse " + what + " '" + s + "'");
  return v;
}

/// Radians from "1.2", "pi", "-pi/2", "3pi/4", "3*pi/4" or "2/3pi" style input.
double parse_angle(const std::string& text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s.push_back(c);
  const size_t p = s.find("pi");
  if (p == std::string::npos) return parse_number(s, "angle");
  std::string coef = s.substr(0, p);
  std::string rest = s.substr(p + 2);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  double c = 1;
  if (coef == "-")
    c = -1;
  else if (coef == "+" || coef.empty())
    c = 1;
  else if (const size_t slash = coef.find('/'); slash != std::string::npos)
    c = parse_number(coef.substr(0, slash), "angle") /
        parse_number(coef.substr(slash + 1), "angle");
  else
    c = parse_number(coef, "angle");
  double d = 1;
  if (!rest.empty()) {
    if (rest[0] != '/') throw ConfigError("cannot parse angle '" + text + "'");
    d = parse_number(rest.substr(1), "angle");
    if (d == 0) throw ConfigError("angle '" + text + "' divides by zero");
  }
  return c * kPi / d;
}

Direction parse_direction(const std::string& s) { return snapped_direction(parse_angle(s)); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

/// none | halfplane:angle[:offset] | cone:angle:theta
Region parse_boundary(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.empty() || parts[0] == "none") {
    if (parts.size() > 1) throw ConfigError("boundary 'none' takes no arguments");
    return Region::empty();
  }
  if (parts[0] == "halfplane" && (parts.size() == 2 || parts.size() == 3))
    return Region::half_plane(parse_direction(parts[1]),
                              parts.size() == 3 ? parse_number(parts[2], "offset") : 0.0);
  if (parts[0] == "cone" && parts.size() == 3)
    return cone(parse_direction(parts[1]), parse_angle(parts[2]));
  throw ConfigError("boundary must be none, halfplane:angle[:offset] or cone:angle:theta, got '" +
                    s + "'");
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> v;
  for (const auto& p : split(s, ',')) v.push_back(parse_number(p, what));
  if (v.empty()) throw ConfigError(what + " list is empty");
  return v;
}

std::vector<int> parse_ints(const std::string& s, const std::string& what) {
  std::vector<int> v;
  for (double d : parse_doubles(s, what)) {
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(what + " must be integers");
    v.push_back(static_cast<int>(d));
  }
  return v;
}

struct FamilySource {
  std::string source;
  UpdateFamily family;
  json to_json() const {
    return {{"source", source}, {"family", family_to_json(family)}};
  }
};

FamilySource resolve_family(const std::string& source) {
  if (source.empty()) throw ConfigError("--family is required");
  if (std::filesystem::is_regular_file(source)) return {source, load_family_file(source)};
  return {source, models::builtin(source)};
}

// ------------------------------------------------------------------- output

struct Report {
  std::string schema;
  json config = json::object();
  json result = json::object();
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string text;  // human-readable form, when the command has one
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }

json jnum(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

struct Common {
  std::string family;
  uint64_t seed = 1;
  unsigned threads = 0;
  std::string output;
  std::string format;
};

void emit(const Report& r, const Common& c, const std::string& default_format) {
  const std::string f = c.format.empty() ? default_format : c.format;
  std::ostringstream os;
  if (f == "json") {
    os << json{{"schema", r.schema}, {"config", r.config}, {"result", r.result}}.dump(2) << "\n";
  } else if (f == "text" && !r.text.empty()) {
    os << r.text;
  } else {
    if (r.header.empty()) throw ConfigError("this command has no CSV form; use --format json");
    os << "# " << r.schema << " " << r.config.dump() << "\n";
    for (size_t i = 0; i < r.header.size(); ++i) os << (i ? "," : "") << r.header[i];
    os << "\n";
    for (const auto& row : r.rows) {
      for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
  }
  if (c.output.empty()) {
    std::cout << os.str();
    return;
  }
  std::ofstream out(c.output);
  if (!out) throw std::runtime_error("cannot write '" + c.output + "'");
  out << os.str();
  if (!out) throw std::runtime_error("write to '" + c.output + "' failed");
}

unsigned threads_of(const Common& c) { return c.threads == 0 ? default_threads() : c.threads; }

json estimate_json(const TrialEstimate& e) {
  return {{"estimate", e.value},   {"stderr", e.stderr_}, {"samples", e.samples},
          {"successes", e.successes}, {"seed", e.seed},   {"config_digest", e.config_digest}};
}

// ------------------------------------------------------------ subcommands

void add_common(CLI::App* s, Common& c, bool family, bool seeded, bool threaded) {
  if (family)
    s->add_option("--family", c.family, "Builtin family name or path to a family JSON file");
  if (seeded) s->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  if (threaded)
    s->add_option("--threads", c.threads, "Worker threads (0: BPSIM_THREADS or all cores)")
        ->capture_default_str();
  s->add_option("--output,-o", c.output, "Write to this file instead of stdout");
  s->add_option("--format", c.format, "Output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
}

struct Args {
  Common c;
  std::string path;
  std::string action;
  std::string name;
  double q = 0.5;
  std::string q_grid;
  int n = 16;
  std::string radii;
  int samples = 1000;
  std::string boundary = "none";
  uint64_t trial = 0;
  int C = -1;
  int threshold = 10;
  int radius = -1;
  std::string u = "pi/2";
  std::string theta = "0";
  std::string directions;
  int L = 40;
  int Lambda = 200;
  double p = 0.8;
  std::string ns = "250,500,1000,2000";
  int trials = 200;
  int width = -1;
  std::string family2;
  std::string us = "-pi,-pi/2,0,pi/2";
  std::string psi = "gws";
  double qc = -1;
  bool bidirectional = false;
  double c_aspect = 0.2;
  bool tilted = false;
  int runs = 200;
  int bound_samples = 0;
  std::string event = "en";
  std::string eps = "0,0.1,0.5,1";
  int k = 3;
  int box = -1;
  double horizon = 1e3;
  bool origin_healthy = false;
};

int resolved_C(const Args& a, const UpdateFamily& f) {
  return a.C < 0 ? default_onearm_config(f, std::max(a.n, 2)).C : a.C;
}

Report run_classify(const Args& a) {
  const std::string source = a.path.empty() ? a.c.family : a.path;
  const FamilySource fs = resolve_family(source);
  const Classification cl = classify(fs.family);
  Report r;
  r.schema = "bpsim.classify/1";
  r.config = {{"subcommand", "classify"}, {"family", fs.to_json()}};
  r.result = {{"class", to_string(cl.cls)},
              {"trivial", cl.trivial_subcritical},
              {"unstable", format_arcset(cl.unstable)},
              {"stable", format_arcset(cl.stable)}};
  r.header = {"family", "class", "trivial", "unstable", "stable"};
  r.rows = {{fs.family.name, to_string(cl.cls), cl.trivial_subcritical ? "true" : "false",
             "\"" + format_arcset(cl.unstable) + "\"", "\"" + format_arcset(cl.stable) + "\""}};
  r.text = to_string(cl.cls) + "\ntrivial: " + (cl.trivial_subcritical ? "yes" : "no") +
           "\nunstable: " + format_arcset(cl.unstable) +
           "\nstable: " + format_arcset(cl.stable) + "\n";
  return r;
}

Report run_close(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  if (a.n < 0) throw ConfigError("--n must be nonnegative");
  if (!(a.q >= 0 && a.q <= 1)) throw ConfigError("--q must lie in [0,1]");
  LatticeInstance inst(a.n);
  inst.infected = sample_box(SiteField(a.c.seed, streams::kSample), a.trial, a.n, a.q);
  inst.boundary = parse_boundary(a.boundary);
  const InfectionTimes t = close(inst, fs.family);
  Report r;
  r.schema = "bpsim.close/1";
  r.config = {{"subcommand", "close"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"trial", a.trial},      {"q", a.q},               {"n", a.n},
              {"boundary", inst.boundary.describe()}};
  json grid = json::array();
  r.header = {"x", "y", "initial", "time"};
  for (int y = -a.n; y <= a.n; ++y) {
    json row = json::array();
    for (int x = -a.n; x <= a.n; ++x) {
      const uint32_t v = t.at({x, y});
      row.push_back(v == kNever ? json(nullptr) : json(v));
      r.rows.push_back({fmt(x), fmt(y), inst.infected.get({x, y}) ? "1" : "0",
                        v == kNever ? "never" : fmt(static_cast<uint64_t>(v))});
    }
    grid.push_back(row);
  }
  r.result = {{"origin_escapes", t.at({0, 0}) == kNever},
              {"max_finite", t.max_finite()},
              {"times", grid}};
  return r;
}

Report run_theta_like(const Args& a, bool tilde) {
  const FamilySource fs = resolve_family(a.c.family);
  const std::vector<double> qs =
      a.q_grid.empty() ? std::vector<double>{a.q} : parse_doubles(a.q_grid, "--q-grid");
  const std::vector<int> ns = a.radii.empty() ? std::vector<int>{a.n} : parse_ints(a.radii, "--radii");
  const Region boundary = parse_boundary(a.boundary);
  Report r;
  r.schema = tilde ? "bpsim.tilde-theta/1" : "bpsim.theta/1";
  r.config = {{"subcommand", tilde ? "tilde-theta" : "theta"},
              {"family", fs.to_json()},
              {"seed", a.c.seed},
              {"q", qs},
              {"n", ns},
              {"samples", a.samples}};
  if (tilde)
    r.config["C"] = resolved_C(a, fs.family);
  else
    r.config["boundary"] = boundary.describe();
  r.header = {"q", "n", "estimate", "stderr", "samples", "seed"};
  json rows = json::array();
  for (double q : qs)
    for (int n : ns) {
      const TrialEstimate e =
          tilde ? estimate_tilde_theta(fs.family, q, n, a.samples, a.c.seed, threads_of(a.c),
                                       resolved_C(a, fs.family))
                : estimate_theta(fs.family, q, n, boundary, a.samples, a.c.seed, threads_of(a.c));
      r.rows.push_back({fmt(q), fmt(n), fmt(e.value), fmt(e.stderr_), fmt(e.samples), fmt(e.seed)});
      json j = estimate_json(e);
      j["q"] = q;
      j["n"] = n;
      rows.push_back(j);
    }
  r.result = {{"estimates", rows}};
  return r;
}

Report run_tau_tail(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  const int radius = a.radius < 0 ? fs.family.range() * a.threshold : a.radius;
  const TrialEstimate e =
      estimate_tau_tail(fs.family, a.q, a.threshold, radius, a.samples, a.c.seed, threads_of(a.c));
  Report r;
  r.schema = "bpsim.tau-tail/1";
  r.config = {{"subcommand", "tau-tail"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"q", a.q}, {"threshold", a.threshold}, {"radius", radius}, {"samples", a.samples}};
  r.result = estimate_json(e);
  r.header = {"q", "threshold", "radius", "estimate", "stderr", "samples", "seed"};
  r.rows = {{fmt(a.q), fmt(a.threshold), fmt(radius), fmt(e.value), fmt(e.stderr_),
             fmt(e.samples), fmt(e.seed)}};
  return r;
}

Report run_critdens(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  if (a.q_grid.empty()) throw ConfigError("critdens needs --q-grid");
  const std::vector<double> qs = parse_doubles(a.q_grid, "--q-grid");
  const std::vector<int> radii = parse_ints(a.radii.empty() ? "8,16,32" : a.radii, "--radii");
  const Direction u = parse_direction(a.u);
  const double theta = parse_angle(a.theta);
  const auto s = critical_density_sweep(fs.family, u, theta, qs, radii, a.samples, a.c.seed,
                                        threads_of(a.c));
  Report r;
  r.schema = "bpsim.critdens/1";
  r.config = {{"subcommand", "critdens"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"u", u.radians()},         {"theta", theta},         {"q", qs},
              {"radii", radii},           {"samples", a.samples}};
  r.header = {"q", "n", "estimate", "stderr", "samples", "seed"};
  json diags = json::array();
  for (const auto& d : s.diagnostics) {
    json est = json::array(), ex = json::array();
    for (size_t i = 0; i < d.radii.size(); ++i) {
      const auto& e = d.estimates[i];
      r.rows.push_back({fmt(d.q), fmt(d.radii[i]), fmt(e.value), fmt(e.stderr_), fmt(e.samples),
                        fmt(e.seed)});
      json j = estimate_json(e);
      j["n"] = d.radii[i];
      est.push_back(j);
    }
    for (double x : d.exponents) ex.push_back(jnum(x));
    diags.push_back({{"q", d.q}, {"estimates", est}, {"exponents", ex}, {"flag", to_string(d.flag)}});
  }
  r.result = {{"diagnostics", diags},
              {"q_lo", s.q_lo ? json(*s.q_lo) : json(nullptr)},
              {"q_hi", s.q_hi ? json(*s.q_hi) : json(nullptr)},
              {"anomaly", s.anomaly},
              {"heuristic", s.heuristic}};
  return r;
}

Report run_droplet(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  if (a.directions.empty()) throw ConfigError("droplet needs --directions");
  std::vector<Direction> dirs;
  json dj = json::array();
  for (const auto& s : split(a.directions, ',')) {
    dirs.push_back(parse_direction(s));
    dj.push_back(dirs.back().radians());
  }
  const int C = a.C < 0 ? kDropletC : a.C;
  const TrialEstimate e = droplet_growth_probability(fs.family, dirs, a.L, a.Lambda, a.q,
                                                     a.samples, a.c.seed, threads_of(a.c), C);
  Report r;
  r.schema = "bpsim.droplet/1";
  r.config = {{"subcommand", "droplet"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"directions", dj},        {"L", a.L},               {"Lambda", a.Lambda},
              {"C", C},                  {"q", a.q},               {"samples", a.samples}};
  r.result = estimate_json(e);
  r.header = {"q", "L", "Lambda", "estimate", "stderr", "samples", "seed"};
  r.rows = {{fmt(a.q), fmt(a.L), fmt(a.Lambda), fmt(e.value), fmt(e.stderr_), fmt(e.samples),
             fmt(e.seed)}};
  return r;
}

Report run_edge_speed(const Args& a) {
  const std::vector<int> ns = parse_ints(a.ns, "--n");
  Report r;
  r.schema = "bpsim.edge-speed/1";
  r.config = {{"subcommand", "edge-speed"}, {"seed", a.c.seed}, {"p", a.p},
              {"n", ns},                    {"trials", a.trials}, {"width", a.width}};
  r.header = {"p", "n", "slope", "stderr", "trials", "died", "bound", "seed"};
  json rows = json::array();
  for (int n : ns) {
    const auto e = estimate_edge_speed(a.p, n, a.trials, a.c.seed, threads_of(a.c), a.width);
    r.rows.push_back({fmt(e.p), fmt(e.n), fmt(e.mean_slope), fmt(e.stderr_), fmt(e.trials),
                      fmt(e.died), fmt(e.bound), fmt(e.seed)});
    rows.push_back({{"p", e.p}, {"n", e.n}, {"slope", e.mean_slope}, {"stderr", e.stderr_},
                    {"trials", e.trials}, {"died", e.died}, {"bound", e.bound}});
  }
  r.result = {{"runs", rows}};
  return r;
}

Report run_dtbp_bound() {
  constexpr double kClaimedBound = 0.2452;
  const double p = gws_root(1.0 / 3.0);
  const double residual = p * p * p + p * p - 1;
  const double value = 1 - p;
  const double op = 1 - gws_root(0);
  Report r;
  r.schema = "bpsim.dtbp-bound/1";
  r.config = {{"subcommand", "dtbp-bound"}};
  r.result = {{"gws_root_one_third", p},  {"cubic_residual", residual},
              {"bound", value},           {"claimed", kClaimedBound},
              {"holds", value < kClaimedBound}, {"op_bound", op}};
  r.header = {"bound", "claimed", "holds", "cubic_residual", "op_bound"};
  r.rows = {{fmt(value), fmt(kClaimedBound), value < kClaimedBound ? "true" : "false", fmt(residual),
             fmt(op)}};
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "1 - alpha^-1(1/3) = %.6f\n%.6f < %.4f: %s\n"
                "p = %.12f solves p^3 + p^2 - 1 = 0 (residual %.1e)\n"
                "OP bound 1 - alpha^-1(0) = %.6f\n",
                value, value, kClaimedBound, value < kClaimedBound ? "true" : "false", p, residual, op);
  r.text = buf;
  return r;
}

PsiEvaluator make_psi(const Args& a) {
  PsiEvaluator e;
  if (a.psi != "gws") throw ConfigError("--psi supports only 'gws'");
  if (a.qc >= 0) {
    if (a.qc > 1) throw ConfigError("--qc must lie in [0,1]");
    e.qc_override = a.qc;
  }
  return e;
}

DensityProfile profile_for(const UpdateFamily& f, bool bidirectional, const PsiEvaluator& e) {
  if (f == models::dtbp()) return dtbp_profile(e);
  if (f.rules.size() == 1) return op_profile(f.rules[0], bidirectional, e);
  if (f.rules.size() == 2) {
    std::vector<Site> neg;
    for (const Site& s : f.rules[0].offsets) neg.push_back(-s);
    if (make_rule(neg).offsets == f.rules[1].offsets) return op_profile(f.rules[0], true, e);
  }
  throw ConfigError("profiles exist for DTBP, single-rule OP transforms and their bidirectional "
                    "pairs; got '" + f.name + "'");
}

json profile_json(const DensityProfile& p) {
  json pieces = json::array();
  for (const auto& pc : p.pieces()) {
    const double width = pc.end >= pc.start ? pc.end - pc.start : pc.end + 2 * kPi - pc.start;
    const double mid = std::remainder(pc.start + 0.5 * width, 2 * kPi);
    pieces.push_back({{"start", pc.start}, {"end", pc.end}, {"kind", pc.kind},
                      {"antipodal", pc.source.antipodal}, {"midpoint_value", p.eval(mid)}});
  }
  return {{"psi", p.evaluator().describe()}, {"qc", p.evaluator().qc()}, {"pieces", pieces}};
}

Report run_profile(const Args& a) {
  const PsiEvaluator ev = make_psi(a);
  const FamilySource fs = resolve_family(a.c.family);
  DensityProfile prof = profile_for(fs.family, a.bidirectional, ev);
  Report r;
  r.schema = "bpsim.profile-" + a.action + "/1";
  r.config = {{"subcommand", "profile"}, {"action", a.action}, {"family", fs.to_json()},
              {"bidirectional", a.bidirectional}, {"psi", ev.describe()}};
  if (a.action == "min") {
    if (a.family2.empty()) throw ConfigError("profile min needs --family2");
    const FamilySource fs2 = resolve_family(a.family2);
    r.config["family2"] = fs2.to_json();
    prof = profile_min(prof, profile_for(fs2.family, a.bidirectional, ev));
  }
  if (a.action == "infsup") {
    const InfSupResult s = semicircle_infsup(prof);
    r.result = {{"inf_sup", s.value},
                {"semicircle_start", s.semicircle_start},
                {"sup", s.sup},
                {"local_maxima", s.local_maxima}};
    r.header = {"inf_sup", "semicircle_start", "sup"};
    r.rows = {{fmt(s.value), fmt(s.semicircle_start), fmt(s.sup)}};
    return r;
  }
  r.result = profile_json(prof);
  r.header = {"u", "density"};
  json evals = json::array();
  for (const auto& s : split(a.us, ',')) {
    const double u = parse_angle(s);
    const double v = prof.eval(u);
    r.rows.push_back({fmt(u), fmt(v)});
    evals.push_back({{"u", u}, {"density", v}});
  }
  r.result["evaluations"] = evals;
  r.config["u"] = a.us;
  return r;
}

Report run_spiral_check(const Args& a) {
  SpiralParams sp;
  sp.u = parse_direction(a.u);
  sp.theta = parse_angle(a.theta);
  sp.n = a.n;
  sp.c = a.c_aspect;
  sp.tilted = a.tilted;
  validate_spiral_params(sp);
  if (!(a.q >= 0 && a.q <= 1)) throw ConfigError("--q must lie in [0,1]");
  if (a.samples < 1) throw ConfigError("--samples must be positive");
  const int radius = spiral_sample_radius(sp);
  const SiteField field(a.c.seed, streams::kSample);
  std::vector<uint8_t> e1(static_cast<size_t>(a.samples)), e2(e1.size());
  parallel_for(e1.size(), threads_of(a.c), [&](size_t t) {
    const auto ev = spiral_event_pair(sample_box(field, t, radius, a.q), sp);
    e1[t] = ev.e1;
    e2[t] = ev.e2;
  });
  int mismatches = 0, escapes = 0;
  for (size_t t = 0; t < e1.size(); ++t) {
    mismatches += e1[t] != e2[t];
    escapes += e1[t];
  }
  Report r;
  r.schema = "bpsim.spiral-check/1";
  r.config = {{"subcommand", "spiral-check"}, {"seed", a.c.seed}, {"u", sp.u.radians()},
              {"theta", sp.theta}, {"n", sp.n}, {"c", sp.c}, {"tilted", sp.tilted},
              {"q", a.q}, {"samples", a.samples}};
  r.result = {{"mismatches", mismatches}, {"e1_escapes", escapes}, {"samples", a.samples},
              {"sample_radius", radius}};
  r.header = {"q", "samples", "mismatches", "e1_escapes", "seed"};
  r.rows = {{fmt(a.q), fmt(a.samples), fmt(mismatches), fmt(escapes), fmt(a.c.seed)}};
  return r;
}

Report run_onearm(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  const OneArmConfig cfg{resolved_C(a, fs.family), a.n};
  validate(cfg);
  RevealmentStats st = measure_revealment(fs.family, cfg, a.q, a.runs, a.c.seed, threads_of(a.c));
  Report r;
  r.schema = "bpsim.onearm/1";
  r.config = {{"subcommand", "onearm"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"q", a.q}, {"n", a.n}, {"C", cfg.C}, {"runs", a.runs},
              {"bound_samples", a.bound_samples}};
  double bound = std::numeric_limits<double>::quiet_NaN(), bound_se = bound;
  json bj = nullptr;
  if (a.bound_samples > 0) {
    const auto b = estimate_revealment_bound(fs.family, a.n, cfg.C, a.q, a.bound_samples,
                                             a.c.seed, threads_of(a.c));
    bound = b.bound;
    bound_se = b.stderr_;
    json grid = json::array();
    for (size_t i = 0; i < b.grid.size(); ++i)
      grid.push_back({{"k", b.grid[i]}, {"estimate", b.estimates[i].value},
                      {"stderr", b.estimates[i].stderr_}});
    bj = {{"bound", b.bound}, {"stderr", b.stderr_}, {"grid", grid}};
  }
  json hist = json::array();
  const int side = 2 * a.n + 1;
  for (int y = 0; y < side; ++y) {
    json row = json::array();
    for (int x = 0; x < side; ++x) row.push_back(st.counts[static_cast<size_t>(y * side + x)]);
    hist.push_back(row);
  }
  r.result = {{"max_revealment", st.max_revealment},
              {"argmax", {st.argmax.x, st.argmax.y}},
              {"mismatches", st.mismatches},
              {"bound", bj},
              {"reveal_counts", hist}};
  r.header = {"q", "n", "runs", "max_revealment", "bound", "bound_stderr", "mismatches", "seed"};
  r.rows = {{fmt(a.q), fmt(a.n), fmt(a.runs), fmt(st.max_revealment), fmt(bound), fmt(bound_se),
             fmt(st.mismatches), fmt(a.c.seed)}};
  return r;
}

Report run_noise(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  NoiseEvent ev;
  if (a.event == "en")
    ev = NoiseEvent::kEn;
  else if (a.event == "origin")
    ev = NoiseEvent::kOriginEscape;
  else
    throw ConfigError("--event must be 'en' or 'origin'");
  const std::vector<double> eps = parse_doubles(a.eps, "--eps");
  const std::vector<int> ns = a.radii.empty() ? std::vector<int>{a.n} : parse_ints(a.radii, "--radii");
  Report r;
  r.schema = "bpsim.noise/1";
  r.config = {{"subcommand", "noise"}, {"family", fs.to_json()}, {"seed", a.c.seed},
              {"event", to_string(ev)}, {"q", a.q}, {"eps", eps}, {"n", ns},
              {"samples", a.samples}, {"C", a.C < 0 ? std::max(1, fs.family.range()) : a.C}};
  r.header = {"q", "n", "eps", "covariance", "cov_stderr", "variance", "ratio", "ratio_stderr",
              "samples", "seed"};
  json rows = json::array();
  for (int n : ns)
    for (double e : eps) {
      const auto res = noise_correlation(fs.family, ev, a.q, e, n, a.samples, a.c.seed,
                                         threads_of(a.c), a.C);
      r.rows.push_back({fmt(a.q), fmt(n), fmt(e), fmt(res.covariance), fmt(res.cov_stderr),
                        fmt(res.variance), fmt(res.ratio), fmt(res.ratio_stderr),
                        fmt(res.samples), fmt(res.seed)});
      rows.push_back({{"n", n}, {"eps", e}, {"covariance", res.covariance},
                      {"cov_stderr", res.cov_stderr}, {"variance", res.variance},
                      {"var_stderr", res.var_stderr}, {"ratio", jnum(res.ratio)},
                      {"ratio_stderr", jnum(res.ratio_stderr)}, {"p_hat", res.p_hat}});
    }
  r.result = {{"runs", rows}};
  return r;
}

Report run_kcm(const Args& a) {
  const FamilySource fs = resolve_family(a.c.family);
  Report r;
  r.schema = "bpsim.kcm-" + std::string(a.action == "lemma46" ? "timescales" : a.action) + "/1";
  r.config = {{"subcommand", "kcm"}, {"action", a.action}, {"family", fs.to_json()}, {"q", a.q}};
  if (a.action == "gap") {
    const auto g = build_generator(fs.family, a.k, a.q);
    const auto cs = communicating_classes(g);
    const auto gap = spectral_gap(g);
    r.config["k"] = a.k;
    r.result = {{"gap", gap.gap},
                {"relaxation_time", gap.relaxation_time},
                {"class_states", gap.class_states},
                {"closed_classes", cs.num_closed()},
                {"row_sum_error", g.row_sum_error()},
                {"detailed_balance_error", g.detailed_balance_error()},
                {"note", "finite-system diagnostic"}};
    if (g.dim() <= kMaxDenseStates) r.result["zero_eigenvalues"] = zero_eigenvalue_count(g);
    r.header = {"k", "q", "gap", "relaxation_time", "class_states", "closed_classes"};
    r.rows = {{fmt(a.k), fmt(a.q), fmt(gap.gap), fmt(gap.relaxation_time),
               fmt(static_cast<uint64_t>(gap.class_states)),
               fmt(static_cast<uint64_t>(cs.num_closed()))}};
    return r;
  }
  if (a.action == "timescales" || a.action == "lemma46") {
    const auto rep = timescale_report(fs.family, a.k, a.q, a.samples, a.c.seed, a.origin_healthy,
                                    threads_of(a.c));
    r.config["k"] = a.k;
    r.config["seed"] = a.c.seed;
    r.config["samples"] = a.samples;
    r.config["origin_healthy"] = a.origin_healthy;
    r.result = {{"kcm_mean", rep.kcm.mean},       {"kcm_stderr", rep.kcm.stderr_},
                {"kcm_censored", rep.kcm.censored}, {"kcm_exact", rep.kcm_exact},
                {"gap", rep.gap.gap},             {"relaxation_time", rep.gap.relaxation_time},
                {"bp_mean", rep.bp_mean},         {"bp_stderr", rep.bp_stderr},
                {"bp_never", rep.bp_never},       {"upper_ratio", rep.upper_ratio},
                {"upper_holds", rep.upper_holds}, {"lower_ratio", rep.lower_ratio},
                {"note", rep.note}};
    r.header = {"k", "q", "kcm_mean", "kcm_stderr", "kcm_exact", "relaxation_time", "bp_mean",
                "upper_ratio", "upper_holds", "lower_ratio"};
    r.rows = {{fmt(a.k), fmt(a.q), fmt(rep.kcm.mean), fmt(rep.kcm.stderr_), fmt(rep.kcm_exact),
               fmt(rep.gap.relaxation_time), fmt(rep.bp_mean), fmt(rep.upper_ratio),
               rep.upper_holds ? "true" : "false", fmt(rep.lower_ratio)}};
    return r;
  }
  // simulate
  if (!(a.q > 0 && a.q < 1)) throw ConfigError("--q must lie in (0,1)");
  if (a.trials < 1) throw ConfigError("--trials must be positive");
  const KcmGeometry geo =
      a.box >= 0 ? KcmGeometry::box(a.box, parse_boundary(a.boundary)) : KcmGeometry::torus(a.k);
  r.config["geometry"] = geo.describe();
  r.config["seed"] = a.c.seed;
  r.config["trials"] = a.trials;
  r.config["horizon"] = a.horizon;
  r.config["origin_healthy"] = a.origin_healthy;
  KcmSimOptions opt;
  opt.horizon = a.horizon;
  std::vector<KcmTrajectory> out(static_cast<size_t>(a.trials));
  parallel_for(out.size(), threads_of(a.c), [&](size_t t) {
    TrialStream rng(a.c.seed, streams::kKcm, t);
    auto init = sample_equilibrium(geo.sites(), a.q, rng);
    if (a.origin_healthy) init[static_cast<size_t>(geo.origin())] = 0;
    out[t] = simulate(fs.family, geo, a.q, std::move(init), opt, rng);
  });
  r.header = {"trial", "tau0", "end_time", "rings", "flips"};
  json rows = json::array();
  for (size_t t = 0; t < out.size(); ++t) {
    const auto& tr = out[t];
    r.rows.push_back({fmt(static_cast<uint64_t>(t)), tr.tau0 ? fmt(*tr.tau0) : "censored",
                      fmt(tr.end_time), fmt(tr.rings), fmt(tr.flips)});
    rows.push_back({{"trial", t}, {"tau0", tr.tau0 ? json(*tr.tau0) : json(nullptr)},
                    {"end_time", tr.end_time}, {"rings", tr.rings}, {"flips", tr.flips}});
  }
  r.result = {{"trajectories", rows}};
  return r;
}

/// One rule per line; still valid JSON.
std::string family_text(const UpdateFamily& f) {
  const json j = family_to_json(f);
  std::string out = "{\n  \"name\": " + j["name"].dump() + ",\n  \"rules\": [\n";
  const auto& rules = j["rules"];
  for (size_t i = 0; i < rules.size(); ++i)
    out += "    " + rules[i].dump() + (i + 1 < rules.size() ? ",\n" : "\n");
  return out + "  ]\n}\n";
}

Report run_models(const Args& a) {
  Report r;
  if (a.action == "list") {
    r.schema = "bpsim.models-list/1";
    r.config = {{"subcommand", "models"}, {"action", "list"}};
    json names = json::array();
    r.header = {"name", "rules", "range"};
    for (const auto& n : models::builtin_names()) {
      const auto f = models::builtin(n);
      names.push_back({{"name", n}, {"family", family_to_json(f)}});
      r.rows.push_back({n, fmt(static_cast<uint64_t>(f.rules.size())), fmt(f.range())});
      r.text += n + "\n";
    }
    r.result = {{"families", names}};
    return r;
  }
  if (a.name.empty()) throw ConfigError("models dump needs a family name");
  r.schema = "bpsim.family/1";
  r.text = family_text(models::builtin(a.name));
  r.config = {{"subcommand", "models"}, {"action", "dump"}, {"name", a.name}};
  r.result = family_to_json(models::builtin(a.name));
  return r;
}

constexpr const char* kCsvHelp = R"(CSV columns (a leading '#' line carries the schema and resolved config):
  theta, tilde-theta, critdens  q,n,estimate,stderr,samples,seed
  tau-tail                      q,threshold,radius,estimate,stderr,samples,seed
  droplet                       q,L,Lambda,estimate,stderr,samples,seed
  edge-speed                    p,n,slope,stderr,trials,died,bound,seed
  close                         x,y,initial,time
  spiral-check                  q,samples,mismatches,e1_escapes,seed
  onearm                        q,n,runs,max_revealment,bound,bound_stderr,mismatches,seed
  noise                         q,n,eps,covariance,cov_stderr,variance,ratio,ratio_stderr,samples,seed
  profile eval|min              u,density
  profile infsup                inf_sup,semicircle_start,sup
  kcm simulate                  trial,tau0,end_time,rings,flips
  kcm gap                       k,q,gap,relaxation_time,class_states,closed_classes
  kcm timescales                k,q,kcm_mean,kcm_stderr,kcm_exact,relaxation_time,bp_mean,upper_ratio,upper_holds,lower_ratio
JSON output: {"schema": "bpsim.<command>/1", "config": {...}, "result": {...}}.
Angles accept radians or forms such as pi/2, -3pi/4, 2*pi/3.
Exit status: 0 success, 2 configuration error, 1 runtime failure.)";

int run(int argc, char** argv) {
  CLI::App app{"Bootstrap percolation and kinetically constrained model toolkit", "bpsim"};
  app.footer(kCsvHelp);
  app.require_subcommand(1);
  Args a;
  Common& c = a.c;

  auto* classify_cmd = app.add_subcommand("classify", "Universality class of a family");
  classify_cmd->add_option("path", a.path, "Family JSON file or builtin name");
  add_common(classify_cmd, c, true, false, false);

  auto* close_cmd = app.add_subcommand("close", "Infection times of one Bernoulli sample on B_n");
  add_common(close_cmd, c, true, true, false);
  close_cmd->add_option("--q", a.q, "Initial density")->capture_default_str();
  close_cmd->add_option("--n", a.n, "Box radius")->capture_default_str();
  close_cmd->add_option("--trial", a.trial, "Trial index within the seed")->capture_default_str();
  close_cmd->add_option("--boundary", a.boundary, "none|halfplane:angle[:offset]|cone:angle:theta")
      ->capture_default_str();

  auto add_grid = [&](CLI::App* s) {
    s->add_option("--q", a.q, "Density")->capture_default_str();
    s->add_option("--q-grid", a.q_grid, "Comma-separated densities (overrides --q)");
    s->add_option("--n", a.n, "Box radius")->capture_default_str();
    s->add_option("--radii", a.radii, "Comma-separated radii (overrides --n)");
    s->add_option("--samples", a.samples, "Samples per point")->capture_default_str();
  };
  auto* theta_cmd = app.add_subcommand("theta", "P(origin escapes) on B_n with a boundary region");
  add_common(theta_cmd, c, true, true, true);
  add_grid(theta_cmd);
  theta_cmd->add_option("--boundary", a.boundary, "none|halfplane:angle[:offset]|cone:angle:theta")
      ->capture_default_str();

  auto* tilde_cmd = app.add_subcommand("tilde-theta", "P(E_n), the one-arm event");
  add_common(tilde_cmd, c, true, true, true);
  add_grid(tilde_cmd);
  tilde_cmd->add_option("--C", a.C, "Window constant (default: family range)");

  auto* tau_cmd = app.add_subcommand("tau-tail", "P(tau_0 > threshold)");
  add_common(tau_cmd, c, true, true, true);
  tau_cmd->add_option("--q", a.q, "Density")->capture_default_str();
  tau_cmd->add_option("--threshold", a.threshold, "Round threshold")->capture_default_str();
  tau_cmd->add_option("--radius", a.radius, "Box radius (default: range * threshold)");
  tau_cmd->add_option("--samples", a.samples, "Samples")->capture_default_str();

  auto* crit_cmd = app.add_subcommand("critdens", "Critical-density sweep with a cone boundary");
  add_common(crit_cmd, c, true, true, true);
  crit_cmd->add_option("--q-grid", a.q_grid, "Strictly increasing densities")->required();
  crit_cmd->add_option("--radii", a.radii, "Dyadic radii, e.g. 8,16,32");
  crit_cmd->add_option("--u", a.u, "Cone direction angle")->capture_default_str();
  crit_cmd->add_option("--theta", a.theta, "Cone opening angle")->capture_default_str();
  crit_cmd->add_option("--samples", a.samples, "Samples per point")->capture_default_str();

  auto* drop_cmd = app.add_subcommand("droplet", "Droplet growth probability");
  add_common(drop_cmd, c, true, true, true);
  drop_cmd->add_option("--directions", a.directions, "Comma-separated increasing angles")
      ->required();
  drop_cmd->add_option("--L", a.L, "Droplet size")->capture_default_str();
  drop_cmd->add_option("--Lambda", a.Lambda, "Target scale")->capture_default_str();
  drop_cmd->add_option("--C", a.C, "Box factor (default 4)");
  drop_cmd->add_option("--q", a.q, "Density")->capture_default_str();
  drop_cmd->add_option("--samples", a.samples, "Trials")->capture_default_str();

  auto* edge_cmd = app.add_subcommand("edge-speed", "Right-edge speed of oriented percolation");
  add_common(edge_cmd, c, false, true, true);
  edge_cmd->add_option("--p", a.p, "Open probability")->capture_default_str();
  edge_cmd->add_option("--n", a.ns, "Comma-separated generation counts")->capture_default_str();
  edge_cmd->add_option("--trials", a.trials, "Trials per n")->capture_default_str();
  edge_cmd->add_option("--width", a.width, "Frontier window (default: automatic)");

  auto* dtbp_cmd = app.add_subcommand("dtbp-bound", "Closed-form DTBP critical-density bound");
  add_common(dtbp_cmd, c, false, false, false);

  auto* prof_cmd = app.add_subcommand("profile", "Critical-density profiles");
  add_common(prof_cmd, c, true, false, false);
  prof_cmd->add_option("action", a.action, "eval|min|infsup")
      ->required()
      ->check(CLI::IsMember({"eval", "min", "infsup"}));
  prof_cmd->add_option("--family2", a.family2, "Second family for 'min'");
  prof_cmd->add_option("--u", a.us, "Comma-separated evaluation angles")->capture_default_str();
  prof_cmd->add_flag("--bidirectional", a.bidirectional, "Use the bidirectional OP profile");
  prof_cmd->add_option("--psi", a.psi, "psi evaluation mode")->capture_default_str();
  prof_cmd->add_option("--qc", a.qc, "Literature override for 1 - p_c of OP");

  auto* spiral_cmd = app.add_subcommand("spiral-check", "Agreement of the two Spiral events");
  add_common(spiral_cmd, c, false, true, true);
  spiral_cmd->add_option("--u", a.u, "Direction angle in (pi/2, 5pi/4)")->capture_default_str();
  spiral_cmd->add_option("--theta", a.theta, "Cone opening")->capture_default_str();
  spiral_cmd->add_option("--n", a.n, "Box scale")->capture_default_str();
  spiral_cmd->add_option("--c", a.c_aspect, "Aspect constant")->capture_default_str();
  spiral_cmd->add_flag("--tilted", a.tilted, "Use the tilted box");
  spiral_cmd->add_option("--q", a.q, "Density")->capture_default_str();
  spiral_cmd->add_option("--samples", a.samples, "Samples")->capture_default_str();

  auto* onearm_cmd = app.add_subcommand("onearm", "Revealment of the E_n algorithm");
  add_common(onearm_cmd, c, true, true, true);
  onearm_cmd->add_option("--q", a.q, "Density")->capture_default_str();
  onearm_cmd->add_option("--n", a.n, "Scale")->capture_default_str();
  onearm_cmd->add_option("--C", a.C, "Window constant (default: family range)");
  onearm_cmd->add_option("--runs", a.runs, "Algorithm runs")->capture_default_str();
  onearm_cmd->add_option("--bound-samples", a.bound_samples,
                         "Samples per scale for the revealment bound (0: skip)")
      ->capture_default_str();

  auto* noise_cmd = app.add_subcommand("noise", "Noise correlation ratio");
  add_common(noise_cmd, c, true, true, true);
  noise_cmd->add_option("--event", a.event, "en|origin")->capture_default_str();
  noise_cmd->add_option("--q", a.q, "Density")->capture_default_str();
  noise_cmd->add_option("--eps", a.eps, "Comma-separated noise levels")->capture_default_str();
  noise_cmd->add_option("--n", a.n, "Scale")->capture_default_str();
  noise_cmd->add_option("--radii", a.radii, "Comma-separated scales (overrides --n)");
  noise_cmd->add_option("--samples", a.samples, "Sample pairs")->capture_default_str();
  noise_cmd->add_option("--C", a.C, "Window constant for E_n");

  auto* kcm_cmd = app.add_subcommand("kcm", "Kinetically constrained model diagnostics");
  add_common(kcm_cmd, c, true, true, true);
  kcm_cmd->add_option("action", a.action, "simulate|gap|timescales (alias lemma46)")
      ->required()
      ->check(CLI::IsMember({"simulate", "gap", "timescales", "lemma46"}));
  kcm_cmd->add_option("--q", a.q, "Infected density")->capture_default_str();
  kcm_cmd->add_option("--k", a.k, "Torus side")->capture_default_str();
  kcm_cmd->add_option("--box", a.box, "Simulate on B_n instead of the torus");
  kcm_cmd->add_option("--boundary", a.boundary, "Infected region outside the box")
      ->capture_default_str();
  kcm_cmd->add_option("--trials", a.trials, "Trajectories for 'simulate'")->capture_default_str();
  kcm_cmd->add_option("--horizon", a.horizon, "Time horizon for 'simulate'")->capture_default_str();
  kcm_cmd->add_option("--samples", a.samples, "Trajectories for 'timescales'")->capture_default_str();
  kcm_cmd->add_flag("--origin-healthy", a.origin_healthy, "Condition on a healthy origin");

  auto* models_cmd = app.add_subcommand("models", "Builtin families");
  add_common(models_cmd, c, false, false, false);
  models_cmd->add_option("action", a.action, "list|dump")
      ->required()
      ->check(CLI::IsMember({"list", "dump"}));
  models_cmd->add_option("name", a.name, "Family name for 'dump'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (classify_cmd->parsed()) emit(run_classify(a), c, "text");
  if (close_cmd->parsed()) emit(run_close(a), c, "csv");
  if (theta_cmd->parsed()) emit(run_theta_like(a, false), c, "csv");
  if (tilde_cmd->parsed()) emit(run_theta_like(a, true), c, "csv");
  if (tau_cmd->parsed()) emit(run_tau_tail(a), c, "csv");
  if (crit_cmd->parsed()) emit(run_critdens(a), c, "csv");
  if (drop_cmd->parsed()) emit(run_droplet(a), c, "csv");
  if (edge_cmd->parsed()) emit(run_edge_speed(a), c, "csv");
  if (dtbp_cmd->parsed()) emit(run_dtbp_bound(), c, "text");
  if (prof_cmd->parsed()) emit(run_profile(a), c, a.action == "infsup" ? "csv" : "json");
  if (spiral_cmd->parsed()) emit(run_spiral_check(a), c, "csv");
  if (onearm_cmd->parsed()) emit(run_onearm(a), c, "json");
  if (noise_cmd->parsed()) emit(run_noise(a), c, "csv");
  if (kcm_cmd->parsed()) emit(run_kcm(a), c, a.action == "simulate" ? "csv" : "json");
  if (models_cmd->parsed()) emit(run_models(a), c, "text");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const bpsim::ConfigError& e) {
    std::cerr << "bpsim: error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "bpsim: error: malformed family description: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bpsim: failure: " << e.what() << "\n";
    return 1;
  }
}
