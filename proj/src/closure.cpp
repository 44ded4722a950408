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

#include "bpsim/closure.hpp"

#include <algorithm>
#include <sstream>

namespace bpsim {

uint32_t InfectionTimes::max_finite() const {
  uint32_t m = 0;
  for (uint32_t v : t)
    if (v != kNever) m = std::max(m, v);
  return m;
}

Geometry::Geometry(int n, int halo, const Region& boundary, const std::optional<Region>& clip)
    : n_(n), h_(halo), e_(2 * (n + halo) + 1) {
  if (n < 0 || halo < 0) throw ConfigError("geometry: negative radius");
  status_.resize(static_cast<size_t>(e_) * e_);
  for (int y = -n - h_; y <= n + h_; ++y) {
    for (int x = -n - h_; x <= n + h_; ++x) {
      const Site s{x, y};
      const bool in_domain =
          std::max(std::abs(x), std::abs(y)) <= n && (!clip || clip->contains(s));
      uint8_t st;
      if (boundary.contains(s))
        st = kBoundary;
      else
        st = in_domain ? kFree : kFrozen;
      status_[ext(s)] = st;
    }
  }
}

ClosureEngine::ClosureEngine(const UpdateFamily& family) : family_(family) {
  for (const Rule& r : family_.rules) rules_.push_back(r.offsets);
}

void ClosureEngine::run(const Geometry& g, const uint8_t* infected, bool stop_at_origin) {
  if (g.halo() < family_.range()) throw ConfigError("geometry halo smaller than family range");
  const int e = g.ext_side();
  const size_t total = static_cast<size_t>(e) * e;
  const size_t nr = rules_.size();
  const auto& st = g.status();
  times_.assign(total, kNever);
  counters_.resize(total * nr);
  cur_.clear();
  next_.clear();

  std::vector<std::vector<std::ptrdiff_t>> delta(nr);
  for (size_t r = 0; r < nr; ++r)
    for (const Site& o : rules_[r]) delta[r].push_back(static_cast<std::ptrdiff_t>(o.y) * e + o.x);

  for (size_t i = 0; i < total; ++i)
    if (st[i] == Geometry::kBoundary) times_[i] = 0;
  const int w = g.box_side();
  for (int by = 0; by < w; ++by) {
    const size_t row = static_cast<size_t>(by + g.halo()) * e + g.halo();
    for (int bx = 0; bx < w; ++bx)
      if (infected[static_cast<size_t>(by) * w + bx] && st[row + bx] == Geometry::kFree)
        times_[row + bx] = 0;
  }
  const size_t origin = g.ext({0, 0});
  if (stop_at_origin && times_[origin] == 0) return;

  for (int by = 0; by < w; ++by) {
    const size_t row = static_cast<size_t>(by + g.halo()) * e + g.halo();
    for (int bx = 0; bx < w; ++bx) {
      const size_t x = row + bx;
      if (st[x] != Geometry::kFree || times_[x] == 0) continue;
      bool fires = false;
      for (size_t r = 0; r < nr; ++r) {
        uint16_t c = 0;
        bool dead = false;
        for (std::ptrdiff_t d : delta[r]) {
          const size_t y = x + d;
          if (st[y] == Geometry::kFrozen)
            dead = true;
          else if (times_[y] != 0)
            ++c;
        }
        counters_[x * nr + r] = dead ? static_cast<uint16_t>(0x8000 | c) : c;
        fires |= !dead && c == 0;
      }
      if (fires) next_.push_back(static_cast<uint32_t>(x));
    }
  }
  for (uint32_t x : next_) times_[x] = 1;
  if (stop_at_origin && times_[origin] != kNever) return;

  for (uint32_t t = 1; !next_.empty(); ++t) {
    cur_.swap(next_);
    next_.clear();
    for (uint32_t y : cur_) {
      for (size_t r = 0; r < nr; ++r) {
        for (std::ptrdiff_t d : delta[r]) {
          const size_t x = y - d;
          if (st[x] != Geometry::kFree || times_[x] != kNever) continue;
          if (--counters_[x * nr + r] == 0) {
            times_[x] = t + 1;
            next_.push_back(static_cast<uint32_t>(x));
            if (stop_at_origin && x == origin) return;
          }
        }
      }
    }
  }
}

InfectionTimes ClosureEngine::extract(const Geometry& g) const {
  InfectionTimes out;
  out.n = g.n();
  const int w = g.box_side();
  out.t.resize(static_cast<size_t>(w) * w);
  for (int by = 0; by < w; ++by)
    for (int bx = 0; bx < w; ++bx) {
      const size_t x = static_cast<size_t>(by + g.halo()) * g.ext_side() + g.halo() + bx;
      out.t[static_cast<size_t>(by) * w + bx] =
          g.status(x) == Geometry::kFrozen ? kNever : times_[x];
    }
  return out;
}

namespace {

std::vector<uint8_t> box_bytes(const LatticeInstance& inst) {
  std::vector<uint8_t> b(inst.infected.size());
  for (size_t i = 0; i < b.size(); ++i) b[i] = inst.infected.test(i);
  return b;
}

}  // namespace

InfectionTimes close(const LatticeInstance& inst, const UpdateFamily& family) {
  const Geometry g(inst.n, family.range(), inst.boundary, inst.clip);
  ClosureEngine eng(family);
  const auto bytes = box_bytes(inst);
  eng.run(g, bytes.data());
  return eng.extract(g);
}

InfectionTimes close_naive(const LatticeInstance& inst, const UpdateFamily& family) {
  const int n = inst.n;
  if (n > 16) throw ConfigError("close_naive: box radius must be at most 16");
  const int w = 2 * n + 1;
  auto idx = [&](Site s) { return static_cast<size_t>(s.y + n) * w + (s.x + n); };
  InfectionTimes out;
  out.n = n;
  out.t.assign(static_cast<size_t>(w) * w, kNever);
  for (int y = -n; y <= n; ++y)
    for (int x = -n; x <= n; ++x) {
      const Site s{x, y};
      if (inst.boundary.contains(s) || (inst.in_domain(s) && inst.infected.get(s)))
        out.t[idx(s)] = 0;
    }
  auto infected_now = [&](Site s, uint32_t t) {
    if (inst.in_domain(s)) return out.t[idx(s)] <= t;
    return inst.boundary.contains(s);
  };
  for (uint32_t t = 0;; ++t) {
    std::vector<Site> fresh;
    for (int y = -n; y <= n; ++y)
      for (int x = -n; x <= n; ++x) {
        const Site s{x, y};
        if (!inst.in_domain(s) || out.t[idx(s)] != kNever) continue;
        for (const Rule& r : family.rules) {
          bool all = true;
          for (const Site& o : r.offsets) all = all && infected_now(s + o, t);
          if (all) {
            fresh.push_back(s);
            break;
          }
        }
      }
    if (fresh.empty()) break;
    for (const Site& s : fresh) out.t[idx(s)] = t + 1;
  }
  return out;
}

bool origin_escapes(const LatticeInstance& inst, const UpdateFamily& family) {
  const Geometry g(inst.n, family.range(), inst.boundary, inst.clip);
  ClosureEngine eng(family);
  const auto bytes = box_bytes(inst);
  eng.run(g, bytes.data(), true);
  return eng.time(g, {0, 0}) == kNever;
}

std::string dump_times(const InfectionTimes& times) {
  size_t width = 1;
  for (uint32_t v : times.t)
    if (v != kNever) width = std::max(width, std::to_string(v).size());
  std::ostringstream os;
  for (int y = times.n; y >= -times.n; --y) {
    for (int x = -times.n; x <= times.n; ++x) {
      const uint32_t v = times.at({x, y});
      const std::string cell = v == kNever ? "." : std::to_string(v);
      if (x > -times.n) os << ' ';
      os << std::string(width - cell.size(), ' ') << cell;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace bpsim
