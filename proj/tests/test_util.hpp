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

#include "bpsim/lattice.hpp"
#include "bpsim/rng.hpp"

namespace bpsim::testing {

inline Bitmap random_bitmap(int n, double q, uint64_t seed, uint64_t trial) {
  const SiteField f(seed, streams::kSample);
  Bitmap b(n);
  for (int y = -n; y <= n; ++y)
    for (int x = -n; x <= n; ++x) b.set({x, y}, f.bernoulli(trial, x, y, q));
  return b;
}

inline LatticeInstance random_instance(int n, double q, uint64_t seed, uint64_t trial) {
  LatticeInstance inst(n);
  inst.infected = random_bitmap(n, q, seed, trial);
  return inst;
}

}  // namespace bpsim::testing
