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
#include <string>
#include <vector>

#include "bpsim/lattice.hpp"

namespace bpsim {

namespace models {

UpdateFamily op();
UpdateFamily bidirectional_op();
UpdateFamily dtbp();
UpdateFamily spiral();
UpdateFamily two_neighbour();
UpdateFamily site_perc_rule();
/// The North-East constraint {(1,0),(0,1)}, the usual KCM form of OP.
UpdateFamily north_east();
/// Single rule H_u ∩ B_r.
UpdateFamily gop(const Direction& u, int r);

/// Names accepted by `builtin` (lower case; matching is case-insensitive).
std::vector<std::string> builtin_names();
UpdateFamily builtin(const std::string& name);

}  // namespace models

/// Row-major integer 2x2 matrix acting on column vectors.
using Mat2 = std::array<int64_t, 4>;

inline int64_t det(const Mat2& m) { return m[0] * m[3] - m[1] * m[2]; }
inline Site apply(const Mat2& m, Site s) {
  return {static_cast<int>(m[0] * s.x + m[1] * s.y), static_cast<int>(m[2] * s.x + m[3] * s.y)};
}

UpdateFamily linear_transform(const UpdateFamily& family, const Mat2& m);

/// Direction of M(u - pi/2) + pi/2: the image of the half-plane H_u under M
/// is H_{u'} for this u' whenever det M > 0.
Direction transform_direction(const Mat2& m, const Direction& u);

struct SpiralEvents {
  bool e1;  // origin escapes under the bidirectional OP pair
  bool e2;  // origin escapes under {U_1, U_2}
};

struct SpiralParams {
  Direction u = Direction::angle(2.0);
  double theta = 0.0;
  int n = 20;
  double c = 0.2;
  bool tilted = false;
};

/// Throws ConfigError when (u, theta, c) leave the admissible window.
void validate_spiral_params(const SpiralParams& p);
/// Radius of the smallest centred box containing the (possibly tilted) box B.
int spiral_sample_radius(const SpiralParams& p);
SpiralEvents spiral_event_pair(const Bitmap& sample, const SpiralParams& p);

}  // namespace bpsim
