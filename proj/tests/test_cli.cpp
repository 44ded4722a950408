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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "bpsim/models.hpp"

namespace bpsim {
namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(BPSIM_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

TEST(Cli, DtbpBound) {
  const auto r = cli("dtbp-bound");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("0.245122 < 0.2452: true"), std::string::npos) << r.out;
}

TEST(Cli, ClassifyFile) {
  const auto c = cli("classify " + std::string(BPSIM_MODELS) + "/op.json");
  EXPECT_EQ(c.status, 0);
  EXPECT_EQ(c.out.rfind("subcritical\n", 0), 0U) << c.out;
  EXPECT_EQ(cli("classify twoneighbour").out.rfind("critical\n", 0), 0U);
  EXPECT_EQ(cli("classify " + std::string(BPSIM_MODELS) + "/single_north.json").out.rfind(
                "supercritical\n", 0),
            0U);
}

TEST(Cli, ThetaTrivial) {
  const auto r = cli("theta --family op --q 1 --n 8 --samples 10");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("\nq,n,estimate,stderr,samples,seed\n1,8,0,0,10,1\n"), std::string::npos)
      << r.out;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("theta --family op --q 1.5").status, 2);
  EXPECT_EQ(cli("theta --family nosuchfamily").status, 2);
  EXPECT_EQ(cli("theta --family op --unknown-flag 3").status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  EXPECT_EQ(cli("theta --family op --boundary cone:pi").status, 2);
  EXPECT_EQ(cli("--help").status, 0);
  EXPECT_EQ(cli("theta --family op --q 0.5 --n 2 --samples 2 -o /nonexistent/dir/x.csv").status, 1);
}

TEST(Cli, MalformedFamilyFile) {
  const auto path = std::filesystem::temp_directory_path() / "bpsim_cli_bad.json";
  {
    FILE* f = std::fopen(path.c_str(), "w");
    ASSERT_NE(f, nullptr);
    std::fputs("{\"name\": \"x\", \"rules\": [[[0,0]]]}", f);
    std::fclose(f);
  }
  EXPECT_EQ(cli("classify " + path.string()).status, 2);
  std::filesystem::remove(path);
}

TEST(Cli, ModelsDumpRoundTrips) {
  const auto dir = std::filesystem::temp_directory_path();
  for (const auto& name : models::builtin_names()) {
    const auto path = dir / ("bpsim_cli_" + name + ".json");
    ASSERT_EQ(cli("models dump " + name + " -o " + path.string()).status, 0);
    EXPECT_TRUE(load_family_file(path.string()) == models::builtin(name)) << name;
    std::filesystem::remove(path);
  }
}

TEST(Cli, OutputIndependentOfThreads) {
  const std::string base = "tilde-theta --family spiral --q-grid 0.3,0.5 --radii 6,8 --samples 80";
  const auto a = cli(base + " --threads 1");
  const auto b = cli(base + " --threads 3");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, JsonEmbedsConfig) {
  const auto r = cli("tau-tail --family op --q 0.3 --threshold 2 --samples 20 --seed 9 --format json");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("\"schema\": \"bpsim.tau-tail/1\""), std::string::npos);
  EXPECT_NE(r.out.find("\"seed\": 9"), std::string::npos);
}

}  // namespace
}  // namespace bpsim
