// Copyright (c) 2025 The vtad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "doctest.h"
#include "test_util.h"
#include "vtad/common.h"
#include "vtad/rng.h"

using namespace vtad;

TEST_CASE("error taxonomy derives from the library base error") {
  CHECK_THROWS_AS(throw InputError("x"), Error);
  CHECK_THROWS_AS(throw FormatError("x"), Error);
  CHECK_THROWS_AS(throw ConfigError("x"), Error);
  CHECK_THROWS_AS(throw ContractError("x"), Error);
  CHECK_THROWS_AS(throw EnvironmentError("x"), Error);
  CHECK_THROWS_AS(throw Error("x"), std::runtime_error);
}

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
  CHECK(Fnv1a64("") == 14695981039346656037ull);
  CHECK(Fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(Fnv1a64("foobar") == 0x85944171f73967e8ull);
  // Chaining equals hashing the concatenation.
  CHECK(Fnv1a64("bar", Fnv1a64("foo")) == Fnv1a64("foobar"));
}

TEST_CASE("hex rendering is fixed-width lowercase") {
  CHECK(ToHex(0) == "0000000000000000");
  CHECK(ToHex(0xaf63dc4c8601ec8cull) == "af63dc4c8601ec8c");
  CHECK(ToHex(~0ull) == "ffffffffffffffff");
}

TEST_CASE("tab splitting keeps empty cells") {
  auto cols = SplitTabs("a\tb\tc");
  REQUIRE(cols.size() == 3);
  CHECK(cols[0] == "a");
  CHECK(cols[2] == "c");
  auto with_empty = SplitTabs("a\t\tc\t");
  REQUIRE(with_empty.size() == 4);
  CHECK(with_empty[1] == "");
  CHECK(with_empty[3] == "");
  CHECK(SplitTabs("").size() == 1);
}

TEST_CASE("space stripping trims both ends only") {
  CHECK(StripSpace("  a b  ") == "a b");
  CHECK(StripSpace("\t x \r") == "x");
  CHECK(StripSpace("") == "");
  CHECK(StripSpace("   ") == "");
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.1, -3.5, 1e-300, 6.02e23, 0.0, -0.0,
                   0.6816997421945262}) {
    std::string s = FormatDouble(v);
    double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(Format2(50.0) == "50.00");
  CHECK(Format2(1.0 / 3.0) == "0.33");
  CHECK(Format2(-2.5) == "-2.50");
}

TEST_CASE("finiteness checks name the offending buffer") {
  double ok[3] = {1.0, -2.0, 0.0};
  CHECK_NOTHROW(CheckFinite(ok, 3, "buffer"));
  double bad[3] = {1.0, std::numeric_limits<double>::quiet_NaN(), 0.0};
  CHECK_THROWS_WITH_AS(CheckFinite(bad, 3, "scores"),
                       doctest::Contains("scores"), InputError);
  float binf[2] = {0.0f, std::numeric_limits<float>::infinity()};
  CHECK_THROWS_AS(CheckFinite(binf, 2, "x"), InputError);
}

TEST_CASE("text file IO preserves bytes") {
  std::string dir = vtad_test::ScratchDir("common");
  std::string path = vtad_test::PathIn(dir, "t.txt");
  std::string payload = "line1\nline2\r\n\x01\x02 binary-ish\n";
  WriteTextFile(path, payload);
  CHECK(ReadTextFile(path) == payload);
  CHECK_THROWS_AS(ReadTextFile(vtad_test::PathIn(dir, "missing.txt")),
                  InputError);
}

TEST_CASE("seed derivation separates tags and keys") {
  uint64_t base = 42;
  CHECK(DeriveSeed(base, "shuffle", uint64_t{0}) !=
        DeriveSeed(base, "shuffle", uint64_t{1}));
  CHECK(DeriveSeed(base, "shuffle", uint64_t{0}) !=
        DeriveSeed(base, "dropout", uint64_t{0}));
  CHECK(DeriveSeed(base, "pairs", "a\tb") != DeriveSeed(base, "pairs", "b\ta"));
  CHECK(DeriveSeed(base, "init", "astp") == DeriveSeed(base, "init", "astp"));
  CHECK(DeriveSeed(1, "init", "astp") != DeriveSeed(2, "init", "astp"));
}

TEST_CASE("random streams are deterministic and well-ranged") {
  Rng a(DeriveSeed(7, "test"));
  Rng b(DeriveSeed(7, "test"));
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.Next() == b.Next());
  }
  Rng r(DeriveSeed(7, "u01"));
  double mean = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.U01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  mean /= 10000.0;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.05));

  Rng u(DeriveSeed(7, "below"));
  for (int i = 0; i < 1000; ++i) {
    CHECK(u.Below(13) < 13);
  }
  CHECK_THROWS_AS(u.Below(0), ContractError);

  Rng g(DeriveSeed(7, "normal"));
  double gm = 0.0, gv = 0.0;
  const int kN = 20000;
  std::vector<double> draws(kN);
  for (int i = 0; i < kN; ++i) draws[i] = g.Normal();
  for (double d : draws) gm += d;
  gm /= kN;
  for (double d : draws) gv += (d - gm) * (d - gm);
  gv /= kN;
  CHECK(std::abs(gm) < 0.05);
  CHECK(gv == doctest::Approx(1.0).epsilon(0.05));

  Rng h(DeriveSeed(7, "uniform"));
  for (int i = 0; i < 1000; ++i) {
    double x = h.Uniform(-2.5, 3.5);
    CHECK(x >= -2.5);
    CHECK(x < 3.5);
  }
}

TEST_CASE("artifact version is stamped once") {
  std::string v = ArtifactVersion();
  CHECK(v.substr(0, 5) == "vtad/");
}
