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
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vtad/common.h"
#include "vtad/layer_stack.h"
#include "vtad/rng.h"

using namespace vtad;

namespace {

LayerStack MakeStack(const std::string& id, uint32_t layers, uint32_t dim,
                     uint64_t seed) {
  LayerStack s;
  s.utterance_id = id;
  s.num_layers = layers;
  s.dim = dim;
  s.values.resize(static_cast<size_t>(layers) * dim);
  Rng rng(seed);
  for (float& v : s.values) v = static_cast<float>(rng.Normal());
  return s;
}

}  // namespace

TEST_CASE("layer stack file roundtrip is bit-exact") {
  std::string dir = vtad_test::ScratchDir("lstk");
  std::string path = vtad_test::PathIn(dir, "u1.lstk");
  LayerStack s = MakeStack("spk-001_utt-03", 25, 64, 7);
  // Include values whose bit patterns are easy to get wrong.
  s.values[0] = 0.0f;
  s.values[1] = -0.0f;
  s.values[2] = 1e-38f;
  WriteLayerStackFile(path, s);
  LayerStack back = ReadLayerStackFile(path);
  CHECK(back.utterance_id == s.utterance_id);
  CHECK(back.num_layers == s.num_layers);
  CHECK(back.dim == s.dim);
  REQUIRE(back.values.size() == s.values.size());
  for (size_t i = 0; i < s.values.size(); ++i) {
    // Bit-exact, including signed zero.
    CHECK(std::memcmp(&back.values[i], &s.values[i], sizeof(float)) == 0);
  }
}

TEST_CASE("validation rejects malformed stacks before writing") {
  std::string dir = vtad_test::ScratchDir("lstk");
  LayerStack s = MakeStack("x", 2, 3, 1);

  SUBCASE("zero shape") {
    s.num_layers = 0;
    CHECK_THROWS_AS(ValidateLayerStack(s), ContractError);
  }
  SUBCASE("count mismatch") {
    s.values.pop_back();
    CHECK_THROWS_AS(ValidateLayerStack(s), ContractError);
  }
  SUBCASE("non-finite value") {
    s.values[4] = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(WriteLayerStackFile(vtad_test::PathIn(dir, "bad.lstk"), s),
                    InputError);
  }
}

TEST_CASE("reader fails closed on damaged files") {
  std::string dir = vtad_test::ScratchDir("lstk");
  std::string path = vtad_test::PathIn(dir, "ok.lstk");
  LayerStack s = MakeStack("utt", 3, 5, 11);
  WriteLayerStackFile(path, s);
  std::string bytes = ReadTextFile(path);

  auto write_and_expect_format_error = [&](const std::string& name,
                                           const std::string& data) {
    std::string p = vtad_test::PathIn(dir, name);
    WriteTextFile(p, data);
    CHECK_THROWS_AS(ReadLayerStackFile(p), FormatError);
  };

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    write_and_expect_format_error("magic.lstk", bad);
  }
  SUBCASE("wrong version") {
    std::string bad = bytes;
    bad[4] = 9;
    write_and_expect_format_error("ver.lstk", bad);
  }
  SUBCASE("declared empty shape") {
    std::string bad = bytes;
    bad[8] = bad[9] = bad[10] = bad[11] = 0;  // num_layers = 0
    write_and_expect_format_error("shape.lstk", bad);
  }
  SUBCASE("truncated payload") {
    write_and_expect_format_error("trunc.lstk",
                                  bytes.substr(0, bytes.size() - 3));
  }
  SUBCASE("trailing bytes") {
    write_and_expect_format_error("trail.lstk", bytes + "zz");
  }
  SUBCASE("non-finite payload") {
    std::string bad = bytes;
    // Overwrite the first float (after 20 header bytes + 3-byte id) with the
    // little-endian bit pattern of +inf.
    size_t off = 20 + s.utterance_id.size();
    bad[off + 0] = '\x00';
    bad[off + 1] = '\x00';
    bad[off + 2] = static_cast<char>(0x80);
    bad[off + 3] = '\x7f';
    write_and_expect_format_error("inf.lstk", bad);
  }
  SUBCASE("empty file") { write_and_expect_format_error("empty.lstk", ""); }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ReadLayerStackFile(vtad_test::PathIn(dir, "no.lstk")),
                    InputError);
  }
}
