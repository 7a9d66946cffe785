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
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vtad/common.h"
#include "vtad/wav.h"

using namespace vtad;

namespace {

std::vector<int16_t> Ramp(size_t n) {
  std::vector<int16_t> s(n);
  for (size_t i = 0; i < n; ++i) {
    s[i] = static_cast<int16_t>((static_cast<int>(i) % 2047) - 1023);
  }
  return s;
}

}  // namespace

TEST_CASE("wav roundtrip is sample-exact") {
  std::string dir = vtad_test::ScratchDir("wav");
  std::string path = vtad_test::PathIn(dir, "a.wav");
  std::vector<int16_t> samples = Ramp(977);  // odd length on purpose
  samples[0] = -32768;
  samples[1] = 32767;
  WriteWav16Mono(path, samples, 16000, "");
  WavData back = ReadWav16Mono(path);
  CHECK(back.sample_rate == 16000);
  CHECK(back.samples == samples);
}

TEST_CASE("provenance comment is embedded and does not disturb parsing") {
  std::string dir = vtad_test::ScratchDir("wav");
  std::string path = vtad_test::PathIn(dir, "c.wav");
  std::vector<int16_t> samples = Ramp(64);
  // Odd-length comment exercises the chunk padding rule.
  std::string comment = "vtad/1.0.0 config=0123456789abcdef x";
  WriteWav16Mono(path, samples, 22050, comment);
  std::string bytes = ReadTextFile(path);
  CHECK(bytes.find("LIST") != std::string::npos);
  CHECK(bytes.find("ICMT") != std::string::npos);
  CHECK(bytes.find(comment) != std::string::npos);
  WavData back = ReadWav16Mono(path);
  CHECK(back.samples == samples);
  CHECK(back.sample_rate == 22050);
}

TEST_CASE("sample conversion divides by full scale") {
  std::vector<int16_t> s = {0, 16384, -16384, 32767, -32768};
  std::vector<double> d = SamplesToDouble(s);
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 0.5);
  CHECK(d[2] == -0.5);
  CHECK(d[3] == doctest::Approx(0.99997).epsilon(1e-4));
  CHECK(d[4] == -1.0);
}

TEST_CASE("structural damage fails closed") {
  std::string dir = vtad_test::ScratchDir("wav");
  std::string path = vtad_test::PathIn(dir, "d.wav");
  std::vector<int16_t> samples = Ramp(256);
  WriteWav16Mono(path, samples, 16000, "note");
  std::string bytes = ReadTextFile(path);

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::string p2 = vtad_test::PathIn(dir, "bad_magic.wav");
    WriteTextFile(p2, bad);
    CHECK_THROWS_AS(ReadWav16Mono(p2), FormatError);
  }
  SUBCASE("truncated data chunk") {
    std::string bad = bytes.substr(0, bytes.size() - 10);
    std::string p2 = vtad_test::PathIn(dir, "trunc.wav");
    WriteTextFile(p2, bad);
    CHECK_THROWS_AS(ReadWav16Mono(p2), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(ReadWav16Mono(vtad_test::PathIn(dir, "nope.wav")),
                    InputError);
  }
}

TEST_CASE("unsupported encodings are rejected as input errors") {
  std::string dir = vtad_test::ScratchDir("wav");
  std::string path = vtad_test::PathIn(dir, "m.wav");
  WriteWav16Mono(path, Ramp(64), 8000, "");
  std::string bytes = ReadTextFile(path);
  // fmt chunk starts at offset 12 (id) + 8 (header) = byte 20.
  const size_t fmt_body = 20;

  SUBCASE("stereo") {
    std::string bad = bytes;
    bad[fmt_body + 2] = 2;  // channels
    std::string p2 = vtad_test::PathIn(dir, "stereo.wav");
    WriteTextFile(p2, bad);
    CHECK_THROWS_AS(ReadWav16Mono(p2), InputError);
  }
  SUBCASE("8-bit") {
    std::string bad = bytes;
    bad[fmt_body + 14] = 8;  // bits per sample
    std::string p2 = vtad_test::PathIn(dir, "8bit.wav");
    WriteTextFile(p2, bad);
    CHECK_THROWS_AS(ReadWav16Mono(p2), InputError);
  }
  SUBCASE("non-pcm") {
    std::string bad = bytes;
    bad[fmt_body] = 3;  // format tag
    std::string p2 = vtad_test::PathIn(dir, "float.wav");
    WriteTextFile(p2, bad);
    CHECK_THROWS_AS(ReadWav16Mono(p2), InputError);
  }
}

TEST_CASE("zero sample rate is rejected on write") {
  std::string dir = vtad_test::ScratchDir("wav");
  CHECK_THROWS_AS(WriteWav16Mono(vtad_test::PathIn(dir, "z.wav"), Ramp(4), 0,
                                 ""),
                  InputError);
}
