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
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vtad/common.h"
#include "vtad/feature_provider.h"
#include "vtad/wav.h"

using namespace vtad;

TEST_CASE("synthetic stacks are deterministic and carry the signal") {
  std::vector<double> signal = {0.8, -0.6, 0.1};
  LayerStack a = SynthLayerStack("u1", 42, signal, 4, 8, 0.0);
  LayerStack b = SynthLayerStack("u1", 42, signal, 4, 8, 0.0);
  CHECK(a.values == b.values);
  // noise = 0 makes every layer exactly signal-padded-with-zeros.
  for (uint32_t l = 0; l < 4; ++l) {
    for (uint32_t c = 0; c < 8; ++c) {
      double want = c < signal.size() ? signal[c] : 0.0;
      CHECK(a.values[l * 8 + c] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  // Different utterance or seed changes the noise stream.
  LayerStack c = SynthLayerStack("u2", 42, signal, 4, 8, 0.05);
  LayerStack d = SynthLayerStack("u1", 43, signal, 4, 8, 0.05);
  LayerStack e = SynthLayerStack("u1", 42, signal, 4, 8, 0.05);
  CHECK(c.values != e.values);
  CHECK(d.values != e.values);
}

TEST_CASE("synthetic shape and signal validation") {
  std::vector<double> signal(10, 0.5);
  CHECK_THROWS_AS(SynthLayerStack("u", 1, signal, 2, 8, 0.0), ConfigError);
  CHECK_THROWS_AS(SynthLayerStack("u", 1, signal, 0, 16, 0.0), ConfigError);
  std::vector<double> bad = {0.1, std::nan("")};
  CHECK_THROWS_AS(SynthLayerStack("u", 1, bad, 2, 8, 0.0), InputError);
}

TEST_CASE("derived signals are deterministic, bounded, and id-sensitive") {
  std::vector<double> s1 = DeriveSignal("utt-a", 7, 34);
  std::vector<double> s2 = DeriveSignal("utt-a", 7, 34);
  std::vector<double> s3 = DeriveSignal("utt-b", 7, 34);
  CHECK(s1 == s2);
  CHECK(s1 != s3);
  REQUIRE(s1.size() == 34);
  for (double v : s1) {
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("file provider loads stamped stacks and rejects mismatches") {
  std::string dir = vtad_test::ScratchDir("prov");
  LayerStack s = SynthLayerStack("good", 3, {0.2}, 3, 4, 0.01);
  WriteLayerStackFile(vtad_test::PathIn(dir, "good.lstk"), s);
  // A file whose embedded id disagrees with its filename.
  LayerStack wrong = s;
  wrong.utterance_id = "other";
  WriteLayerStackFile(vtad_test::PathIn(dir, "liar.lstk"), wrong);

  ProviderConfig cfg;
  cfg.backend = "file";
  cfg.root = dir;
  auto provider = MakeProvider(cfg);
  LayerStack got = provider->Get("good");
  CHECK(got.values == s.values);
  CHECK(got.utterance_id == "good");
  CHECK_THROWS_AS(provider->Get("missing"), InputError);
  CHECK_THROWS_AS(provider->Get("liar"), InputError);
}

TEST_CASE("file provider requires a root directory") {
  ProviderConfig cfg;
  cfg.backend = "file";
  CHECK_THROWS_AS(MakeProvider(cfg), ConfigError);
  cfg.backend = "teleport";
  CHECK_THROWS_AS(MakeProvider(cfg), ConfigError);
}

TEST_CASE("synthetic provider honours explicit signals and derives the rest") {
  ProviderConfig cfg;
  cfg.backend = "synthetic";
  cfg.seed = 5;
  cfg.layers = 2;
  cfg.dim = 6;
  cfg.noise = 0.0;
  cfg.signals["known"] = {0.9, -0.9, 0.5};
  auto provider = MakeProvider(cfg);

  LayerStack known = provider->Get("known");
  CHECK(known.values[0] == doctest::Approx(0.9));
  CHECK(known.values[1] == doctest::Approx(-0.9));
  CHECK(known.values[2] == doctest::Approx(0.5));
  CHECK(known.values[3] == doctest::Approx(0.0));

  // Unlisted utterances get a derived signal of the same length.
  LayerStack derived = provider->Get("unlisted");
  std::vector<double> want = DeriveSignal("unlisted", 5, 3);
  for (size_t c = 0; c < 3; ++c) {
    CHECK(derived.values[c] == doctest::Approx(want[c]).epsilon(1e-6));
  }
  CHECK(derived.values[3] == doctest::Approx(0.0));
}

TEST_CASE("external provider runs the encoder command") {
  std::string dir = vtad_test::ScratchDir("prov");
  // Stage a waveform and a canned stack; the "encoder" just copies the canned
  // file to the requested output path.
  WriteWav16Mono(vtad_test::PathIn(dir, "utt9.wav"),
                 std::vector<int16_t>(320, 1000), 16000, "");
  LayerStack canned = SynthLayerStack("whatever", 3, {0.3}, 2, 4, 0.01);
  WriteLayerStackFile(vtad_test::PathIn(dir, "canned.lstk"), canned);

  ProviderConfig cfg;
  cfg.backend = "external";
  cfg.wav_dir = dir;
  cfg.command = "cp " + vtad_test::PathIn(dir, "canned.lstk") + " {out} && test -f {wav}";
  auto provider = MakeProvider(cfg);

  LayerStack got = provider->Get("utt9");
  // The provider re-stamps the stack with the requested utterance id.
  CHECK(got.utterance_id == "utt9");
  CHECK(got.values == canned.values);

  CHECK_THROWS_AS(provider->Get("absent"), InputError);

  ProviderConfig fail = cfg;
  fail.command = "false # {wav} {out}";
  CHECK_THROWS_AS(MakeProvider(fail)->Get("utt9"), EnvironmentError);

  ProviderConfig noout = cfg;
  noout.command = "true # {wav} {out}";
  CHECK_THROWS_AS(MakeProvider(noout)->Get("utt9"), EnvironmentError);

  ProviderConfig missing;
  missing.backend = "external";
  CHECK_THROWS_AS(MakeProvider(missing), EnvironmentError);
  missing.command = "encode {wav}";  // no {out}
  CHECK_THROWS_AS(MakeProvider(missing), ConfigError);
}

TEST_CASE("signals file parsing") {
  std::string dir = vtad_test::ScratchDir("prov");
  std::string path = vtad_test::PathIn(dir, "signals.tsv");
  WriteTextFile(path,
                "# id\tbright\tdark\n"
                "u1\t0.5\t-0.25\n"
                "\n"
                "u2\t1\t0\n");
  auto sig = LoadSignalsFile(path, 2);
  REQUIRE(sig.size() == 2);
  CHECK(sig.at("u1") == std::vector<double>{0.5, -0.25});
  CHECK(sig.at("u2") == std::vector<double>{1.0, 0.0});

  SUBCASE("column count mismatch") {
    WriteTextFile(path, "u1\t0.5\n");
    CHECK_THROWS_AS(LoadSignalsFile(path, 2), FormatError);
  }
  SUBCASE("bad number") {
    WriteTextFile(path, "u1\tfast\t0.5\n");
    CHECK_THROWS_AS(LoadSignalsFile(path, 2), FormatError);
  }
  SUBCASE("duplicate id") {
    WriteTextFile(path, "u1\t0.5\t0.5\nu1\t0.1\t0.1\n");
    CHECK_THROWS_AS(LoadSignalsFile(path, 2), FormatError);
  }
  SUBCASE("non-finite value") {
    WriteTextFile(path, "u1\tinf\t0.5\n");
    CHECK_THROWS_AS(LoadSignalsFile(path, 2), FormatError);
  }
}
