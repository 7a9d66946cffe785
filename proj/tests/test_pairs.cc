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
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.h"
#include "vtad/attributes.h"
#include "vtad/common.h"
#include "vtad/pairs.h"

using namespace vtad;

namespace {

// speakers: m1, m2 male with 3 utterances each; f1, f2 female with 2 each.
Manifest SmallManifest() {
  std::vector<UtteranceRecord> recs;
  auto add = [&](const std::string& spk, Gender g, int n) {
    for (int i = 0; i < n; ++i) {
      UtteranceRecord r;
      r.utterance_id = spk + "_u" + std::to_string(i);
      r.speaker_id = spk;
      r.gender = g;
      r.path = "/audio/" + r.utterance_id + ".wav";
      recs.push_back(r);
    }
  };
  add("m1", Gender::kMale, 3);
  add("m2", Gender::kMale, 3);
  add("f1", Gender::kFemale, 2);
  add("f2", Gender::kFemale, 2);
  return Manifest::FromRecords(recs);
}

AttributeRegistry SmallRegistry() {
  return AttributeRegistry::FromNames({"Bright", "Dark", "Soft"});
}

SpeakerPairAnnotation Ann(const std::string& a, const std::string& b,
                          const std::string& d, Direction dir) {
  SpeakerPairAnnotation ann;
  ann.speaker_a = a;
  ann.speaker_b = b;
  ann.descriptor = d;
  ann.direction = dir;
  return ann;
}

}  // namespace

TEST_CASE("manifest lookups") {
  Manifest m = SmallManifest();
  CHECK(m.Records().size() == 10);
  CHECK(m.HasUtterance("m1_u2"));
  CHECK(!m.HasUtterance("m1_u9"));
  CHECK(m.Lookup("f1_u0").speaker_id == "f1");
  CHECK(m.GenderOfSpeaker("f2") == Gender::kFemale);
  const std::vector<std::string>& utts = m.UtterancesOf("m2");
  CHECK(utts.size() == 3);
  CHECK(std::is_sorted(utts.begin(), utts.end()));
  CHECK_THROWS_AS(m.Lookup("nope"), InputError);
  CHECK_THROWS_AS(m.UtterancesOf("nope"), InputError);
}

TEST_CASE("manifest TSV loading is strict") {
  std::string dir = vtad_test::ScratchDir("pairs");
  std::string path = vtad_test::PathIn(dir, "manifest.tsv");
  WriteTextFile(path,
                "utterance_id\tspeaker_id\tgender\tpath\n"
                "u1\ts1\tmale\t/a/u1.wav\n"
                "u2\ts1\tmale\t/a/u2.wav\n"
                "u3\ts2\tfemale\t/a/u3.wav\n");
  Manifest m = LoadManifest(path);
  CHECK(m.Records().size() == 3);
  CHECK(m.GenderOfSpeaker("s2") == Gender::kFemale);

  SUBCASE("bad header") {
    WriteTextFile(path, "utt\tspk\tgender\tpath\nu1\ts1\tmale\t/a\n");
    CHECK_THROWS_AS(LoadManifest(path), FormatError);
  }
  SUBCASE("bad gender") {
    WriteTextFile(path,
                  "utterance_id\tspeaker_id\tgender\tpath\n"
                  "u1\ts1\tMALE\t/a\n");
    CHECK_THROWS(LoadManifest(path));
  }
  SUBCASE("duplicate utterance") {
    WriteTextFile(path,
                  "utterance_id\tspeaker_id\tgender\tpath\n"
                  "u1\ts1\tmale\t/a\nu1\ts1\tmale\t/b\n");
    CHECK_THROWS(LoadManifest(path));
  }
  SUBCASE("speaker with inconsistent gender") {
    WriteTextFile(path,
                  "utterance_id\tspeaker_id\tgender\tpath\n"
                  "u1\ts1\tmale\t/a\nu2\ts1\tfemale\t/b\n");
    CHECK_THROWS(LoadManifest(path));
  }
}

TEST_CASE("pairs expand annotations deterministically") {
  Manifest m = SmallManifest();
  AttributeRegistry reg = SmallRegistry();
  std::vector<SpeakerPairAnnotation> anns = {
      Ann("m1", "m2", "Bright", Direction::kBStronger),
      Ann("m2", "m1", "Dark", Direction::kBStronger),  // reversed speakers
  };
  BuildPairsOptions opt;
  opt.pairs_per_speaker_pair = 6;
  opt.include_reverse = true;
  opt.seed = 42;

  std::vector<PairExample> pairs = BuildPairs(m, anns, reg, opt);
  REQUIRE(pairs.size() == 6);

  for (const PairExample& p : pairs) {
    CHECK(p.gender == Gender::kMale);
    REQUIRE(p.labels.size() == reg.NumAttributes());
    REQUIRE(p.mask.size() == reg.NumAttributes());
    // Mask covers exactly the annotated descriptors in the male block.
    CHECK(p.mask[reg.Index("Bright", Gender::kMale)] == 1);
    CHECK(p.mask[reg.Index("Dark", Gender::kMale)] == 1);
    CHECK(p.mask[reg.Index("Soft", Gender::kMale)] == 0);
    for (size_t i = reg.NumDescriptors(); i < reg.NumAttributes(); ++i) {
      CHECK(p.mask[i] == 0);
    }
  }

  // Reverse pairs follow their base pair with swapped utterances and flipped
  // labels at masked positions.
  for (size_t i = 0; i + 1 < pairs.size(); i += 2) {
    const PairExample& base = pairs[i];
    const PairExample& rev = pairs[i + 1];
    CHECK(base.utt_a == rev.utt_b);
    CHECK(base.utt_b == rev.utt_a);
    for (size_t k = 0; k < base.labels.size(); ++k) {
      if (base.mask[k]) CHECK(base.labels[k] != rev.labels[k]);
    }
  }

  // Label semantics: "Bright" was annotated with m2 stronger.  For a base
  // draw, utt_a is from m1 and utt_b from m2, so label("Bright") == 1 there.
  size_t bright = reg.Index("Bright", Gender::kMale);
  size_t dark = reg.Index("Dark", Gender::kMale);
  for (const PairExample& p : pairs) {
    bool a_is_m1 = p.utt_a.rfind("m1", 0) == 0;
    CHECK(p.labels[bright] == (a_is_m1 ? 1 : 0));
    // "Dark" annotated as m2,m1 with b (=m1) stronger.
    CHECK(p.labels[dark] == (a_is_m1 ? 0 : 1));
  }

  // Determinism: same inputs, same output; annotation order does not matter.
  std::vector<SpeakerPairAnnotation> shuffled = {anns[1], anns[0]};
  std::vector<PairExample> again = BuildPairs(m, shuffled, reg, opt);
  REQUIRE(again.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(again[i].utt_a == pairs[i].utt_a);
    CHECK(again[i].utt_b == pairs[i].utt_b);
    CHECK(again[i].labels == pairs[i].labels);
  }
}

TEST_CASE("distinct draws when the cross product is large enough") {
  Manifest m = SmallManifest();
  AttributeRegistry reg = SmallRegistry();
  std::vector<SpeakerPairAnnotation> anns = {
      Ann("m1", "m2", "Bright", Direction::kBStronger)};
  BuildPairsOptions opt;
  opt.pairs_per_speaker_pair = 8;  // 4 base draws from a 3x3=9 cross product
  opt.include_reverse = true;
  std::vector<PairExample> pairs = BuildPairs(m, anns, reg, opt);
  REQUIRE(pairs.size() == 8);
  std::set<std::pair<std::string, std::string>> seen;
  for (size_t i = 0; i < pairs.size(); i += 2) {
    seen.insert({pairs[i].utt_a, pairs[i].utt_b});
  }
  CHECK(seen.size() == 4);  // base draws are distinct
}

TEST_CASE("pair construction error paths") {
  Manifest m = SmallManifest();
  AttributeRegistry reg = SmallRegistry();
  BuildPairsOptions opt;
  opt.pairs_per_speaker_pair = 4;

  SUBCASE("conflicting directions") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "m2", "Bright", Direction::kBStronger),
        Ann("m2", "m1", "Bright", Direction::kBStronger),  // same as a_stronger
    };
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), InputError);
  }
  SUBCASE("mixed-gender pair") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "f1", "Bright", Direction::kBStronger)};
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), InputError);
  }
  SUBCASE("self pair") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "m1", "Bright", Direction::kBStronger)};
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), InputError);
  }
  SUBCASE("unknown speaker") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "m9", "Bright", Direction::kBStronger)};
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), InputError);
  }
  SUBCASE("unknown descriptor") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "m2", "Shiny", Direction::kBStronger)};
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), InputError);
  }
  SUBCASE("odd total with reverse") {
    std::vector<SpeakerPairAnnotation> anns = {
        Ann("m1", "m2", "Bright", Direction::kBStronger)};
    opt.pairs_per_speaker_pair = 5;
    opt.include_reverse = true;
    CHECK_THROWS_AS(BuildPairs(m, anns, reg, opt), ConfigError);
  }
}

TEST_CASE("pairs file roundtrip and strict loading") {
  std::string dir = vtad_test::ScratchDir("pairs");
  std::string path = vtad_test::PathIn(dir, "pairs.tsv");
  Manifest m = SmallManifest();
  AttributeRegistry reg = SmallRegistry();
  std::vector<SpeakerPairAnnotation> anns = {
      Ann("f1", "f2", "Soft", Direction::kAStronger)};
  BuildPairsOptions opt;
  opt.pairs_per_speaker_pair = 4;
  std::vector<PairExample> pairs = BuildPairs(m, anns, reg, opt);
  REQUIRE(!pairs.empty());
  CHECK(pairs[0].gender == Gender::kFemale);

  WritePairsFile(path, pairs, reg, {"origin test", "pairs=4"});
  std::string text = ReadTextFile(path);
  CHECK(text.find("# origin test") != std::string::npos);

  std::vector<PairExample> back = LoadPairsFile(path, reg);
  REQUIRE(back.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    CHECK(back[i].utt_a == pairs[i].utt_a);
    CHECK(back[i].utt_b == pairs[i].utt_b);
    CHECK(back[i].gender == pairs[i].gender);
    CHECK(back[i].labels == pairs[i].labels);
    CHECK(back[i].mask == pairs[i].mask);
  }

  SUBCASE("header mismatch with a different registry") {
    AttributeRegistry other = AttributeRegistry::FromNames({"Bright", "Dark"});
    CHECK_THROWS_AS(LoadPairsFile(path, other), FormatError);
  }
  SUBCASE("mask outside the gender block") {
    // Flip a male-block mask bit on a female pair by editing the file.
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    // Find the first data row (skip comments and header).
    size_t row = 0;
    int noncomment = 0;
    for (size_t i = 0; i < lines.size(); ++i) {
      if (!lines[i].empty() && lines[i][0] == '#') continue;
      if (++noncomment == 2) {
        row = i;
        break;
      }
    }
    std::vector<std::string> cols = SplitTabs(lines[row]);
    // Columns: utt_a utt_b gender labels[6] mask[6]; male mask is cols 9..11.
    REQUIRE(cols.size() == 3 + 6 + 6);
    cols[9] = "1";
    std::string rebuilt;
    for (size_t c = 0; c < cols.size(); ++c) {
      if (c) rebuilt += '\t';
      rebuilt += cols[c];
    }
    lines[row] = rebuilt;
    std::string out;
    for (const std::string& l : lines) {
      out += l;
      out += '\n';
    }
    WriteTextFile(path, out);
    CHECK_THROWS_AS(LoadPairsFile(path, reg), FormatError);
  }
}

TEST_CASE("split checks catch protocol violations") {
  Manifest m = SmallManifest();
  AttributeRegistry reg = SmallRegistry();
  BuildPairsOptions opt;
  opt.pairs_per_speaker_pair = 2;

  std::vector<PairExample> male = BuildPairs(
      m, {Ann("m1", "m2", "Bright", Direction::kBStronger)}, reg, opt);
  std::vector<PairExample> female = BuildPairs(
      m, {Ann("f1", "f2", "Soft", Direction::kBStronger)}, reg, opt);

  SUBCASE("disjoint speaker pairs pass") {
    SplitReport r = SplitCheck(male, female, m, Protocol::kUnseen);
    CHECK(r.ok());
  }
  SUBCASE("shared speaker pair flagged under both protocols") {
    SplitReport seen = SplitCheck(male, male, m, Protocol::kSeen);
    CHECK(!seen.ok());
    SplitReport unseen = SplitCheck(male, male, m, Protocol::kUnseen);
    CHECK(!unseen.ok());
  }
  SUBCASE("unseen flags any shared speaker even in a new pairing") {
    // Extend the manifest with a fresh speaker m3 and hand-build an eval pair
    // that reuses speaker m2 through an utterance the train list never drew.
    std::vector<UtteranceRecord> recs = m.Records();
    UtteranceRecord extra;
    extra.utterance_id = "m3_u0";
    extra.speaker_id = "m3";
    extra.gender = Gender::kMale;
    extra.path = "/audio/m3_u0.wav";
    recs.push_back(extra);
    Manifest m2 = Manifest::FromRecords(recs);

    std::set<std::string> used;
    for (const PairExample& p : male) {
      used.insert(p.utt_a);
      used.insert(p.utt_b);
    }
    std::string fresh_m2;
    for (const std::string& u : m2.UtterancesOf("m2")) {
      if (!used.count(u)) fresh_m2 = u;
    }
    REQUIRE(!fresh_m2.empty());

    PairExample ev;
    ev.utt_a = fresh_m2;
    ev.utt_b = "m3_u0";
    ev.gender = Gender::kMale;
    ev.labels.assign(reg.NumAttributes(), 0);
    ev.mask.assign(reg.NumAttributes(), 0);
    ev.mask[reg.Index("Dark", Gender::kMale)] = 1;
    std::vector<PairExample> eval_pairs = {ev};

    SplitReport unseen = SplitCheck(male, eval_pairs, m2, Protocol::kUnseen);
    CHECK(!unseen.ok());
    // Seen protocol allows shared speakers as long as the unordered speaker
    // pair and the utterances differ.
    SplitReport seen = SplitCheck(male, eval_pairs, m2, Protocol::kSeen);
    CHECK(seen.ok());
  }
  SUBCASE("seen flags shared utterances") {
    // Same speaker pair is already flagged; craft lists sharing an utterance
    // but not a speaker pair by mixing manifests is impossible within one
    // gender here, so reuse the pair overlap case at utterance granularity.
    std::vector<PairExample> eval_pairs = male;
    SplitReport seen = SplitCheck(male, eval_pairs, m, Protocol::kSeen);
    bool mentions_utterance = false;
    for (const std::string& v : seen.violations) {
      if (v.find("utterance") != std::string::npos) mentions_utterance = true;
    }
    CHECK(!seen.ok());
    CHECK(mentions_utterance);
  }
  SUBCASE("unknown utterance raises") {
    std::vector<PairExample> bad = male;
    bad[0].utt_a = "ghost";
    CHECK_THROWS_AS(SplitCheck(bad, female, m, Protocol::kUnseen), InputError);
  }
}

TEST_CASE("protocol names parse and print") {
  CHECK(ParseProtocol("seen") == Protocol::kSeen);
  CHECK(ParseProtocol("unseen") == Protocol::kUnseen);
  CHECK_THROWS_AS(ParseProtocol("other"), InputError);
  CHECK(ProtocolName(Protocol::kSeen) == "seen");
  CHECK(ProtocolName(Protocol::kUnseen) == "unseen");
}
