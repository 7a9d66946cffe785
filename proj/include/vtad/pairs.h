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

#ifndef VTAD_PAIRS_H_
#define VTAD_PAIRS_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vtad/attributes.h"

namespace vtad {

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  Gender gender = Gender::kMale;
  std::string path;  // audio or feature path; opaque to this module
};

// Utterance inventory with speaker/gender lookups.  Loaded from a TSV with
// header row: utterance_id, speaker_id, gender, path.
class Manifest {
 public:
  static Manifest FromRecords(std::vector<UtteranceRecord> records);

  const std::vector<UtteranceRecord>& Records() const { return records_; }
  bool HasUtterance(const std::string& utterance_id) const;
  const UtteranceRecord& Lookup(const std::string& utterance_id) const;
  // Sorted utterance ids of a speaker; unknown speaker → InputError.
  const std::vector<std::string>& UtterancesOf(
      const std::string& speaker_id) const;
  Gender GenderOfSpeaker(const std::string& speaker_id) const;

 private:
  std::vector<UtteranceRecord> records_;
  std::map<std::string, size_t> by_utterance_;
  std::map<std::string, std::vector<std::string>> by_speaker_;
  std::map<std::string, Gender> speaker_gender_;
};

Manifest LoadManifest(const std::string& path);

enum class Direction { kBStronger, kAStronger };

struct SpeakerPairAnnotation {
  std::string speaker_a;
  std::string speaker_b;
  std::string descriptor;
  Direction direction = Direction::kBStronger;
};

// TSV with header row: speaker_a, speaker_b, descriptor, direction
// (direction values: b_stronger / a_stronger).
std::vector<SpeakerPairAnnotation> LoadAnnotations(const std::string& path);

// One comparison trial: does utt_b have the stronger intensity?  labels and
// mask have one entry per attribute; labels are meaningful only where the
// mask is 1, and the mask is confined to the pair's gender block.
struct PairExample {
  std::string utt_a;
  std::string utt_b;
  Gender gender = Gender::kMale;
  std::vector<uint8_t> labels;
  std::vector<uint8_t> mask;
};

struct BuildPairsOptions {
  int pairs_per_speaker_pair = 40;
  bool include_reverse = true;
  uint64_t seed = 42;
};

// Expands speaker-pair annotations into utterance-pair examples.
//
// Annotations are grouped by unordered speaker pair; each group's descriptors
// merge into a single label/mask vector (conflicting directions for the same
// descriptor → InputError).  Per group, utterance pairs are drawn from the
// cross product of the two speakers' utterance lists — without replacement
// when the cross product is large enough, with replacement otherwise — using
// a stream derived from (seed, "pairs", speaker pair), so output is
// deterministic and independent of group processing order.  With
// include_reverse, every draw also emits the swapped utterances with labels
// flipped at masked positions, and the per-group total still equals
// pairs_per_speaker_pair (odd totals → ConfigError).
std::vector<PairExample> BuildPairs(
    const Manifest& manifest,
    const std::vector<SpeakerPairAnnotation>& annotations,
    const AttributeRegistry& registry, const BuildPairsOptions& options);

enum class Protocol { kSeen, kUnseen };
Protocol ParseProtocol(const std::string& text);
std::string ProtocolName(Protocol protocol);

struct SplitReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Split hygiene between train and eval pair lists.  Always flags unordered
// speaker pairs appearing in both; the Seen protocol additionally flags
// shared utterances, the Unseen protocol shared speakers.  Utterances missing
// from the manifest → InputError.
SplitReport SplitCheck(const std::vector<PairExample>& train_pairs,
                       const std::vector<PairExample>& eval_pairs,
                       const Manifest& manifest, Protocol protocol);

// Pair-list TSV: '#' comment lines (provenance), a header row, then one row
// per example: utt_a, utt_b, gender, one label column per attribute, one
// mask column per attribute.  Loading is strict: the header must match the
// registry and every row must honor the mask/gender invariants.
void WritePairsFile(const std::string& path,
                    const std::vector<PairExample>& pairs,
                    const AttributeRegistry& registry,
                    const std::vector<std::string>& comment_lines);
std::vector<PairExample> LoadPairsFile(const std::string& path,
                                       const AttributeRegistry& registry);

}  // namespace vtad

#endif  // VTAD_PAIRS_H_
