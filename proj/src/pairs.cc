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

#include "vtad/pairs.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "vtad/common.h"
#include "vtad/rng.h"

namespace vtad {
namespace {

// Splits a TSV file into rows of columns, dropping '#' comment lines and
// blank lines; carriage returns are stripped.  Each row keeps its 1-based
// line number for error messages.
struct TsvRow {
  size_t line_no;
  std::vector<std::string> cols;
};

std::vector<TsvRow> ReadTsv(const std::string& path) {
  std::string text = ReadTextFile(path);
  std::vector<TsvRow> rows;
  std::istringstream lines(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = StripSpace(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    rows.push_back({line_no, SplitTabs(line)});
  }
  return rows;
}

void RequireHeader(const std::string& path, const std::vector<TsvRow>& rows,
                   const std::vector<std::string>& expected) {
  if (rows.empty()) {
    throw FormatError(path + ": missing header row");
  }
  if (rows[0].cols != expected) {
    std::string want;
    for (size_t i = 0; i < expected.size(); ++i) {
      if (i) want += "\\t";
      want += expected[i];
    }
    throw FormatError(path + ":" + std::to_string(rows[0].line_no) +
                      ": bad header row (expected: " + want + ")");
  }
}

std::string RowError(const std::string& path, const TsvRow& row,
                     const std::string& message) {
  return path + ":" + std::to_string(row.line_no) + ": " + message;
}

uint8_t ParseBit(const std::string& path, const TsvRow& row,
                 const std::string& cell) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw FormatError(RowError(path, row, "expected 0 or 1, got '" + cell +
                                            "'"));
}

// Draws `count` indices from [0, n).  Without replacement (partial
// Fisher–Yates over an index table) when n >= count, otherwise with
// replacement.
std::vector<size_t> DrawIndices(Rng* rng, size_t n, size_t count) {
  std::vector<size_t> out;
  out.reserve(count);
  if (n >= count) {
    std::vector<size_t> table(n);
    for (size_t i = 0; i < n; ++i) table[i] = i;
    for (size_t i = 0; i < count; ++i) {
      size_t j = i + static_cast<size_t>(rng->Below(n - i));
      std::swap(table[i], table[j]);
      out.push_back(table[i]);
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      out.push_back(static_cast<size_t>(rng->Below(n)));
    }
  }
  return out;
}

PairExample Reversed(const PairExample& example) {
  PairExample out;
  out.utt_a = example.utt_b;
  out.utt_b = example.utt_a;
  out.gender = example.gender;
  out.mask = example.mask;
  out.labels = example.labels;
  for (size_t i = 0; i < out.labels.size(); ++i) {
    if (out.mask[i]) out.labels[i] = out.labels[i] ? 0 : 1;
  }
  return out;
}

}  // namespace

Manifest Manifest::FromRecords(std::vector<UtteranceRecord> records) {
  Manifest m;
  m.records_ = std::move(records);
  for (size_t i = 0; i < m.records_.size(); ++i) {
    const UtteranceRecord& rec = m.records_[i];
    if (rec.utterance_id.empty() || rec.speaker_id.empty()) {
      throw InputError("manifest record with empty utterance or speaker id");
    }
    if (!m.by_utterance_.emplace(rec.utterance_id, i).second) {
      throw InputError("duplicate utterance id '" + rec.utterance_id +
                       "' in manifest");
    }
    auto [it, inserted] = m.speaker_gender_.emplace(rec.speaker_id,
                                                    rec.gender);
    if (!inserted && it->second != rec.gender) {
      throw InputError("speaker '" + rec.speaker_id +
                       "' listed with two genders in manifest");
    }
    m.by_speaker_[rec.speaker_id].push_back(rec.utterance_id);
  }
  for (auto& [speaker, utts] : m.by_speaker_) {
    std::sort(utts.begin(), utts.end());
  }
  return m;
}

bool Manifest::HasUtterance(const std::string& utterance_id) const {
  return by_utterance_.count(utterance_id) != 0;
}

const UtteranceRecord& Manifest::Lookup(
    const std::string& utterance_id) const {
  auto it = by_utterance_.find(utterance_id);
  if (it == by_utterance_.end()) {
    throw InputError("utterance '" + utterance_id + "' not in manifest");
  }
  return records_[it->second];
}

const std::vector<std::string>& Manifest::UtterancesOf(
    const std::string& speaker_id) const {
  auto it = by_speaker_.find(speaker_id);
  if (it == by_speaker_.end()) {
    throw InputError("speaker '" + speaker_id + "' not in manifest");
  }
  return it->second;
}

Gender Manifest::GenderOfSpeaker(const std::string& speaker_id) const {
  auto it = speaker_gender_.find(speaker_id);
  if (it == speaker_gender_.end()) {
    throw InputError("speaker '" + speaker_id + "' not in manifest");
  }
  return it->second;
}

Manifest LoadManifest(const std::string& path) {
  std::vector<TsvRow> rows = ReadTsv(path);
  RequireHeader(path, rows,
                {"utterance_id", "speaker_id", "gender", "path"});
  std::vector<UtteranceRecord> records;
  for (size_t r = 1; r < rows.size(); ++r) {
    const TsvRow& row = rows[r];
    if (row.cols.size() != 4) {
      throw FormatError(RowError(path, row, "expected 4 columns, got " +
                                                std::to_string(
                                                    row.cols.size())));
    }
    UtteranceRecord rec;
    rec.utterance_id = row.cols[0];
    rec.speaker_id = row.cols[1];
    try {
      rec.gender = ParseGender(row.cols[2]);
    } catch (const InputError& e) {
      throw FormatError(RowError(path, row, e.what()));
    }
    rec.path = row.cols[3];
    records.push_back(std::move(rec));
  }
  try {
    return Manifest::FromRecords(std::move(records));
  } catch (const InputError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<SpeakerPairAnnotation> LoadAnnotations(const std::string& path) {
  std::vector<TsvRow> rows = ReadTsv(path);
  RequireHeader(path, rows,
                {"speaker_a", "speaker_b", "descriptor", "direction"});
  std::vector<SpeakerPairAnnotation> out;
  for (size_t r = 1; r < rows.size(); ++r) {
    const TsvRow& row = rows[r];
    if (row.cols.size() != 4) {
      throw FormatError(RowError(path, row, "expected 4 columns, got " +
                                                std::to_string(
                                                    row.cols.size())));
    }
    SpeakerPairAnnotation ann;
    ann.speaker_a = row.cols[0];
    ann.speaker_b = row.cols[1];
    ann.descriptor = row.cols[2];
    if (ann.speaker_a.empty() || ann.speaker_b.empty() ||
        ann.descriptor.empty()) {
      throw FormatError(RowError(path, row, "empty field"));
    }
    if (ann.speaker_a == ann.speaker_b) {
      throw FormatError(
          RowError(path, row, "annotation pairs a speaker with itself"));
    }
    if (row.cols[3] == "b_stronger") {
      ann.direction = Direction::kBStronger;
    } else if (row.cols[3] == "a_stronger") {
      ann.direction = Direction::kAStronger;
    } else {
      throw FormatError(RowError(
          path, row,
          "bad direction '" + row.cols[3] +
              "' (expected b_stronger or a_stronger)"));
    }
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<PairExample> BuildPairs(
    const Manifest& manifest,
    const std::vector<SpeakerPairAnnotation>& annotations,
    const AttributeRegistry& registry, const BuildPairsOptions& options) {
  if (options.pairs_per_speaker_pair <= 0) {
    throw ConfigError("pairs_per_speaker_pair must be positive");
  }
  if (options.include_reverse && options.pairs_per_speaker_pair % 2 != 0) {
    throw ConfigError(
        "pairs_per_speaker_pair must be even when reverse pairs are "
        "included");
  }

  // Group annotations by unordered speaker pair; store each descriptor's
  // direction in the canonical orientation (lexicographically smaller
  // speaker first).
  struct Group {
    Gender gender;
    // attribute index -> label bit for the canonical orientation.
    std::map<size_t, uint8_t> label_bits;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const SpeakerPairAnnotation& ann : annotations) {
    Gender ga = manifest.GenderOfSpeaker(ann.speaker_a);
    Gender gb = manifest.GenderOfSpeaker(ann.speaker_b);
    if (ga != gb) {
      throw InputError("annotation pairs speakers of different genders: " +
                       ann.speaker_a + " / " + ann.speaker_b);
    }
    if (ann.speaker_a == ann.speaker_b) {
      // A speaker cannot be stronger than itself; such a row is always a
      // data-entry mistake and would poison both orientations.
      throw InputError("annotation pairs speaker '" + ann.speaker_a +
                       "' with itself");
    }
    bool swapped = ann.speaker_b < ann.speaker_a;
    std::pair<std::string, std::string> key =
        swapped ? std::make_pair(ann.speaker_b, ann.speaker_a)
                : std::make_pair(ann.speaker_a, ann.speaker_b);
    // Label bit is 1 when the canonical pair's second speaker is the
    // stronger one.
    bool b_stronger = ann.direction == Direction::kBStronger;
    uint8_t bit = (b_stronger != swapped) ? 1 : 0;
    size_t attr = registry.Index(ann.descriptor, ga);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) it->second.gender = ga;
    auto [bit_it, bit_inserted] = it->second.label_bits.emplace(attr, bit);
    if (!bit_inserted && bit_it->second != bit) {
      throw InputError("conflicting annotations for speakers " + key.first +
                       " / " + key.second + " on descriptor '" +
                       ann.descriptor + "'");
    }
  }

  size_t num_attributes = registry.NumAttributes();
  size_t base_draws = options.include_reverse
                          ? static_cast<size_t>(
                                options.pairs_per_speaker_pair / 2)
                          : static_cast<size_t>(
                                options.pairs_per_speaker_pair);
  std::vector<PairExample> out;
  for (const auto& [key, group] : groups) {
    const std::vector<std::string>& utts_a = manifest.UtterancesOf(key.first);
    const std::vector<std::string>& utts_b =
        manifest.UtterancesOf(key.second);
    if (utts_a.empty() || utts_b.empty()) {
      throw InputError("speaker without utterances in pair " + key.first +
                       " / " + key.second);
    }
    PairExample proto;
    proto.gender = group.gender;
    proto.labels.assign(num_attributes, 0);
    proto.mask.assign(num_attributes, 0);
    for (const auto& [attr, bit] : group.label_bits) {
      proto.labels[attr] = bit;
      proto.mask[attr] = 1;
    }
    Rng rng(DeriveSeed(options.seed, "pairs", key.first + "\t" + key.second));
    size_t cross = utts_a.size() * utts_b.size();
    std::vector<size_t> draws = DrawIndices(&rng, cross, base_draws);
    for (size_t idx : draws) {
      PairExample example = proto;
      example.utt_a = utts_a[idx / utts_b.size()];
      example.utt_b = utts_b[idx % utts_b.size()];
      out.push_back(example);
      if (options.include_reverse) out.push_back(Reversed(example));
    }
  }
  return out;
}

Protocol ParseProtocol(const std::string& text) {
  if (text == "seen") return Protocol::kSeen;
  if (text == "unseen") return Protocol::kUnseen;
  throw InputError("unknown protocol '" + text +
                   "' (expected seen or unseen)");
}

std::string ProtocolName(Protocol protocol) {
  return protocol == Protocol::kSeen ? "seen" : "unseen";
}

SplitReport SplitCheck(const std::vector<PairExample>& train_pairs,
                       const std::vector<PairExample>& eval_pairs,
                       const Manifest& manifest, Protocol protocol) {
  auto speaker_pair_of = [&](const PairExample& ex) {
    std::string sa = manifest.Lookup(ex.utt_a).speaker_id;
    std::string sb = manifest.Lookup(ex.utt_b).speaker_id;
    if (sb < sa) std::swap(sa, sb);
    return std::make_pair(sa, sb);
  };

  std::set<std::pair<std::string, std::string>> train_speaker_pairs;
  std::set<std::string> train_utts;
  std::set<std::string> train_speakers;
  for (const PairExample& ex : train_pairs) {
    auto sp = speaker_pair_of(ex);
    train_speaker_pairs.insert(sp);
    train_speakers.insert(sp.first);
    train_speakers.insert(sp.second);
    train_utts.insert(ex.utt_a);
    train_utts.insert(ex.utt_b);
  }

  SplitReport report;
  std::set<std::pair<std::string, std::string>> flagged_pairs;
  std::set<std::string> flagged_utts;
  std::set<std::string> flagged_speakers;
  for (const PairExample& ex : eval_pairs) {
    auto sp = speaker_pair_of(ex);
    if (train_speaker_pairs.count(sp) && flagged_pairs.insert(sp).second) {
      report.violations.push_back("speaker pair " + sp.first + " / " +
                                  sp.second + " appears in both splits");
    }
    if (protocol == Protocol::kSeen) {
      for (const std::string& utt : {ex.utt_a, ex.utt_b}) {
        if (train_utts.count(utt) && flagged_utts.insert(utt).second) {
          report.violations.push_back("utterance " + utt +
                                      " appears in both splits");
        }
      }
    } else {
      for (const std::string& spk : {sp.first, sp.second}) {
        if (train_speakers.count(spk) && flagged_speakers.insert(spk).second) {
          report.violations.push_back("speaker " + spk +
                                      " appears in both splits");
        }
      }
    }
  }
  return report;
}

void WritePairsFile(const std::string& path,
                    const std::vector<PairExample>& pairs,
                    const AttributeRegistry& registry,
                    const std::vector<std::string>& comment_lines) {
  size_t n = registry.NumAttributes();
  std::string out;
  for (const std::string& comment : comment_lines) {
    out += "# " + comment + "\n";
  }
  out += "utt_a\tutt_b\tgender";
  for (size_t i = 0; i < n; ++i) out += "\tlabel:" + registry.AttributeName(i);
  for (size_t i = 0; i < n; ++i) out += "\tmask:" + registry.AttributeName(i);
  out += "\n";
  for (const PairExample& ex : pairs) {
    if (ex.labels.size() != n || ex.mask.size() != n) {
      throw ContractError("pair example does not match registry size");
    }
    out += ex.utt_a + "\t" + ex.utt_b + "\t" + GenderName(ex.gender);
    for (size_t i = 0; i < n; ++i) {
      out += ex.mask[i] && ex.labels[i] ? "\t1" : "\t0";
    }
    for (size_t i = 0; i < n; ++i) {
      out += ex.mask[i] ? "\t1" : "\t0";
    }
    out += "\n";
  }
  WriteTextFile(path, out);
}

std::vector<PairExample> LoadPairsFile(const std::string& path,
                                       const AttributeRegistry& registry) {
  size_t n = registry.NumAttributes();
  std::vector<TsvRow> rows = ReadTsv(path);
  std::vector<std::string> expected = {"utt_a", "utt_b", "gender"};
  for (size_t i = 0; i < n; ++i) {
    expected.push_back("label:" + registry.AttributeName(i));
  }
  for (size_t i = 0; i < n; ++i) {
    expected.push_back("mask:" + registry.AttributeName(i));
  }
  RequireHeader(path, rows, expected);
  std::vector<PairExample> out;
  for (size_t r = 1; r < rows.size(); ++r) {
    const TsvRow& row = rows[r];
    if (row.cols.size() != 3 + 2 * n) {
      throw FormatError(RowError(path, row, "expected " +
                                                std::to_string(3 + 2 * n) +
                                                " columns, got " +
                                                std::to_string(
                                                    row.cols.size())));
    }
    PairExample ex;
    ex.utt_a = row.cols[0];
    ex.utt_b = row.cols[1];
    if (ex.utt_a.empty() || ex.utt_b.empty()) {
      throw FormatError(RowError(path, row, "empty utterance id"));
    }
    try {
      ex.gender = ParseGender(row.cols[2]);
    } catch (const InputError& e) {
      throw FormatError(RowError(path, row, e.what()));
    }
    ex.labels.resize(n);
    ex.mask.resize(n);
    for (size_t i = 0; i < n; ++i) {
      ex.labels[i] = ParseBit(path, row, row.cols[3 + i]);
      ex.mask[i] = ParseBit(path, row, row.cols[3 + n + i]);
    }
    size_t mask_total = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!ex.mask[i] && ex.labels[i]) {
        throw FormatError(
            RowError(path, row, "label set outside the mask at column " +
                                    std::to_string(3 + i)));
      }
      if (ex.mask[i]) {
        ++mask_total;
        if (registry.GenderOf(i) != ex.gender) {
          throw FormatError(RowError(
              path, row, "mask bit outside the pair's gender block"));
        }
      }
    }
    if (mask_total == 0) {
      throw FormatError(RowError(path, row, "example with empty mask"));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace vtad
