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

#ifndef VTAD_EVALUATOR_H_
#define VTAD_EVALUATOR_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vtad/attributes.h"
#include "vtad/feature_provider.h"
#include "vtad/pairs.h"
#include "vtad/trainer.h"

namespace vtad {

// One masked attribute of one scored pair: the head's probability that the
// second utterance is the stronger one, plus the reference answer.
struct ScoredTrial {
  double score = 0.0;
  uint8_t label = 0;
  size_t attribute_index = 0;
};

// Scores every masked attribute of every pair in eval mode. Layer stacks are
// fetched once per utterance (serially — providers may shell out); pair
// scoring fans out over `jobs` worker threads (0 or 1 = serial). Trials are
// returned in pair order, then attribute order, regardless of `jobs`.
std::vector<ScoredTrial> ScorePairs(Model* model,
                                    const std::vector<PairExample>& pairs,
                                    FeatureProvider* provider, unsigned jobs);

// Percentage of trials whose thresholded score (>= 0.5 → 1) matches the
// label. Empty input → InputError.
double Accuracy(const std::vector<double>& scores,
                const std::vector<uint8_t>& labels);

// Equal error rate as a percentage. Sweeps the distinct scores as candidate
// thresholds (false-accept = negatives at or above, false-reject = positives
// below) and interpolates linearly between the two operating points that
// bracket the crossing. Requires both classes → InputError otherwise.
double Eer(const std::vector<double>& scores,
           const std::vector<uint8_t>& labels);

// Unweighted mean — the averaging rule used for per-gender summary rows.
// Empty input → InputError.
double MacroAverage(const std::vector<double>& values);

// The overall row: arithmetic mean of the two per-gender averages.
double OverallFromGenderAverages(double male_value, double female_value);

struct AttributeResult {
  size_t attribute_index = 0;
  std::string name;        // e.g. "male:Bright"
  size_t n_trials = 0;
  bool evaluable = false;  // has trials of both outcome classes
  double acc = 0.0;        // meaningful iff evaluable
  double eer = 0.0;        // meaningful iff evaluable
};

struct GenderSummary {
  size_t n_evaluable = 0;
  bool valid = false;  // at least one evaluable attribute
  double acc = 0.0;    // unweighted mean over evaluable attributes
  double eer = 0.0;
};

struct EvalReport {
  std::vector<AttributeResult> attributes;  // one row per registry slot
  GenderSummary male;
  GenderSummary female;
  bool overall_valid = false;
  double overall_acc = 0.0;  // mean of the two gender summaries
  double overall_eer = 0.0;
  std::vector<std::string> flags;  // attributes excluded from the averages
  size_t n_trials = 0;
};

// Buckets trials per attribute, computes per-attribute accuracy/EER, macro
// gender averages over the evaluable attributes, and the overall row as the
// mean of the two gender averages (or the single valid one).
EvalReport Aggregate(const std::vector<ScoredTrial>& trials,
                     const AttributeRegistry& registry);

// Machine-readable report. `config_hex` stamps which model configuration
// produced the scores.
std::string ReportToJson(const EvalReport& report,
                         const std::string& config_hex);

// Human-readable fixed-point table (two decimals), one row per attribute,
// then per-gender averages and the overall line.
std::string ReportToTable(const EvalReport& report);

}  // namespace vtad

#endif  // VTAD_EVALUATOR_H_
