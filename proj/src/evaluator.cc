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

#include "vtad/evaluator.h"

#include <algorithm>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"
#include "vtad/common.h"

namespace vtad {
namespace {

// Scores one pair from precomputed pooled embeddings.
std::vector<double> ScoreFromEmbeddings(Model* model,
                                        const std::vector<double>& ea,
                                        const std::vector<double>& eb) {
  Tensor ep = Tensor::Zeros({1, ea.size() + eb.size()});
  std::copy(ea.begin(), ea.end(), ep.v.begin());
  std::copy(eb.begin(), eb.end(), ep.v.begin() + ea.size());
  Tensor probs = DiffNetForward(&model->diffnet, ep, false, nullptr, nullptr);
  return probs.v;
}

}  // namespace

std::vector<ScoredTrial> ScorePairs(Model* model,
                                    const std::vector<PairExample>& pairs,
                                    FeatureProvider* provider, unsigned jobs) {
  if (model == nullptr || provider == nullptr) {
    throw ContractError("ScorePairs needs a model and a feature provider");
  }
  size_t num_attributes = model->diffnet.config.output_dim;
  for (const PairExample& ex : pairs) {
    if (ex.labels.size() != num_attributes ||
        ex.mask.size() != num_attributes) {
      throw InputError("pair list does not match the model's attribute count");
    }
  }

  // Pass 1 (serial): pooled eval-mode embedding per distinct utterance.
  std::map<std::string, std::vector<double>> embeddings;
  for (const PairExample& ex : pairs) {
    for (const std::string* id : {&ex.utt_a, &ex.utt_b}) {
      if (embeddings.count(*id)) continue;
      LayerStack s = provider->Get(*id);
      if (s.num_layers != model->feature_layers ||
          s.dim != model->feature_dim) {
        throw InputError("layer stack for '" + *id + "' has shape " +
                         std::to_string(s.num_layers) + "x" +
                         std::to_string(s.dim) + ", model expects " +
                         std::to_string(model->feature_layers) + "x" +
                         std::to_string(model->feature_dim));
      }
      embeddings.emplace(
          *id, AstpForward(model->astp, StackToTensor(s), false, nullptr,
                           nullptr));
    }
  }

  // Pass 2: head scoring, fanned out over worker threads. Eval mode reads
  // the parameters without touching them, so sharing the model is safe.
  std::vector<std::vector<ScoredTrial>> per_pair(pairs.size());
  unsigned workers = jobs == 0 ? 1 : jobs;
  workers = std::min<unsigned>(
      workers, static_cast<unsigned>(std::max<size_t>(pairs.size(), 1)));
  auto work = [&](unsigned worker) -> void {
    for (size_t i = worker; i < pairs.size(); i += workers) {
      const PairExample& ex = pairs[i];
      std::vector<double> probs = ScoreFromEmbeddings(
          model, embeddings.at(ex.utt_a), embeddings.at(ex.utt_b));
      for (size_t j = 0; j < num_attributes; ++j) {
        if (!ex.mask[j]) continue;
        per_pair[i].push_back(ScoredTrial{probs[j], ex.labels[j], j});
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<ScoredTrial> trials;
  for (const std::vector<ScoredTrial>& chunk : per_pair) {
    trials.insert(trials.end(), chunk.begin(), chunk.end());
  }
  return trials;
}

double Accuracy(const std::vector<double>& scores,
                const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("score/label length mismatch");
  }
  if (scores.empty()) throw InputError("accuracy over zero trials");
  size_t correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    uint8_t pred = scores[i] >= 0.5 ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(scores.size());
}

double Eer(const std::vector<double>& scores,
           const std::vector<uint8_t>& labels) {
  if (scores.size() != labels.size()) {
    throw ContractError("score/label length mismatch");
  }
  std::vector<double> pos, neg;
  for (size_t i = 0; i < scores.size(); ++i) {
    (labels[i] ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) {
    throw InputError("equal error rate needs trials of both classes");
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double n_pos = static_cast<double>(pos.size());
  double n_neg = static_cast<double>(neg.size());
  // Sweeping the threshold upward takes (far, frr) from (1, 0) toward
  // (0, 1); far − frr is non-increasing, so the first crossing is the one.
  double prev_far = 1.0, prev_diff = 1.0;
  auto at = [&](double theta, double* far, double* frr) {
    // negatives at or above theta are false accepts
    size_t fa = neg.end() -
                std::lower_bound(neg.begin(), neg.end(), theta);
    // positives strictly below theta are false rejects
    size_t fr = std::lower_bound(pos.begin(), pos.end(), theta) - pos.begin();
    *far = static_cast<double>(fa) / n_neg;
    *frr = static_cast<double>(fr) / n_pos;
  };
  for (double theta : thresholds) {
    double far, frr;
    at(theta, &far, &frr);
    double diff = far - frr;
    if (diff == 0.0) return 100.0 * far;
    if (diff < 0.0) {
      double t = prev_diff / (prev_diff - diff);
      return 100.0 * (prev_far + t * (far - prev_far));
    }
    prev_far = far;
    prev_diff = diff;
  }
  // Past every real score: nothing is accepted (far 0, frr 1).
  double t = prev_diff / (prev_diff + 1.0);
  return 100.0 * (prev_far + t * (0.0 - prev_far));
}

double MacroAverage(const std::vector<double>& values) {
  if (values.empty()) throw InputError("average over zero values");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double OverallFromGenderAverages(double male_value, double female_value) {
  return (male_value + female_value) / 2.0;
}

EvalReport Aggregate(const std::vector<ScoredTrial>& trials,
                     const AttributeRegistry& registry) {
  size_t num_attributes = registry.NumAttributes();
  std::vector<std::vector<double>> scores(num_attributes);
  std::vector<std::vector<uint8_t>> labels(num_attributes);
  for (const ScoredTrial& t : trials) {
    if (t.attribute_index >= num_attributes) {
      throw ContractError("trial attribute index out of range");
    }
    scores[t.attribute_index].push_back(t.score);
    labels[t.attribute_index].push_back(t.label);
  }

  EvalReport report;
  report.n_trials = trials.size();
  std::vector<double> accs[2], eers[2];
  for (size_t j = 0; j < num_attributes; ++j) {
    AttributeResult row;
    row.attribute_index = j;
    row.name = registry.AttributeName(j);
    row.n_trials = scores[j].size();
    bool has_pos = false, has_neg = false;
    for (uint8_t y : labels[j]) (y ? has_pos : has_neg) = true;
    row.evaluable = row.n_trials > 0 && has_pos && has_neg;
    if (row.evaluable) {
      row.acc = Accuracy(scores[j], labels[j]);
      row.eer = Eer(scores[j], labels[j]);
      size_t g = registry.GenderOf(j) == Gender::kMale ? 0 : 1;
      accs[g].push_back(row.acc);
      eers[g].push_back(row.eer);
    } else if (row.n_trials == 0) {
      report.flags.push_back("skipped " + row.name + " (no trials)");
    } else {
      report.flags.push_back("skipped " + row.name +
                             " (only one outcome class)");
    }
    report.attributes.push_back(std::move(row));
  }

  GenderSummary* summaries[2] = {&report.male, &report.female};
  for (size_t g = 0; g < 2; ++g) {
    summaries[g]->n_evaluable = accs[g].size();
    summaries[g]->valid = !accs[g].empty();
    if (summaries[g]->valid) {
      summaries[g]->acc = MacroAverage(accs[g]);
      summaries[g]->eer = MacroAverage(eers[g]);
    }
  }
  if (report.male.valid && report.female.valid) {
    report.overall_valid = true;
    report.overall_acc =
        OverallFromGenderAverages(report.male.acc, report.female.acc);
    report.overall_eer =
        OverallFromGenderAverages(report.male.eer, report.female.eer);
  } else if (report.male.valid || report.female.valid) {
    const GenderSummary& only =
        report.male.valid ? report.male : report.female;
    report.overall_valid = true;
    report.overall_acc = only.acc;
    report.overall_eer = only.eer;
  }
  return report;
}

std::string ReportToJson(const EvalReport& report,
                         const std::string& config_hex) {
  nlohmann::json j;
  j["artifact"] = ArtifactVersion();
  j["config"] = config_hex;
  j["n_trials"] = report.n_trials;
  j["attributes"] = nlohmann::json::array();
  for (const AttributeResult& row : report.attributes) {
    nlohmann::json r;
    r["name"] = row.name;
    r["n_trials"] = row.n_trials;
    r["evaluable"] = row.evaluable;
    if (row.evaluable) {
      r["acc"] = row.acc;
      r["eer"] = row.eer;
    } else {
      r["acc"] = nullptr;
      r["eer"] = nullptr;
    }
    j["attributes"].push_back(std::move(r));
  }
  auto gender_json = [](const GenderSummary& s) {
    nlohmann::json g;
    g["n_evaluable"] = s.n_evaluable;
    if (s.valid) {
      g["acc"] = s.acc;
      g["eer"] = s.eer;
    } else {
      g["acc"] = nullptr;
      g["eer"] = nullptr;
    }
    return g;
  };
  j["male"] = gender_json(report.male);
  j["female"] = gender_json(report.female);
  if (report.overall_valid) {
    j["overall"]["acc"] = report.overall_acc;
    j["overall"]["eer"] = report.overall_eer;
  } else {
    j["overall"]["acc"] = nullptr;
    j["overall"]["eer"] = nullptr;
  }
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

std::string ReportToTable(const EvalReport& report) {
  std::string out;
  size_t width = 24;
  for (const AttributeResult& row : report.attributes) {
    width = std::max(width, row.name.size() + 2);
  }
  auto line = [&](const std::string& name, const std::string& acc,
                  const std::string& eer) {
    std::string name_col = name;
    if (name_col.size() < width) name_col.resize(width, ' ');
    std::string acc_col = acc;
    if (acc_col.size() < 10) acc_col.resize(10, ' ');
    out += name_col + acc_col + eer + "\n";
  };
  line("attribute", "acc", "eer");
  auto emit_gender = [&](Gender gender, const GenderSummary& summary,
                         const std::string& label) {
    for (const AttributeResult& row : report.attributes) {
      if (row.n_trials == 0) continue;
      Gender g = row.name.compare(0, 5, "male:") == 0 ? Gender::kMale
                                                      : Gender::kFemale;
      if (g != gender) continue;
      if (row.evaluable) {
        line(row.name, Format2(row.acc), Format2(row.eer));
      } else {
        line(row.name, "-", "-");
      }
    }
    if (summary.valid) {
      line(label, Format2(summary.acc), Format2(summary.eer));
    } else {
      line(label, "-", "-");
    }
  };
  emit_gender(Gender::kMale, report.male, "male average");
  emit_gender(Gender::kFemale, report.female, "female average");
  if (report.overall_valid) {
    line("overall", Format2(report.overall_acc), Format2(report.overall_eer));
  } else {
    line("overall", "-", "-");
  }
  for (const std::string& flag : report.flags) {
    out += "# " + flag + "\n";
  }
  return out;
}

}  // namespace vtad
