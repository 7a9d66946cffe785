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

#ifndef VTAD_FEATURE_PROVIDER_H_
#define VTAD_FEATURE_PROVIDER_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "vtad/layer_stack.h"

namespace vtad {

// Source of per-utterance layer stacks.  The heavy encoder itself lives
// outside this project; providers either load precomputed stacks from disk,
// synthesize deterministic stand-ins, or shell out to an external encoder.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;

  // Returns the layer stack for `utterance_id`; throws on failure
  // (InputError for unknown ids, FormatError for damaged files,
  // EnvironmentError when an external tool is missing or fails).
  virtual LayerStack Get(const std::string& utterance_id) = 0;
};

struct ProviderConfig {
  std::string backend = "file";  // file | synthetic | external

  // file backend: directory containing <utterance_id>.lstk.
  std::string root;

  // synthetic backend.
  uint64_t seed = 42;
  uint32_t layers = 12;
  uint32_t dim = 64;
  double noise = 0.05;
  // Optional per-utterance attribute signals; utterances not listed get a
  // signal derived deterministically from (seed, id).
  std::map<std::string, std::vector<double>> signals;

  // external backend: command template with {wav} and {out} placeholders,
  // and the directory containing <utterance_id>.wav.
  std::string command;
  std::string wav_dir;
};

std::unique_ptr<FeatureProvider> MakeProvider(const ProviderConfig& config);

// Deterministic synthetic stack: Gaussian noise scaled by `noise`, generated
// layer-major from a stream derived from (seed, "synth-stack", id), with
// `signal[c]` added to channel c of every layer for the leading attribute
// channels.  `dim` must cover the signal length.
LayerStack SynthLayerStack(const std::string& utterance_id, uint64_t seed,
                           const std::vector<double>& signal,
                           uint32_t num_layers, uint32_t dim, double noise);

// Derived per-utterance signal: one U(-1,1) draw per attribute from a stream
// seeded with (seed, "synth-signal", id).
std::vector<double> DeriveSignal(const std::string& utterance_id,
                                 uint64_t seed, size_t num_attributes);

// Parses a signals TSV: utterance_id followed by one column per attribute.
// '#' lines are comments.  Throws FormatError on malformed rows.
std::map<std::string, std::vector<double>> LoadSignalsFile(
    const std::string& path, size_t num_attributes);

}  // namespace vtad

#endif  // VTAD_FEATURE_PROVIDER_H_
