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

#ifndef VTAD_CHECKPOINT_H_
#define VTAD_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vtad/tensor.h"

namespace vtad {

// Serialized training state: the canonical config and registry text it was
// produced under, progress counters, feature-shape expectations, and every
// tensor (model parameters, batch-norm buffers, optimizer moments) by name.
struct Checkpoint {
  std::string config_text;    // canonical key=value training config
  std::string registry_text;  // one descriptor per line
  uint32_t epoch = 0;         // completed epochs
  uint64_t global_step = 0;
  uint64_t total_steps = 0;
  uint32_t feature_layers = 0;
  uint32_t feature_dim = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;

  // Hash of (config_text, registry_text); a loaded checkpoint may only be
  // used with a matching current configuration unless forced.
  uint64_t Fingerprint() const;

  const Tensor& Find(const std::string& name) const;  // FormatError if absent
  bool Has(const std::string& name) const;
};

uint64_t ConfigFingerprint(const std::string& config_text,
                           const std::string& registry_text);

// Binary file, little-endian, with a trailing content hash.  The stored
// fingerprint field is excluded from the content hash so a fingerprint
// mismatch stays a forceable condition while payload damage never is.
void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint);

// Verifies structure and content hash (FormatError on damage) and that the
// stored fingerprint matches the embedded config/registry (forceable with
// `force`).
Checkpoint LoadCheckpoint(const std::string& path, bool force = false);

}  // namespace vtad

#endif  // VTAD_CHECKPOINT_H_
