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

#ifndef VTAD_LAYER_STACK_H_
#define VTAD_LAYER_STACK_H_

#include <cstdint>
#include <string>
#include <vector>

namespace vtad {

// Per-utterance feature: one frame-averaged embedding per encoder layer,
// stored row-major (layer-major).  Payload values stay float32 end to end so
// a file round-trip is bit-exact.
struct LayerStack {
  std::string utterance_id;
  uint32_t num_layers = 0;
  uint32_t dim = 0;
  std::vector<float> values;  // num_layers * dim
};

// Checks shape consistency and finiteness; throws ContractError / InputError.
void ValidateLayerStack(const LayerStack& stack);

// On-disk format, all integers little-endian:
//   magic "LSTK" | u32 version=1 | u32 num_layers | u32 dim
//   | u32 id_len | id bytes (UTF-8) | num_layers*dim float32 row-major
// Readers fail closed: wrong magic/version, short payloads, trailing bytes
// and non-finite values all raise FormatError.
void WriteLayerStackFile(const std::string& path, const LayerStack& stack);
LayerStack ReadLayerStackFile(const std::string& path);

}  // namespace vtad

#endif  // VTAD_LAYER_STACK_H_
