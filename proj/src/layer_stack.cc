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

#include "vtad/layer_stack.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "vtad/common.h"

namespace vtad {
namespace {

constexpr char kMagic[4] = {'L', 'S', 'T', 'K'};
constexpr uint32_t kVersion = 1;

void PutU32Le(std::string* out, uint32_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
  out->push_back(static_cast<char>((v >> 16) & 0xff));
  out->push_back(static_cast<char>((v >> 24) & 0xff));
}

void PutF32Le(std::string* out, float v) {
  uint32_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  PutU32Le(out, bits);
}

// Cursor over an in-memory file image; every read is bounds-checked so a
// truncated file raises FormatError instead of reading garbage.
class Cursor {
 public:
  Cursor(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  uint32_t TakeU32() {
    Need(4);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(data_.data()) + pos_;
    uint32_t v = static_cast<uint32_t>(p[0]) |
                 (static_cast<uint32_t>(p[1]) << 8) |
                 (static_cast<uint32_t>(p[2]) << 16) |
                 (static_cast<uint32_t>(p[3]) << 24);
    pos_ += 4;
    return v;
  }

  float TakeF32() {
    uint32_t bits = TakeU32();
    float v = 0.0f;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  std::string TakeBytes(size_t n) {
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t Remaining() const { return data_.size() - pos_; }

 private:
  void Need(size_t n) {
    if (data_.size() - pos_ < n) {
      throw FormatError("layer stack file truncated: " + path_);
    }
  }

  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void ValidateLayerStack(const LayerStack& stack) {
  if (stack.num_layers == 0 || stack.dim == 0) {
    throw ContractError("layer stack must have positive layers and dim");
  }
  size_t want = static_cast<size_t>(stack.num_layers) * stack.dim;
  if (stack.values.size() != want) {
    throw ContractError("layer stack value count does not match shape");
  }
  CheckFinite(stack.values.data(), stack.values.size(),
              "layer stack '" + stack.utterance_id + "'");
}

void WriteLayerStackFile(const std::string& path, const LayerStack& stack) {
  ValidateLayerStack(stack);
  std::string out;
  out.reserve(20 + stack.utterance_id.size() + 4 * stack.values.size());
  out.append(kMagic, 4);
  PutU32Le(&out, kVersion);
  PutU32Le(&out, stack.num_layers);
  PutU32Le(&out, stack.dim);
  PutU32Le(&out, static_cast<uint32_t>(stack.utterance_id.size()));
  out.append(stack.utterance_id);
  for (float v : stack.values) PutF32Le(&out, v);
  WriteTextFile(path, out);
}

LayerStack ReadLayerStackFile(const std::string& path) {
  std::string data = ReadTextFile(path);
  Cursor cur(data, path);
  std::string magic = cur.TakeBytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("not a layer stack file (bad magic): " + path);
  }
  uint32_t version = cur.TakeU32();
  if (version != kVersion) {
    throw FormatError("unsupported layer stack version " +
                      std::to_string(version) + ": " + path);
  }
  LayerStack stack;
  stack.num_layers = cur.TakeU32();
  stack.dim = cur.TakeU32();
  if (stack.num_layers == 0 || stack.dim == 0) {
    throw FormatError("layer stack file declares empty shape: " + path);
  }
  uint32_t id_len = cur.TakeU32();
  stack.utterance_id = cur.TakeBytes(id_len);
  size_t count = static_cast<size_t>(stack.num_layers) * stack.dim;
  stack.values.resize(count);
  for (size_t i = 0; i < count; ++i) stack.values[i] = cur.TakeF32();
  if (cur.Remaining() != 0) {
    throw FormatError("layer stack file has trailing bytes: " + path);
  }
  for (float v : stack.values) {
    if (!std::isfinite(v)) {
      throw FormatError("layer stack file contains non-finite values: " +
                        path);
    }
  }
  return stack;
}

}  // namespace vtad
