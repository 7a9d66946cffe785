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

#include "vtad/checkpoint.h"

#include <cmath>
#include <cstring>

#include "vtad/common.h"

namespace vtad {
namespace {

constexpr char kMagic[4] = {'V', 'T', 'C', 'K'};
constexpr uint32_t kVersion = 1;
// Byte offset of the 8-byte fingerprint field (right after magic+version);
// these bytes are skipped by the content hash.
constexpr size_t kFingerprintOffset = 8;

void PutU32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void PutU64(std::string* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void PutF64(std::string* out, double v) {
  uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(bits));
  PutU64(out, bits);
}

class Cursor {
 public:
  Cursor(const std::string& data, const std::string& path)
      : data_(data), path_(path) {}

  uint32_t TakeU32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  uint64_t TakeU64() {
    Need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(
               static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double TakeF64() {
    uint64_t bits = TakeU64();
    double v = 0.0;
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
      throw FormatError("checkpoint file truncated: " + path_);
    }
  }

  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

// Content hash over the file image minus the fingerprint field and the
// trailing hash itself.
uint64_t ContentHash(const std::string& image, size_t payload_end) {
  uint64_t h = kFnvOffset;
  h = Fnv1a64(image.data(), kFingerprintOffset, h);
  h = Fnv1a64(image.data() + kFingerprintOffset + 8,
              payload_end - kFingerprintOffset - 8, h);
  return h;
}

}  // namespace

uint64_t ConfigFingerprint(const std::string& config_text,
                           const std::string& registry_text) {
  uint64_t h = kFnvOffset;
  h = Fnv1a64(config_text.data(), config_text.size(), h);
  h = Fnv1a64("\x1f", 1, h);
  h = Fnv1a64(registry_text.data(), registry_text.size(), h);
  return h;
}

uint64_t Checkpoint::Fingerprint() const {
  return ConfigFingerprint(config_text, registry_text);
}

const Tensor& Checkpoint::Find(const std::string& name) const {
  for (const auto& [tensor_name, tensor] : tensors) {
    if (tensor_name == name) return tensor;
  }
  throw FormatError("checkpoint is missing tensor '" + name + "'");
}

bool Checkpoint::Has(const std::string& name) const {
  for (const auto& [tensor_name, tensor] : tensors) {
    if (tensor_name == name) return true;
  }
  return false;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::string out;
  out.append(kMagic, 4);
  PutU32(&out, kVersion);
  PutU64(&out, checkpoint.Fingerprint());
  PutU32(&out, static_cast<uint32_t>(checkpoint.config_text.size()));
  out.append(checkpoint.config_text);
  PutU32(&out, static_cast<uint32_t>(checkpoint.registry_text.size()));
  out.append(checkpoint.registry_text);
  PutU32(&out, checkpoint.epoch);
  PutU64(&out, checkpoint.global_step);
  PutU64(&out, checkpoint.total_steps);
  PutU32(&out, checkpoint.feature_layers);
  PutU32(&out, checkpoint.feature_dim);
  PutU32(&out, static_cast<uint32_t>(checkpoint.tensors.size()));
  for (const auto& [name, tensor] : checkpoint.tensors) {
    PutU32(&out, static_cast<uint32_t>(name.size()));
    out.append(name);
    PutU32(&out, static_cast<uint32_t>(tensor.shape.size()));
    for (size_t d : tensor.shape) PutU32(&out, static_cast<uint32_t>(d));
    for (double v : tensor.v) PutF64(&out, v);
  }
  PutU64(&out, ContentHash(out, out.size()));
  WriteTextFile(path, out);
}

Checkpoint LoadCheckpoint(const std::string& path, bool force) {
  std::string data = ReadTextFile(path);
  if (data.size() < 4 + 4 + 8 + 8) {
    throw FormatError("checkpoint file truncated: " + path);
  }
  Cursor cur(data, path);
  std::string magic = cur.TakeBytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  uint32_t version = cur.TakeU32();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version) + ": " + path);
  }
  uint64_t stored_fingerprint = cur.TakeU64();
  Checkpoint c;
  c.config_text = cur.TakeBytes(cur.TakeU32());
  c.registry_text = cur.TakeBytes(cur.TakeU32());
  c.epoch = cur.TakeU32();
  c.global_step = cur.TakeU64();
  c.total_steps = cur.TakeU64();
  c.feature_layers = cur.TakeU32();
  c.feature_dim = cur.TakeU32();
  uint32_t tensor_count = cur.TakeU32();
  for (uint32_t i = 0; i < tensor_count; ++i) {
    std::string name = cur.TakeBytes(cur.TakeU32());
    uint32_t rank = cur.TakeU32();
    if (rank == 0 || rank > 8) {
      throw FormatError("checkpoint tensor '" + name + "' has bad rank: " +
                        path);
    }
    std::vector<size_t> shape(rank);
    size_t count = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = cur.TakeU32();
      if (shape[d] == 0) {
        throw FormatError("checkpoint tensor '" + name +
                          "' has a zero dimension: " + path);
      }
      count *= shape[d];
    }
    Tensor t = Tensor::Zeros(shape);
    for (size_t j = 0; j < count; ++j) t.v[j] = cur.TakeF64();
    for (double v : t.v) {
      if (!std::isfinite(v)) {
        throw FormatError("checkpoint tensor '" + name +
                          "' contains non-finite values: " + path);
      }
    }
    c.tensors.emplace_back(std::move(name), std::move(t));
  }
  if (cur.Remaining() != 8) {
    throw FormatError("checkpoint file has trailing bytes: " + path);
  }
  uint64_t stored_hash = cur.TakeU64();
  if (stored_hash != ContentHash(data, data.size() - 8)) {
    throw FormatError("checkpoint content hash mismatch (file damaged): " +
                      path);
  }
  if (stored_fingerprint != c.Fingerprint() && !force) {
    throw FormatError(
        "checkpoint fingerprint does not match its embedded configuration "
        "(use force to load anyway): " +
        path);
  }
  return c;
}

}  // namespace vtad
