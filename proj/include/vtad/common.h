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

#ifndef VTAD_COMMON_H_
#define VTAD_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vtad {

// Error taxonomy shared by the whole library. The CLI maps every category to
// a non-zero exit status; tests assert on the concrete type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unusable user data: audio, manifests, pair lists, ids.
class InputError : public Error {
 public:
  using Error::Error;
};

// Structural violations in files we read or write (magic, sizes, checksums).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Internal shape or invariant breaches between components.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A requested capability is not available in this installation.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

// Version string embedded in provenance headers of every produced file.
const char* ArtifactVersion();

// FNV-1a, 64 bit.  Stable across platforms; used for config fingerprints,
// derived seeds and file integrity hashes.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
uint64_t Fnv1a64(const void* data, size_t size, uint64_t state = kFnvOffset);
uint64_t Fnv1a64(std::string_view s, uint64_t state = kFnvOffset);

std::string ToHex(uint64_t v);

// Throw InputError if any element is NaN or infinite.
void CheckFinite(const double* v, size_t n, const std::string& what);
void CheckFinite(const float* v, size_t n, const std::string& what);

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, std::string_view text);

std::vector<std::string> SplitTabs(std::string_view line);
std::string StripSpace(std::string_view s);

// Render a double with enough digits to round-trip bit-exactly; log and
// report comparisons rely on this being deterministic.
std::string FormatDouble(double v);

// Fixed two-decimal rendering used by human-readable metric tables.
std::string Format2(double v);

}  // namespace vtad

#endif  // VTAD_COMMON_H_
