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

#ifndef VTAD_ATTRIBUTES_H_
#define VTAD_ATTRIBUTES_H_

#include <cstddef>
#include <string>
#include <vector>

namespace vtad {

enum class Gender { kMale, kFemale };

// Strict: accepts exactly "male" or "female"; anything else is InputError.
Gender ParseGender(const std::string& text);
std::string GenderName(Gender gender);

// Ordered list of timbre descriptor names.  Each descriptor yields one
// attribute per gender; attribute indices lay out all male attributes first
// (index = descriptor position) followed by all female attributes
// (index = descriptor count + position).
class AttributeRegistry {
 public:
  // The stock 17-descriptor registry used throughout the tools.
  static AttributeRegistry Default();
  // Registry from explicit names; names must be unique, non-empty, and free
  // of tabs/newlines (they are embedded in TSV files).
  static AttributeRegistry FromNames(std::vector<std::string> names);
  // One descriptor per line; '#' starts a comment; blank lines ignored.
  static AttributeRegistry FromFile(const std::string& path);

  size_t NumDescriptors() const { return names_.size(); }
  size_t NumAttributes() const { return 2 * names_.size(); }

  // Throws InputError for unknown descriptors.
  size_t Index(const std::string& descriptor, Gender gender) const;

  // Throws ContractError for out-of-range attribute indices.
  const std::string& Descriptor(size_t attribute_index) const;
  Gender GenderOf(size_t attribute_index) const;
  // "male:Bright", "female:Slim", ... for flat listings.
  std::string AttributeName(size_t attribute_index) const;

  const std::vector<std::string>& Names() const { return names_; }
  // Stable text form (one name per line) for fingerprinting and checkpoints.
  std::string CanonicalText() const;

 private:
  explicit AttributeRegistry(std::vector<std::string> names);
  std::vector<std::string> names_;
};

}  // namespace vtad

#endif  // VTAD_ATTRIBUTES_H_
