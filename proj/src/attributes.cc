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

#include "vtad/attributes.h"

#include <set>
#include <sstream>

#include "vtad/common.h"

namespace vtad {

Gender ParseGender(const std::string& text) {
  if (text == "male") return Gender::kMale;
  if (text == "female") return Gender::kFemale;
  throw InputError("unknown gender '" + text + "' (expected male or female)");
}

std::string GenderName(Gender gender) {
  return gender == Gender::kMale ? "male" : "female";
}

AttributeRegistry::AttributeRegistry(std::vector<std::string> names)
    : names_(std::move(names)) {}

AttributeRegistry AttributeRegistry::Default() {
  return FromNames({
      "Bright", "Thin", "Low", "Magnetic", "Coarse", "Pure", "Slim", "Dark",
      "Hoarse", "Rich", "Soft", "Hard", "Transparent", "Deep", "Round",
      "Flat", "Sweet",
  });
}

AttributeRegistry AttributeRegistry::FromNames(
    std::vector<std::string> names) {
  if (names.empty()) {
    throw ConfigError("attribute registry needs at least one descriptor");
  }
  std::set<std::string> seen;
  for (const std::string& name : names) {
    if (name.empty()) {
      throw ConfigError("attribute registry has an empty descriptor name");
    }
    if (name.find('\t') != std::string::npos ||
        name.find('\n') != std::string::npos ||
        name.find('\r') != std::string::npos) {
      throw ConfigError("descriptor name '" + name +
                        "' contains tab or newline");
    }
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate descriptor name '" + name + "'");
    }
  }
  return AttributeRegistry(std::move(names));
}

AttributeRegistry AttributeRegistry::FromFile(const std::string& path) {
  std::string text = ReadTextFile(path);
  std::vector<std::string> names;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string name = StripSpace(line);
    if (!name.empty()) names.push_back(name);
  }
  try {
    return FromNames(std::move(names));
  } catch (const ConfigError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

size_t AttributeRegistry::Index(const std::string& descriptor,
                                Gender gender) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == descriptor) {
      return gender == Gender::kMale ? i : names_.size() + i;
    }
  }
  throw InputError("unknown descriptor '" + descriptor + "'");
}

const std::string& AttributeRegistry::Descriptor(
    size_t attribute_index) const {
  if (attribute_index >= NumAttributes()) {
    throw ContractError("attribute index out of range");
  }
  return names_[attribute_index % names_.size()];
}

Gender AttributeRegistry::GenderOf(size_t attribute_index) const {
  if (attribute_index >= NumAttributes()) {
    throw ContractError("attribute index out of range");
  }
  return attribute_index < names_.size() ? Gender::kMale : Gender::kFemale;
}

std::string AttributeRegistry::AttributeName(size_t attribute_index) const {
  return GenderName(GenderOf(attribute_index)) + ":" +
         Descriptor(attribute_index);
}

std::string AttributeRegistry::CanonicalText() const {
  std::string out;
  for (const std::string& name : names_) {
    out += name;
    out += '\n';
  }
  return out;
}

}  // namespace vtad
