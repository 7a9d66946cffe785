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

#include "vtad/config.h"

#include <cmath>
#include <sstream>

#include "vtad/common.h"

namespace vtad {

std::map<std::string, std::string> ParseKeyValueText(
    const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream lines(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string stripped = StripSpace(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw FormatError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value");
    }
    std::string key = StripSpace(stripped.substr(0, eq));
    std::string value = StripSpace(stripped.substr(eq + 1));
    if (key.empty()) {
      throw FormatError(origin + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw FormatError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
  }
  return out;
}

std::map<std::string, std::string> ParseKeyValueFile(const std::string& path) {
  return ParseKeyValueText(ReadTextFile(path), path);
}

namespace {

void RequireFullConsumption(const std::string& value, size_t used,
                            const std::string& what) {
  if (used != value.size()) {
    throw ConfigError("bad value for " + what + ": '" + value + "'");
  }
}

}  // namespace

int64_t ToInt64(const std::string& value, const std::string& what) {
  try {
    size_t used = 0;
    long long v = std::stoll(value, &used);
    RequireFullConsumption(value, used, what);
    return static_cast<int64_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + what + ": '" + value + "'");
  }
}

uint64_t ToUint64(const std::string& value, const std::string& what) {
  int64_t v = ToInt64(value, what);
  if (v < 0) {
    throw ConfigError(what + " must be non-negative, got '" + value + "'");
  }
  return static_cast<uint64_t>(v);
}

double ToDouble(const std::string& value, const std::string& what) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    RequireFullConsumption(value, used, what);
    if (!std::isfinite(v)) {
      throw ConfigError(what + " must be finite, got '" + value + "'");
    }
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + what + ": '" + value + "'");
  }
}

bool ToBool(const std::string& value, const std::string& what) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad value for " + what + ": '" + value +
                    "' (expected true/false)");
}

}  // namespace vtad
