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

#ifndef VTAD_CONFIG_H_
#define VTAD_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

namespace vtad {

// Flat key=value syntax: one assignment per line, '#' starts a comment,
// blank lines ignored, duplicate keys rejected.
std::map<std::string, std::string> ParseKeyValueText(const std::string& text,
                                                     const std::string&
                                                         origin);
std::map<std::string, std::string> ParseKeyValueFile(const std::string& path);

// Strict scalar conversions; `what` names the option in error messages.
int64_t ToInt64(const std::string& value, const std::string& what);
uint64_t ToUint64(const std::string& value, const std::string& what);
double ToDouble(const std::string& value, const std::string& what);
bool ToBool(const std::string& value, const std::string& what);

}  // namespace vtad

#endif  // VTAD_CONFIG_H_
