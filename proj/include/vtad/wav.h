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

#ifndef VTAD_WAV_H_
#define VTAD_WAV_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vtad {

struct WavData {
  std::vector<int16_t> samples;
  uint32_t sample_rate = 0;
};

// Reads a RIFF/WAVE file.  Only 16-bit PCM mono is accepted: multi-channel,
// other sample widths and non-PCM encodings raise InputError; structural
// damage (bad magic, truncated chunks) raises FormatError.  Unknown chunks
// are skipped.
WavData ReadWav16Mono(const std::string& path);

// Writes 16-bit PCM mono.  When info_comment is non-empty it is stored in a
// standard LIST/INFO ICMT chunk, which is how trimmed outputs carry their
// provenance record.
void WriteWav16Mono(const std::string& path, const std::vector<int16_t>& samples,
                    uint32_t sample_rate, std::string_view info_comment = {});

// int16 -> [-1, 1) doubles (divide by 32768).
std::vector<double> SamplesToDouble(const std::vector<int16_t>& samples);

}  // namespace vtad

#endif  // VTAD_WAV_H_
