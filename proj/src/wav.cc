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

#include "vtad/wav.h"

#include <cstring>
#include <fstream>

#include "vtad/common.h"

namespace vtad {
namespace {

uint32_t ReadU32Le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

uint16_t ReadU16Le(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | p[1] << 8);
}

void PutU32Le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void PutU16Le(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

WavData ReadWav16Mono(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw InputError("read failed: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();

  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  const unsigned char* data = nullptr;
  uint32_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= n) {
    const unsigned char* id = p + pos;
    uint32_t size = ReadU32Le(p + pos + 4);
    pos += 8;
    if (pos + size > n) throw FormatError("truncated chunk in wav file: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("fmt chunk too small: " + path);
      format = ReadU16Le(p + pos);
      channels = ReadU16Le(p + pos + 2);
      rate = ReadU32Le(p + pos + 4);
      bits = ReadU16Le(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = p + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are word-aligned
  }

  if (!have_fmt || data == nullptr) {
    throw FormatError("wav file missing fmt or data chunk: " + path);
  }
  if (format != 1) {
    throw InputError("unsupported wav encoding (only 16-bit PCM): " + path);
  }
  if (channels != 1) {
    throw InputError("expected mono audio, got " + std::to_string(channels) +
                     " channels: " + path);
  }
  if (bits != 16) {
    throw InputError("expected 16-bit samples, got " + std::to_string(bits) +
                     " bits: " + path);
  }
  if (rate == 0) throw FormatError("wav file declares zero sample rate: " + path);
  if (data_size % 2 != 0) throw FormatError("odd data chunk size: " + path);

  WavData wav;
  wav.sample_rate = rate;
  wav.samples.resize(data_size / 2);
  for (size_t i = 0; i < wav.samples.size(); ++i) {
    wav.samples[i] = static_cast<int16_t>(ReadU16Le(data + 2 * i));
  }
  return wav;
}

void WriteWav16Mono(const std::string& path, const std::vector<int16_t>& samples,
                    uint32_t sample_rate, std::string_view info_comment) {
  if (sample_rate == 0) throw InputError("sample rate must be positive");

  std::string body;
  body.reserve(samples.size() * 2 + 128);

  body += "WAVE";
  body += "fmt ";
  PutU32Le(body, 16);
  PutU16Le(body, 1);  // PCM
  PutU16Le(body, 1);  // mono
  PutU32Le(body, sample_rate);
  PutU32Le(body, sample_rate * 2);  // byte rate
  PutU16Le(body, 2);                // block align
  PutU16Le(body, 16);               // bits

  if (!info_comment.empty()) {
    std::string icmt(info_comment);
    icmt.push_back('\0');
    if (icmt.size() & 1) icmt.push_back('\0');
    body += "LIST";
    PutU32Le(body, static_cast<uint32_t>(4 + 8 + icmt.size()));
    body += "INFO";
    body += "ICMT";
    PutU32Le(body, static_cast<uint32_t>(icmt.size()));
    body += icmt;
  }

  body += "data";
  PutU32Le(body, static_cast<uint32_t>(samples.size() * 2));
  for (int16_t s : samples) {
    PutU16Le(body, static_cast<uint16_t>(s));
  }

  std::string file;
  file.reserve(body.size() + 8);
  file += "RIFF";
  PutU32Le(file, static_cast<uint32_t>(body.size()));
  file += body;
  WriteTextFile(path, file);
}

std::vector<double> SamplesToDouble(const std::vector<int16_t>& samples) {
  std::vector<double> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    out[i] = static_cast<double>(samples[i]) / 32768.0;
  }
  return out;
}

}  // namespace vtad
