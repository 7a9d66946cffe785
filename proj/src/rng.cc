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

#include "vtad/rng.h"

#include <cmath>

#include "vtad/common.h"

namespace vtad {
namespace {

// splitmix64 finalizer; spreads low-entropy FNV states over the full range.
uint64_t Avalanche(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t MixU64(uint64_t state, uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  return Fnv1a64(bytes, sizeof(bytes), state);
}

// 0x1f separators prevent ("ab","c") from colliding with ("a","bc").
uint64_t MixStr(uint64_t state, std::string_view s) {
  state = Fnv1a64(s, state);
  const unsigned char sep = 0x1f;
  return Fnv1a64(&sep, 1, state);
}

}  // namespace

uint64_t DeriveSeed(uint64_t base, std::string_view tag) {
  uint64_t h = MixU64(kFnvOffset, base);
  h = MixStr(h, tag);
  return Avalanche(h);
}

uint64_t DeriveSeed(uint64_t base, std::string_view tag, std::string_view key) {
  uint64_t h = MixU64(kFnvOffset, base);
  h = MixStr(h, tag);
  h = MixStr(h, key);
  return Avalanche(h);
}

uint64_t DeriveSeed(uint64_t base, std::string_view tag, uint64_t a) {
  uint64_t h = MixU64(kFnvOffset, base);
  h = MixStr(h, tag);
  h = MixU64(h, a);
  return Avalanche(h);
}

uint64_t DeriveSeed(uint64_t base, std::string_view tag, std::string_view key1,
                    std::string_view key2) {
  uint64_t h = MixU64(kFnvOffset, base);
  h = MixStr(h, tag);
  h = MixStr(h, key1);
  h = MixStr(h, key2);
  return Avalanche(h);
}

uint64_t Rng::Below(uint64_t n) {
  if (n == 0) throw ContractError("Rng::Below: n must be positive");
  return Next() % n;
}

double Rng::Normal() {
  // u1 in (0, 1] so the log is finite.
  double u1 = static_cast<double>((Next() >> 11) + 1) * 0x1.0p-53;
  double u2 = static_cast<double>(Next() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace vtad
