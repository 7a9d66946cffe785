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

#ifndef VTAD_RNG_H_
#define VTAD_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace vtad {

// Every stochastic choice in the pipeline flows from one user-visible seed
// through DeriveSeed(seed, tag, ...).  Each consumer gets its own stream, so
// runs with equal configs replay bit-identically — including when training
// resumes from a checkpoint, because per-epoch and per-step streams are
// derived rather than carried over as engine state.
uint64_t DeriveSeed(uint64_t base, std::string_view tag);
uint64_t DeriveSeed(uint64_t base, std::string_view tag, std::string_view key);
uint64_t DeriveSeed(uint64_t base, std::string_view tag, uint64_t a);
uint64_t DeriveSeed(uint64_t base, std::string_view tag, std::string_view key1,
                    std::string_view key2);

// mt19937_64 with hand-rolled value conversions.  The standard distribution
// adaptors are implementation-defined, so converting raw bits ourselves keeps
// generated values identical under any standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double U01() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * U01(); }

  // Uniform integer in [0, n).  n must be positive; the modulo bias at
  // 64-bit width is far below anything observable.
  uint64_t Below(uint64_t n);

  // Standard normal via Box-Muller.  Consumes exactly two draws per call and
  // keeps no spare, which keeps replay trivial.
  double Normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace vtad

#endif  // VTAD_RNG_H_
