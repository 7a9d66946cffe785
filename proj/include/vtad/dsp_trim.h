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

#ifndef VTAD_DSP_TRIM_H_
#define VTAD_DSP_TRIM_H_

#include <cstddef>
#include <vector>

namespace vtad {

struct Waveform {
  std::vector<double> samples;     // mono, nominally in [-1, 1]
  double sample_rate = 16000.0;    // Hz
};

// Frame-level RMS intensity in dB relative to the loudest frame (the peak
// frame reads exactly 0 dB; quieter frames are negative).
struct IntensityTrack {
  std::vector<double> frame_db;
  std::vector<double> frame_times;  // frame start times in seconds
  double window_ms = 25.0;
  double hop_ms = 10.0;
};

// Floor applied to all-zero frames (and to anything quieter than -120 dB).
constexpr double kIntensityFloorDb = -120.0;

// One frame per hop; the final partial frame is included, with RMS taken
// over the samples actually present.  Requires window_ms >= hop_ms > 0 and a
// non-empty, finite waveform.
IntensityTrack FrameIntensity(const Waveform& w, double window_ms = 25.0,
                              double hop_ms = 10.0);

struct KeepSpan {
  size_t begin = 0;
  size_t end = 0;       // half-open sample range
  bool bypassed = false;  // true => keep the input unchanged
};

// Locates the leading/trailing silence boundary.  The decision runs on
// non-overlapping hop-length slots: a slot is kept when its RMS exceeds
// (peak slot RMS - threshold_db), and the span runs from the first kept slot
// through the last one, snapped outward to slot sample boundaries.  Slots
// partition the signal, so any slice re-analyzes to exactly the same slot
// values — which is what makes trimming idempotent sample-for-sample and
// keeps every edge within one hop of the detected energy boundary.  A span
// shorter than min_keep_ms (or an all-silent input) bypasses the trim.
KeepSpan ComputeKeepSpan(const Waveform& w, double threshold_db = 40.0,
                         double min_keep_ms = 100.0, double hop_ms = 10.0);

// Removes leading and trailing silence; interior pauses are preserved.  The
// result is always a contiguous slice of the input (or the input itself when
// the bypass rule fires).
Waveform TrimSilence(const Waveform& w, double threshold_db = 40.0,
                     double min_keep_ms = 100.0);

}  // namespace vtad

#endif  // VTAD_DSP_TRIM_H_
