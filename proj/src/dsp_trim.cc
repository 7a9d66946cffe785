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

#include "vtad/dsp_trim.h"

#include <algorithm>
#include <cmath>

#include "vtad/common.h"

namespace vtad {
namespace {

void ValidateWaveform(const Waveform& w) {
  if (w.samples.empty()) throw InputError("waveform is empty");
  if (!(w.sample_rate > 0.0) || !std::isfinite(w.sample_rate)) {
    throw InputError("waveform sample rate must be positive");
  }
  CheckFinite(w.samples.data(), w.samples.size(), "waveform");
}

size_t MsToSamples(double ms, double sample_rate) {
  return static_cast<size_t>(std::lround(ms * sample_rate / 1000.0));
}

// RMS per frame; frames start every hop samples and cover up to win samples,
// clipped at the end of the signal.
std::vector<double> FrameRms(const std::vector<double>& x, size_t win, size_t hop) {
  std::vector<double> rms;
  for (size_t start = 0; start < x.size(); start += hop) {
    size_t end = std::min(x.size(), start + win);
    double energy = 0.0;
    for (size_t i = start; i < end; ++i) energy += x[i] * x[i];
    rms.push_back(std::sqrt(energy / static_cast<double>(end - start)));
  }
  return rms;
}

}  // namespace

IntensityTrack FrameIntensity(const Waveform& w, double window_ms, double hop_ms) {
  ValidateWaveform(w);
  if (!(hop_ms > 0.0) || !(window_ms >= hop_ms)) {
    throw ConfigError("frame intensity requires window_ms >= hop_ms > 0");
  }
  size_t win = MsToSamples(window_ms, w.sample_rate);
  size_t hop = MsToSamples(hop_ms, w.sample_rate);
  if (hop == 0 || win == 0) {
    throw ConfigError("window/hop too small for this sample rate");
  }

  std::vector<double> rms = FrameRms(w.samples, win, hop);
  double peak = *std::max_element(rms.begin(), rms.end());

  IntensityTrack track;
  track.window_ms = window_ms;
  track.hop_ms = hop_ms;
  track.frame_db.reserve(rms.size());
  track.frame_times.reserve(rms.size());
  for (size_t k = 0; k < rms.size(); ++k) {
    double db = kIntensityFloorDb;
    if (peak > 0.0 && rms[k] > 0.0) {
      db = std::max(kIntensityFloorDb, 20.0 * std::log10(rms[k] / peak));
    }
    track.frame_db.push_back(db);
    track.frame_times.push_back(static_cast<double>(k * hop) / w.sample_rate);
  }
  return track;
}

KeepSpan ComputeKeepSpan(const Waveform& w, double threshold_db,
                         double min_keep_ms, double hop_ms) {
  ValidateWaveform(w);
  if (!(threshold_db > 0.0)) throw ConfigError("threshold_db must be positive");
  if (!(hop_ms > 0.0)) throw ConfigError("hop_ms must be positive");

  size_t hop = MsToSamples(hop_ms, w.sample_rate);
  if (hop == 0) throw ConfigError("hop too small for this sample rate");

  // Slot-level analysis: window == hop, so slots tile the signal without
  // overlap and a slice of the signal decomposes into exactly these slots.
  IntensityTrack slots = FrameIntensity(w, hop_ms, hop_ms);

  size_t first = slots.frame_db.size(), last = 0;
  bool any = false;
  for (size_t k = 0; k < slots.frame_db.size(); ++k) {
    if (slots.frame_db[k] > -threshold_db) {
      if (!any) first = k;
      last = k;
      any = true;
    }
  }

  KeepSpan span;
  if (!any) {
    // All-silent input: nothing to keep, so leave it unchanged.
    span.begin = 0;
    span.end = w.samples.size();
    span.bypassed = true;
    return span;
  }

  span.begin = first * hop;
  span.end = std::min(w.samples.size(), (last + 1) * hop);

  size_t min_keep = MsToSamples(min_keep_ms, w.sample_rate);
  if (span.end - span.begin < min_keep) {
    span.begin = 0;
    span.end = w.samples.size();
    span.bypassed = true;
  }
  return span;
}

Waveform TrimSilence(const Waveform& w, double threshold_db, double min_keep_ms) {
  KeepSpan span = ComputeKeepSpan(w, threshold_db, min_keep_ms);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + static_cast<ptrdiff_t>(span.begin),
                     w.samples.begin() + static_cast<ptrdiff_t>(span.end));
  return out;
}

}  // namespace vtad
