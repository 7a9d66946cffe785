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

#include "vtad/feature_provider.h"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vtad/common.h"
#include "vtad/rng.h"

namespace vtad {
namespace {

class FileProvider : public FeatureProvider {
 public:
  explicit FileProvider(std::string root) : root_(std::move(root)) {
    if (root_.empty()) {
      throw ConfigError("file feature backend requires a root directory");
    }
  }

  LayerStack Get(const std::string& utterance_id) override {
    std::filesystem::path path =
        std::filesystem::path(root_) / (utterance_id + ".lstk");
    if (!std::filesystem::exists(path)) {
      throw InputError("no layer stack file for utterance '" + utterance_id +
                       "' under " + root_);
    }
    LayerStack stack = ReadLayerStackFile(path.string());
    if (stack.utterance_id != utterance_id) {
      throw InputError("layer stack file " + path.string() +
                       " is stamped for utterance '" + stack.utterance_id +
                       "', expected '" + utterance_id + "'");
    }
    return stack;
  }

 private:
  std::string root_;
};

class SyntheticProvider : public FeatureProvider {
 public:
  explicit SyntheticProvider(const ProviderConfig& config) : config_(config) {
    if (config_.layers == 0 || config_.dim == 0) {
      throw ConfigError("synthetic feature backend needs positive shape");
    }
  }

  LayerStack Get(const std::string& utterance_id) override {
    std::vector<double> signal;
    auto it = config_.signals.find(utterance_id);
    if (it != config_.signals.end()) {
      signal = it->second;
    } else {
      size_t n = config_.signals.empty()
                     ? kDefaultSignalLength
                     : config_.signals.begin()->second.size();
      signal = DeriveSignal(utterance_id, config_.seed, n);
    }
    return SynthLayerStack(utterance_id, config_.seed, signal, config_.layers,
                           config_.dim, config_.noise);
  }

 private:
  static constexpr size_t kDefaultSignalLength = 34;
  ProviderConfig config_;
};

std::string ShellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

std::string Substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value) {
  std::string out;
  size_t pos = 0;
  while (true) {
    size_t hit = tmpl.find(key, pos);
    if (hit == std::string::npos) {
      out += tmpl.substr(pos);
      return out;
    }
    out += tmpl.substr(pos, hit - pos);
    out += value;
    pos = hit + key.size();
  }
}

class ExternalProvider : public FeatureProvider {
 public:
  explicit ExternalProvider(const ProviderConfig& config)
      : command_(config.command), wav_dir_(config.wav_dir) {
    if (command_.empty()) {
      throw EnvironmentError(
          "external feature backend requires an encoder command with {wav} "
          "and {out} placeholders");
    }
    if (command_.find("{wav}") == std::string::npos ||
        command_.find("{out}") == std::string::npos) {
      throw ConfigError(
          "encoder command must contain {wav} and {out} placeholders");
    }
  }

  LayerStack Get(const std::string& utterance_id) override {
    std::filesystem::path wav =
        std::filesystem::path(wav_dir_) / (utterance_id + ".wav");
    if (!std::filesystem::exists(wav)) {
      throw InputError("no waveform for utterance '" + utterance_id +
                       "' under " + wav_dir_);
    }
    std::string token = UniqueToken();
    std::filesystem::path out = std::filesystem::temp_directory_path() /
                                ("vtad_enc_" + token + ".lstk");
    std::string cmd = Substitute(command_, "{wav}", ShellQuote(wav.string()));
    cmd = Substitute(cmd, "{out}", ShellQuote(out.string()));
    int rc = std::system(cmd.c_str());
    if (rc != 0) {
      std::error_code ec;
      std::filesystem::remove(out, ec);
      throw EnvironmentError("encoder command failed (exit status " +
                             std::to_string(rc) + "): " + cmd);
    }
    if (!std::filesystem::exists(out)) {
      throw EnvironmentError("encoder command produced no output: " + cmd);
    }
    LayerStack stack = ReadLayerStackFile(out.string());
    std::error_code ec;
    std::filesystem::remove(out, ec);
    // External tools do not know our utterance ids; stamp the requested one.
    stack.utterance_id = utterance_id;
    ValidateLayerStack(stack);
    return stack;
  }

 private:
  static std::string UniqueToken() {
    static std::atomic<uint64_t> counter{0};
    std::random_device rd;
    uint64_t tag = (static_cast<uint64_t>(rd()) << 32) ^ rd();
    return ToHex(tag) + "_" + std::to_string(counter.fetch_add(1));
  }

  std::string command_;
  std::string wav_dir_;
};

}  // namespace

std::unique_ptr<FeatureProvider> MakeProvider(const ProviderConfig& config) {
  if (config.backend == "file") {
    return std::make_unique<FileProvider>(config.root);
  }
  if (config.backend == "synthetic") {
    return std::make_unique<SyntheticProvider>(config);
  }
  if (config.backend == "external") {
    return std::make_unique<ExternalProvider>(config);
  }
  throw ConfigError("unknown feature backend '" + config.backend +
                    "' (expected file, synthetic, or external)");
}

LayerStack SynthLayerStack(const std::string& utterance_id, uint64_t seed,
                           const std::vector<double>& signal,
                           uint32_t num_layers, uint32_t dim, double noise) {
  if (num_layers == 0 || dim == 0) {
    throw ConfigError("synthetic layer stack needs positive shape");
  }
  if (signal.size() > dim) {
    throw ConfigError("synthetic dim " + std::to_string(dim) +
                      " too small for signal of length " +
                      std::to_string(signal.size()));
  }
  CheckFinite(signal.data(), signal.size(), "synthetic signal");
  Rng rng(DeriveSeed(seed, "synth-stack", utterance_id));
  LayerStack stack;
  stack.utterance_id = utterance_id;
  stack.num_layers = num_layers;
  stack.dim = dim;
  size_t count = static_cast<size_t>(num_layers) * dim;
  stack.values.resize(count);
  for (size_t i = 0; i < count; ++i) {
    double value = noise * rng.Normal();
    size_t channel = i % dim;
    if (channel < signal.size()) value += signal[channel];
    stack.values[i] = static_cast<float>(value);
  }
  ValidateLayerStack(stack);
  return stack;
}

std::vector<double> DeriveSignal(const std::string& utterance_id,
                                 uint64_t seed, size_t num_attributes) {
  Rng rng(DeriveSeed(seed, "synth-signal", utterance_id));
  std::vector<double> signal(num_attributes);
  for (double& v : signal) v = rng.Uniform(-1.0, 1.0);
  return signal;
}

std::map<std::string, std::vector<double>> LoadSignalsFile(
    const std::string& path, size_t num_attributes) {
  std::string text = ReadTextFile(path);
  std::map<std::string, std::vector<double>> out;
  std::istringstream lines(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = StripSpace(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::vector<std::string> cols = SplitTabs(line);
    if (cols.size() != num_attributes + 1) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(num_attributes + 1) +
                        " tab-separated columns, got " +
                        std::to_string(cols.size()));
    }
    std::string id = StripSpace(cols[0]);
    if (id.empty()) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": empty utterance id");
    }
    std::vector<double> signal(num_attributes);
    for (size_t i = 0; i < num_attributes; ++i) {
      try {
        size_t used = 0;
        signal[i] = std::stod(cols[i + 1], &used);
        if (used != StripSpace(cols[i + 1]).size() &&
            used != cols[i + 1].size()) {
          throw std::invalid_argument("trailing junk");
        }
      } catch (const std::exception&) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": bad number '" + cols[i + 1] + "'");
      }
      if (!std::isfinite(signal[i])) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": non-finite signal value");
      }
    }
    if (!out.emplace(id, std::move(signal)).second) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": duplicate utterance id '" + id + "'");
    }
  }
  return out;
}

}  // namespace vtad
