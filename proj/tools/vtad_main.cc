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
//
// Command-line entry point wiring the pipeline: trim silence, extract layer
// stacks, build comparison pairs, train, evaluate, predict, and check split
// hygiene.  Exit codes: 0 success, 1 runtime/data error or split violation,
// 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "vtad/attributes.h"
#include "vtad/checkpoint.h"
#include "vtad/common.h"
#include "vtad/config.h"
#include "vtad/dsp_trim.h"
#include "vtad/evaluator.h"
#include "vtad/feature_provider.h"
#include "vtad/layer_stack.h"
#include "vtad/pairs.h"
#include "vtad/trainer.h"
#include "vtad/wav.h"

namespace {

using vtad::AttributeRegistry;

std::string ProvenanceLine(const std::string& config_text) {
  return std::string(vtad::ArtifactVersion()) + " config=" +
         vtad::ToHex(vtad::Fnv1a64(config_text));
}

AttributeRegistry LoadRegistry(const std::string& path) {
  if (path.empty()) return AttributeRegistry::Default();
  return AttributeRegistry::FromFile(path);
}

// Feature-backend flags shared by extract, train, eval, and predict.
struct ProviderCli {
  std::string backend = "file";
  std::string features;
  uint64_t feature_seed = 42;
  uint32_t layers = 12;
  uint32_t dim = 64;
  double noise = 0.05;
  std::string signals_path;
  std::string command;
  std::string wav_dir;

  void Register(CLI::App* sub) {
    sub->add_option("--backend", backend,
                    "feature backend: file, synthetic, or external")
        ->capture_default_str();
    sub->add_option("--features", features,
                    "directory of <utterance_id>.lstk stacks (file backend)");
    sub->add_option("--feature-seed", feature_seed,
                    "synthetic backend base seed")
        ->capture_default_str();
    sub->add_option("--layers", layers, "synthetic stack layer count")
        ->capture_default_str();
    sub->add_option("--dim", dim, "synthetic stack channels per layer")
        ->capture_default_str();
    sub->add_option("--noise", noise, "synthetic backend noise scale")
        ->capture_default_str();
    sub->add_option("--signals", signals_path,
                    "TSV of per-utterance attribute signals (synthetic)");
    sub->add_option("--command", command,
                    "encoder command template with {wav} and {out} "
                    "placeholders (external backend)");
    sub->add_option("--wav-dir", wav_dir,
                    "directory of <utterance_id>.wav (external backend)");
  }

  vtad::ProviderConfig Build(const AttributeRegistry& registry) const {
    vtad::ProviderConfig pc;
    pc.backend = backend;
    pc.root = features;
    pc.seed = feature_seed;
    pc.layers = layers;
    pc.dim = dim;
    pc.noise = noise;
    if (!signals_path.empty()) {
      pc.signals =
          vtad::LoadSignalsFile(signals_path, registry.NumAttributes());
    }
    pc.command = command;
    pc.wav_dir = wav_dir;
    return pc;
  }
};

// ---------------------------------------------------------------------------
// trim

struct TrimCli {
  std::string in_path;
  std::string out_path;
  double threshold_db = 40.0;
  double min_keep_ms = 100.0;

  void Register(CLI::App* sub) {
    sub->add_option("--in", in_path, "input WAV (16-bit PCM mono)")
        ->required();
    sub->add_option("--out", out_path, "output WAV")->required();
    sub->add_option("--threshold-db", threshold_db,
                    "keep frames within this many dB of the loudest frame")
        ->capture_default_str();
    sub->add_option("--min-keep-ms", min_keep_ms,
                    "bypass trimming when the kept span would be shorter "
                    "than this many milliseconds")
        ->capture_default_str();
  }

  int Run() const {
    vtad::WavData wav = vtad::ReadWav16Mono(in_path);
    vtad::Waveform w;
    w.samples = vtad::SamplesToDouble(wav.samples);
    w.sample_rate = static_cast<double>(wav.sample_rate);
    vtad::KeepSpan span =
        vtad::ComputeKeepSpan(w, threshold_db, min_keep_ms);
    std::vector<int16_t> kept(wav.samples.begin() + span.begin,
                              wav.samples.begin() + span.end);
    std::string config_text = "tool=trim\nthreshold_db=" +
                              vtad::FormatDouble(threshold_db) +
                              "\nmin_keep_ms=" +
                              vtad::FormatDouble(min_keep_ms) + "\n";
    vtad::WriteWav16Mono(out_path, kept, wav.sample_rate,
                         ProvenanceLine(config_text));
    if (span.bypassed) {
      std::cout << "bypassed: kept all " << wav.samples.size()
                << " samples\n";
    } else {
      std::cout << "kept [" << span.begin << ", " << span.end << ") of "
                << wav.samples.size() << " samples\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// extract

struct ExtractCli {
  std::string manifest_path;
  std::string out_dir;
  std::string registry_path;
  ProviderCli provider;

  void Register(CLI::App* sub) {
    sub->add_option("--manifest", manifest_path,
                    "utterance manifest TSV (utterance_id, speaker_id, "
                    "gender, path)")
        ->required();
    sub->add_option("--out-dir", out_dir, "directory for <id>.lstk output")
        ->required();
    sub->add_option("--registry", registry_path,
                    "attribute descriptor list, one per line (default: "
                    "built-in 17)");
    provider.Register(sub);
  }

  int Run() const {
    AttributeRegistry registry = LoadRegistry(registry_path);
    vtad::Manifest manifest = vtad::LoadManifest(manifest_path);
    std::unique_ptr<vtad::FeatureProvider> backend =
        vtad::MakeProvider(provider.Build(registry));
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      throw vtad::EnvironmentError("cannot create output directory '" +
                                   out_dir + "': " + ec.message());
    }
    size_t count = 0;
    for (const vtad::UtteranceRecord& rec : manifest.Records()) {
      vtad::LayerStack stack = backend->Get(rec.utterance_id);
      std::string path = out_dir + "/" + rec.utterance_id + ".lstk";
      vtad::WriteLayerStackFile(path, stack);
      ++count;
    }
    std::cout << "extracted " << count << " layer stacks to " << out_dir
              << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// build-pairs

struct BuildPairsCli {
  std::string manifest_path;
  std::string annotations_path;
  std::string out_path;
  std::string registry_path;
  int pairs_per = 40;
  uint64_t seed = 42;
  bool no_reverse = false;

  void Register(CLI::App* sub) {
    sub->add_option("--manifest", manifest_path, "utterance manifest TSV")
        ->required();
    sub->add_option("--annotations", annotations_path,
                    "speaker-pair annotation TSV (speaker_a, speaker_b, "
                    "descriptor, direction)")
        ->required();
    sub->add_option("--out", out_path, "output pair-list TSV")->required();
    sub->add_option("--registry", registry_path,
                    "attribute descriptor list (default: built-in 17)");
    sub->add_option("--pairs-per", pairs_per,
                    "utterance pairs per annotated speaker pair")
        ->capture_default_str();
    sub->add_option("--seed", seed, "sampling seed")->capture_default_str();
    sub->add_flag("--no-reverse", no_reverse,
                  "emit only forward pairs (default adds each pair's "
                  "reversal with flipped labels)");
  }

  int Run() const {
    AttributeRegistry registry = LoadRegistry(registry_path);
    vtad::Manifest manifest = vtad::LoadManifest(manifest_path);
    std::vector<vtad::SpeakerPairAnnotation> annotations =
        vtad::LoadAnnotations(annotations_path);
    vtad::BuildPairsOptions options;
    options.pairs_per_speaker_pair = pairs_per;
    options.include_reverse = !no_reverse;
    options.seed = seed;
    std::vector<vtad::PairExample> pairs =
        vtad::BuildPairs(manifest, annotations, registry, options);
    std::string config_text =
        "tool=build-pairs\npairs_per=" + std::to_string(pairs_per) +
        "\ninclude_reverse=" + (no_reverse ? "false" : "true") + "\nseed=" +
        std::to_string(seed) + "\nregistry=" + registry.CanonicalText();
    std::vector<std::string> comments = {ProvenanceLine(config_text),
                                         "pairs=" +
                                             std::to_string(pairs.size())};
    vtad::WritePairsFile(out_path, pairs, registry, comments);
    std::cout << "wrote " << pairs.size() << " pairs to " << out_path
              << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// train

struct TrainCli {
  std::string pairs_path;
  std::string val_pairs_path;
  std::string out_path;
  std::string config_path;
  std::string registry_path;
  std::string resume_path;
  std::string log_path;
  uint32_t stop_after = 0;
  bool force = false;
  ProviderCli provider;

  vtad::TrainConfig defaults = vtad::TrainConfig::Defaults();
  uint32_t epochs = defaults.epochs;
  uint32_t batch_size = defaults.batch_size;
  double learning_rate = defaults.learning_rate;
  double weight_decay = defaults.weight_decay;
  std::string scheduler = defaults.scheduler;
  double eta_min = defaults.eta_min;
  uint64_t seed = defaults.seed;
  std::string variant = defaults.variant;
  bool astp_frozen = false;
  std::string loss_reduction = defaults.loss_reduction;
  uint32_t heads = defaults.heads;
  uint32_t attn_dim = defaults.attn_dim;
  uint32_t se_reduction = defaults.se_reduction;
  double astp_dropout = defaults.astp_dropout;
  double diffnet_dropout = defaults.diffnet_dropout;

  CLI::Option* epochs_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* wd_opt = nullptr;
  CLI::Option* scheduler_opt = nullptr;
  CLI::Option* eta_min_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* frozen_opt = nullptr;
  CLI::Option* loss_opt = nullptr;
  CLI::Option* heads_opt = nullptr;
  CLI::Option* attn_opt = nullptr;
  CLI::Option* se_opt = nullptr;
  CLI::Option* astp_drop_opt = nullptr;
  CLI::Option* diff_drop_opt = nullptr;

  void Register(CLI::App* sub) {
    sub->add_option("--pairs", pairs_path, "training pair-list TSV")
        ->required();
    sub->add_option("--val-pairs", val_pairs_path, "validation pair-list TSV")
        ->required();
    sub->add_option("--out", out_path, "output checkpoint path")->required();
    sub->add_option("--config", config_path,
                    "key=value config file (CLI flags override it)");
    sub->add_option("--registry", registry_path,
                    "attribute descriptor list (default: built-in 17)");
    sub->add_option("--resume", resume_path,
                    "checkpoint to continue from (epoch granularity)");
    sub->add_option("--log", log_path,
                    "write the training log to this file (default: stdout)");
    sub->add_option("--stop-after", stop_after,
                    "pause after this many epochs (0 = train to completion)")
        ->capture_default_str();
    sub->add_flag("--force", force,
                  "accept a resume checkpoint whose config fingerprint "
                  "does not match");
    provider.Register(sub);

    epochs_opt = sub->add_option("--epochs", epochs, "training epochs")
                     ->capture_default_str();
    batch_opt = sub->add_option("--batch-size", batch_size, "batch size")
                    ->capture_default_str();
    lr_opt = sub->add_option("--learning-rate,--lr", learning_rate,
                             "peak learning rate")
                 ->capture_default_str();
    wd_opt = sub->add_option("--weight-decay,--wd", weight_decay,
                             "decoupled weight decay")
                 ->capture_default_str();
    scheduler_opt = sub->add_option("--scheduler", scheduler,
                                    "learning-rate schedule (cosine)")
                        ->capture_default_str();
    eta_min_opt = sub->add_option("--eta-min", eta_min,
                                  "cosine schedule floor")
                      ->capture_default_str();
    seed_opt = sub->add_option("--seed", seed, "global random seed")
                   ->capture_default_str();
    variant_opt = sub->add_option("--variant", variant,
                                  "comparison head: ffn or se-resffn")
                      ->capture_default_str();
    frozen_opt = sub->add_flag("--freeze-astp", astp_frozen,
                               "train only the comparison head, keeping the "
                               "pooling parameters fixed");
    loss_opt = sub->add_option("--loss-reduction", loss_reduction,
                               "loss reduction (masked-mean)")
                   ->capture_default_str();
    heads_opt = sub->add_option("--heads", heads, "pooling attention heads")
                    ->capture_default_str();
    attn_opt = sub->add_option("--attn-dim", attn_dim,
                               "pooling attention width (0 = slice width)")
                   ->capture_default_str();
    se_opt = sub->add_option("--se-reduction", se_reduction,
                             "squeeze-excitation reduction ratio")
                 ->capture_default_str();
    astp_drop_opt = sub->add_option("--astp-dropout", astp_dropout,
                                    "pooling dropout rate")
                        ->capture_default_str();
    diff_drop_opt = sub->add_option("--diffnet-dropout", diffnet_dropout,
                                    "head dropout rate (ffn variant)")
                        ->capture_default_str();
  }

  vtad::TrainConfig BuildConfig() const {
    vtad::TrainConfig config = vtad::TrainConfig::Defaults();
    if (!config_path.empty()) {
      config.Apply(vtad::ParseKeyValueFile(config_path));
    }
    if (epochs_opt->count()) config.epochs = epochs;
    if (batch_opt->count()) config.batch_size = batch_size;
    if (lr_opt->count()) config.learning_rate = learning_rate;
    if (wd_opt->count()) config.weight_decay = weight_decay;
    if (scheduler_opt->count()) config.scheduler = scheduler;
    if (eta_min_opt->count()) config.eta_min = eta_min;
    if (seed_opt->count()) config.seed = seed;
    if (variant_opt->count()) config.variant = variant;
    if (frozen_opt->count()) config.astp_trainable = !astp_frozen;
    if (loss_opt->count()) config.loss_reduction = loss_reduction;
    if (heads_opt->count()) config.heads = heads;
    if (attn_opt->count()) config.attn_dim = attn_dim;
    if (se_opt->count()) config.se_reduction = se_reduction;
    if (astp_drop_opt->count()) config.astp_dropout = astp_dropout;
    if (diff_drop_opt->count()) config.diffnet_dropout = diffnet_dropout;
    config.Validate();
    return config;
  }

  int Run() const {
    AttributeRegistry registry = LoadRegistry(registry_path);
    vtad::TrainConfig config = BuildConfig();
    std::vector<vtad::PairExample> train_pairs =
        vtad::LoadPairsFile(pairs_path, registry);
    std::vector<vtad::PairExample> val_pairs =
        vtad::LoadPairsFile(val_pairs_path, registry);
    std::unique_ptr<vtad::FeatureProvider> backend =
        vtad::MakeProvider(provider.Build(registry));

    vtad::Checkpoint resume_ckpt;
    vtad::TrainOptions options;
    options.stop_after_epochs = stop_after;
    options.force = force;
    if (!resume_path.empty()) {
      resume_ckpt = vtad::LoadCheckpoint(resume_path, force);
      options.resume = &resume_ckpt;
    }
    std::ofstream log_file;
    if (!log_path.empty()) {
      log_file.open(log_path, std::ios::binary);
      if (!log_file) {
        throw vtad::EnvironmentError("cannot open log file '" + log_path +
                                     "'");
      }
      options.log_stream = &log_file;
    } else {
      options.log_stream = &std::cout;
    }

    vtad::TrainResult result = vtad::Train(config, registry, train_pairs,
                                           val_pairs, backend.get(), options);
    vtad::SaveCheckpoint(out_path, result.checkpoint);
    std::cout << "# " << (result.completed ? "completed" : "paused")
              << " at epoch " << result.checkpoint.epoch << ", step "
              << result.checkpoint.global_step << "; val_acc="
              << vtad::Format2(result.final_val_acc) << "; wrote "
              << out_path << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// eval

struct EvalCli {
  std::string ckpt_path;
  std::string pairs_path;
  std::string report_path;
  unsigned jobs = 1;
  bool force = false;
  ProviderCli provider;

  void Register(CLI::App* sub) {
    sub->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
    sub->add_option("--pairs", pairs_path, "evaluation pair-list TSV")
        ->required();
    sub->add_option("--report", report_path,
                    "write the machine-readable report (JSON) here; the "
                    "human-readable table prints to stdout")
        ->required();
    sub->add_option("--jobs", jobs, "scoring worker threads")
        ->capture_default_str();
    sub->add_flag("--force", force,
                  "load a checkpoint whose config fingerprint does not "
                  "match its contents");
    provider.Register(sub);
  }

  int Run() const {
    vtad::Checkpoint ckpt = vtad::LoadCheckpoint(ckpt_path, force);
    vtad::RestoredModel restored = vtad::ModelFromCheckpoint(ckpt);
    AttributeRegistry registry =
        AttributeRegistry::FromNames(restored.registry_names);
    std::vector<vtad::PairExample> pairs =
        vtad::LoadPairsFile(pairs_path, registry);
    std::unique_ptr<vtad::FeatureProvider> backend =
        vtad::MakeProvider(provider.Build(registry));
    std::vector<vtad::ScoredTrial> trials =
        vtad::ScorePairs(&restored.model, pairs, backend.get(), jobs);
    vtad::EvalReport report = vtad::Aggregate(trials, registry);
    std::string config_hex = vtad::ToHex(ckpt.Fingerprint());
    vtad::WriteTextFile(report_path,
                        vtad::ReportToJson(report, config_hex));
    std::cout << vtad::ReportToTable(report);
    std::cout << "# " << trials.size() << " trials over " << pairs.size()
              << " pairs; report written to " << report_path << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// predict

struct PredictCli {
  std::string ckpt_path;
  std::string utt_a;
  std::string utt_b;
  bool force = false;
  ProviderCli provider;

  void Register(CLI::App* sub) {
    sub->add_option("--ckpt", ckpt_path, "trained checkpoint")->required();
    sub->add_option("--utt-a", utt_a, "first utterance id")->required();
    sub->add_option("--utt-b", utt_b, "second utterance id")->required();
    sub->add_flag("--force", force,
                  "load a checkpoint whose config fingerprint does not "
                  "match its contents");
    provider.Register(sub);
  }

  int Run() const {
    vtad::Checkpoint ckpt = vtad::LoadCheckpoint(ckpt_path, force);
    vtad::RestoredModel restored = vtad::ModelFromCheckpoint(ckpt);
    AttributeRegistry registry =
        AttributeRegistry::FromNames(restored.registry_names);
    std::unique_ptr<vtad::FeatureProvider> backend =
        vtad::MakeProvider(provider.Build(registry));
    vtad::LayerStack sa = backend->Get(utt_a);
    vtad::LayerStack sb = backend->Get(utt_b);
    std::vector<double> probs =
        vtad::PredictPair(&restored.model, vtad::StackToTensor(sa),
                          vtad::StackToTensor(sb));
    std::cout << "# " << std::string(vtad::ArtifactVersion())
              << " config=" << vtad::ToHex(ckpt.Fingerprint()) << " utt_a="
              << utt_a << " utt_b=" << utt_b << "\n";
    for (size_t j = 0; j < probs.size(); ++j) {
      std::cout << registry.AttributeName(j) << "\t"
                << vtad::FormatDouble(probs[j]) << "\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// split-check

struct SplitCheckCli {
  std::string train_path;
  std::string eval_path;
  std::string manifest_path;
  std::string protocol_name;
  std::string registry_path;

  void Register(CLI::App* sub) {
    sub->add_option("--train", train_path, "training pair-list TSV")
        ->required();
    sub->add_option("--eval", eval_path, "evaluation pair-list TSV")
        ->required();
    sub->add_option("--manifest", manifest_path, "utterance manifest TSV")
        ->required();
    sub->add_option("--protocol", protocol_name, "seen or unseen")
        ->required();
    sub->add_option("--registry", registry_path,
                    "attribute descriptor list (default: built-in 17)");
  }

  int Run() const {
    AttributeRegistry registry = LoadRegistry(registry_path);
    vtad::Protocol protocol = vtad::ParseProtocol(protocol_name);
    vtad::Manifest manifest = vtad::LoadManifest(manifest_path);
    std::vector<vtad::PairExample> train_pairs =
        vtad::LoadPairsFile(train_path, registry);
    std::vector<vtad::PairExample> eval_pairs =
        vtad::LoadPairsFile(eval_path, registry);
    vtad::SplitReport report =
        vtad::SplitCheck(train_pairs, eval_pairs, manifest, protocol);
    if (report.ok()) {
      std::cout << "ok: no " << vtad::ProtocolName(protocol)
                << "-protocol violations between " << train_pairs.size()
                << " train and " << eval_pairs.size() << " eval pairs\n";
      return 0;
    }
    for (const std::string& v : report.violations) {
      std::cout << "violation: " << v << "\n";
    }
    std::cout << "# " << report.violations.size() << " violation(s)\n";
    return 1;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"voice timbre attribute comparison pipeline"};
  app.require_subcommand(1);

  TrimCli trim;
  trim.Register(app.add_subcommand(
      "trim", "remove leading and trailing silence from a WAV file"));
  ExtractCli extract;
  extract.Register(app.add_subcommand(
      "extract", "produce layer-stack feature files for every manifest "
                 "utterance"));
  BuildPairsCli build_pairs;
  build_pairs.Register(app.add_subcommand(
      "build-pairs", "expand speaker-pair annotations into utterance-pair "
                     "training examples"));
  TrainCli train;
  train.Register(app.add_subcommand(
      "train", "train the pooling and comparison head on a pair list"));
  EvalCli eval_cmd;
  eval_cmd.Register(app.add_subcommand(
      "eval", "score a pair list and report per-attribute accuracy and "
              "equal error rate"));
  PredictCli predict;
  predict.Register(app.add_subcommand(
      "predict", "score one utterance pair and print per-attribute "
                 "probabilities"));
  SplitCheckCli split_check;
  split_check.Register(app.add_subcommand(
      "split-check", "verify train/eval split hygiene under a protocol"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("trim")) return trim.Run();
    if (app.got_subcommand("extract")) return extract.Run();
    if (app.got_subcommand("build-pairs")) return build_pairs.Run();
    if (app.got_subcommand("train")) return train.Run();
    if (app.got_subcommand("eval")) return eval_cmd.Run();
    if (app.got_subcommand("predict")) return predict.Run();
    if (app.got_subcommand("split-check")) return split_check.Run();
  } catch (const vtad::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
