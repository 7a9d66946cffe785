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
// End-to-end tests driving the installed binary (path in $VTAD_BIN) through
// every subcommand: trim, extract, build-pairs, train, eval, predict, and
// split-check.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "test_util.h"
#include "vtad/common.h"
#include "vtad/wav.h"

using namespace vtad;

namespace {

// Runs the binary with `args`, captures stdout+stderr, returns the exit code.
int RunCli(const std::string& args, std::string* output) {
  const char* bin = std::getenv("VTAD_BIN");
  if (bin == nullptr || bin[0] == '\0') {
    throw std::runtime_error("VTAD_BIN must point at the pipeline binary");
  }
  static int counter = 0;
  static std::string out_dir = vtad_test::ScratchDir("cli_capture");
  std::string out_path =
      vtad_test::PathIn(out_dir, "out_" + std::to_string(counter++) + ".txt");
  std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" +
                    out_path + "\" 2>&1";
  int status = std::system(cmd.c_str());
  if (output != nullptr) *output = ReadTextFile(out_path);
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return -1;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// A fixture directory with a manifest (4 male speakers x 3 utterances), a
// two-descriptor registry, and annotations for two speaker pairs.
struct CorpusDir {
  std::string dir = vtad_test::ScratchDir("cli_corpus");
  std::string manifest = vtad_test::PathIn(dir, "manifest.tsv");
  std::string registry = vtad_test::PathIn(dir, "registry.txt");
  std::string annotations = vtad_test::PathIn(dir, "annotations.tsv");

  // Shared synthetic-backend flags; tiny stacks keep training fast.
  std::string backend =
      "--backend synthetic --layers 3 --dim 8 --feature-seed 7 --noise 0.05";

  CorpusDir() {
    std::string m = "utterance_id\tspeaker_id\tgender\tpath\n";
    for (int s = 1; s <= 4; ++s) {
      for (int u = 0; u < 3; ++u) {
        std::string spk = "s" + std::to_string(s);
        std::string utt = spk + "_u" + std::to_string(u);
        m += utt + "\t" + spk + "\tmale\t" + utt + ".wav\n";
      }
    }
    WriteTextFile(manifest, m);
    WriteTextFile(registry, "Bright\nDark\n");
    WriteTextFile(annotations,
                  "speaker_a\tspeaker_b\tdescriptor\tdirection\n"
                  "s1\ts2\tBright\tb_stronger\n"
                  "s3\ts4\tDark\ta_stronger\n");
  }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  std::string out;
  CHECK(RunCli("--help", &out) == 0);
  CHECK(out.find("trim") != std::string::npos);
  CHECK(out.find("predict") != std::string::npos);

  CHECK(RunCli("", &out) == 2);  // a subcommand is required
  CHECK(RunCli("frobnicate", &out) == 2);
  CHECK(RunCli("train", &out) == 2);  // missing required options
  CHECK(RunCli("trim --in a.wav", &out) == 2);
  CHECK(RunCli("trim --in a.wav --out b.wav --no-such-flag", &out) == 2);
}

TEST_CASE("trim keeps the speech span and reports bypasses") {
  std::string dir = vtad_test::ScratchDir("cli_trim");
  std::string in_path = vtad_test::PathIn(dir, "speech.wav");
  std::string out_path = vtad_test::PathIn(dir, "trimmed.wav");

  const uint32_t rate = 16000;
  std::vector<int16_t> samples(4800, 0);  // 0.3s leading silence
  for (size_t i = 0; i < 8000; ++i) {     // 0.5s of 300 Hz tone
    double t = static_cast<double>(i) / rate;
    samples.push_back(static_cast<int16_t>(
        0.4 * 32767.0 * std::sin(2.0 * 3.14159265358979 * 300.0 * t)));
  }
  samples.resize(samples.size() + 3200, 0);  // 0.2s trailing silence
  WriteWav16Mono(in_path, samples, rate, "cli trim fixture");

  std::string out;
  int code = RunCli("trim --in \"" + in_path + "\" --out \"" + out_path +
                        "\"",
                    &out);
  CHECK(code == 0);
  CHECK(out.rfind("kept [", 0) == 0);
  WavData trimmed = ReadWav16Mono(out_path);
  CHECK(trimmed.sample_rate == rate);
  CHECK(trimmed.samples.size() < samples.size());
  CHECK(trimmed.samples.size() >= 8000);

  // All-silent input bypasses trimming and says so.
  std::string quiet_in = vtad_test::PathIn(dir, "quiet.wav");
  std::string quiet_out = vtad_test::PathIn(dir, "quiet_trimmed.wav");
  WriteWav16Mono(quiet_in, std::vector<int16_t>(8000, 0), rate, "");
  code = RunCli("trim --in \"" + quiet_in + "\" --out \"" + quiet_out + "\"",
                &out);
  CHECK(code == 0);
  CHECK(out == "bypassed: kept all 8000 samples\n");
  CHECK(ReadWav16Mono(quiet_out).samples.size() == 8000);

  // Invalid parameters surface as runtime errors, not crashes.
  code = RunCli("trim --in \"" + in_path + "\" --out \"" + out_path +
                    "\" --threshold-db 0",
                &out);
  CHECK(code == 1);
  CHECK(out.find("error:") != std::string::npos);

  // A missing input file is a runtime error too.
  code = RunCli("trim --in \"" + vtad_test::PathIn(dir, "nope.wav") +
                    "\" --out \"" + out_path + "\"",
                &out);
  CHECK(code == 1);
  CHECK(out.find("error:") != std::string::npos);
}

TEST_CASE("the pipeline runs end to end") {
  CorpusDir c;
  std::string out;

  // --- build-pairs ---------------------------------------------------------
  std::string train_pairs = vtad_test::PathIn(c.dir, "train_pairs.tsv");
  std::string val_pairs = vtad_test::PathIn(c.dir, "val_pairs.tsv");
  int code = RunCli("build-pairs --manifest \"" + c.manifest +
                        "\" --annotations \"" + c.annotations +
                        "\" --registry \"" + c.registry + "\" --out \"" +
                        train_pairs + "\" --pairs-per 8 --seed 1",
                    &out);
  CHECK(code == 0);
  CHECK(out == "wrote 16 pairs to " + train_pairs + "\n");
  std::string pairs_text = ReadTextFile(train_pairs);
  CHECK(pairs_text.rfind("# vtad/1.0.0 config=", 0) == 0);
  CHECK(pairs_text.find("# pairs=16") != std::string::npos);

  code = RunCli("build-pairs --manifest \"" + c.manifest +
                    "\" --annotations \"" + c.annotations +
                    "\" --registry \"" + c.registry + "\" --out \"" +
                    val_pairs + "\" --pairs-per 8 --seed 2",
                &out);
  CHECK(code == 0);

  // Odd totals cannot be split between forward and reversed pairs.
  code = RunCli("build-pairs --manifest \"" + c.manifest +
                    "\" --annotations \"" + c.annotations +
                    "\" --registry \"" + c.registry + "\" --out \"" +
                    vtad_test::PathIn(c.dir, "odd.tsv") + "\" --pairs-per 7",
                &out);
  CHECK(code == 1);
  CHECK(out.find("error:") != std::string::npos);

  // --- train ---------------------------------------------------------------
  std::string ckpt = vtad_test::PathIn(c.dir, "model.vtck");
  std::string log_path = vtad_test::PathIn(c.dir, "train.log");
  code = RunCli("train --pairs \"" + train_pairs + "\" --val-pairs \"" +
                    val_pairs + "\" --registry \"" + c.registry +
                    "\" --out \"" + ckpt + "\" --log \"" + log_path + "\" " +
                    c.backend +
                    " --epochs 2 --batch-size 4 --heads 2 --seed 42",
                &out);
  CHECK(code == 0);
  // 16 pairs / batch 4 = 4 steps per epoch; two epochs completed.
  CHECK(out.find("# completed at epoch 2, step 8; val_acc=") !=
        std::string::npos);
  CHECK(out.find("wrote " + ckpt) != std::string::npos);

  std::vector<std::string> log_lines = Lines(ReadTextFile(log_path));
  REQUIRE(!log_lines.empty());
  CHECK(log_lines[0].rfind("# vtad/1.0.0 config=", 0) == 0);
  size_t step_lines = 0, epoch_lines = 0;
  for (const std::string& line : log_lines) {
    if (line.rfind("step epoch=", 0) == 0) ++step_lines;
    if (line.rfind("epoch epoch=", 0) == 0) ++epoch_lines;
  }
  CHECK(step_lines == 8);
  CHECK(epoch_lines == 2);

  // --- eval ----------------------------------------------------------------
  std::string report_path = vtad_test::PathIn(c.dir, "report.json");
  code = RunCli("eval --ckpt \"" + ckpt + "\" --pairs \"" + val_pairs +
                    "\" --report \"" + report_path + "\" --jobs 2 " +
                    c.backend,
                &out);
  CHECK(code == 0);
  CHECK(out.find("male average") != std::string::npos);
  CHECK(out.find("overall") != std::string::npos);
  CHECK(out.find("# 16 trials over 16 pairs; report written to " +
                 report_path) != std::string::npos);
  nlohmann::json report = nlohmann::json::parse(ReadTextFile(report_path));
  CHECK(report["artifact"] == "vtad/1.0.0");
  CHECK(report["n_trials"] == 16);
  REQUIRE(report["attributes"].size() == 4);
  CHECK(report["attributes"][0]["name"] == "male:Bright");
  CHECK(report["attributes"][0]["evaluable"] == true);
  // The fixture has no female annotations, so the female rows are skipped
  // and the overall row falls back to the male average.
  CHECK(report["female"]["acc"].is_null());
  CHECK(report["overall"]["acc"] == report["male"]["acc"]);

  // --- predict -------------------------------------------------------------
  code = RunCli("predict --ckpt \"" + ckpt +
                    "\" --utt-a s1_u0 --utt-b s2_u0 " + c.backend,
                &out);
  CHECK(code == 0);
  std::vector<std::string> pred_lines = Lines(out);
  REQUIRE(pred_lines.size() == 5);  // header + one line per attribute
  CHECK(pred_lines[0].rfind("# vtad/1.0.0 config=", 0) == 0);
  CHECK(pred_lines[0].find("utt_a=s1_u0") != std::string::npos);
  CHECK(pred_lines[1].rfind("male:Bright\t", 0) == 0);
  CHECK(pred_lines[2].rfind("male:Dark\t", 0) == 0);
  CHECK(pred_lines[3].rfind("female:Bright\t", 0) == 0);
  CHECK(pred_lines[4].rfind("female:Dark\t", 0) == 0);
  for (size_t i = 1; i < pred_lines.size(); ++i) {
    double p = std::stod(pred_lines[i].substr(pred_lines[i].find('\t') + 1));
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  std::string synthetic_prediction = out;

  // --- extract + file backend ----------------------------------------------
  std::string feat_dir = vtad_test::PathIn(c.dir, "feats");
  code = RunCli("extract --manifest \"" + c.manifest + "\" --out-dir \"" +
                    feat_dir + "\" " + c.backend,
                &out);
  CHECK(code == 0);
  CHECK(out == "extracted 12 layer stacks to " + feat_dir + "\n");
  size_t stack_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(feat_dir)) {
    if (entry.path().extension() == ".lstk") ++stack_files;
  }
  CHECK(stack_files == 12);

  // Stacks are float32 end to end, so scoring from the extracted files
  // reproduces the synthetic-backend prediction bit for bit.
  code = RunCli("predict --ckpt \"" + ckpt +
                    "\" --utt-a s1_u0 --utt-b s2_u0 --backend file "
                    "--features \"" +
                    feat_dir + "\"",
                &out);
  CHECK(code == 0);
  CHECK(out == synthetic_prediction);

  // --- split-check ---------------------------------------------------------
  // train and val share every speaker pair: flagged under either protocol.
  code = RunCli("split-check --train \"" + train_pairs + "\" --eval \"" +
                    val_pairs + "\" --manifest \"" + c.manifest +
                    "\" --registry \"" + c.registry + "\" --protocol unseen",
                &out);
  CHECK(code == 1);
  CHECK(out.find("violation: speaker pair s1 / s2 appears in both splits") !=
        std::string::npos);

  // Disjoint speaker pairs pass the unseen protocol.
  std::string ann_a = vtad_test::PathIn(c.dir, "ann_a.tsv");
  std::string ann_b = vtad_test::PathIn(c.dir, "ann_b.tsv");
  WriteTextFile(ann_a,
                "speaker_a\tspeaker_b\tdescriptor\tdirection\n"
                "s1\ts2\tBright\tb_stronger\n");
  WriteTextFile(ann_b,
                "speaker_a\tspeaker_b\tdescriptor\tdirection\n"
                "s3\ts4\tDark\ta_stronger\n");
  std::string split_train = vtad_test::PathIn(c.dir, "split_train.tsv");
  std::string split_eval = vtad_test::PathIn(c.dir, "split_eval.tsv");
  CHECK(RunCli("build-pairs --manifest \"" + c.manifest +
                   "\" --annotations \"" + ann_a + "\" --registry \"" +
                   c.registry + "\" --out \"" + split_train +
                   "\" --pairs-per 4",
               &out) == 0);
  CHECK(RunCli("build-pairs --manifest \"" + c.manifest +
                   "\" --annotations \"" + ann_b + "\" --registry \"" +
                   c.registry + "\" --out \"" + split_eval +
                   "\" --pairs-per 4",
               &out) == 0);
  code = RunCli("split-check --train \"" + split_train + "\" --eval \"" +
                    split_eval + "\" --manifest \"" + c.manifest +
                    "\" --registry \"" + c.registry + "\" --protocol unseen",
                &out);
  CHECK(code == 0);
  CHECK(out.rfind("ok: no unseen-protocol violations", 0) == 0);
}

TEST_CASE("config files apply and command-line flags override them") {
  CorpusDir c;
  std::string out;
  std::string pairs = vtad_test::PathIn(c.dir, "pairs.tsv");
  REQUIRE(RunCli("build-pairs --manifest \"" + c.manifest +
                     "\" --annotations \"" + c.annotations +
                     "\" --registry \"" + c.registry + "\" --out \"" + pairs +
                     "\" --pairs-per 4",
                 &out) == 0);

  std::string cfg_path = vtad_test::PathIn(c.dir, "train.cfg");
  WriteTextFile(cfg_path,
                "epochs=1\nbatch_size=4\nheads=2\nseed=11\n");

  // The config file alone stops after one epoch.
  std::string ckpt = vtad_test::PathIn(c.dir, "cfg_model.vtck");
  int code = RunCli("train --pairs \"" + pairs + "\" --val-pairs \"" + pairs +
                        "\" --registry \"" + c.registry + "\" --out \"" +
                        ckpt + "\" --config \"" + cfg_path + "\" " +
                        c.backend,
                    &out);
  CHECK(code == 0);
  CHECK(out.find("# completed at epoch 1,") != std::string::npos);

  // An explicit flag beats the file's value for the same knob.
  code = RunCli("train --pairs \"" + pairs + "\" --val-pairs \"" + pairs +
                    "\" --registry \"" + c.registry + "\" --out \"" + ckpt +
                    "\" --config \"" + cfg_path + "\" --epochs 2 " +
                    c.backend,
                &out);
  CHECK(code == 0);
  CHECK(out.find("# completed at epoch 2,") != std::string::npos);

  // Unknown keys in the file are rejected up front.
  std::string bad_cfg = vtad_test::PathIn(c.dir, "bad.cfg");
  WriteTextFile(bad_cfg, "epochs=1\nmomentum=0.9\n");
  code = RunCli("train --pairs \"" + pairs + "\" --val-pairs \"" + pairs +
                    "\" --registry \"" + c.registry + "\" --out \"" + ckpt +
                    "\" --config \"" + bad_cfg + "\" " + c.backend,
                &out);
  CHECK(code == 1);
  CHECK(out.find("error: unknown config key 'momentum'") !=
        std::string::npos);
}

TEST_CASE("train can pause on a checkpoint and resume from it") {
  CorpusDir c;
  std::string out;
  std::string pairs = vtad_test::PathIn(c.dir, "pairs.tsv");
  REQUIRE(RunCli("build-pairs --manifest \"" + c.manifest +
                     "\" --annotations \"" + c.annotations +
                     "\" --registry \"" + c.registry + "\" --out \"" + pairs +
                     "\" --pairs-per 8 --seed 1",
                 &out) == 0);

  std::string common = "train --pairs \"" + pairs + "\" --val-pairs \"" +
                       pairs + "\" --registry \"" + c.registry + "\" " +
                       c.backend +
                       " --epochs 3 --batch-size 4 --heads 2 --seed 42";

  // Uninterrupted reference run.
  std::string full_ckpt = vtad_test::PathIn(c.dir, "full.vtck");
  std::string full_log = vtad_test::PathIn(c.dir, "full.log");
  REQUIRE(RunCli(common + " --out \"" + full_ckpt + "\" --log \"" + full_log +
                     "\"",
                 &out) == 0);

  // Pause after two epochs, then resume to completion.
  std::string part_ckpt = vtad_test::PathIn(c.dir, "part.vtck");
  int code = RunCli(common + " --out \"" + part_ckpt + "\" --stop-after 2",
                    &out);
  CHECK(code == 0);
  CHECK(out.find("# paused at epoch 2,") != std::string::npos);

  std::string resumed_ckpt = vtad_test::PathIn(c.dir, "resumed.vtck");
  std::string resumed_log = vtad_test::PathIn(c.dir, "resumed.log");
  code = RunCli(common + " --out \"" + resumed_ckpt + "\" --resume \"" +
                    part_ckpt + "\" --log \"" + resumed_log + "\"",
                &out);
  CHECK(code == 0);
  CHECK(out.find("# completed at epoch 3,") != std::string::npos);

  // The resumed run reproduces the uninterrupted run's final state exactly;
  // the checkpoint writer is deterministic, so the files are byte-identical.
  CHECK(ReadTextFile(resumed_ckpt) == ReadTextFile(full_ckpt));

  // Its epoch-3 log lines match the reference run's tail.
  std::vector<std::string> full_tail, resumed_tail;
  for (const std::string& line : Lines(ReadTextFile(full_log))) {
    if (line.find("epoch=3") != std::string::npos) full_tail.push_back(line);
  }
  for (const std::string& line : Lines(ReadTextFile(resumed_log))) {
    if (line.find("epoch=3") != std::string::npos) {
      resumed_tail.push_back(line);
    }
  }
  CHECK(full_tail == resumed_tail);
  CHECK(!resumed_tail.empty());

  // Resuming under a different config is refused without --force.
  code = RunCli(common + " --out \"" + resumed_ckpt + "\" --resume \"" +
                    part_ckpt + "\" --learning-rate 0.0005",
                &out);
  CHECK(code == 1);
  CHECK(out.find("error:") != std::string::npos);
  CHECK(out.find("different training config") != std::string::npos);
  code = RunCli(common + " --out \"" + resumed_ckpt + "\" --resume \"" +
                    part_ckpt + "\" --learning-rate 0.0005 --force",
                &out);
  CHECK(code == 0);
}
