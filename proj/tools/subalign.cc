// tools/subalign.cc

// Copyright 2026  subalign authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: synth, pretrain, train, align, baseline, eval,
// perturb and smoke subcommands over the alignment pipeline.
//
// Exit codes: 0 success, 1 smoke-margin failure, 2 input error,
// 3 config/checkpoint mismatch.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "subalign/baselines.h"
#include "subalign/corpus.h"
#include "subalign/metrics.h"
#include "subalign/model.h"
#include "subalign/pipeline.h"
#include "subalign/synthgen.h"
#include "subalign/training.h"

namespace fs = std::filesystem;
using namespace subalign;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMargin = 1;
constexpr int kExitInput = 2;
constexpr int kExitMismatch = 3;

struct ConfigMismatch : Error {
  using Error::Error;
};

struct RunConfig {
  std::string profile = "desk";
  uint64_t seed = 0;
  double tau = 0.5;
  double tau_dtw = 0.4;
  ModelConfig model = ModelConfig::desk_profile();
  WindowConfig window;
  TextEncoderConfig text{.d_text = 64};
  TrainConfig train;
  SynthConfig synth;

  void apply_profile() {
    // Keep flag-controlled training fields across the profile reset.
    bool random_subtitle = train.random_subtitle;
    int64_t prior_shift_ms = train.prior_shift_ms;
    if (profile == "paper") {
      model = ModelConfig::paper_profile();
      text.d_text = 768;
      synth.d_video = 1024;
      train = TrainConfig::paper_profile();
    } else if (profile == "desk") {
      model = ModelConfig::desk_profile();
      text.d_text = 64;
      synth.d_video = 32;
      train = TrainConfig::desk_profile();
    } else {
      throw Error("unknown profile '" + profile + "'");
    }
    train.random_subtitle = random_subtitle;
    train.prior_shift_ms = prior_shift_ms;
    model.d_text_in = text.d_text;
    model.d_video_in = synth.d_video;
  }
};

void add_profile_options(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--profile", rc.profile, "Configuration profile (paper|desk)")
      ->check(CLI::IsMember({"paper", "desk"}))
      ->capture_default_str();
  cmd->add_option("--seed", rc.seed, "Master seed")->capture_default_str();
  cmd->add_option("--tau", rc.tau, "Decode threshold")->capture_default_str();
  cmd->add_option("--tau-dtw", rc.tau_dtw, "DTW frame-selection threshold")
      ->capture_default_str();
}

ModelParams load_model_checked(const std::string& path, const ModelConfig& expected) {
  ModelConfig loaded_cfg;
  ModelParams params;
  load_checkpoint(path, &loaded_cfg, &params);
  if (!(loaded_cfg == expected)) {
    throw ConfigMismatch("checkpoint " + path +
                         " was trained under a different model config");
  }
  return params;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

int cmd_synth(RunConfig& rc, const std::string& out_dir, int train_eps, int test_eps,
              double spot_recall) {
  rc.synth.seed = rc.seed;
  auto emit = [&](const std::string& dir, int count, uint64_t seed_base) {
    fs::create_directories(dir);
    for (int e = 0; e < count; ++e) {
      SynthEpisode sep = gen_episode(rc.synth, seed_base + static_cast<uint64_t>(e));
      Episode ep;
      ep.id = sep.id;
      ep.features = sep.features;
      ep.audio = sep.audio;
      ep.gt = sep.gt;
      ep.spottings = gen_spottings(sep, spot_recall, seed_base + static_cast<uint64_t>(e));
      ep.active = active_segments_from_gt(sep);
      save_episode(dir, ep);
    }
  };
  emit(out_dir + "/train", train_eps, 0);
  emit(out_dir + "/test", test_eps, 1000000);
  std::cout << "wrote " << train_eps << " train + " << test_eps
            << " test episodes to " << out_dir << "\n";
  return kExitOk;
}

int cmd_pretrain(RunConfig& rc, const std::string& corpus_dir, const std::string& out_path,
                 const std::string& loss_log_path) {
  auto episodes = load_corpus(corpus_dir);
  auto spottings = corpus_spottings(episodes);
  rc.train.seed = rc.seed;
  ModelParams params = init_params(rc.model, rc.seed);
  TrainResult result = pretrain_words(rc.model, std::move(params), spottings, episodes,
                                      rc.window, rc.text, rc.train);
  save_checkpoint(out_path, rc.model, result.params);
  if (!loss_log_path.empty()) save_loss_log(loss_log_path, result.log);
  std::cout << "pretrained on " << spottings.size() << " spottings; checkpoint at "
            << out_path << "\n";
  return kExitOk;
}

int cmd_train(RunConfig& rc, const std::string& corpus_dir, const std::string& init_path,
              const std::string& out_path, const std::string& loss_log_path) {
  auto episodes = load_corpus(corpus_dir);
  rc.train.seed = rc.seed;
  ModelParams params;
  if (init_path.empty()) {
    params = init_params(rc.model, rc.seed);
  } else {
    params = load_model_checked(init_path, rc.model);
  }
  TrainResult result = finetune_subtitles(rc.model, std::move(params), episodes,
                                          rc.window, rc.text, rc.train);
  save_checkpoint(out_path, rc.model, result.params);
  if (!loss_log_path.empty()) save_loss_log(loss_log_path, result.log);
  std::cout << "finetuned on " << episodes.size() << " episodes; checkpoint at "
            << out_path << "\n";
  return kExitOk;
}

int cmd_align(RunConfig& rc, const std::string& corpus_dir, const std::string& ckpt,
              const std::string& out_dir, AlignOptions opts) {
  opts.tau = rc.tau;
  opts.tau_dtw = rc.tau_dtw;
  ModelParams params = load_model_checked(ckpt, rc.model);
  auto episodes = load_corpus(corpus_dir);
  fs::create_directories(out_dir);
  int overlaps = 0;
  for (const auto& ep : episodes) {
    SubtitleTrack pred = align_episode(ep, params, rc.model, rc.window, rc.text, opts);
    overlaps += static_cast<int>(pred.overlapping_pairs().size());
    save_srt_file(out_dir + "/" + ep.id + ".pred.srt", pred);
  }
  std::cout << "aligned " << episodes.size() << " episodes to " << out_dir
            << (opts.use_dtw ? " (dtw)" : " (no dtw)") << ", overlapping pairs: "
            << overlaps << "\n";
  return kExitOk;
}

int cmd_baseline(const std::string& corpus_dir, const std::string& method,
                 int64_t delta_ms, const std::string& out_dir) {
  auto episodes = load_corpus(corpus_dir);
  fs::create_directories(out_dir);
  for (const auto& ep : episodes) {
    SubtitleTrack pred;
    if (method == "shift") {
      pred = shift_baseline(ep.audio, delta_ms);
    } else {
      HeuristicConfig cfg;
      HeuristicStats stats;
      pred = spotting_heuristic(ep.audio, ep.spottings, ep.active,
                                ep.features.duration_ms(), cfg, &stats);
      if (stats.clamped > 0) {
        std::cerr << ep.id << ": " << stats.clamped
                  << " anchors clamped to episode bounds\n";
      }
    }
    save_srt_file(out_dir + "/" + ep.id + ".pred.srt", pred);
  }
  std::cout << "baseline '" << method << "' over " << episodes.size()
            << " episodes written to " << out_dir << "\n";
  return kExitOk;
}

int cmd_eval(RunConfig& rc, const std::string& corpus_dir, const std::string& pred_dir,
             int64_t prior_delta_ms, const std::string& scope,
             const std::string& out_csv) {
  auto episodes = load_corpus(corpus_dir);
  EvalAccumulator acc(scope == "episode" ? FrameAccScope::kEpisode
                                         : FrameAccScope::kWindow);
  for (const auto& ep : episodes) {
    std::string pred_path = pred_dir + "/" + ep.id + ".pred.srt";
    if (!fs::exists(pred_path)) throw IoError("missing prediction " + pred_path);
    SubtitleTrack pred = load_srt_file(pred_path, TrackKind::kPrior);
    if (pred.size() != ep.gt.size()) {
      throw IoError(ep.id + ": prediction/ground-truth count mismatch");
    }
    accumulate_episode_eval(acc, ep, pred, rc.window, prior_delta_ms);
  }
  EvalReport rep = acc.report();
  std::cout << report_table(rep);
  if (!out_csv.empty()) write_file(out_csv, report_csv(rep));
  return kExitOk;
}

int cmd_perturb(RunConfig& rc, const std::string& in_srt, const std::string& out_srt,
                double sigma_pos, double sigma_dur) {
  SubtitleTrack gt = load_srt_file(in_srt, TrackKind::kGroundTruth);
  SubtitleTrack out = perturb_track(gt, sigma_pos, sigma_dur, rc.seed);
  save_srt_file(out_srt, out);
  std::cout << "perturbed " << out.size() << " cues -> " << out_srt << "\n";
  return kExitOk;
}

// synth -> pretrain -> finetune -> align -> eval with pass/fail margins.
int cmd_smoke(RunConfig& rc, const std::string& work_dir, double margin_acc,
              double margin_f1) {
  auto t0 = std::chrono::steady_clock::now();
  rc.synth.seed = rc.seed;
  rc.train.seed = rc.seed;
  rc.synth.shift_std_s = 1.5;
  rc.synth.dur_noise_std_s = 0.5;

  fs::create_directories(work_dir);
  std::vector<Episode> train_eps, test_eps;
  const int kTrain = 20, kTest = 5;
  for (int e = 0; e < kTrain + kTest; ++e) {
    SynthEpisode sep = gen_episode(rc.synth, static_cast<uint64_t>(e));
    Episode ep;
    ep.id = sep.id;
    ep.features = sep.features;
    ep.audio = sep.audio;
    ep.gt = sep.gt;
    ep.spottings = gen_spottings(sep, 0.6, static_cast<uint64_t>(e));
    (e < kTrain ? train_eps : test_eps).push_back(std::move(ep));
  }

  ModelParams params = init_params(rc.model, rc.seed);
  auto spottings = corpus_spottings(train_eps);
  TrainResult pre = pretrain_words(rc.model, std::move(params), spottings, train_eps,
                                   rc.window, rc.text, rc.train);
  TrainResult fine = finetune_subtitles(rc.model, std::move(pre.params), train_eps,
                                        rc.window, rc.text, rc.train);
  save_checkpoint(work_dir + "/model.ckpt", rc.model, fine.params);

  AlignOptions opts;
  opts.tau = rc.tau;
  opts.tau_dtw = rc.tau_dtw;
  EvalAccumulator model_acc, prior_acc;
  for (const auto& ep : test_eps) {
    SubtitleTrack pred = align_episode(ep, fine.params, rc.model, rc.window, rc.text, opts);
    accumulate_episode_eval(model_acc, ep, pred, rc.window, opts.prior_delta_ms);
    SubtitleTrack prior = shift_baseline(ep.audio, opts.prior_delta_ms);
    accumulate_episode_eval(prior_acc, ep, prior, rc.window, opts.prior_delta_ms);
  }
  EvalReport model_rep = model_acc.report();
  EvalReport prior_rep = prior_acc.report();

  double d_acc = 100.0 * (model_rep.frame_acc - prior_rep.frame_acc);
  double d_f1 = 100.0 * (model_rep.f1[1] - prior_rep.f1[1]);
  auto dt = std::chrono::duration_cast<std::chrono::seconds>(
      std::chrono::steady_clock::now() - t0);

  std::printf("smoke: model frame-acc %.2f  F1@.25 %.2f\n", 100.0 * model_rep.frame_acc,
              100.0 * model_rep.f1[1]);
  std::printf("smoke: prior frame-acc %.2f  F1@.25 %.2f\n", 100.0 * prior_rep.frame_acc,
              100.0 * prior_rep.f1[1]);
  std::printf("smoke: margins +%.2f acc (need %.2f), +%.2f F1@.25 (need %.2f), %llds\n",
              d_acc, margin_acc, d_f1, margin_f1, static_cast<long long>(dt.count()));
  if (d_acc >= margin_acc && d_f1 >= margin_f1) return kExitOk;
  return kExitMargin;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subtitle-to-signing alignment toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value configuration file");

  RunConfig rc;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  std::string synth_out;
  int synth_train = 12, synth_test = 4;
  double spot_recall = 0.6;
  add_profile_options(synth, rc);
  synth->add_option("--out", synth_out, "Output corpus directory")->required();
  synth->add_option("--train-episodes", synth_train, "Training episodes")
      ->capture_default_str();
  synth->add_option("--test-episodes", synth_test, "Held-out episodes")
      ->capture_default_str();
  synth->add_option("--subs", rc.synth.subs_per_episode, "Subtitles per episode")
      ->capture_default_str();
  synth->add_option("--vocab", rc.synth.vocab_size, "Vocabulary size")
      ->capture_default_str();
  synth->add_option("--shift-std", rc.synth.shift_std_s, "Start-shift sigma (s)")
      ->capture_default_str();
  synth->add_option("--dur-std", rc.synth.dur_noise_std_s, "Duration-noise sigma (s)")
      ->capture_default_str();
  synth->add_option("--spot-recall", spot_recall, "Fraction of motifs spotted")
      ->capture_default_str();

  auto* pretrain = app.add_subcommand("pretrain", "Word-localisation pretraining");
  std::string corpus_dir, ckpt_out = "model.ckpt", loss_log;
  int opt_epochs = 0, opt_batch = 0;
  double opt_lr = 0.0;
  add_profile_options(pretrain, rc);
  pretrain->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  pretrain->add_option("--out", ckpt_out, "Checkpoint path")->capture_default_str();
  pretrain->add_option("--loss-log", loss_log, "Loss log CSV path");
  pretrain->add_option("--epochs", opt_epochs, "Pretraining epochs");
  pretrain->add_option("--lr", opt_lr, "Pretraining learning rate");
  pretrain->add_option("--batch", opt_batch, "Batch size");

  auto* train = app.add_subcommand("train", "Subtitle finetuning");
  std::string train_init;
  bool no_augment = false;
  add_profile_options(train, rc);
  train->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  train->add_option("--init", train_init, "Initial checkpoint (e.g. pretrained)");
  train->add_option("--out", ckpt_out, "Checkpoint path")->capture_default_str();
  train->add_option("--loss-log", loss_log, "Loss log CSV path");
  train->add_option("--epochs", opt_epochs, "Finetuning epochs");
  train->add_option("--lr", opt_lr, "Finetuning learning rate");
  train->add_option("--batch", opt_batch, "Batch size");
  train->add_option("--prior-delta-ms", rc.train.prior_shift_ms,
                    "Audio-to-prior shift during training (ms)");
  train->add_flag("--random-subtitle", rc.train.random_subtitle,
                  "Feed mismatched subtitle text (control experiment)");
  train->add_flag("--no-augment", no_augment, "Disable text augmentation");

  auto* align = app.add_subcommand("align", "Align subtitles to video");
  std::string align_ckpt, align_out = "aligned";
  AlignOptions align_opts;
  bool no_dtw = false;
  add_profile_options(align, rc);
  align->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  align->add_option("--checkpoint", align_ckpt, "Model checkpoint")->required();
  align->add_option("--out", align_out, "Output directory")->capture_default_str();
  align->add_flag("--no-dtw", no_dtw, "Skip the overlap-resolving DTW stage");
  align->add_option("--prior-delta-ms", align_opts.prior_delta_ms,
                    "Audio-to-prior shift (ms)");
  align->add_option("--shift-prior-ms", align_opts.prior_shift_ms,
                    "Extra prior shift at inference, window fixed (ms)");
  align->add_option("--shift-window-ms", align_opts.window_shift_ms,
                    "Search-window shift at inference, prior fixed (ms)");

  auto* baseline = app.add_subcommand("baseline", "Reference aligners");
  std::string method = "shift", baseline_out = "baseline";
  int64_t delta_ms = 3200;
  add_profile_options(baseline, rc);
  baseline->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  baseline->add_option("--method", method, "shift | spotting")
      ->check(CLI::IsMember({"shift", "spotting"}))
      ->capture_default_str();
  baseline->add_option("--delta-ms", delta_ms, "Shift for the shift baseline (ms)")
      ->capture_default_str();
  baseline->add_option("--out", baseline_out, "Output directory")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth");
  std::string pred_dir, eval_csv, scope = "window";
  int64_t eval_prior_delta = 3200;
  add_profile_options(eval, rc);
  eval->add_option("--corpus", corpus_dir, "Corpus directory (features+gt+audio)")
      ->required();
  eval->add_option("--pred", pred_dir, "Directory of <id>.pred.srt files")->required();
  eval->add_option("--prior-delta-ms", eval_prior_delta,
                   "Audio-to-prior shift defining the evaluation windows (ms)");
  eval->add_option("--frame-acc-scope", scope, "window | episode")
      ->check(CLI::IsMember({"window", "episode"}))
      ->capture_default_str();
  eval->add_option("--csv", eval_csv, "Write the report as CSV here");

  auto* perturb = app.add_subcommand("perturb", "Jitter an aligned track");
  std::string perturb_in, perturb_out;
  double sigma_pos = 3.5, sigma_dur = 1.5;
  add_profile_options(perturb, rc);
  perturb->add_option("--in", perturb_in, "Aligned SRT")->required();
  perturb->add_option("--out", perturb_out, "Perturbed SRT")->required();
  perturb->add_option("--sigma-pos", sigma_pos, "Position sigma (s)")
      ->capture_default_str();
  perturb->add_option("--sigma-dur", sigma_dur, "Duration sigma (s)")
      ->capture_default_str();

  auto* smoke = app.add_subcommand("smoke", "End-to-end pipeline regression");
  std::string smoke_dir = "smoke_run";
  double margin_acc = 10.0, margin_f1 = 15.0;
  add_profile_options(smoke, rc);
  smoke->add_option("--out", smoke_dir, "Working directory")->capture_default_str();
  smoke->add_option("--margin-acc", margin_acc, "Required frame-acc margin (points)")
      ->capture_default_str();
  smoke->add_option("--margin-f1", margin_f1, "Required F1@.25 margin (points)")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    rc.apply_profile();
    // Explicit tuning flags override the profile defaults.
    if (pretrain->count("--epochs") || train->count("--epochs")) {
      rc.train.pretrain_epochs = opt_epochs;
      rc.train.finetune_epochs = opt_epochs;
    }
    if (pretrain->count("--lr") || train->count("--lr")) {
      rc.train.lr_pretrain = opt_lr;
      rc.train.lr_finetune = opt_lr;
    }
    if (pretrain->count("--batch") || train->count("--batch")) {
      rc.train.batch_size = opt_batch;
    }
    if (no_augment) rc.train.augment_prob = 0.0;
    align_opts.use_dtw = !no_dtw;

    if (synth->parsed()) return cmd_synth(rc, synth_out, synth_train, synth_test, spot_recall);
    if (pretrain->parsed()) return cmd_pretrain(rc, corpus_dir, ckpt_out, loss_log);
    if (train->parsed()) return cmd_train(rc, corpus_dir, train_init, ckpt_out, loss_log);
    if (align->parsed()) return cmd_align(rc, corpus_dir, align_ckpt, align_out, align_opts);
    if (baseline->parsed()) return cmd_baseline(corpus_dir, method, delta_ms, baseline_out);
    if (eval->parsed()) return cmd_eval(rc, corpus_dir, pred_dir, eval_prior_delta, scope, eval_csv);
    if (perturb->parsed()) return cmd_perturb(rc, perturb_in, perturb_out, sigma_pos, sigma_dur);
    if (smoke->parsed()) return cmd_smoke(rc, smoke_dir, margin_acc, margin_f1);
  } catch (const ConfigMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
