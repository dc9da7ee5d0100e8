// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
//
// avlab: synth | train | distill | eval | score | gradcheck
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 data or
// file-format error, 3 numeric failure or failed verification.
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "avlab/cli/run_config.hpp"
#include "avlab/common/errors.hpp"
#include "avlab/featureio/synth.hpp"
#include "avlab/train/evaluate.hpp"
#include "avlab/train/gradsuite.hpp"
#include "avlab/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace avlab;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitFailure = 3;

struct ConfigFlags {
  std::string config_file;
  std::string preset = "desk";
  std::vector<std::string> overrides;
  bool deterministic = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("-c,--config", f.config_file, "JSON config file (nested sections as listed below)");
  cmd->add_option("--preset", f.preset, "named preset: desk (default) or full");
  cmd->add_option("--set", f.overrides, "override one key, e.g. --set train.lr=3e-4 (repeatable)");
  cmd->add_flag("--deterministic", f.deterministic, "single-threaded, no wall-clock fields in reports");
}

cli::RunConfig resolve(const ConfigFlags& f) {
  auto cfg = cli::resolve(f.preset, f.config_file, f.overrides);
  if (f.deterministic) {
    cfg.train.threads = 1;
    cfg.record_timing = false;
  }
  return cfg;
}

std::string config_footer() {
  std::ostringstream os;
  os << "\nConfiguration keys (defaults < --preset < --config < --set):\n";
  for (const auto& k : cli::key_docs()) {
    os << "  " << k.key << " = " << k.default_value << "\n      " << k.help << "\n";
  }
  os << "\nPresets:\n";
  for (const auto& name : cli::preset_names()) {
    const auto p = cli::preset(name);
    os << "  " << name << ": " << (p.empty() ? std::string("built-in defaults") : p.dump()) << "\n";
  }
  os << "\nSPDLOG_LEVEL (trace, debug, info, warn, error, off) sets log verbosity; logs go to stderr.\n";
  os << "Exit codes: 0 ok, 1 configuration, 2 data or file format, 3 numeric failure or failed check.\n";
  return os.str();
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw DataError(path.string() + ": write failed");
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

void print_eval(const metrics::EvalReport& r) {
  std::printf("  videos %zu, frames %zu (%zu anomalous), gt segments %zu, proposals %zu\n", r.n_videos, r.n_frames,
              r.n_positive_frames, r.n_gt_segments, r.n_pred_segments);
  std::printf("  frame AP %s\n", fmt_opt(r.frame_ap).c_str());
  for (std::size_t i = 0; i < r.map_per_iou.size(); ++i) {
    std::printf("  mAP@%.1f %.4f\n", r.iou_thresholds[i], r.map_per_iou[i]);
  }
  std::printf("  AVG %s\n", fmt_opt(r.avg_map).c_str());
  for (const auto& n : r.notes) std::printf("  note: %s\n", n.c_str());
}

int run_synth(const ConfigFlags& f, const std::string& out_override) {
  auto cfg = resolve(f);
  const fs::path out = out_override.empty() ? fs::path(cfg.paths.data_dir) : fs::path(out_override);
  const auto data = io::synth_generate(cfg.synth);
  io::synth_write(data, cfg.synth, out);
  std::size_t frames = 0, anomalous_frames = 0, anomalous_videos = 0;
  for (const auto* split : {&data.train, &data.test}) {
    for (const auto& v : *split) {
      frames += v.frame_gt.size();
      bool any = false;
      for (auto g : v.frame_gt) {
        anomalous_frames += g != 0;
        any |= g != 0;
      }
      anomalous_videos += any;
    }
  }
  std::printf("synth: %zu train + %zu test videos, d=%zu, %zu classes -> %s\n", data.train.size(), data.test.size(),
              cfg.synth.d, cfg.synth.classes.size(), out.string().c_str());
  std::printf("  anomalous videos %zu, anomalous frame fraction %.4f\n", anomalous_videos,
              frames ? double(anomalous_frames) / double(frames) : 0.0);
  return 0;
}

struct TrainFlags {
  std::string train_manifest, test_manifest, out_dir, mode, teacher;
  bool no_eval = false;
};

int run_train(const ConfigFlags& f, const TrainFlags& t, bool distill) {
  auto cfg = resolve(f);
  if (!t.train_manifest.empty()) cfg.paths.train_manifest = t.train_manifest;
  if (!t.test_manifest.empty()) cfg.paths.test_manifest = t.test_manifest;
  if (!t.out_dir.empty()) cfg.paths.out_dir = t.out_dir;
  if (!t.mode.empty()) cfg.train.mode = train::parse_mode(t.mode);
  if (distill) cfg.train.mode = train::TrainMode::distill_ukd;
  if (!t.teacher.empty()) cfg.train.teacher_checkpoint = t.teacher;
  if (!distill && cfg.train.mode == train::TrainMode::distill_ukd) {
    throw ConfigError("train.mode distill_ukd is run by the distill subcommand");
  }
  cfg.train.validate();

  const auto train_set = io::read_manifest(cfg.paths.train_path());
  std::optional<io::Manifest> test_set;
  if (!t.no_eval) test_set = io::read_manifest(cfg.paths.test_path());
  const auto echo = cfg.to_json();
  auto result = train::train(cfg.train, train_set, test_set ? &*test_set : nullptr, echo);

  const fs::path out(cfg.paths.out_dir);
  const std::string stem = train::mode_name(cfg.train.mode);
  fs::create_directories(out);
  model::save_checkpoint(result.checkpoint, out / (stem + ".avck"));
  write_json(out / (stem + ".report.json"), result.report.to_json(cfg.record_timing));

  const auto& r = result.report;
  std::printf("%s: %zu trainable parameters, %zu epochs, %zu optimizer steps\n", stem.c_str(), r.param_count,
              r.epochs.size(), r.optimizer_steps);
  if (r.epochs.empty()) {
    std::printf("  zero epochs: checkpoint holds the initial parameters\n");
  } else {
    const auto& e = r.epochs.back();
    std::printf("  final epoch loss %.6f (bce %.6f, align %.6f", e.total, e.bce, e.align);
    if (cfg.train.mode == train::TrainMode::distill_ukd) std::printf(", ukd %.6f", e.ukd);
    std::printf(")\n");
  }
  if (r.eval) print_eval(*r.eval);
  std::printf("  wrote %s and %s\n", (out / (stem + ".avck")).string().c_str(),
              (out / (stem + ".report.json")).string().c_str());
  return 0;
}

struct EvalFlags {
  std::string checkpoint, manifest, scores, out;
};

int run_eval(const ConfigFlags& f, const EvalFlags& e) {
  auto cfg = resolve(f);
  const fs::path manifest_path = e.manifest.empty() ? cfg.paths.test_path() : fs::path(e.manifest);
  const auto manifest = io::read_manifest(manifest_path);
  metrics::EvalReport report;
  if (!e.scores.empty()) {
    if (!e.checkpoint.empty()) throw ConfigError("eval takes --checkpoint or --scores, not both");
    report = train::evaluate_score_dump(manifest, e.scores, cfg.train.loss.tau, cfg.eval);
  } else {
    if (e.checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --scores");
    report = train::evaluate(model::load_checkpoint(e.checkpoint), manifest, cfg.eval);
  }
  std::printf("eval: %s\n", manifest_path.string().c_str());
  print_eval(report);
  if (!e.out.empty()) {
    nlohmann::ordered_json j;
    j["source"] = e.scores.empty() ? e.checkpoint : e.scores;
    j["manifest"] = manifest_path.string();
    j["eval"] = report.to_json();
    j["config"] = cfg.to_json();
    write_json(e.out, j);
    std::printf("  wrote %s\n", e.out.c_str());
  }
  return 0;
}

int run_score(const ConfigFlags& f, const EvalFlags& e) {
  auto cfg = resolve(f);
  if (e.checkpoint.empty()) throw ConfigError("score needs --checkpoint");
  const fs::path manifest_path = e.manifest.empty() ? cfg.paths.test_path() : fs::path(e.manifest);
  const fs::path out = e.out.empty() ? fs::path(cfg.paths.out_dir) / "scores" : fs::path(e.out);
  const auto manifest = io::read_manifest(manifest_path);
  fs::create_directories(out);
  train::write_score_dump(model::load_checkpoint(e.checkpoint), manifest, out);
  std::printf("score: %zu videos -> %s/<video_id>.scores.avfe (columns: A, then one per class)\n",
              manifest.records.size(), out.string().c_str());
  return 0;
}

int run_gradcheck(std::size_t seeds, double eps) {
  constexpr double kTolerance = 1e-4;
  train::GradSuiteConfig gc;
  gc.eps = eps;
  std::vector<std::string> order;
  std::map<std::string, double> worst;
  for (std::size_t s = 0; s < seeds; ++s) {
    for (const auto& c : train::gradient_suite(s, gc)) {
      if (!worst.count(c.name)) order.push_back(c.name);
      worst[c.name] = std::max(worst[c.name], c.worst);
    }
  }
  double overall = 0.0;
  std::printf("gradcheck: %zu seeds, eps %g, tolerance %g (relative error)\n", seeds, eps, kTolerance);
  for (const auto& name : order) {
    std::printf("  %-22s %.3e %s\n", name.c_str(), worst[name], worst[name] < kTolerance ? "ok" : "FAIL");
    overall = std::max(overall, worst[name]);
  }
  std::printf("  max rel-err %.3e\n", overall);
  return overall < kTolerance ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("avlab");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"avlab: weakly supervised audio-visual anomaly detection on precomputed features"};
  app.require_subcommand(1);
  app.footer(config_footer());

  ConfigFlags synth_f, train_f, distill_f, eval_f, score_f;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
  add_config_flags(synth, synth_f);
  synth->add_option("-o,--out", synth_out, "output directory (default paths.data_dir)");

  TrainFlags tf, df;
  auto* trn = app.add_subcommand("train", "train a teacher or a student without distillation");
  add_config_flags(trn, train_f);
  trn->add_option("--mode", tf.mode, "teacher_av | student_visual | student_audio");
  trn->add_option("--train", tf.train_manifest, "training manifest");
  trn->add_option("--test", tf.test_manifest, "test manifest for the final evaluation");
  trn->add_option("-o,--out", tf.out_dir, "output directory (default paths.out_dir)");
  trn->add_flag("--no-eval", tf.no_eval, "skip the final evaluation");

  auto* dst = app.add_subcommand("distill", "train a visual student against a frozen teacher");
  add_config_flags(dst, distill_f);
  dst->add_option("--teacher", df.teacher, "teacher checkpoint (default train.teacher_checkpoint)");
  dst->add_option("--train", df.train_manifest, "training manifest");
  dst->add_option("--test", df.test_manifest, "test manifest for the final evaluation");
  dst->add_option("-o,--out", df.out_dir, "output directory (default paths.out_dir)");
  dst->add_flag("--no-eval", df.no_eval, "skip the final evaluation");

  EvalFlags ef, sf;
  auto* evl = app.add_subcommand("eval", "frame AP and mAP@IoU of a checkpoint or a score dump");
  add_config_flags(evl, eval_f);
  evl->add_option("--checkpoint", ef.checkpoint, "checkpoint to run");
  evl->add_option("--scores", ef.scores, "directory of <video_id>.scores.avfe files instead of a checkpoint");
  evl->add_option("--manifest", ef.manifest, "manifest with frame ground truth (default test manifest)");
  evl->add_option("-o,--out", ef.out, "write the report as JSON");

  auto* scr = app.add_subcommand("score", "export per-frame scores of a checkpoint");
  add_config_flags(scr, score_f);
  scr->add_option("--checkpoint", sf.checkpoint, "checkpoint to run")->required();
  scr->add_option("--manifest", sf.manifest, "manifest (default test manifest)");
  scr->add_option("-o,--out", sf.out, "output directory (default <paths.out_dir>/scores)");

  std::size_t gc_seeds = 20;
  double gc_eps = 1e-4;
  auto* gck = app.add_subcommand("gradcheck", "finite-difference check of every operation and both objectives");
  gck->add_option("--seeds", gc_seeds, "random problems per case")->check(CLI::PositiveNumber);
  gck->add_option("--eps", gc_eps, "central-difference step")->check(CLI::Range(1e-6, 1e-3));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return run_synth(synth_f, synth_out);
    if (*trn) return run_train(train_f, tf, false);
    if (*dst) return run_train(distill_f, df, true);
    if (*evl) return run_eval(eval_f, ef);
    if (*scr) return run_score(score_f, sf);
    if (*gck) return run_gradcheck(gc_seeds, gc_eps);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return 0;
}
