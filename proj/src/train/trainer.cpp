// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <thread>

#include "avlab/common/rng.hpp"
#include "avlab/featureio/avfe.hpp"
#include "avlab/train/dataset.hpp"
#include "avlab/train/evaluate.hpp"

namespace avlab::train {

using diff::Tape;
using diff::Var;
using model::Architecture;
using model::ModelParams;

const char* mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::teacher_av: return "teacher_av";
    case TrainMode::student_visual: return "student_visual";
    case TrainMode::student_audio: return "student_audio";
    case TrainMode::distill_ukd: return "distill_ukd";
  }
  return "unknown";
}

TrainMode parse_mode(const std::string& s) {
  if (s == "teacher_av") return TrainMode::teacher_av;
  if (s == "student_visual") return TrainMode::student_visual;
  if (s == "student_audio") return TrainMode::student_audio;
  if (s == "distill_ukd") return TrainMode::distill_ukd;
  throw ConfigError("train.mode must be one of teacher_av, student_visual, student_audio, distill_ukd; got \"" + s +
                    "\"");
}

Architecture architecture_for(TrainMode m) {
  return m == TrainMode::teacher_av ? Architecture::teacher : Architecture::student;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (stride == 0) throw ConfigError("train.stride must be positive");
  if (max_len == 0) throw ConfigError("train.max_len must be positive");
  if (threads == 0) throw ConfigError("train.threads must be positive");
  if (temporal_window == 0 || temporal_window % 2 == 0) throw ConfigError("model.temporal_window must be odd");
  adam.validate();
  loss.validate();
  if (mode == TrainMode::distill_ukd && teacher_checkpoint.empty()) {
    throw ConfigError("train.teacher_checkpoint is required in distill_ukd mode");
  }
}

model::ModelDims TrainConfig::dims_for(std::size_t d, std::size_t num_classes) const {
  auto dims = model::ModelDims::defaults(d, num_classes);
  if (fusion_hidden) dims.fusion_hidden = fusion_hidden;
  if (classifier_hidden) dims.classifier_hidden = classifier_hidden;
  if (prompt_hidden) dims.prompt_hidden = prompt_hidden;
  if (uncert_hidden) dims.uncert_hidden = uncert_hidden;
  dims.temporal_window = temporal_window;
  dims.validate();
  return dims;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct VideoStep {
  std::vector<std::vector<double>> grads;
  double total = 0.0, bce = 0.0, align = 0.0, ukd = 0.0;
};

struct Job {
  const TrainConfig& cfg;
  const std::vector<VideoSample>& samples;
  const std::vector<Matrix<float>>& teacher_features;  // distill_ukd only
};

VideoStep run_video(const Job& job, const ModelParams& params, std::size_t index) {
  const auto& cfg = job.cfg;
  const auto& s = job.samples[index];
  Tape<float> tape;
  auto p = params.bind(tape);
  model::GraphOutputs<float> out;
  switch (cfg.mode) {
    case TrainMode::teacher_av: {
      auto xa = s.audio ? tape.constant(*s.audio) : Var<float>{};
      out = model::forward_teacher(p, tape.constant(s.visual), xa, cfg.forward);
      break;
    }
    case TrainMode::student_visual:
      out = model::forward_student(p, tape.constant(s.visual), false, cfg.forward);
      break;
    case TrainMode::student_audio:
      out = model::forward_student(p, tape.constant(*s.audio), false, cfg.forward);
      break;
    case TrainMode::distill_ukd:
      out = model::forward_student(p, tape.constant(s.visual), true, cfg.forward);
      break;
  }
  auto branch = losses::dual_branch_loss(out, s.record.label, cfg.loss);
  VideoStep step;
  Var<float> loss = branch.total;
  if (cfg.mode != TrainMode::teacher_av) loss = diff::scale(branch.total, cfg.loss.task_w);
  if (cfg.mode == TrainMode::distill_ukd) {
    auto ukd = losses::ukd_loss(tape.constant(job.teacher_features[index]), out.features, out.log_var);
    loss = diff::add(loss, diff::scale(ukd, cfg.loss.ukd_w));
    step.ukd = ukd.item();
  }
  tape.backward(loss);
  step.total = loss.item();
  step.bce = branch.bce.item();
  step.align = branch.align.item();

  const auto& entries = params.entries();
  step.grads.resize(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].trainable) continue;
    auto& g = step.grads[i];
    g.assign(entries[i].value.size(), 0.0);
    const auto v = p[entries[i].name];
    if (!v.has_grad()) continue;
    const auto src = v.grad();
    std::copy(src.begin(), src.end(), g.begin());
  }
  return step;
}

std::vector<VideoStep> run_batch(const Job& job, const ModelParams& params, std::span<const std::size_t> batch) {
  std::vector<VideoStep> steps(batch.size());
  const std::size_t workers = std::min(job.cfg.threads, batch.size());
  if (workers <= 1) {
    for (std::size_t b = 0; b < batch.size(); ++b) steps[b] = run_video(job, params, batch[b]);
    return steps;
  }
  // Each worker owns a disjoint slice of `steps`; reduction happens later in
  // batch order, so results do not depend on scheduling.
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t b = w; b < batch.size(); b += workers) steps[b] = run_video(job, params, batch[b]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return steps;
}

nlohmann::json checkpoint_meta(const TrainConfig& cfg, const std::vector<std::string>& classes) {
  nlohmann::json meta;
  meta["mode"] = mode_name(cfg.mode);
  meta["input"] = cfg.mode == TrainMode::teacher_av ? "audio_visual"
                  : cfg.mode == TrainMode::student_audio ? "audio"
                                                         : "visual";
  meta["classes"] = classes;
  meta["fusion"] = model::fusion_mode_name(cfg.forward.fusion);
  meta["use_prompt"] = cfg.forward.use_prompt;
  meta["stride"] = cfg.stride;
  meta["max_len"] = cfg.max_len;
  meta["tau"] = cfg.loss.tau;
  meta["seed"] = cfg.seed;
  return meta;
}

void copy_heads(ModelParams& student, const ModelParams& teacher) {
  for (auto& e : student.entries()) {
    const bool head = e.name.starts_with("classifier.") || e.name.starts_with("prompt_ffn.") ||
                      e.name == "text_prompt" || e.name == "class_base";
    if (head) e.value = teacher.at(e.name);
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const io::Manifest& train_set, const io::Manifest* test_set,
                  const nlohmann::json& config_echo) {
  cfg.validate();
  const auto t0 = Clock::now();
  if (train_set.records.empty()) throw DataError("training manifest has no videos");
  const auto classes = class_names_for(train_set);

  DataOptions opt;
  opt.stride = cfg.stride;
  opt.max_len = cfg.max_len;
  opt.need_visual = cfg.mode != TrainMode::student_audio;
  opt.need_audio = cfg.mode == TrainMode::student_audio || cfg.mode == TrainMode::distill_ukd ||
                   (cfg.mode == TrainMode::teacher_av && cfg.forward.fusion == model::FusionMode::adaptive);
  const auto samples = load_samples(train_set, opt);
  const std::size_t d = cfg.mode == TrainMode::student_audio ? samples.front().audio->cols() : samples.front().visual.cols();
  for (const auto& s : samples) {
    const std::size_t w = cfg.mode == TrainMode::student_audio ? s.audio->cols() : s.visual.cols();
    if (w != d) throw DataError("video '" + s.record.video_id + "' has feature width " + std::to_string(w) +
                                ", expected " + std::to_string(d));
  }

  std::optional<model::Checkpoint> teacher;
  std::vector<Matrix<float>> teacher_features;
  if (cfg.mode == TrainMode::distill_ukd) {
    teacher = model::load_checkpoint(cfg.teacher_checkpoint);
    const auto& tp = teacher->params;
    if (tp.architecture() != Architecture::teacher) {
      throw ConfigError(cfg.teacher_checkpoint + " is not a teacher checkpoint");
    }
    if (tp.dims().d != d) {
      throw ConfigError("teacher width d = " + std::to_string(tp.dims().d) + " does not match student width d = " +
                        std::to_string(d));
    }
    if (tp.dims().num_classes != classes.size()) {
      throw ConfigError("teacher has " + std::to_string(tp.dims().num_classes) + " classes, data has " +
                        std::to_string(classes.size()));
    }
    model::ForwardOptions tf;
    tf.fusion = model::parse_fusion_mode(teacher->meta.value("fusion", std::string("adaptive")));
    tf.use_prompt = teacher->meta.value("use_prompt", true);
    teacher_features.reserve(samples.size());
    for (const auto& s : samples) {
      teacher_features.push_back(model::detect(tp, s.visual, s.audio ? &*s.audio : nullptr, tf).x_av);
    }
  }

  Matrix<float> class_base;
  const Matrix<float>* class_base_ptr = nullptr;
  if (!cfg.class_embeddings.empty()) {
    auto seq = io::read_features(cfg.class_embeddings);
    if (seq.modality != io::Modality::class_embedding) {
      throw DataError(cfg.class_embeddings + " does not hold class embeddings (tag " +
                      std::to_string(static_cast<int>(seq.modality)) + ")");
    }
    class_base = std::move(seq.data);
    class_base_ptr = &class_base;
  }

  Rng init_rng(cfg.seed, "init");
  Rng shuffle_rng(cfg.seed, "shuffle");
  auto params = ModelParams::init(architecture_for(cfg.mode), cfg.dims_for(d, classes.size()), init_rng, class_base_ptr);
  if (teacher && cfg.copy_heads_from_teacher) copy_heads(params, teacher->params);

  Adam adam(params, cfg.adam);
  RunReport report;
  report.mode = mode_name(cfg.mode);
  report.config = config_echo;
  report.param_count = params.trainable_count();

  const Job job{cfg, samples, teacher_features};
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  spdlog::info("{}: {} videos, {} trainable parameters, {} epochs", report.mode, samples.size(), report.param_count,
               cfg.epochs);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto te = Clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    EpochLog log;
    log.epoch = epoch + 1;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto steps = run_batch(job, params, std::span(order).subspan(start, end - start));
      std::vector<std::vector<double>> grads(params.entries().size());
      for (std::size_t i = 0; i < grads.size(); ++i) {
        if (params.entries()[i].trainable) grads[i].assign(params.entries()[i].value.size(), 0.0);
      }
      for (const auto& st : steps) {
        for (std::size_t i = 0; i < grads.size(); ++i) {
          for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i][j] += st.grads[i][j];
        }
        log.total += st.total;
        log.bce += st.bce;
        log.align += st.align;
        log.ukd += st.ukd;
      }
      const double inv = 1.0 / double(steps.size());
      for (auto& g : grads) {
        for (auto& x : g) x *= inv;
      }
      adam.step(params, grads);
    }
    const double n = double(samples.size());
    log.total /= n;
    log.bce /= n;
    log.align /= n;
    log.ukd /= n;
    log.wall_seconds = seconds_since(te);
    spdlog::info("epoch {} total {:.6f} bce {:.6f} align {:.6f} ukd {:.6f} ({:.2f}s)", log.epoch, log.total, log.bce,
                 log.align, log.ukd, log.wall_seconds);
    report.epochs.push_back(log);
  }
  report.optimizer_steps = adam.steps();

  TrainResult result;
  result.checkpoint.params = std::move(params);
  result.checkpoint.meta = checkpoint_meta(cfg, classes);
  if (test_set) report.eval = evaluate(result.checkpoint, *test_set, cfg.proposals);
  report.wall_seconds = seconds_since(t0);
  result.report = std::move(report);
  return result;
}

}  // namespace avlab::train
