// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/cli/run_config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "avlab/common/errors.hpp"

namespace avlab::cli {

using nlohmann::json;
using nlohmann::ordered_json;

std::filesystem::path Paths::train_path() const {
  return train_manifest.empty() ? std::filesystem::path(data_dir) / "train.jsonl" : std::filesystem::path(train_manifest);
}

std::filesystem::path Paths::test_path() const {
  return test_manifest.empty() ? std::filesystem::path(data_dir) / "test.jsonl" : std::filesystem::path(test_manifest);
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  const auto& s = synth;
  j["synth"] = {{"n_train", s.n_train},
                {"n_test", s.n_test},
                {"d", s.d},
                {"classes", s.classes},
                {"anomaly_ratio", s.anomaly_ratio},
                {"audio_only_separable_fraction", s.audio_only_separable_fraction},
                {"noise_scale", s.noise_scale},
                {"min_len", s.min_len},
                {"max_len", s.max_len},
                {"segment_fraction", s.segment_fraction},
                {"latent_dim", s.latent_dim},
                {"latent_noise", s.latent_noise},
                {"separation", s.separation},
                {"scene_scale", s.scene_scale}};
  const auto& t = train;
  j["train"] = {{"mode", train::mode_name(t.mode)},
                {"batch_size", t.batch_size},
                {"epochs", t.epochs},
                {"lr", t.adam.lr},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"adam_eps", t.adam.eps},
                {"weight_decay", t.adam.weight_decay},
                {"stride", t.stride},
                {"max_len", t.max_len},
                {"threads", t.threads},
                {"teacher_checkpoint", t.teacher_checkpoint},
                {"copy_heads_from_teacher", t.copy_heads_from_teacher},
                {"record_timing", record_timing}};
  const auto& l = t.loss;
  j["loss"] = {{"k_ratio", l.k_ratio},         {"tau", l.tau},     {"focal_gamma", l.focal_gamma},
               {"focal_alpha", l.focal_alpha}, {"bce_w", l.bce_w}, {"align_w", l.align_w},
               {"task_w", l.task_w},           {"ukd_w", l.ukd_w}};
  j["model"] = {{"fusion", model::fusion_mode_name(t.forward.fusion)},
                {"use_prompt", t.forward.use_prompt},
                {"fusion_hidden", t.fusion_hidden},
                {"classifier_hidden", t.classifier_hidden},
                {"prompt_hidden", t.prompt_hidden},
                {"uncert_hidden", t.uncert_hidden},
                {"temporal_window", t.temporal_window},
                {"class_embeddings", t.class_embeddings}};
  j["eval"] = {{"thresholds", eval.thresholds}, {"min_len", eval.min_len}};
  j["paths"] = {{"data_dir", paths.data_dir},
                {"train_manifest", paths.train_manifest},
                {"test_manifest", paths.test_manifest},
                {"out_dir", paths.out_dir}};
  return j;
}

RunConfig RunConfig::from_json(const json& patch) {
  auto j = RunConfig{}.to_json();
  merge_checked(j, patch, "config");
  RunConfig c;
  c.seed = j["seed"].get<std::uint64_t>();
  auto& s = c.synth;
  const auto& js = j["synth"];
  s.seed = c.seed;
  s.n_train = js["n_train"];
  s.n_test = js["n_test"];
  s.d = js["d"];
  s.classes = js["classes"].get<std::vector<std::string>>();
  s.anomaly_ratio = js["anomaly_ratio"];
  s.audio_only_separable_fraction = js["audio_only_separable_fraction"];
  s.noise_scale = js["noise_scale"];
  s.min_len = js["min_len"];
  s.max_len = js["max_len"];
  s.segment_fraction = js["segment_fraction"];
  s.latent_dim = js["latent_dim"];
  s.latent_noise = js["latent_noise"];
  s.separation = js["separation"];
  s.scene_scale = js["scene_scale"];

  auto& t = c.train;
  const auto& jt = j["train"];
  t.seed = c.seed;
  t.mode = train::parse_mode(jt["mode"].get<std::string>());
  t.batch_size = jt["batch_size"];
  t.epochs = jt["epochs"];
  t.adam.lr = jt["lr"];
  t.adam.beta1 = jt["beta1"];
  t.adam.beta2 = jt["beta2"];
  t.adam.eps = jt["adam_eps"];
  t.adam.weight_decay = jt["weight_decay"];
  t.stride = jt["stride"];
  t.max_len = jt["max_len"];
  t.threads = jt["threads"];
  t.teacher_checkpoint = jt["teacher_checkpoint"].get<std::string>();
  t.copy_heads_from_teacher = jt["copy_heads_from_teacher"];
  c.record_timing = jt["record_timing"];

  auto& l = t.loss;
  const auto& jl = j["loss"];
  l.k_ratio = jl["k_ratio"];
  l.tau = jl["tau"];
  l.focal_gamma = jl["focal_gamma"];
  l.focal_alpha = jl["focal_alpha"];
  l.bce_w = jl["bce_w"];
  l.align_w = jl["align_w"];
  l.task_w = jl["task_w"];
  l.ukd_w = jl["ukd_w"];

  const auto& jm = j["model"];
  t.forward.fusion = model::parse_fusion_mode(jm["fusion"].get<std::string>());
  t.forward.use_prompt = jm["use_prompt"];
  t.fusion_hidden = jm["fusion_hidden"];
  t.classifier_hidden = jm["classifier_hidden"];
  t.prompt_hidden = jm["prompt_hidden"];
  t.uncert_hidden = jm["uncert_hidden"];
  t.temporal_window = jm["temporal_window"];
  t.class_embeddings = jm["class_embeddings"].get<std::string>();

  c.eval.thresholds = j["eval"]["thresholds"].get<std::vector<double>>();
  c.eval.min_len = j["eval"]["min_len"];
  for (double th : c.eval.thresholds) {
    if (!(th > 0.0 && th < 1.0)) throw ConfigError("eval.thresholds: " + std::to_string(th) + " is not in (0, 1)");
  }
  if (c.eval.thresholds.empty()) throw ConfigError("eval.thresholds must not be empty");
  if (c.eval.min_len == 0) throw ConfigError("eval.min_len must be positive");
  t.proposals = c.eval;

  const auto& jp = j["paths"];
  c.paths.data_dir = jp["data_dir"].get<std::string>();
  c.paths.train_manifest = jp["train_manifest"].get<std::string>();
  c.paths.test_manifest = jp["test_manifest"].get<std::string>();
  c.paths.out_dir = jp["out_dir"].get<std::string>();

  s.validate();
  // The teacher checkpoint requirement is checked when a run starts, so a
  // config can be resolved and printed before the teacher exists.
  auto probe = t;
  if (probe.mode == train::TrainMode::distill_ukd && probe.teacher_checkpoint.empty()) probe.teacher_checkpoint = "-";
  probe.validate();
  return c;
}

namespace {

const std::map<std::string, std::string>& help_table() {
  static const std::map<std::string, std::string> h = {
      {"seed", "run seed; named sub-streams feed synthesis, initialization and shuffling"},
      {"synth.n_train", "training videos"},
      {"synth.n_test", "test videos (frame ground truth is written for these)"},
      {"synth.d", "feature width of both modalities"},
      {"synth.classes", "class names; the first is the normal class"},
      {"synth.anomaly_ratio", "fraction of videos that contain anomalies"},
      {"synth.audio_only_separable_fraction", "fraction of anomalous segments visible to audio only"},
      {"synth.noise_scale", "white feature noise"},
      {"synth.min_len", "shortest video in frames"},
      {"synth.max_len", "longest video in frames"},
      {"synth.segment_fraction", "mean fraction of an anomalous video covered by segments"},
      {"synth.latent_dim", "width of the shared latent space"},
      {"synth.latent_noise", "per-frame latent noise"},
      {"synth.separation", "distance of anomaly prototypes from the normal prototype"},
      {"synth.scene_scale", "per-video constant offset"},
      {"train.mode", "teacher_av | student_visual | student_audio | distill_ukd"},
      {"train.batch_size", "videos per optimizer step"},
      {"train.epochs", "passes over the training set"},
      {"train.lr", "Adam learning rate"},
      {"train.beta1", "Adam first-moment decay"},
      {"train.beta2", "Adam second-moment decay"},
      {"train.adam_eps", "Adam denominator epsilon"},
      {"train.weight_decay", "decoupled weight decay"},
      {"train.stride", "keep every stride-th frame"},
      {"train.max_len", "frame cap after striding"},
      {"train.threads", "worker threads per batch (results do not depend on it)"},
      {"train.teacher_checkpoint", "teacher for distill_ukd"},
      {"train.copy_heads_from_teacher", "distill_ukd: start classifier and prompt heads from the teacher"},
      {"train.record_timing", "include wall-clock seconds in reports"},
      {"loss.k_ratio", "top-k fraction, K = max(1, floor(N * k_ratio))"},
      {"loss.tau", "alignment softmax temperature"},
      {"loss.focal_gamma", "focal loss exponent"},
      {"loss.focal_alpha", "focal loss scale"},
      {"loss.bce_w", "weight of the coarse (binary) branch"},
      {"loss.align_w", "weight of the fine (alignment) branch"},
      {"loss.task_w", "student: weight of the branch losses"},
      {"loss.ukd_w", "student: weight of the uncertainty-weighted distillation term"},
      {"model.fusion", "adaptive | visual_only"},
      {"model.use_prompt", "audio-visual prompt on the class embeddings"},
      {"model.fusion_hidden", "fusion residual width (0: d)"},
      {"model.classifier_hidden", "classifier width (0: d/4)"},
      {"model.prompt_hidden", "prompt FFN width (0: 4d)"},
      {"model.uncert_hidden", "uncertainty net width (0: d/4)"},
      {"model.temporal_window", "attention window in frames (odd)"},
      {"model.class_embeddings", "optional AVFE file of C x d class embeddings"},
      {"eval.thresholds", "score thresholds swept for segment proposals"},
      {"eval.min_len", "shortest proposal in frames"},
      {"paths.data_dir", "dataset directory (synth output, default manifests)"},
      {"paths.train_manifest", "training manifest (empty: <data_dir>/train.jsonl)"},
      {"paths.test_manifest", "test manifest (empty: <data_dir>/test.jsonl)"},
      {"paths.out_dir", "checkpoints, reports and score dumps"},
  };
  return h;
}

void collect_docs(const ordered_json& j, const std::string& prefix, std::vector<KeyDoc>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      collect_docs(v, key, out);
      continue;
    }
    const auto it = help_table().find(key);
    out.push_back({key, v.dump(), it == help_table().end() ? "" : it->second});
  }
}

std::string type_label(const json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number_unsigned()) return "a non-negative integer";
  if (v.is_number_integer()) return "an integer";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "a list";
  if (v.is_object()) return "a section";
  return "null";
}

bool compatible(const json& def, const json& v) {
  if (def.is_number_unsigned()) return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    if (def.empty()) return true;
    for (const auto& e : v) {
      if (!compatible(def.front(), e)) return false;
    }
    return true;
  }
  return false;
}

void merge_into(ordered_json& base, const json& patch, const std::string& prefix, const std::string& source) {
  if (!patch.is_object()) {
    throw ConfigError(source + ": " + (prefix.empty() ? std::string("top level") : "'" + prefix + "'") +
                      " must be a section of keys");
  }
  for (const auto& [k, v] : patch.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (!base.contains(k)) throw ConfigError(source + ": unknown key '" + key + "'");
    auto& slot = base[k];
    if (slot.is_object()) {
      merge_into(slot, v, key, source);
      continue;
    }
    if (!compatible(slot, v)) {
      throw ConfigError(source + ": key '" + key + "' expects " + type_label(slot) + ", got " + v.dump());
    }
    if (slot.is_number_float()) {
      slot = v.get<double>();
    } else {
      slot = v;
    }
  }
}

}  // namespace

std::vector<KeyDoc> key_docs() {
  std::vector<KeyDoc> out;
  collect_docs(RunConfig{}.to_json(), "", out);
  return out;
}

std::vector<std::string> preset_names() { return {"desk", "full"}; }

json preset(const std::string& name) {
  if (name == "desk") return json::object();
  if (name == "full") {
    return {{"synth", {{"d", 512}}},
            {"train", {{"batch_size", 96}, {"lr", 1e-5}, {"epochs", 10}, {"stride", 16}, {"max_len", 256}}}};
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or full)");
}

void merge_checked(ordered_json& base, const json& patch, const std::string& source) {
  merge_into(base, patch, "", source);
}

json parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set '" + assignment + "': expected section.key=value");
  }
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  std::stringstream ss(rest);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("--set '" + assignment + "': empty key component");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  return patch;
}

RunConfig resolve(const std::string& preset_name, const std::filesystem::path& config_file,
                  const std::vector<std::string>& overrides) {
  auto j = RunConfig{}.to_json();
  merge_checked(j, preset(preset_name), "preset " + preset_name);
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw ConfigError(config_file.string() + ": cannot open config file");
    const json file = json::parse(in, nullptr, false, true);
    if (file.is_discarded()) throw ConfigError(config_file.string() + ": not a valid JSON document");
    merge_checked(j, file, config_file.string());
  }
  for (const auto& o : overrides) merge_checked(j, parse_override(o), "--set " + o);
  return RunConfig::from_json(j);
}

}  // namespace avlab::cli
