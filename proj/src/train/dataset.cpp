// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/train/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "avlab/featureio/avfe.hpp"
#include "avlab/featureio/resample.hpp"

namespace avlab::train {

namespace {

io::FeatureSequence load_modality(const io::Manifest& m, const io::VideoRecord& r, const std::string& rel,
                                  io::Modality expect) {
  const auto path = m.resolve(rel);
  if (!std::filesystem::exists(path)) {
    throw DataError("video '" + r.video_id + "': " + io::modality_name(expect) + " file " + path.string() +
                    " does not exist");
  }
  auto seq = io::read_features(path);
  seq.video_id = r.video_id;
  if (seq.modality != expect) {
    throw DataError("video '" + r.video_id + "': " + rel + " holds " + io::modality_name(seq.modality) +
                    " features, expected " + io::modality_name(expect));
  }
  return seq;
}

}  // namespace

std::vector<VideoSample> load_samples(const io::Manifest& manifest, const DataOptions& opt) {
  std::vector<VideoSample> out;
  out.reserve(manifest.records.size());
  for (const auto& r : manifest.records) {
    VideoSample s;
    s.record = r;
    // The visual track defines the raw frame count even when only audio is used.
    const auto visual = load_modality(manifest, r, r.visual_path, io::Modality::visual);
    s.raw_frames = visual.n_frames();
    if (opt.need_visual) s.visual = io::resample(visual, opt.stride, opt.max_len).data;
    if (opt.need_audio) {
      if (!r.audio_path) throw DataError("video '" + r.video_id + "' has no audio features");
      const auto audio = load_modality(manifest, r, *r.audio_path, io::Modality::audio);
      if (audio.n_frames() != visual.n_frames()) {
        throw DataError("video '" + r.video_id + "': audio has " + std::to_string(audio.n_frames()) +
                        " frames, visual has " + std::to_string(visual.n_frames()));
      }
      if (audio.dim() != visual.dim()) {
        throw DataError("video '" + r.video_id + "': audio width " + std::to_string(audio.dim()) +
                        " differs from visual width " + std::to_string(visual.dim()));
      }
      s.audio = io::resample(audio, opt.stride, opt.max_len).data;
    }
    if (opt.load_gt && r.frame_gt_path) {
      s.frame_gt = io::read_frame_mask(manifest.resolve(*r.frame_gt_path));
      if (s.frame_gt.size() != s.raw_frames) {
        throw DataError("video '" + r.video_id + "': frame ground truth has " + std::to_string(s.frame_gt.size()) +
                        " frames, features have " + std::to_string(s.raw_frames));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> class_names_for(const io::Manifest& manifest) {
  const std::size_t C = manifest.num_classes();
  const auto meta_path = manifest.base_dir / "dataset.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    try {
      const auto j = nlohmann::json::parse(in);
      auto names = j.at("classes").get<std::vector<std::string>>();
      if (names.size() != C) {
        throw DataError(meta_path.string() + ": " + std::to_string(names.size()) + " class names, labels have " +
                        std::to_string(C));
      }
      return names;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(meta_path.string() + ": " + e.what());
    }
  }
  std::vector<std::string> names{"normal"};
  for (std::size_t c = 1; c < C; ++c) names.push_back("class" + std::to_string(c));
  return names;
}

}  // namespace avlab::train
