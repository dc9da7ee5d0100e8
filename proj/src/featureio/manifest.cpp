// Copyright 2026 The avlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "avlab/featureio/manifest.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "avlab/common/errors.hpp"

namespace avlab::io {

using nlohmann::json;

namespace {

const std::set<std::string> kRecordKeys = {"video_id", "visual_path", "audio_path", "label", "frame_gt_path"};

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

bool VideoRecord::is_normal() const {
  for (std::size_t c = 1; c < label.size(); ++c) {
    if (label[c] != 0) return false;
  }
  return true;
}

std::vector<std::size_t> VideoRecord::positive_classes() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < label.size(); ++c) {
    if (label[c] != 0) out.push_back(c);
  }
  return out;
}

void validate_record(const VideoRecord& r) {
  if (r.video_id.empty()) throw DataError("manifest record with empty video_id");
  if (r.visual_path.empty()) throw DataError("video '" + r.video_id + "': empty visual_path");
  if (r.label.size() < 2) throw DataError("video '" + r.video_id + "': label needs at least 2 classes");
  bool any = false;
  for (auto v : r.label) {
    if (v > 1) throw DataError("video '" + r.video_id + "': label entries must be 0 or 1");
    any = any || v != 0;
  }
  if (!any) throw DataError("video '" + r.video_id + "': label has no positive class");
  // Normal videos carry exactly the normal class; anomalous ones never do.
  if (r.label[0] != 0 && !r.is_normal()) {
    throw DataError("video '" + r.video_id + "': normal class mixed with anomaly classes");
  }
}

std::filesystem::path Manifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

std::size_t Manifest::num_classes() const {
  if (records.empty()) throw DataError("empty manifest");
  const std::size_t c = records.front().label.size();
  for (const auto& r : records) {
    if (r.label.size() != c) throw DataError("video '" + r.video_id + "': label width differs from the first record");
  }
  return c;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!j.is_object()) throw DataError(where + ": record is not an object");
    for (const auto& [key, _] : j.items()) {
      if (!kRecordKeys.count(key)) throw DataError(where + ": unknown key '" + key + "'");
    }
    VideoRecord r;
    try {
      r.video_id = j.at("video_id").get<std::string>();
      r.visual_path = j.at("visual_path").get<std::string>();
      r.audio_path = optional_string(j, "audio_path");
      r.label = j.at("label").get<std::vector<std::uint8_t>>();
      r.frame_gt_path = optional_string(j, "frame_gt_path");
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    validate_record(r);
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const std::vector<VideoRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  for (const auto& r : records) {
    validate_record(r);
    // ordered_json keeps the documented key order in the file.
    nlohmann::ordered_json j;
    j["video_id"] = r.video_id;
    j["visual_path"] = r.visual_path;
    j["audio_path"] = r.audio_path ? json(*r.audio_path) : json(nullptr);
    j["label"] = r.label;
    j["frame_gt_path"] = r.frame_gt_path ? json(*r.frame_gt_path) : json(nullptr);
    out << j.dump() << '\n';
  }
}

}  // namespace avlab::io
