// Copyright 2026 The DynView Authors.
//
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

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynview/controltext.hpp"
#include "dynview/geometry.hpp"
#include "dynview/raster.hpp"
#include "dynview/selection.hpp"

namespace dynview {

struct RegionRecord {
  std::string image_id;
  std::filesystem::path image_path;
  Box box;                   // corner form, not yet clamped to the image
  std::size_t region_idx = 0;  // ordinal of the annotation in its source file
  bool degenerate = false;   // a zero-size side was widened to one pixel
  std::optional<std::string> caption;
  std::optional<std::string> category;
};

enum class AnnotationFormat { coco_json, jsonl };

/// Picks jsonl for *.jsonl / *.ndjson, COCO JSON otherwise.
AnnotationFormat guess_annotation_format(const std::filesystem::path& path);

struct LoadResult {
  std::vector<RegionRecord> records;
  std::size_t ingested = 0;  // annotations read, including skipped ones
  std::size_t skipped = 0;   // image file missing
  std::vector<std::string> warnings;
  std::vector<std::size_t> skipped_idx;
};

/// Reads region annotations. Relative image paths resolve against
/// `images_dir`. Malformed input throws ParseError carrying the byte offset
/// (and line for JSONL); records whose image file is missing are skipped and
/// counted.
LoadResult load_regions(const std::filesystem::path& path, AnnotationFormat format,
                        const std::filesystem::path& images_dir = {});

/// Decoded images keyed by path; least recently used entries are evicted.
/// Safe for concurrent use.
class ImageCache {
 public:
  explicit ImageCache(std::size_t capacity = 64) : capacity_(capacity) {}

  std::shared_ptr<const ImageRaster> get(const std::filesystem::path& path);
  std::size_t size() const;

 private:
  using Entry = std::pair<std::string, std::shared_ptr<const ImageRaster>>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;  // front = most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

struct RoiDefaults {
  int out_h = 16;
  int out_w = 16;
  int sampling_ratio = 2;
};

struct PipelineConfig {
  std::size_t n = 3;
  int out_size = kDefaultViewSize;
  std::vector<double> candidate_ts = default_grid();
  /// Base seed; per-region seeds for control text are derived from it.
  std::uint64_t seed = 0;
  double keep_prob = kDefaultKeepProb;
  std::shared_ptr<const TagVocab> vocab;  // control sentences need a vocabulary
  /// Where view crops go; empty disables writing them.
  std::filesystem::path views_dir;
  /// view_paths in the manifest are written relative to this directory when set.
  std::filesystem::path manifest_dir;
  RoiDefaults roi;
};

/// Selection echo as stored in a manifest.
struct SelectionEcho {
  std::string policy;  // image-prior | task-prior | no-prior
  std::optional<std::string> mode;
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::vector<double> candidate_ts;
  std::vector<std::string> candidate_phashes;  // [0] is the t = 0 view
  std::vector<double> scores;
  std::vector<double> chosen_ts;
  std::vector<double> alternate_ts;

  friend bool operator==(const SelectionEcho&, const SelectionEcho&) = default;
};

struct ViewManifest {
  int format_version = 0;
  std::string toolkit_version;
  std::string image_id;
  std::string image_path;
  std::size_t region_idx = 0;
  Box region;
  bool degenerate = false;
  SelectionEcho selection;
  std::vector<double> chosen_ts;
  std::vector<Box> crops;
  std::vector<std::string> view_paths;
  std::vector<std::string> phashes;
  /// hamming(phashes[0], phashes[i]) / chosen_ts[i]; 0 for the t = 0 view.
  std::vector<double> view_scores;
  std::optional<std::string> control_sentence;
  nlohmann::json config;

  friend bool operator==(const ViewManifest&, const ViewManifest&) = default;
};

/// Per-view and per-candidate scores recomputed from the stored hashes match
/// the stored scores exactly, arrays are parallel, chosen_ts starts at 0.
bool manifest_consistent(const ViewManifest& m, std::string* why = nullptr);

nlohmann::json manifest_to_json(const ViewManifest& m);
/// Throws VersionError on a different format version, ParseError on schema errors.
ViewManifest manifest_from_json(const nlohmann::json& j);

/// One compact JSON object per line.
void write_manifests(const std::filesystem::path& path, const std::vector<ViewManifest>& ms);
std::vector<ViewManifest> read_manifests(const std::filesystem::path& path);

/// `{image_id}_{region_idx}_{t}.png` with unsafe characters in the id replaced.
std::string view_file_name(const std::string& image_id, std::size_t region_idx, double t);

SelectionPolicy policy_from_json(const nlohmann::json& j);
nlohmann::json config_echo(const PipelineConfig& cfg);

/// Select, realize, hash and (optionally) write the crops of one region of an
/// already decoded image. No-prior seeds are mixed with the region index.
ViewManifest process_region(const RegionRecord& rec, const ImageRaster& img,
                            const SelectionPolicy& policy, const PipelineConfig& cfg);

/// As above, decoding rec.image_path through `cache`.
ViewManifest process_region(const RegionRecord& rec, const SelectionPolicy& policy,
                            const PipelineConfig& cfg, ImageCache& cache);

struct BatchOptions {
  std::filesystem::path annotations;
  std::optional<AnnotationFormat> format;
  std::filesystem::path images_dir;
  std::filesystem::path output;  // manifest JSONL; errors go to {output}.errors.jsonl
  SelectionPolicy policy = ImagePrior{};
  PipelineConfig config;
  unsigned jobs = 0;   // 0 = hardware concurrency
  bool ordered = true;
  std::size_t cache_capacity = 64;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct BatchSummary {
  std::size_t ingested = 0;
  std::size_t emitted = 0;
  std::size_t skipped = 0;
  std::size_t errored = 0;
};

std::filesystem::path error_sidecar_path(const std::filesystem::path& output);

BatchSummary run_batch(const BatchOptions& options);

}  // namespace dynview
