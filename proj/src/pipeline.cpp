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

#include "dynview/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <variant>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dynview/error.hpp"
#include "dynview/phash.hpp"
#include "dynview/random.hpp"
#include "dynview/version.hpp"

namespace dynview {

using nlohmann::json;

AnnotationFormat guess_annotation_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".ndjson") ? AnnotationFormat::jsonl
                                               : AnnotationFormat::coco_json;
}

namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw std::invalid_argument("id must be a string or an integer");
}

std::optional<std::string> optional_string(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    const auto it = obj.find(key);
    if (it != obj.end() && it->is_string()) return it->get<std::string>();
  }
  return std::nullopt;
}

std::array<double, 4> four_numbers(const json& v, const char* what) {
  if (!v.is_array() || v.size() != 4) {
    throw std::invalid_argument(fmt::format("{} must be an array of 4 numbers", what));
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) {
      throw std::invalid_argument(fmt::format("{} must be an array of 4 numbers", what));
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

// Corner box from an annotation; zero-size sides are widened and flagged.
Box annotation_box(const json& ann, bool* degenerate) {
  Box box;
  if (ann.contains("bbox")) {
    const auto v = four_numbers(ann["bbox"], "bbox");
    if (v[2] < 0.0 || v[3] < 0.0) throw std::invalid_argument("bbox has negative size");
    box = box_from_xywh(v[0], v[1], v[2], v[3]);
  } else if (ann.contains("box")) {
    const auto v = four_numbers(ann["box"], "box");
    box = Box{v[0], v[1], v[2], v[3]};
    if (box.x1 < box.x0 || box.y1 < box.y0) throw std::invalid_argument("box corners are swapped");
  } else {
    throw std::invalid_argument("annotation has neither 'bbox' nor 'box'");
  }
  for (double c : {box.x0, box.y0, box.x1, box.y1}) {
    if (!std::isfinite(c)) throw std::invalid_argument("box has non-finite coordinates");
  }
  *degenerate = false;
  if (box.width() <= 0.0) {
    const double cx = box.x0;
    box.x0 = cx - 0.5;
    box.x1 = cx + 0.5;
    *degenerate = true;
  }
  if (box.height() <= 0.0) {
    const double cy = box.y0;
    box.y0 = cy - 0.5;
    box.y1 = cy + 0.5;
    *degenerate = true;
  }
  return box;
}

std::filesystem::path resolve_image(const std::filesystem::path& images_dir,
                                    const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute() || images_dir.empty()) return p;
  return images_dir / p;
}

void admit(LoadResult& out, RegionRecord rec) {
  ++out.ingested;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(rec.image_path, ec)) {
    out.warnings.push_back(fmt::format("region {}: image '{}' not found, skipped", rec.region_idx,
                                       rec.image_path.string()));
    out.skipped_idx.push_back(rec.region_idx);
    ++out.skipped;
    return;
  }
  out.records.push_back(std::move(rec));
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadResult load_coco(const std::filesystem::path& path, const std::filesystem::path& images_dir) {
  const std::string text = slurp(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed JSON at byte {}: {}", path.string(), e.byte,
                                 e.what()),
                     e.byte);
  }
  LoadResult out;
  std::map<std::string, std::string> files;
  std::map<std::string, std::string> category_names;
  std::size_t idx = 0;
  try {
    for (const auto& img : doc.at("images")) {
      files[id_string(img.at("id"))] = img.at("file_name").get<std::string>();
    }
    if (doc.contains("categories")) {
      for (const auto& cat : doc["categories"]) {
        category_names[id_string(cat.at("id"))] = cat.at("name").get<std::string>();
      }
    }
    for (const auto& ann : doc.at("annotations")) {
      RegionRecord rec;
      rec.region_idx = idx;
      rec.image_id = id_string(ann.at("image_id"));
      const auto file = files.find(rec.image_id);
      if (file == files.end()) {
        throw std::invalid_argument(fmt::format("unknown image_id '{}'", rec.image_id));
      }
      rec.image_path = resolve_image(images_dir, file->second);
      rec.box = annotation_box(ann, &rec.degenerate);
      rec.caption = optional_string(ann, {"caption", "phrase"});
      rec.category = optional_string(ann, {"category"});
      if (!rec.category && ann.contains("category_id")) {
        const auto cat = category_names.find(id_string(ann["category_id"]));
        if (cat != category_names.end()) rec.category = cat->second;
      }
      admit(out, std::move(rec));
      ++idx;
    }
  } catch (const std::exception& e) {
    throw ParseError(fmt::format("{}: annotation {}: {}", path.string(), idx, e.what()), 0);
  }
  return out;
}

LoadResult load_jsonl(const std::filesystem::path& path, const std::filesystem::path& images_dir) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  LoadResult out;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  std::size_t idx = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      const std::size_t at = line_start + (e.byte > 0 ? e.byte - 1 : 0);
      throw ParseError(fmt::format("{}:{}: malformed JSON at byte {}: {}", path.string(), line_no,
                                   at, e.what()),
                       at, line_no);
    }
    try {
      RegionRecord rec;
      rec.region_idx = idx;
      rec.image_id = id_string(obj.at("image_id"));
      const auto file = optional_string(obj, {"image_path", "file_name"});
      if (!file) throw std::invalid_argument("record has no 'image_path' or 'file_name'");
      rec.image_path = resolve_image(images_dir, *file);
      rec.box = annotation_box(obj, &rec.degenerate);
      rec.caption = optional_string(obj, {"caption", "phrase"});
      rec.category = optional_string(obj, {"category"});
      admit(out, std::move(rec));
      ++idx;
    } catch (const std::exception& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()), line_start,
                       line_no);
    }
  }
  return out;
}

}  // namespace

LoadResult load_regions(const std::filesystem::path& path, AnnotationFormat format,
                        const std::filesystem::path& images_dir) {
  LoadResult out = format == AnnotationFormat::coco_json ? load_coco(path, images_dir)
                                                         : load_jsonl(path, images_dir);
  for (const auto& w : out.warnings) spdlog::warn("{}", w);
  return out;
}

std::shared_ptr<const ImageRaster> ImageCache::get(const std::filesystem::path& path) {
  const std::string key = path.string();
  {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(key);
    if (it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->second;
    }
  }
  auto img = std::make_shared<const ImageRaster>(read_png(path));
  std::lock_guard lock(mutex_);
  const auto it = index_.find(key);
  if (it != index_.end()) return it->second->second;
  if (capacity_ == 0) return img;
  order_.emplace_front(key, img);
  index_[key] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return img;
}

std::size_t ImageCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

json box_json(const Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

Box box_from(const json& v) {
  const auto c = four_numbers(v, "box");
  return Box{c[0], c[1], c[2], c[3]};
}

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

bool manifest_consistent(const ViewManifest& m, std::string* why) {
  auto fail = [&](std::string reason) {
    if (why) *why = std::move(reason);
    return false;
  };
  const std::size_t n = m.chosen_ts.size();
  if (n == 0 || m.chosen_ts[0] != 0.0) return fail("chosen_ts must start with 0");
  if (m.crops.size() != n || m.view_paths.size() != n || m.phashes.size() != n ||
      m.view_scores.size() != n) {
    return fail("per-view arrays differ in length");
  }
  if (m.selection.chosen_ts != m.chosen_ts) return fail("selection echo disagrees with chosen_ts");
  std::vector<PerceptualHash64> hashes;
  for (const auto& hex : m.phashes) {
    const auto h = PerceptualHash64::from_hex(hex);
    if (!h) return fail(fmt::format("bad hash '{}'", hex));
    hashes.push_back(*h);
  }
  if (m.view_scores[0] != 0.0) return fail("t = 0 view score must be 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (score_view(hashes[0], hashes[i], m.chosen_ts[i]) != m.view_scores[i]) {
      return fail(fmt::format("view score {} does not match its hashes", i));
    }
  }
  const auto& sel = m.selection;
  if (!sel.candidate_phashes.empty()) {
    if (sel.candidate_phashes.size() != sel.candidate_ts.size() + 1 ||
        sel.scores.size() != sel.candidate_ts.size()) {
      return fail("candidate arrays differ in length");
    }
    const auto first = PerceptualHash64::from_hex(sel.candidate_phashes[0]);
    if (!first) return fail("bad candidate hash");
    for (std::size_t i = 0; i < sel.candidate_ts.size(); ++i) {
      const auto h = PerceptualHash64::from_hex(sel.candidate_phashes[i + 1]);
      if (!h) return fail("bad candidate hash");
      if (score_view(*first, *h, sel.candidate_ts[i]) != sel.scores[i]) {
        return fail(fmt::format("candidate score {} does not match its hashes", i));
      }
    }
  }
  return true;
}

json manifest_to_json(const ViewManifest& m) {
  json sel;
  sel["policy"] = m.selection.policy;
  put_optional(sel, "mode", m.selection.mode);
  put_optional(sel, "task", m.selection.task);
  put_optional(sel, "seed", m.selection.seed);
  sel["candidate_ts"] = m.selection.candidate_ts;
  sel["candidate_phashes"] = m.selection.candidate_phashes;
  sel["scores"] = m.selection.scores;
  sel["chosen_ts"] = m.selection.chosen_ts;
  sel["alternate_ts"] = m.selection.alternate_ts;

  json j;
  j["format_version"] = m.format_version;
  j["toolkit_version"] = m.toolkit_version;
  j["image_id"] = m.image_id;
  j["image_path"] = m.image_path;
  j["region_idx"] = m.region_idx;
  j["region"] = box_json(m.region);
  j["degenerate"] = m.degenerate;
  j["selection"] = std::move(sel);
  j["chosen_ts"] = m.chosen_ts;
  json crops = json::array();
  for (const auto& c : m.crops) crops.push_back(box_json(c));
  j["crops"] = std::move(crops);
  j["view_paths"] = m.view_paths;
  j["phashes"] = m.phashes;
  j["view_scores"] = m.view_scores;
  put_optional(j, "control_sentence", m.control_sentence);
  j["config"] = m.config;
  return j;
}

ViewManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("manifest entry is not a JSON object", 0);
  const auto version = j.find("format_version");
  if (version == j.end() || !version->is_number_integer()) {
    throw ParseError("manifest entry has no format_version", 0);
  }
  if (version->get<int>() != kManifestFormatVersion) {
    throw VersionError(fmt::format("manifest format version {} is not supported (expected {})",
                                   version->get<int>(), kManifestFormatVersion));
  }
  try {
    ViewManifest m;
    m.format_version = version->get<int>();
    m.toolkit_version = j.at("toolkit_version").get<std::string>();
    m.image_id = j.at("image_id").get<std::string>();
    m.image_path = j.at("image_path").get<std::string>();
    m.region_idx = j.at("region_idx").get<std::size_t>();
    m.region = box_from(j.at("region"));
    m.degenerate = j.at("degenerate").get<bool>();
    const auto& sel = j.at("selection");
    m.selection.policy = sel.at("policy").get<std::string>();
    m.selection.mode = get_optional<std::string>(sel, "mode");
    m.selection.task = get_optional<std::string>(sel, "task");
    m.selection.seed = get_optional<std::uint64_t>(sel, "seed");
    m.selection.candidate_ts = sel.at("candidate_ts").get<std::vector<double>>();
    m.selection.candidate_phashes = sel.at("candidate_phashes").get<std::vector<std::string>>();
    m.selection.scores = sel.at("scores").get<std::vector<double>>();
    m.selection.chosen_ts = sel.at("chosen_ts").get<std::vector<double>>();
    m.selection.alternate_ts = sel.at("alternate_ts").get<std::vector<double>>();
    m.chosen_ts = j.at("chosen_ts").get<std::vector<double>>();
    for (const auto& c : j.at("crops")) m.crops.push_back(box_from(c));
    m.view_paths = j.at("view_paths").get<std::vector<std::string>>();
    m.phashes = j.at("phashes").get<std::vector<std::string>>();
    m.view_scores = j.at("view_scores").get<std::vector<double>>();
    m.control_sentence = get_optional<std::string>(j, "control_sentence");
    m.config = j.at("config");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("manifest schema error: {}", e.what()), 0);
  } catch (const std::invalid_argument& e) {
    throw ParseError(fmt::format("manifest schema error: {}", e.what()), 0);
  }
}

void write_manifests(const std::filesystem::path& path, const std::vector<ViewManifest>& ms) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& m : ms) out << manifest_to_json(m).dump() << '\n';
  if (!out) throw IoError(fmt::format("short write to '{}'", path.string()));
}

std::vector<ViewManifest> read_manifests(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<ViewManifest> out;
  std::size_t offset = 0;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      const std::size_t at = line_start + (e.byte > 0 ? e.byte - 1 : 0);
      throw ParseError(fmt::format("{}:{}: malformed manifest line: {}", path.string(), line_no,
                                   e.what()),
                       at, line_no);
    }
    out.push_back(manifest_from_json(j));
  }
  return out;
}

std::string view_file_name(const std::string& image_id, std::size_t region_idx, double t) {
  std::string safe = image_id;
  for (char& c : safe) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' || c == '_';
    if (!ok) c = '_';
  }
  return fmt::format("{}_{}_{}.png", safe, region_idx, t);
}

SelectionPolicy policy_from_json(const json& j) {
  const std::string name = j.value("policy", std::string("image-prior"));
  if (name == "image-prior") {
    ImagePrior p;
    const std::string mode = j.value("mode", std::string("marginal"));
    const auto parsed = parse_mode(mode);
    if (!parsed) throw DomainError(fmt::format("unknown greedy mode '{}'", mode));
    p.mode = *parsed;
    if (j.contains("candidate_ts")) p.candidate_ts = j["candidate_ts"].get<std::vector<double>>();
    if (j.contains("out_size")) p.out_size = j["out_size"].get<int>();
    return p;
  }
  if (name == "task-prior") {
    TaskPrior p;
    if (!j.contains("task") || !j["task"].is_string()) {
      throw DomainError("task-prior policy needs a task");
    }
    const auto task = parse_task(j["task"].get<std::string>());
    if (!task) throw DomainError(fmt::format("unknown task '{}'", j["task"].get<std::string>()));
    p.task = *task;
    if (j.contains("table")) {
      for (const auto& [key, values] : j["table"].items()) {
        const auto t = parse_task(key);
        if (!t) throw DomainError(fmt::format("unknown task '{}' in task-prior table", key));
        p.table[*t] = values.get<std::vector<double>>();
      }
    }
    return p;
  }
  if (name == "no-prior") {
    NoPrior p;
    p.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("candidate_ts")) p.candidate_ts = j["candidate_ts"].get<std::vector<double>>();
    return p;
  }
  throw DomainError(fmt::format("unknown selection policy '{}'", name));
}

json config_echo(const PipelineConfig& cfg) {
  return json{
      {"n", cfg.n},
      {"out_size", cfg.out_size},
      {"candidate_ts", cfg.candidate_ts},
      {"seed", cfg.seed},
      {"keep_prob", cfg.keep_prob},
      {"phash",
       {{"input_size", phash_params::kInputSize},
        {"block", phash_params::kBlockSize},
        {"bits", phash_params::kBits},
        {"threshold", "median of 63 AC coefficients"}}},
      {"roi",
       {{"out_h", cfg.roi.out_h},
        {"out_w", cfg.roi.out_w},
        {"sampling_ratio", cfg.roi.sampling_ratio}}},
  };
}

namespace {

SelectionEcho echo_selection(const SelectionResult& sel) {
  SelectionEcho echo;
  echo.chosen_ts = sel.chosen_ts;
  if (const auto* p = std::get_if<NoPrior>(&sel.policy)) {
    echo.policy = "no-prior";
    echo.seed = p->seed;
    echo.candidate_ts = p->candidate_ts;
  } else if (const auto* p = std::get_if<TaskPrior>(&sel.policy)) {
    echo.policy = "task-prior";
    echo.task = std::string(task_name(p->task));
  } else {
    const auto& ip = std::get<ImagePrior>(sel.policy);
    echo.policy = "image-prior";
    echo.mode = std::string(mode_name(ip.mode));
    echo.candidate_ts = sel.candidate_ts;
    for (const auto& h : sel.candidate_hashes) echo.candidate_phashes.push_back(h.hex());
    echo.scores = sel.scores;
    echo.alternate_ts = sel.alternate_ts;
  }
  return echo;
}

}  // namespace

ViewManifest process_region(const RegionRecord& rec, const SelectionPolicy& policy,
                            const PipelineConfig& cfg, ImageCache& cache) {
  const auto img = cache.get(rec.image_path);
  return process_region(rec, *img, policy, cfg);
}

ViewManifest process_region(const RegionRecord& rec, const ImageRaster& img,
                            const SelectionPolicy& policy, const PipelineConfig& cfg) {
  const Box bounds = img.bounds();
  bool widened = false;
  const Box region = normalize_region(rec.box, bounds, &widened);

  SelectionPolicy effective = policy;
  if (auto* p = std::get_if<NoPrior>(&effective)) {
    p->seed = mix_seed(p->seed, 3 * rec.region_idx);
    p->candidate_ts = cfg.candidate_ts;
  } else if (auto* p = std::get_if<ImagePrior>(&effective)) {
    p->candidate_ts = cfg.candidate_ts;
    p->out_size = cfg.out_size;
  }
  const SelectionResult sel = select_views(effective, img, region, cfg.n);
  const ViewSet views = chosen_view_set(sel.chosen_ts, region, bounds, cfg.out_size);

  ViewManifest m;
  m.format_version = kManifestFormatVersion;
  m.toolkit_version = std::string(kVersion);
  m.image_id = rec.image_id;
  m.image_path = rec.image_path.generic_string();
  m.region_idx = rec.region_idx;
  m.region = region;
  m.degenerate = rec.degenerate || widened;
  m.selection = echo_selection(sel);
  m.chosen_ts = sel.chosen_ts;

  PerceptualHash64 first;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& view = views.views[i];
    const ImageRaster raster = crop_resize(img, view.crop, view.out_size);
    const PerceptualHash64 h = phash64(raster);
    if (i == 0) first = h;
    m.crops.push_back(view.crop);
    m.phashes.push_back(h.hex());
    m.view_scores.push_back(i == 0 ? 0.0 : score_view(first, h, view.t));
    if (cfg.views_dir.empty()) {
      m.view_paths.emplace_back();
      continue;
    }
    const auto file = cfg.views_dir / view_file_name(rec.image_id, rec.region_idx, view.t);
    write_png(file, raster);
    auto shown = cfg.manifest_dir.empty() ? file : file.lexically_relative(cfg.manifest_dir);
    if (shown.empty()) shown = file;
    m.view_paths.push_back(shown.generic_string());
  }

  if (rec.caption && cfg.vocab) {
    const auto tags = parse_tags(*rec.caption, *cfg.vocab);
    const auto kept = drop_tags(tags, cfg.keep_prob, mix_seed(cfg.seed, 3 * rec.region_idx + 1));
    m.control_sentence =
        build_control_sentence(kept, mix_seed(cfg.seed, 3 * rec.region_idx + 2));
  }
  m.config = config_echo(cfg);
  return m;
}

// ---------------------------------------------------------------------------
// Batch runner

std::filesystem::path error_sidecar_path(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".errors.jsonl");
}

namespace {

struct Outcome {
  bool ok = false;
  std::string line;
};

json error_entry(const RegionRecord& rec, const char* kind, const std::string& message) {
  return json{{"kind", kind},
              {"image_id", rec.image_id},
              {"region_idx", rec.region_idx},
              {"image_path", rec.image_path.generic_string()},
              {"error", message}};
}

}  // namespace

BatchSummary run_batch(const BatchOptions& options) {
  const AnnotationFormat format =
      options.format.value_or(guess_annotation_format(options.annotations));
  LoadResult loaded = load_regions(options.annotations, format, options.images_dir);

  PipelineConfig cfg = options.config;
  if (cfg.manifest_dir.empty()) {
    cfg.manifest_dir = options.output.parent_path();
    if (cfg.manifest_dir.empty()) cfg.manifest_dir = ".";
  }
  if (!cfg.views_dir.empty()) std::filesystem::create_directories(cfg.views_dir);

  std::ofstream manifest_out(options.output, std::ios::binary | std::ios::trunc);
  if (!manifest_out) throw IoError(fmt::format("cannot write '{}'", options.output.string()));
  const auto sidecar = error_sidecar_path(options.output);
  std::ofstream error_out(sidecar, std::ios::binary | std::ios::trunc);
  if (!error_out) throw IoError(fmt::format("cannot write '{}'", sidecar.string()));
  for (std::size_t i = 0; i < loaded.skipped_idx.size(); ++i) {
    error_out << json{{"kind", "skipped"},
                      {"region_idx", loaded.skipped_idx[i]},
                      {"error", loaded.warnings[i]}}
                     .dump()
              << '\n';
  }

  BatchSummary summary;
  summary.ingested = loaded.ingested;
  summary.skipped = loaded.skipped;

  const auto& records = loaded.records;
  ImageCache cache(options.cache_capacity);
  std::mutex mutex;
  std::map<std::size_t, Outcome> pending;
  std::size_t next_to_write = 0;
  std::size_t done = 0;
  std::atomic<std::size_t> next_task{0};

  auto emit = [&](const Outcome& o) {
    if (o.ok) {
      manifest_out << o.line << '\n';
      ++summary.emitted;
    } else {
      error_out << o.line << '\n';
      ++summary.errored;
    }
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next_task.fetch_add(1);
      if (i >= records.size()) return;
      Outcome outcome;
      try {
        outcome.line = manifest_to_json(process_region(records[i], options.policy, cfg, cache)).dump();
        outcome.ok = true;
      } catch (const std::exception& e) {
        spdlog::warn("region {} ({}): {}", records[i].region_idx, records[i].image_id, e.what());
        outcome.line = error_entry(records[i], "error", e.what()).dump();
      }
      std::lock_guard lock(mutex);
      if (options.ordered) {
        pending.emplace(i, std::move(outcome));
        for (auto it = pending.find(next_to_write); it != pending.end();
             it = pending.find(next_to_write)) {
          emit(it->second);
          pending.erase(it);
          ++next_to_write;
        }
      } else {
        emit(outcome);
      }
      ++done;
      if (options.progress) options.progress(done, records.size());
    }
  };

  unsigned jobs = options.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                    : options.jobs;
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(1, records.size())));
  {
    std::vector<std::jthread> threads;
    for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
  }
  manifest_out.flush();
  error_out.flush();
  if (!manifest_out || !error_out) throw IoError("failed writing batch output");
  spdlog::info("{} ingested, {} emitted, {} skipped, {} errored", summary.ingested,
               summary.emitted, summary.skipped, summary.errored);
  return summary;
}

}  // namespace dynview
