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

#include "dynview/dynview.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "dynview/error.hpp"
#include "dynview/phash.hpp"
#include "dynview/pipeline.hpp"
#include "dynview/raster.hpp"
#include "dynview/roiops.hpp"
#include "dynview/version.hpp"

struct dv_image {
  dynview::ImageRaster raster;
};

struct dv_grid {
  dynview::FeatureGrid grid;
};

namespace {

using nlohmann::json;

thread_local std::string g_last_error;

dv_status fail(dv_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Maps the library's exception types onto status codes.
template <typename Fn>
dv_status guarded(Fn&& fn) {
  try {
    fn();
    return DV_OK;
  } catch (const dynview::DomainError& e) {
    return fail(DV_ERROR_DOMAIN, e.what());
  } catch (const dynview::ParseError& e) {
    return fail(DV_ERROR_PARSE, e.what());
  } catch (const dynview::VersionError& e) {
    return fail(DV_ERROR_VERSION, e.what());
  } catch (const dynview::IoError& e) {
    return fail(DV_ERROR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DV_ERROR_IO, e.what());
  } catch (const json::exception& e) {
    return fail(DV_ERROR_ARGUMENT, std::string("bad request: ") + e.what());
  } catch (const std::exception& e) {
    return fail(DV_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(DV_ERROR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

dynview::Box box_of(const double v[4]) { return dynview::Box{v[0], v[1], v[2], v[3]}; }

json parse_request(const char* request_json) {
  if (!request_json || !*request_json) return json::object();
  json j = json::parse(request_json);
  if (!j.is_object()) throw dynview::DomainError("request must be a JSON object");
  return j;
}

dynview::PipelineConfig config_from(const json& j) {
  dynview::PipelineConfig cfg;
  cfg.n = j.value("n", cfg.n);
  cfg.out_size = j.value("out_size", cfg.out_size);
  if (j.contains("candidate_ts")) cfg.candidate_ts = j["candidate_ts"].get<std::vector<double>>();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.keep_prob = j.value("keep_prob", cfg.keep_prob);
  if (j.contains("vocab") && j["vocab"].is_string()) {
    cfg.vocab = std::make_shared<const dynview::TagVocab>(
        dynview::TagVocab::load(j["vocab"].get<std::string>()));
  }
  if (j.contains("views_dir") && j["views_dir"].is_string()) {
    cfg.views_dir = j["views_dir"].get<std::string>();
  }
  if (j.contains("manifest_dir") && j["manifest_dir"].is_string()) {
    cfg.manifest_dir = j["manifest_dir"].get<std::string>();
  }
  if (cfg.n < 1) throw dynview::DomainError("n must be at least 1");
  if (cfg.out_size < dynview::kMinViewSize) {
    throw dynview::DomainError("out_size must be at least 8");
  }
  if (!(cfg.keep_prob >= 0.0 && cfg.keep_prob <= 1.0)) {
    throw dynview::DomainError("keep_prob must lie in [0, 1]");
  }
  dynview::check_candidate_ts(cfg.candidate_ts);
  return cfg;
}

}  // namespace

extern "C" {

const char* dv_version(void) { return dynview::kVersion.data(); }

const char* dv_last_error(void) { return g_last_error.c_str(); }

const char* dv_status_name(dv_status status) {
  switch (status) {
    case DV_OK: return "ok";
    case DV_ERROR_DOMAIN: return "domain error";
    case DV_ERROR_IO: return "i/o error";
    case DV_ERROR_PARSE: return "parse error";
    case DV_ERROR_VERSION: return "version error";
    case DV_ERROR_ARGUMENT: return "invalid argument";
    case DV_ERROR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void dv_string_free(char* s) { std::free(s); }

void dv_set_log_level(const char* level) {
  if (!level) return;
  const auto parsed = spdlog::level::from_str(level);
  // from_str maps unknown names to off; only honour it when asked for explicitly.
  if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0) return;
  spdlog::set_level(parsed);
}

dv_status dv_image_load(const char* path, dv_image** out) {
  if (!path || !out) return fail(DV_ERROR_ARGUMENT, "dv_image_load: NULL argument");
  return guarded([&] { *out = new dv_image{dynview::read_png(path)}; });
}

dv_status dv_image_decode(const uint8_t* bytes, size_t size, dv_image** out) {
  if (!bytes || !out) return fail(DV_ERROR_ARGUMENT, "dv_image_decode: NULL argument");
  return guarded([&] { *out = new dv_image{dynview::decode_png({bytes, size})}; });
}

void dv_image_free(dv_image* image) { delete image; }

dv_status dv_image_info(const dv_image* image, int* width, int* height, int* channels) {
  if (!image) return fail(DV_ERROR_ARGUMENT, "dv_image_info: NULL image");
  if (width) *width = image->raster.width();
  if (height) *height = image->raster.height();
  if (channels) *channels = image->raster.channels();
  return DV_OK;
}

dv_status dv_phash(const dv_image* image, uint64_t* out) {
  if (!image || !out) return fail(DV_ERROR_ARGUMENT, "dv_phash: NULL argument");
  return guarded([&] { *out = dynview::phash64(image->raster).bits; });
}

dv_status dv_phash_hex(const dv_image* image, char out[17]) {
  if (!image || !out) return fail(DV_ERROR_ARGUMENT, "dv_phash_hex: NULL argument");
  return guarded([&] {
    const std::string hex = dynview::phash64(image->raster).hex();
    std::memcpy(out, hex.c_str(), 17);
  });
}

int dv_hamming(uint64_t a, uint64_t b) {
  return dynview::hamming(dynview::PerceptualHash64{a}, dynview::PerceptualHash64{b});
}

dv_status dv_build_views(const double region[4], const double image[4], const double* ts,
                         size_t ts_count, int out_size, char** json_out) {
  if (!region || !image || !json_out) return fail(DV_ERROR_ARGUMENT, "dv_build_views: NULL argument");
  return guarded([&] {
    const std::vector<double> grid =
        ts ? std::vector<double>(ts, ts + ts_count) : dynview::default_grid();
    const auto set = dynview::build_candidate_views(box_of(region), box_of(image), grid, out_size);
    json rows = json::array();
    for (const auto& v : set.views) {
      rows.push_back({{"t", v.t},
                      {"crop", {v.crop.x0, v.crop.y0, v.crop.x1, v.crop.y1}},
                      {"out_size", v.out_size}});
    }
    *json_out = dup_string(rows.dump());
  });
}

dv_status dv_select(const dv_image* image, const double region[4], const char* request_json,
                    char** manifest_json) {
  if (!image || !region || !manifest_json) return fail(DV_ERROR_ARGUMENT, "dv_select: NULL argument");
  return guarded([&] {
    const json req = parse_request(request_json);
    const auto cfg = config_from(req);
    const auto policy = dynview::policy_from_json(req);
    dynview::RegionRecord rec;
    rec.image_id = req.value("image_id", std::string("image"));
    rec.image_path = req.value("image_path", std::string());
    rec.region_idx = req.value("region_idx", std::size_t{0});
    rec.box = box_of(region);
    if (req.contains("caption") && req["caption"].is_string()) {
      rec.caption = req["caption"].get<std::string>();
    }
    if (!cfg.views_dir.empty()) std::filesystem::create_directories(cfg.views_dir);
    const auto m = dynview::process_region(rec, image->raster, policy, cfg);
    *manifest_json = dup_string(dynview::manifest_to_json(m).dump());
  });
}

dv_status dv_batch_run(const char* request_json, dv_progress_fn progress, void* user,
                       dv_batch_summary* summary) {
  if (!request_json) return fail(DV_ERROR_ARGUMENT, "dv_batch_run: NULL request");
  return guarded([&] {
    const json req = parse_request(request_json);
    dynview::BatchOptions opts;
    opts.annotations = req.at("annotations").get<std::string>();
    opts.images_dir = req.value("images_dir", std::string());
    opts.output = req.at("output").get<std::string>();
    if (req.contains("format")) {
      const auto f = req["format"].get<std::string>();
      if (f == "coco_json" || f == "coco") {
        opts.format = dynview::AnnotationFormat::coco_json;
      } else if (f == "jsonl") {
        opts.format = dynview::AnnotationFormat::jsonl;
      } else {
        throw dynview::DomainError("format must be coco_json or jsonl");
      }
    }
    opts.config = config_from(req);
    opts.policy = dynview::policy_from_json(req);
    opts.jobs = req.value("jobs", 0u);
    opts.ordered = req.value("ordered", true);
    opts.cache_capacity = req.value("cache_capacity", std::size_t{64});
    if (progress) {
      opts.progress = [progress, user](std::size_t done, std::size_t total) {
        progress(done, total, user);
      };
    }
    const auto s = dynview::run_batch(opts);
    if (summary) *summary = dv_batch_summary{s.ingested, s.emitted, s.skipped, s.errored};
  });
}

dv_status dv_manifest_read(const char* path, char** json_out) {
  if (!path || !json_out) return fail(DV_ERROR_ARGUMENT, "dv_manifest_read: NULL argument");
  return guarded([&] {
    json all = json::array();
    for (const auto& m : dynview::read_manifests(path)) {
      std::string why;
      if (!dynview::manifest_consistent(m, &why)) {
        throw dynview::ParseError(fmt::format("manifest entry {} inconsistent: {}", all.size(), why), 0);
      }
      all.push_back(dynview::manifest_to_json(m));
    }
    *json_out = dup_string(all.dump());
  });
}

dv_status dv_grid_load(const char* path, dv_grid** out) {
  if (!path || !out) return fail(DV_ERROR_ARGUMENT, "dv_grid_load: NULL argument");
  return guarded([&] { *out = new dv_grid{dynview::read_feature_grid(path)}; });
}

dv_status dv_grid_save(const dv_grid* grid, const char* path) {
  if (!grid || !path) return fail(DV_ERROR_ARGUMENT, "dv_grid_save: NULL argument");
  return guarded([&] { dynview::write_feature_grid(path, grid->grid); });
}

dv_status dv_grid_create(int height, int width, int channels, const float* data, dv_grid** out) {
  if (!out) return fail(DV_ERROR_ARGUMENT, "dv_grid_create: NULL output");
  return guarded([&] {
    if (height <= 0 || width <= 0 || channels <= 0) {
      throw dynview::DomainError("grid dimensions must be positive");
    }
    const auto n = static_cast<std::size_t>(height) * width * channels;
    std::vector<float> values = data ? std::vector<float>(data, data + n) : std::vector<float>(n);
    *out = new dv_grid{dynview::FeatureGrid(height, width, channels, std::move(values))};
  });
}

void dv_grid_free(dv_grid* grid) { delete grid; }

dv_status dv_grid_info(const dv_grid* grid, int* height, int* width, int* channels) {
  if (!grid) return fail(DV_ERROR_ARGUMENT, "dv_grid_info: NULL grid");
  if (height) *height = grid->grid.height();
  if (width) *width = grid->grid.width();
  if (channels) *channels = grid->grid.channels();
  return DV_OK;
}

const float* dv_grid_data(const dv_grid* grid) {
  return grid ? grid->grid.data().data() : nullptr;
}

dv_status dv_roi_align(const dv_grid* grid, const double box[4], int out_h, int out_w,
                       int sampling_ratio, dv_grid** out) {
  if (!grid || !box || !out) return fail(DV_ERROR_ARGUMENT, "dv_roi_align: NULL argument");
  return guarded([&] {
    *out = new dv_grid{dynview::roi_align(grid->grid, box_of(box), out_h, out_w, sampling_ratio)};
  });
}

dv_status dv_offset_resample(const dv_grid* grid, const dv_grid* offsets, dv_grid** out) {
  if (!grid || !offsets || !out) return fail(DV_ERROR_ARGUMENT, "dv_offset_resample: NULL argument");
  return guarded([&] {
    const auto& og = offsets->grid;
    if (og.channels() != 2) throw dynview::DomainError("offset grid must have 2 channels (dx, dy)");
    auto map = dynview::OffsetMap::zeros(og.height(), og.width());
    for (int y = 0; y < og.height(); ++y) {
      for (int x = 0; x < og.width(); ++x) {
        const auto cell = static_cast<std::size_t>(y) * og.width() + x;
        map.dx[cell] = og.at(y, x, 0);
        map.dy[cell] = og.at(y, x, 1);
      }
    }
    *out = new dv_grid{dynview::offset_resample(grid->grid, map)};
  });
}

}  // extern "C"
