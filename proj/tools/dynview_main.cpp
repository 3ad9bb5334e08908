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

// dynview command-line frontend. Data goes to stdout (JSON / JSONL), logs and
// diagnostics to stderr. Exit status: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynview/dynview.h"

namespace {

using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RuntimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(dv_status status, const char* what) {
  if (status != DV_OK) {
    throw RuntimeError(std::string(what) + ": " + dv_status_name(status) + ": " + dv_last_error());
  }
}

struct ImageDeleter {
  void operator()(dv_image* p) const { dv_image_free(p); }
};
using ImagePtr = std::unique_ptr<dv_image, ImageDeleter>;

struct GridDeleter {
  void operator()(dv_grid* p) const { dv_grid_free(p); }
};
using GridPtr = std::unique_ptr<dv_grid, GridDeleter>;

struct StringDeleter {
  void operator()(char* p) const { dv_string_free(p); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

ImagePtr load_image(const std::string& path) {
  dv_image* raw = nullptr;
  check(dv_image_load(path.c_str(), &raw), "loading image");
  return ImagePtr(raw);
}

std::array<double, 4> parse_box(const std::vector<double>& v, const char* flag) {
  if (v.size() != 4) {
    throw UsageError(std::string(flag) + " expects x0,y0,x1,y1");
  }
  if (!(v[0] < v[2])) throw UsageError(std::string(flag) + ": x0 must be less than x1");
  if (!(v[1] < v[3])) throw UsageError(std::string(flag) + ": y0 must be less than y1");
  return {v[0], v[1], v[2], v[3]};
}

void check_grid(const std::vector<double>& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw UsageError("--grid values must lie in (0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw UsageError("--grid values must be strictly ascending");
    }
  }
}

// Selection flags shared by `select` and `batch`.
struct SelectionFlags {
  std::string policy = "image-prior";
  std::string mode = "marginal";
  std::string task;
  std::size_t n = 3;
  std::uint64_t seed = 0;
  std::vector<double> grid;
  int out_size = 224;
  std::string vocab;
  double keep_prob = 0.5;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--policy", policy, "image-prior | task-prior | no-prior")
        ->check(CLI::IsMember({"image-prior", "task-prior", "no-prior"}))
        ->capture_default_str();
    cmd->add_option("--mode", mode, "image-prior greedy mode: marginal | topk")
        ->check(CLI::IsMember({"marginal", "topk"}))
        ->capture_default_str();
    cmd->add_option("--task", task,
                    "task-prior task: attribute | recognition | caption | dense (or full names)")
        ->check(CLI::IsMember({"attribute", "recognition", "caption", "dense",
                               "attribute_detection", "region_recognition", "region_caption",
                               "dense_caption"}));
    cmd->add_option("--n", n, "number of views, t = 0 included")
        ->check(CLI::Range(std::size_t{1}, std::size_t{64}))
        ->capture_default_str();
    cmd->add_option("--seed", seed, "seed for no-prior sampling and tag dropping")
        ->capture_default_str();
    cmd->add_option("--grid", grid, "candidate coefficients, comma separated (default 0.1..1.0)")
        ->delimiter(',');
    cmd->add_option("--out-size", out_size, "square view side in pixels")
        ->check(CLI::Range(8, 4096))
        ->capture_default_str();
    cmd->add_option("--vocab", vocab, "tag vocabulary file for control sentences")
        ->check(CLI::ExistingFile);
    cmd->add_option("--keep-prob", keep_prob, "Bernoulli keep probability for control tags")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }

  json request() const {
    if (policy == "task-prior" && task.empty()) throw UsageError("--task is required with --policy task-prior");
    check_grid(grid);
    json req{{"policy", policy}, {"mode", mode},         {"n", n},
             {"seed", seed},     {"out_size", out_size}, {"keep_prob", keep_prob}};
    if (!task.empty()) req["task"] = task;
    if (!grid.empty()) req["candidate_ts"] = grid;
    if (!vocab.empty()) req["vocab"] = vocab;
    return req;
  }
};

int run_views(const std::string& image_path, const std::vector<double>& box_flag,
              std::vector<double> grid, int out_size) {
  const auto box = parse_box(box_flag, "--box");
  check_grid(grid);
  auto image = load_image(image_path);
  int w = 0, h = 0;
  check(dv_image_info(image.get(), &w, &h, nullptr), "reading image size");
  const double bounds[4] = {0.0, 0.0, static_cast<double>(w), static_cast<double>(h)};
  char* out = nullptr;
  check(dv_build_views(box.data(), bounds, grid.empty() ? nullptr : grid.data(), grid.size(),
                       out_size, &out),
        "building views");
  OwnedString owned(out);
  for (const auto& row : json::parse(owned.get())) std::cout << row.dump() << '\n';
  return 0;
}

int run_select(const std::string& image_path, const std::vector<double>& box_flag,
               const SelectionFlags& flags, const std::string& views_dir,
               const std::string& caption, const std::string& image_id) {
  const auto box = parse_box(box_flag, "--box");
  json req = flags.request();
  req["image_path"] = image_path;
  req["image_id"] = image_id.empty() ? std::filesystem::path(image_path).stem().string() : image_id;
  if (!views_dir.empty()) req["views_dir"] = views_dir;
  if (!caption.empty()) req["caption"] = caption;
  auto image = load_image(image_path);
  char* out = nullptr;
  check(dv_select(image.get(), box.data(), req.dump().c_str(), &out), "selecting views");
  OwnedString owned(out);
  std::cout << owned.get() << '\n';
  return 0;
}

int run_hash(const std::vector<std::string>& images) {
  for (const auto& path : images) {
    auto image = load_image(path);
    char hex[17] = {};
    check(dv_phash_hex(image.get(), hex), "hashing image");
    if (images.size() == 1) {
      std::cout << hex << '\n';
    } else {
      std::cout << hex << '\t' << path << '\n';
    }
  }
  return 0;
}

void report_progress(std::uint64_t done, std::uint64_t total, void*) {
  if (done == total || done % 100 == 0) {
    std::fprintf(stderr, "\r%llu/%llu regions", static_cast<unsigned long long>(done),
                 static_cast<unsigned long long>(total));
    if (done == total) std::fputc('\n', stderr);
  }
}

int run_batch(const SelectionFlags& flags, const std::string& annotations,
              const std::string& images_dir, const std::string& output,
              const std::string& views_dir, const std::string& format, unsigned jobs,
              bool unordered, bool quiet) {
  json req = flags.request();
  req["annotations"] = annotations;
  req["images_dir"] = images_dir;
  req["output"] = output;
  req["jobs"] = jobs;
  req["ordered"] = !unordered;
  if (!format.empty()) req["format"] = format;
  if (!views_dir.empty()) {
    req["views_dir"] = views_dir;
  } else {
    req["views_dir"] = output + ".views";
  }
  dv_batch_summary summary{};
  check(dv_batch_run(req.dump().c_str(), quiet ? nullptr : report_progress, nullptr, &summary),
        "batch run");
  if (!quiet) {
    std::fprintf(stderr, "%llu emitted, %llu skipped, %llu errored (%llu ingested)\n",
                 static_cast<unsigned long long>(summary.emitted),
                 static_cast<unsigned long long>(summary.skipped),
                 static_cast<unsigned long long>(summary.errored),
                 static_cast<unsigned long long>(summary.ingested));
  }
  std::cout << json{{"ingested", summary.ingested},
                    {"emitted", summary.emitted},
                    {"skipped", summary.skipped},
                    {"errored", summary.errored}}
                   .dump()
            << '\n';
  return 0;
}

GridPtr load_grid(const std::string& path) {
  dv_grid* raw = nullptr;
  check(dv_grid_load(path.c_str(), &raw), "loading feature grid");
  return GridPtr(raw);
}

int run_roi_align(const std::string& grid_path, const std::vector<double>& box_flag, int out_h,
                  int out_w, int sampling_ratio, const std::string& out_path) {
  const auto box = parse_box(box_flag, "--box");
  auto grid = load_grid(grid_path);
  dv_grid* raw = nullptr;
  check(dv_roi_align(grid.get(), box.data(), out_h, out_w, sampling_ratio, &raw), "roi-align");
  GridPtr out(raw);
  check(dv_grid_save(out.get(), out_path.c_str()), "writing feature grid");
  return 0;
}

int run_resample(const std::string& grid_path, const std::string& offsets_path,
                 const std::string& out_path) {
  auto grid = load_grid(grid_path);
  auto offsets = load_grid(offsets_path);
  dv_grid* raw = nullptr;
  check(dv_offset_resample(grid.get(), offsets.get(), &raw), "offset resample");
  GridPtr out(raw);
  check(dv_grid_save(out.get(), out_path.c_str()), "writing feature grid");
  return 0;
}

int run_manifest(const std::string& path) {
  char* out = nullptr;
  check(dv_manifest_read(path.c_str(), &out), "reading manifest");
  OwnedString owned(out);
  for (const auto& m : json::parse(owned.get())) std::cout << m.dump() << '\n';
  return 0;
}

// Config files are TOML/INI, or JSON when the first non-blank character is
// '{'. Nested JSON objects address subcommands, e.g. {"batch": {"jobs": 2}}.
class ConfigFile : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream toml(text);
      return CLI::ConfigTOML::from_config(toml);
    }
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw CLI::ConfigError(std::string("config file: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(doc, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConfigError("config file: values must be strings, numbers, booleans or arrays");
  }

  static void flatten(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(key);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  if (const char* level = std::getenv("DYNVIEW_LOG")) {
    dv_set_log_level(level);
  } else {
    dv_set_log_level("warn");
  }

  CLI::App app{"dynview: nested view construction and selection for region referring"};
  app.set_version_flag("--version", std::string(dv_version()));
  app.set_config("--config", "", "TOML/INI or JSON file with option defaults; flags take precedence");
  app.config_formatter(std::make_shared<ConfigFile>());
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<double> box;
  std::vector<double> grid;
  int out_size = 224;

  auto* views = app.add_subcommand("views", "print the candidate view table for a region");
  std::string views_image;
  views->add_option("image", views_image, "PNG image")->required()->check(CLI::ExistingFile);
  views->add_option("--box", box, "region x0,y0,x1,y1 in pixels")->required()->delimiter(',');
  views->add_option("--grid", grid, "coefficients, comma separated (default 0.1..1.0)")
      ->delimiter(',');
  views->add_option("--out-size", out_size, "square view side in pixels")
      ->check(CLI::Range(8, 4096))
      ->capture_default_str();

  auto* select = app.add_subcommand("select", "select views for one region, print its manifest");
  std::string select_image, views_dir, caption, image_id;
  SelectionFlags select_flags;
  select->add_option("image", select_image, "PNG image")->required()->check(CLI::ExistingFile);
  select->add_option("--box", box, "region x0,y0,x1,y1 in pixels")->required()->delimiter(',');
  select->add_option("--views-dir", views_dir, "write the chosen view crops here");
  select->add_option("--caption", caption, "region caption for the control sentence");
  select->add_option("--image-id", image_id, "id used in the manifest (default: file stem)");
  select_flags.add_to(select);

  auto* hash = app.add_subcommand("hash", "print the 64-bit perceptual hash of images");
  std::vector<std::string> hash_images;
  hash->add_option("images", hash_images, "PNG images")->required()->check(CLI::ExistingFile);

  auto* batch = app.add_subcommand("batch", "run the region pipeline over an annotation file");
  SelectionFlags batch_flags;
  std::string annotations, images_dir, output, batch_views_dir, format;
  unsigned jobs = 0;
  bool unordered = false;
  bool quiet = false;
  batch->add_option("--annotations", annotations, "COCO JSON or JSONL annotations")
      ->required()
      ->check(CLI::ExistingFile);
  batch->add_option("--images-dir", images_dir, "directory image paths are relative to");
  batch->add_option("--out", output, "output manifest (JSONL)")->required();
  batch->add_option("--views-dir", batch_views_dir, "view crop directory (default {out}.views)");
  batch->add_option("--format", format, "coco_json | jsonl (default: by extension)")
      ->check(CLI::IsMember({"coco_json", "jsonl"}));
  batch->add_option("--jobs", jobs, "worker threads (0 = logical cores)")->capture_default_str();
  batch->add_flag("--unordered", unordered, "write manifests as regions finish");
  batch->add_flag("--quiet", quiet, "no progress output");
  batch_flags.add_to(batch);

  auto* roi = app.add_subcommand("roi-align", "RoI-Align over a feature grid file");
  std::string grid_in, grid_out, offsets_in;
  int out_h = 16, out_w = 16, sampling_ratio = 2;
  roi->add_option("--grid", grid_in, "input feature grid")->required()->check(CLI::ExistingFile);
  roi->add_option("--box", box, "box x0,y0,x1,y1 in grid cells")->required()->delimiter(',');
  roi->add_option("--out-h", out_h)->check(CLI::PositiveNumber)->capture_default_str();
  roi->add_option("--out-w", out_w)->check(CLI::PositiveNumber)->capture_default_str();
  roi->add_option("--sampling-ratio", sampling_ratio)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  roi->add_option("--out", grid_out, "output feature grid")->required();

  auto* resample = app.add_subcommand("resample", "offset-map resampling of a feature grid");
  resample->add_option("--grid", grid_in, "input feature grid")->required()->check(CLI::ExistingFile);
  resample->add_option("--offsets", offsets_in, "two-channel (dx, dy) offset grid")
      ->required()
      ->check(CLI::ExistingFile);
  resample->add_option("--out", grid_out, "output feature grid")->required();

  auto* manifest = app.add_subcommand("manifest", "validate a manifest and print its entries");
  std::string manifest_path;
  manifest->add_option("path", manifest_path, "manifest JSONL")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*views) return run_views(views_image, box, grid, out_size);
    if (*select) return run_select(select_image, box, select_flags, views_dir, caption, image_id);
    if (*hash) return run_hash(hash_images);
    if (*batch) {
      return run_batch(batch_flags, annotations, images_dir, output, batch_views_dir, format, jobs,
                       unordered, quiet);
    }
    if (*roi) return run_roi_align(grid_in, box, out_h, out_w, sampling_ratio, grid_out);
    if (*resample) return run_resample(grid_in, offsets_in, grid_out);
    if (*manifest) return run_manifest(manifest_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
