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

// Synthetic images and scratch directories for tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dynview/geometry.hpp"
#include "dynview/raster.hpp"

#include <nlohmann/json.hpp>

namespace fixtures {

// Uniform noise in [lo, hi].
inline dynview::ImageRaster noise_image(int w, int h, int channels, std::uint64_t seed,
                                        float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  dynview::ImageRaster img(w, h, channels);
  for (auto& v : img.data()) v = dist(rng);
  return img;
}

// Smooth random texture: a few random plane waves plus mild noise, scaled into
// [lo, hi].
inline dynview::ImageRaster texture_image(int w, int h, int channels, std::uint64_t seed,
                                          float lo = 0.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    waves.push_back({(unit(rng) - 0.5) * 0.6, (unit(rng) - 0.5) * 0.6,
                     unit(rng) * 2 * std::numbers::pi, 0.3 + unit(rng)});
  }
  dynview::ImageRaster img(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        double v = 0.0, norm = 0.0;
        for (const auto& wv : waves) {
          v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase + c);
          norm += wv.amp;
        }
        v = 0.5 + 0.45 * v / norm + 0.05 * (unit(rng) - 0.5);
        v = std::clamp(v, 0.0, 1.0);
        img.at(x, y, c) = static_cast<float>(lo + (hi - lo) * v);
      }
    }
  }
  return img;
}

// Textured background with a flat white box, the "white wall" case.
inline dynview::ImageRaster white_region_image(int w, int h, const dynview::Box& box,
                                               std::uint64_t seed) {
  auto img = texture_image(w, h, 3, seed);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 0.5 >= box.x0 && x + 0.5 <= box.x1 && y + 0.5 >= box.y0 && y + 0.5 <= box.y1) {
        for (int c = 0; c < 3; ++c) img.at(x, y, c) = 1.0f;
      }
    }
  }
  return img;
}

// Random region box with sides of at least 2 px inside a w x h image.
inline dynview::Box random_region(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(0.0, w - 2.0), uy(0.0, h - 2.0);
  const double x0 = ux(rng), y0 = uy(rng);
  std::uniform_real_distribution<double> uw(2.0, w - x0), uh(2.0, h - y0);
  return dynview::Box{x0, y0, std::min<double>(w, x0 + uw(rng)), std::min<double>(h, y0 + uh(rng))};
}

// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dynview_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// A COCO-style dataset of textured PNGs. Regions are spread across
/// `images` files; one annotation points at a missing file and, when
/// `corrupt` is set, one image is replaced by junk bytes.
struct Dataset {
  std::filesystem::path annotations;
  std::filesystem::path images_dir;
  std::size_t regions = 0;
  std::size_t missing = 0;
  std::size_t corrupt = 0;
};

inline Dataset make_dataset(const std::filesystem::path& root, std::size_t regions,
                            std::size_t images, bool corrupt, std::uint64_t seed) {
  Dataset ds;
  ds.images_dir = root / "images";
  std::filesystem::create_directories(ds.images_dir);
  std::mt19937_64 rng(seed);
  nlohmann::json doc;
  doc["images"] = nlohmann::json::array();
  doc["categories"] = nlohmann::json::array({{{"id", 1}, {"name", "dog"}}});
  std::vector<std::pair<int, int>> sizes;
  for (std::size_t i = 0; i < images; ++i) {
    const int w = 48 + static_cast<int>(rng() % 32), h = 40 + static_cast<int>(rng() % 32);
    sizes.emplace_back(w, h);
    const auto name = "img" + std::to_string(i) + ".png";
    dynview::write_png(ds.images_dir / name, texture_image(w, h, 3, seed * 1000 + i));
    doc["images"].push_back({{"id", i}, {"file_name", name}});
  }
  doc["images"].push_back({{"id", images}, {"file_name", "does_not_exist.png"}});
  if (corrupt) {
    std::ofstream junk(ds.images_dir / "img0.png", std::ios::binary | std::ios::trunc);
    junk << "not a png at all";
  }
  static const char* kCaptions[] = {"A white dog lying on a sofa", "a red car near a tree",
                                    "person holding an umbrella", "a cat on the bed"};
  doc["annotations"] = nlohmann::json::array();
  for (std::size_t r = 0; r < regions; ++r) {
    nlohmann::json ann;
    ann["id"] = r;
    ann["category_id"] = 1;
    ann["caption"] = kCaptions[r % 4];
    if (r == regions / 2) {
      ann["image_id"] = images;  // missing file
      ann["bbox"] = {1, 1, 5, 5};
      ++ds.missing;
    } else {
      const std::size_t img = r % images;
      if (corrupt && img == 0) ++ds.corrupt;
      const auto [w, h] = sizes[img];
      std::mt19937_64 local(seed + r);
      const dynview::Box b = random_region(w, h, local);
      ann["image_id"] = img;
      ann["bbox"] = {b.x0, b.y0, b.width(), b.height()};
    }
    doc["annotations"].push_back(ann);
  }
  ds.annotations = root / "annotations.json";
  std::ofstream(ds.annotations) << doc.dump(2);
  ds.regions = regions;
  return ds;
}

}  // namespace fixtures
