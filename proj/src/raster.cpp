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

#include "dynview/raster.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dynview/error.hpp"

namespace dynview {

ImageRaster::ImageRaster(int width, int height, int channels)
    : ImageRaster(width, height, channels,
                  std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                     std::max(height, 0) * std::max(channels, 0))) {}

ImageRaster::ImageRaster(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width <= 0 || height <= 0) {
    throw DomainError(fmt::format("raster size {}x{} is empty", width, height));
  }
  if (channels != 1 && channels != 3) {
    throw DomainError(fmt::format("raster must have 1 or 3 channels, got {}", channels));
  }
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DomainError(fmt::format("raster data has {} samples, expected {}", data_.size(),
                                  static_cast<std::size_t>(width) * height * channels));
  }
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw DomainError("raster samples must be finite and within [0, 1]");
    }
  }
}

double sample_bilinear(const ImageRaster& img, double x, double y, int c) {
  const double u = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width() - 1));
  const double v = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  return (1.0 - fy) * top + fy * bottom;
}

ImageRaster crop_resize(const ImageRaster& img, const Box& crop, int out_size) {
  if (img.empty()) throw DomainError("cannot resample an empty raster");
  if (out_size < 1) throw DomainError(fmt::format("output size {} must be positive", out_size));
  checked_box(crop);
  const Box bounds = img.bounds();
  if (crop.x0 >= bounds.x1 || crop.y0 >= bounds.y1 || crop.x1 <= bounds.x0 ||
      crop.y1 <= bounds.y0) {
    throw DomainError("crop does not intersect the image");
  }
  ImageRaster out(out_size, out_size, img.channels());
  const double sx = crop.width() / out_size;
  const double sy = crop.height() / out_size;
  for (int j = 0; j < out_size; ++j) {
    const double y = crop.y0 + (j + 0.5) * sy;
    for (int i = 0; i < out_size; ++i) {
      const double x = crop.x0 + (i + 0.5) * sx;
      for (int c = 0; c < img.channels(); ++c) {
        // Convex combination of in-range samples; the clamp only absorbs rounding.
        out.at(i, j, c) =
            std::clamp(static_cast<float>(sample_bilinear(img, x, y, c)), 0.0f, 1.0f);
      }
    }
  }
  return out;
}

ImageRaster to_luma(const ImageRaster& img) {
  if (img.channels() == 1) return img;
  ImageRaster out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
                          0.114 * img.at(x, y, 2);
      out.at(x, y) = std::clamp(static_cast<float>(luma), 0.0f, 1.0f);
    }
  }
  return out;
}

std::vector<ImageRaster> realize_views(const ImageRaster& img, const ViewSet& views) {
  std::vector<ImageRaster> out;
  out.reserve(views.size());
  for (const auto& v : views.views) out.push_back(crop_resize(img, v.crop, v.out_size));
  return out;
}

ImageRaster flip_horizontal(const ImageRaster& img) {
  ImageRaster out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

}  // namespace dynview
