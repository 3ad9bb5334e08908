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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dynview/geometry.hpp"

namespace dynview {

/// Row-major interleaved image with samples in [0, 1]. Channels is 1 or 3.
class ImageRaster {
 public:
  ImageRaster() = default;
  /// Zero-filled raster. Throws DomainError on bad dimensions.
  ImageRaster(int width, int height, int channels);
  /// Takes ownership of `data`; validates length, range and finiteness.
  ImageRaster(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  Box bounds() const { return image_box(width_, height_); }

  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  friend bool operator==(const ImageRaster&, const ImageRaster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Bilinear sample of channel `c` at continuous position (x, y). Pixel
/// centres sit at integer + 0.5; positions outside clamp to the edge.
double sample_bilinear(const ImageRaster& img, double x, double y, int c);

/// Resamples `crop` into an out_size x out_size raster (bilinear, clamp to
/// edge). Throws DomainError if the crop does not intersect the image.
ImageRaster crop_resize(const ImageRaster& img, const Box& crop, int out_size);

/// Rec.601 luma for RGB; identity for single-channel input.
ImageRaster to_luma(const ImageRaster& img);

/// crop_resize over every view of the set, in order.
std::vector<ImageRaster> realize_views(const ImageRaster& img, const ViewSet& views);

ImageRaster flip_horizontal(const ImageRaster& img);

// PNG codec. 8-bit samples map to floats by v / 255 on decode and
// round(v * 255) on encode. Gray and gray+alpha decode to one channel,
// everything else to RGB; alpha is discarded.
ImageRaster decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageRaster& img);
ImageRaster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageRaster& img);

/// Width and height from the PNG header without decoding pixels.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);

}  // namespace dynview
