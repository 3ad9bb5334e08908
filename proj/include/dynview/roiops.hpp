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

/// Dense H x W x C float grid, row-major with channels innermost.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int height, int width, int channels);
  FeatureGrid(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }

  float at(int y, int x, int c) const { return data_[index(y, x, c)]; }
  float& at(int y, int x, int c) { return data_[index(y, x, c)]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Per-cell displacement (dx, dy) in cell units.
struct OffsetMap {
  int height = 0;
  int width = 0;
  std::vector<float> dx;
  std::vector<float> dy;

  static OffsetMap zeros(int height, int width);
};

/// Bilinear sample at continuous grid coordinates; cell (y, x) has its centre
/// at (x + 0.5, y + 0.5). Clamps to the edge.
double grid_sample(const FeatureGrid& grid, double x, double y, int c);

/// RoI-Align of `box` (grid coordinates) into out_h x out_w bins, each the mean
/// of sampling_ratio^2 bilinear samples on a regular lattice inside the bin.
FeatureGrid roi_align(const FeatureGrid& grid, const Box& box, int out_h, int out_w,
                      int sampling_ratio);

/// out(y, x) = bilinear sample of `grid` at index position (x + dx, y + dy).
FeatureGrid offset_resample(const FeatureGrid& grid, const OffsetMap& offsets);

/// Stacks channels of equally sized grids in input order.
FeatureGrid concat_channels(std::span<const FeatureGrid> grids);

// Binary format: little-endian uint32 h, w, c then h*w*c float32, row-major.
std::vector<std::uint8_t> encode_feature_grid(const FeatureGrid& grid);
FeatureGrid decode_feature_grid(std::span<const std::uint8_t> bytes);
FeatureGrid read_feature_grid(const std::filesystem::path& path);
void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid);

}  // namespace dynview
