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

#include "dynview/roiops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "dynview/error.hpp"

namespace dynview {

FeatureGrid::FeatureGrid(int height, int width, int channels)
    : FeatureGrid(height, width, channels,
                  std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) *
                                     std::max(width, 0) * std::max(channels, 0))) {}

FeatureGrid::FeatureGrid(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw DomainError(
        fmt::format("feature grid dimensions {}x{}x{} must be positive", height, width, channels));
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DomainError(fmt::format("feature grid has {} values, expected {}", data_.size(),
                                  static_cast<std::size_t>(height) * width * channels));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw DomainError("feature grid values must be finite");
  }
}

OffsetMap OffsetMap::zeros(int height, int width) {
  const auto n = static_cast<std::size_t>(height) * width;
  return OffsetMap{height, width, std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f)};
}

namespace {

double sample_index_space(const FeatureGrid& g, double u, double v, int c) {
  u = std::clamp(u, 0.0, static_cast<double>(g.width() - 1));
  v = std::clamp(v, 0.0, static_cast<double>(g.height() - 1));
  const int x0 = static_cast<int>(u);
  const int y0 = static_cast<int>(v);
  const int x1 = std::min(x0 + 1, g.width() - 1);
  const int y1 = std::min(y0 + 1, g.height() - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  return (1.0 - fy) * ((1.0 - fx) * g.at(y0, x0, c) + fx * g.at(y0, x1, c)) +
         fy * ((1.0 - fx) * g.at(y1, x0, c) + fx * g.at(y1, x1, c));
}

}  // namespace

double grid_sample(const FeatureGrid& grid, double x, double y, int c) {
  return sample_index_space(grid, x - 0.5, y - 0.5, c);
}

FeatureGrid roi_align(const FeatureGrid& grid, const Box& box, int out_h, int out_w,
                      int sampling_ratio) {
  if (out_h < 1 || out_w < 1) {
    throw DomainError(fmt::format("RoI output size {}x{} must be positive", out_h, out_w));
  }
  if (sampling_ratio < 1) {
    throw DomainError(fmt::format("sampling ratio {} must be at least 1", sampling_ratio));
  }
  if (!(box.width() > 0.0 && box.height() > 0.0) || !box.valid()) {
    throw DomainError("RoI box must have positive area");
  }
  FeatureGrid out(out_h, out_w, grid.channels());
  const double bin_w = box.width() / out_w;
  const double bin_h = box.height() / out_h;
  const double count = static_cast<double>(sampling_ratio) * sampling_ratio;
  std::vector<double> acc(grid.channels());
  for (int py = 0; py < out_h; ++py) {
    for (int px = 0; px < out_w; ++px) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int iy = 0; iy < sampling_ratio; ++iy) {
        const double y = box.y0 + py * bin_h + (iy + 0.5) * bin_h / sampling_ratio;
        for (int ix = 0; ix < sampling_ratio; ++ix) {
          const double x = box.x0 + px * bin_w + (ix + 0.5) * bin_w / sampling_ratio;
          for (int c = 0; c < grid.channels(); ++c) acc[c] += grid_sample(grid, x, y, c);
        }
      }
      for (int c = 0; c < grid.channels(); ++c) {
        out.at(py, px, c) = static_cast<float>(acc[c] / count);
      }
    }
  }
  return out;
}

FeatureGrid offset_resample(const FeatureGrid& grid, const OffsetMap& offsets) {
  const auto cells = static_cast<std::size_t>(grid.height()) * grid.width();
  if (offsets.height != grid.height() || offsets.width != grid.width() ||
      offsets.dx.size() != cells || offsets.dy.size() != cells) {
    throw DomainError(fmt::format("offset map {}x{} does not match grid {}x{}", offsets.height,
                                  offsets.width, grid.height(), grid.width()));
  }
  FeatureGrid out(grid.height(), grid.width(), grid.channels());
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      const std::size_t cell = static_cast<std::size_t>(y) * grid.width() + x;
      const double dx = offsets.dx[cell];
      const double dy = offsets.dy[cell];
      if (!std::isfinite(dx) || !std::isfinite(dy)) {
        throw DomainError("offset map values must be finite");
      }
      for (int c = 0; c < grid.channels(); ++c) {
        out.at(y, x, c) = static_cast<float>(sample_index_space(grid, x + dx, y + dy, c));
      }
    }
  }
  return out;
}

FeatureGrid concat_channels(std::span<const FeatureGrid> grids) {
  if (grids.empty()) throw DomainError("concat_channels needs at least one grid");
  const int h = grids.front().height();
  const int w = grids.front().width();
  int channels = 0;
  for (const auto& g : grids) {
    if (g.height() != h || g.width() != w) {
      throw DomainError(fmt::format("cannot concatenate {}x{} grid with {}x{} grid", g.height(),
                                    g.width(), h, w));
    }
    channels += g.channels();
  }
  FeatureGrid out(h, w, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int base = 0;
      for (const auto& g : grids) {
        for (int c = 0; c < g.channels(); ++c) out.at(y, x, base + c) = g.at(y, x, c);
        base += g.channels();
      }
    }
  }
  return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[off + i]} << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_feature_grid(const FeatureGrid& grid) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + grid.data().size() * 4);
  put_u32(out, static_cast<std::uint32_t>(grid.height()));
  put_u32(out, static_cast<std::uint32_t>(grid.width()));
  put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  for (float v : grid.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

FeatureGrid decode_feature_grid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw ParseError("feature grid header truncated", bytes.size());
  const std::uint32_t h = get_u32(bytes, 0);
  const std::uint32_t w = get_u32(bytes, 4);
  const std::uint32_t c = get_u32(bytes, 8);
  const std::uint64_t count = std::uint64_t{h} * w * c;
  if (h == 0 || w == 0 || c == 0 || h > (1u << 20) || w > (1u << 20) || c > (1u << 20)) {
    throw ParseError(fmt::format("feature grid header {}x{}x{} is invalid", h, w, c), 0);
  }
  if (bytes.size() != 12 + count * 4) {
    throw ParseError(fmt::format("feature grid payload is {} bytes, expected {}",
                                 bytes.size() - 12, count * 4),
                     std::min<std::size_t>(bytes.size(), 12 + count * 4));
  }
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
  }
  return FeatureGrid(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c),
                     std::move(data));
}

FeatureGrid read_feature_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return decode_feature_grid(bytes);
}

void write_feature_grid(const std::filesystem::path& path, const FeatureGrid& grid) {
  const auto bytes = encode_feature_grid(grid);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace dynview
