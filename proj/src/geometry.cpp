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

#include "dynview/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dynview/error.hpp"
#include "dynview/random.hpp"

namespace dynview {

bool Box::valid() const {
  return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
         std::isfinite(y1) && x0 < x1 && y0 < y1;
}

bool Box::contains(const Box& inner) const {
  return inner.x0 >= x0 && inner.y0 >= y0 && inner.x1 <= x1 && inner.y1 <= y1;
}

Box checked_box(const Box& b) {
  if (!(std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) &&
        std::isfinite(b.y1))) {
    throw DomainError("box has non-finite coordinates");
  }
  if (!(b.x0 < b.x1)) {
    throw DomainError(fmt::format("box x0 ({}) must be less than x1 ({})", b.x0, b.x1));
  }
  if (!(b.y0 < b.y1)) {
    throw DomainError(fmt::format("box y0 ({}) must be less than y1 ({})", b.y0, b.y1));
  }
  return b;
}

Box box_from_xywh(double x, double y, double w, double h) {
  return Box{x, y, x + w, y + h};
}

Box image_box(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw DomainError(fmt::format("image size {}x{} is empty", width, height));
  }
  return Box{0.0, 0.0, static_cast<double>(width), static_cast<double>(height)};
}

namespace {

// Widens [lo, hi] to at least one unit around its centre, kept inside [min, max].
bool widen_axis(double& lo, double& hi, double min, double max) {
  if (hi - lo >= 1.0) return false;
  const double centre = 0.5 * (lo + hi);
  lo = centre - 0.5;
  hi = centre + 0.5;
  if (lo < min) {
    hi += min - lo;
    lo = min;
  }
  if (hi > max) {
    lo -= hi - max;
    hi = max;
  }
  lo = std::max(lo, min);
  return true;
}

}  // namespace

Box normalize_region(const Box& raw, const Box& image, bool* degenerate) {
  if (!(std::isfinite(raw.x0) && std::isfinite(raw.y0) && std::isfinite(raw.x1) &&
        std::isfinite(raw.y1))) {
    throw DomainError("region box has non-finite coordinates");
  }
  Box b{std::min(raw.x0, raw.x1), std::min(raw.y0, raw.y1), std::max(raw.x0, raw.x1),
        std::max(raw.y0, raw.y1)};
  if (b.x0 > image.x1 || b.y0 > image.y1 || b.x1 < image.x0 || b.y1 < image.y0) {
    throw DomainError("region box lies outside the image");
  }
  b.x0 = std::clamp(b.x0, image.x0, image.x1);
  b.x1 = std::clamp(b.x1, image.x0, image.x1);
  b.y0 = std::clamp(b.y0, image.y0, image.y1);
  b.y1 = std::clamp(b.y1, image.y0, image.y1);
  const bool wx = widen_axis(b.x0, b.x1, image.x0, image.x1);
  const bool wy = widen_axis(b.y0, b.y1, image.y0, image.y1);
  if (degenerate) *degenerate = wx || wy;
  return b;
}

Box interpolate_box(const Box& region, const Box& image, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw DomainError(fmt::format("interpolation coefficient {} outside [0, 1]", t));
  }
  checked_box(region);
  checked_box(image);
  if (!image.contains(region)) {
    throw DomainError("region box is not contained in the image box");
  }
  if (t == 0.0) return region;
  if (t == 1.0) return image;
  Box out{region.x0 + t * (image.x0 - region.x0), region.y0 + t * (image.y0 - region.y0),
          region.x1 + t * (image.x1 - region.x1), region.y1 + t * (image.y1 - region.y1)};
  // Rounding can push a coordinate one ulp past the image edge.
  out.x0 = std::clamp(out.x0, image.x0, region.x0);
  out.y0 = std::clamp(out.y0, image.y0, region.y0);
  out.x1 = std::clamp(out.x1, region.x1, image.x1);
  out.y1 = std::clamp(out.y1, region.y1, image.y1);
  return out;
}

std::vector<double> ViewSet::coefficients() const {
  std::vector<double> ts;
  ts.reserve(views.size());
  for (const auto& v : views) ts.push_back(v.t);
  return ts;
}

std::vector<double> default_grid() {
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(k / 10.0);
  return ts;
}

void check_candidate_ts(std::span<const double> ts) {
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0 && ts[i] <= 1.0)) {
      throw DomainError(fmt::format("candidate coefficient {} outside (0, 1]", ts[i]));
    }
    if (i > 0 && ts[i] == ts[i - 1]) {
      throw DomainError(fmt::format("duplicate candidate coefficient {}", ts[i]));
    }
    if (i > 0 && ts[i] < ts[i - 1]) {
      throw DomainError("candidate coefficients must be sorted ascending");
    }
  }
}

ViewSet build_candidate_views(const Box& region, const Box& image,
                              std::span<const double> ts, int out_size) {
  check_candidate_ts(ts);
  if (out_size < kMinViewSize) {
    throw DomainError(fmt::format("view size {} is below the minimum {}", out_size, kMinViewSize));
  }
  ViewSet set;
  set.image = image;
  set.views.reserve(ts.size() + 1);
  set.views.push_back(ViewSpec{0.0, interpolate_box(region, image, 0.0), out_size});
  for (double t : ts) {
    set.views.push_back(ViewSpec{t, interpolate_box(region, image, t), out_size});
  }
  return set;
}

std::vector<std::size_t> sample_view_indices(std::size_t count, std::size_t n,
                                             std::uint64_t seed) {
  if (n < 1) throw DomainError("at least one view must be sampled");
  if (n > count) {
    throw DomainError(fmt::format("cannot sample {} views from {} candidates", n, count));
  }
  // Partial Fisher-Yates over the free candidates 1..count-1.
  std::vector<std::size_t> pool(count - 1);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  SeededRng rng(seed);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::size_t> picked{0};
  picked.insert(picked.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n - 1));
  std::sort(picked.begin(), picked.end());
  return picked;
}

ViewSet sample_training_views(const ViewSet& candidates, std::size_t n, std::uint64_t seed) {
  if (candidates.views.empty() || candidates.views.front().t != 0.0) {
    throw DomainError("candidate set must start with the t = 0 view");
  }
  ViewSet out;
  out.image = candidates.image;
  for (std::size_t idx : sample_view_indices(candidates.size(), n, seed)) {
    out.views.push_back(candidates.views[idx]);
  }
  return out;
}

}  // namespace dynview
