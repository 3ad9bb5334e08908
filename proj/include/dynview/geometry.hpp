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
#include <span>
#include <vector>

namespace dynview {

inline constexpr int kDefaultViewSize = 224;
inline constexpr int kMinViewSize = 8;

/// Axis-aligned rectangle in continuous pixel coordinates, origin top-left.
/// A well-formed box has finite coordinates with x0 < x1 and y0 < y1.
struct Box {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool valid() const;
  /// True when `inner` lies inside this box (boundaries may touch).
  bool contains(const Box& inner) const;

  friend bool operator==(const Box&, const Box&) = default;
};

/// Throws DomainError naming the offending coordinate if `b` is not valid.
Box checked_box(const Box& b);

/// Corner form of a COCO-style (x, y, w, h) box. No validation.
Box box_from_xywh(double x, double y, double w, double h);

/// Full-image box (0, 0, width, height).
Box image_box(int width, int height);

/// Clamps a raw annotation box to the image and widens any side shorter than
/// one pixel to exactly one pixel around its centre, shifting it back inside
/// the image if needed. Sets `*degenerate` when widening happened.
/// Throws DomainError when the box is non-finite or lies entirely outside.
Box normalize_region(const Box& raw, const Box& image, bool* degenerate = nullptr);

/// region + t * (image - region), coordinate-wise.
Box interpolate_box(const Box& region, const Box& image, double t);

/// One view: interpolation coefficient, crop window, and square output side.
struct ViewSpec {
  double t = 0.0;
  Box crop;
  int out_size = kDefaultViewSize;

  friend bool operator==(const ViewSpec&, const ViewSpec&) = default;
};

/// Nested views ordered by strictly increasing t, first view at t = 0.
struct ViewSet {
  std::vector<ViewSpec> views;
  Box image;

  std::size_t size() const { return views.size(); }
  std::vector<double> coefficients() const;

  friend bool operator==(const ViewSet&, const ViewSet&) = default;
};

/// {0.1, 0.2, ..., 1.0}, each value computed as k / 10.
std::vector<double> default_grid();

/// Validates a candidate coefficient list: ascending, unique, all in (0, 1].
void check_candidate_ts(std::span<const double> ts);

/// Candidate set for coefficients [0] ++ ts. Throws DomainError on a
/// malformed list, a region outside the image, or out_size < 8.
ViewSet build_candidate_views(const Box& region, const Box& image,
                              std::span<const double> ts,
                              int out_size = kDefaultViewSize);

/// Indices into a candidate list of `count` entries (index 0 is the t = 0
/// view): always 0, plus n - 1 distinct indices drawn uniformly without
/// replacement from 1..count-1. Returned ascending.
std::vector<std::size_t> sample_view_indices(std::size_t count, std::size_t n,
                                             std::uint64_t seed);

/// Training-time stochastic subset of `candidates` built on sample_view_indices.
ViewSet sample_training_views(const ViewSet& candidates, std::size_t n,
                              std::uint64_t seed);

}  // namespace dynview
