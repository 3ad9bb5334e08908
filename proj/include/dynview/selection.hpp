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
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "dynview/geometry.hpp"
#include "dynview/phash.hpp"
#include "dynview/raster.hpp"

namespace dynview {

enum class Task { attribute_detection, region_recognition, region_caption, dense_caption };

std::string_view task_name(Task task);
/// Accepts the canonical names plus the short forms attribute, recognition,
/// caption and dense.
std::optional<Task> parse_task(std::string_view name);

/// Ranked coefficients per task, best first.
using TaskPriorTable = std::map<Task, std::vector<double>>;

/// Two best second-view coefficients per task measured on a two-view model:
/// contextless views for attributes, context-rich views for captioning.
TaskPriorTable default_task_prior_table();

enum class GreedyMode { topk, marginal };

std::string_view mode_name(GreedyMode mode);
std::optional<GreedyMode> parse_mode(std::string_view name);

struct NoPrior {
  std::uint64_t seed = 0;
  std::vector<double> candidate_ts = default_grid();
};

struct TaskPrior {
  Task task = Task::attribute_detection;
  TaskPriorTable table = default_task_prior_table();
};

struct ImagePrior {
  GreedyMode mode = GreedyMode::marginal;
  std::vector<double> candidate_ts = default_grid();
  int out_size = kDefaultViewSize;
};

using SelectionPolicy = std::variant<NoPrior, TaskPrior, ImagePrior>;

struct SelectionResult {
  /// Chosen coefficients, ascending, always starting with 0.
  std::vector<double> chosen_ts;
  SelectionPolicy policy;

  // Filled by image-prior selection only.
  std::vector<double> candidate_ts;                // t > 0 candidates
  std::vector<PerceptualHash64> candidate_hashes;  // [0] is the t = 0 view
  std::vector<double> scores;                      // score_view per candidate_ts entry
  std::vector<double> alternate_ts;                // what the other greedy mode picks
};

/// hamming(first, candidate) / t. Throws DomainError for t <= 0.
double score_view(PerceptualHash64 first, PerceptualHash64 candidate, double t);

/// Greedy selection over precomputed hashes. `hashes[0]` belongs to the t = 0
/// view and `hashes[i + 1]` to `candidate_ts[i]`. Returns chosen t > 0 values
/// in pick order (not sorted).
std::vector<double> greedy_pick(std::span<const PerceptualHash64> hashes,
                                std::span<const double> candidate_ts, std::size_t picks,
                                GreedyMode mode);

/// Image-prior selection: builds, realizes and hashes the candidate views of
/// `region` in `img`, keeps t = 0 and greedily adds n - 1 more.
SelectionResult select_image_prior(const ImageRaster& img, const Box& region, std::size_t n,
                                   const ImagePrior& policy);

/// [0] ++ the first n - 1 table entries for `task`, sorted.
SelectionResult select_task_prior(Task task, std::size_t n, const TaskPriorTable& table);

/// Uniform random subset with the t = 0 view forced in.
SelectionResult select_no_prior(std::size_t n, std::uint64_t seed,
                                std::span<const double> candidate_ts);

/// Dispatches on the policy alternative. `img` and `region` are only read by
/// the image prior.
SelectionResult select_views(const SelectionPolicy& policy, const ImageRaster& img,
                             const Box& region, std::size_t n);

/// Views for a chosen coefficient list.
ViewSet chosen_view_set(std::span<const double> chosen_ts, const Box& region,
                        const Box& image, int out_size);

}  // namespace dynview
