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

#include "dynview/selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dynview/error.hpp"

namespace dynview {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::attribute_detection: return "attribute_detection";
    case Task::region_recognition: return "region_recognition";
    case Task::region_caption: return "region_caption";
    case Task::dense_caption: return "dense_caption";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
  if (name == "attribute_detection" || name == "attribute") return Task::attribute_detection;
  if (name == "region_recognition" || name == "recognition") return Task::region_recognition;
  if (name == "region_caption" || name == "caption") return Task::region_caption;
  if (name == "dense_caption" || name == "dense") return Task::dense_caption;
  return std::nullopt;
}

TaskPriorTable default_task_prior_table() {
  return {
      {Task::attribute_detection, {0.1, 0.2}},
      {Task::region_recognition, {0.2, 0.1}},
      {Task::region_caption, {0.5, 0.4}},
      {Task::dense_caption, {0.4, 0.5}},
  };
}

std::string_view mode_name(GreedyMode mode) {
  return mode == GreedyMode::topk ? "topk" : "marginal";
}

std::optional<GreedyMode> parse_mode(std::string_view name) {
  if (name == "topk") return GreedyMode::topk;
  if (name == "marginal") return GreedyMode::marginal;
  return std::nullopt;
}

double score_view(PerceptualHash64 first, PerceptualHash64 candidate, double t) {
  if (!(t > 0.0)) {
    throw DomainError(fmt::format("score_view needs t > 0, got {}", t));
  }
  return static_cast<double>(hamming(first, candidate)) / t;
}

std::vector<double> greedy_pick(std::span<const PerceptualHash64> hashes,
                                std::span<const double> candidate_ts, std::size_t picks,
                                GreedyMode mode) {
  if (hashes.size() != candidate_ts.size() + 1) {
    throw DomainError("greedy_pick needs one hash per candidate plus the t = 0 view");
  }
  if (picks > candidate_ts.size()) {
    throw DomainError(fmt::format("cannot pick {} views from {} candidates", picks,
                                  candidate_ts.size()));
  }
  // Candidates are ascending in t, so scanning in order with a strict '>'
  // resolves ties toward the smaller coefficient.
  std::vector<double> picked;
  if (mode == GreedyMode::topk) {
    std::vector<std::size_t> order(candidate_ts.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> scores(candidate_ts.size());
    for (std::size_t i = 0; i < candidate_ts.size(); ++i) {
      scores[i] = score_view(hashes[0], hashes[i + 1], candidate_ts[i]);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    for (std::size_t i = 0; i < picks; ++i) picked.push_back(candidate_ts[order[i]]);
    return picked;
  }

  std::vector<PerceptualHash64> selected{hashes[0]};
  std::vector<bool> used(candidate_ts.size(), false);
  for (std::size_t round = 0; round < picks; ++round) {
    double best_gain = -1.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < candidate_ts.size(); ++i) {
      if (used[i]) continue;
      int nearest = std::numeric_limits<int>::max();
      for (const auto& h : selected) nearest = std::min(nearest, hamming(h, hashes[i + 1]));
      const double gain = static_cast<double>(nearest) / candidate_ts[i];
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    used[best] = true;
    selected.push_back(hashes[best + 1]);
    picked.push_back(candidate_ts[best]);
  }
  return picked;
}

namespace {

std::vector<double> with_first_view(std::vector<double> picked) {
  std::sort(picked.begin(), picked.end());
  picked.insert(picked.begin(), 0.0);
  return picked;
}

}  // namespace

SelectionResult select_image_prior(const ImageRaster& img, const Box& region, std::size_t n,
                                   const ImagePrior& policy) {
  if (n < 1) throw DomainError("view count must be at least 1");
  if (policy.candidate_ts.empty()) throw DomainError("image prior needs candidate coefficients");
  if (n - 1 > policy.candidate_ts.size()) {
    throw DomainError(fmt::format("{} views requested but only {} candidates besides t = 0", n,
                                  policy.candidate_ts.size()));
  }
  const ViewSet candidates =
      build_candidate_views(region, img.bounds(), policy.candidate_ts, policy.out_size);

  SelectionResult result;
  result.policy = policy;
  result.candidate_ts = policy.candidate_ts;
  result.candidate_hashes.reserve(candidates.size());
  for (const auto& view : candidates.views) {
    result.candidate_hashes.push_back(phash64(crop_resize(img, view.crop, view.out_size)));
  }
  for (std::size_t i = 0; i < result.candidate_ts.size(); ++i) {
    result.scores.push_back(score_view(result.candidate_hashes[0],
                                       result.candidate_hashes[i + 1], result.candidate_ts[i]));
  }
  const GreedyMode other =
      policy.mode == GreedyMode::topk ? GreedyMode::marginal : GreedyMode::topk;
  result.chosen_ts = with_first_view(
      greedy_pick(result.candidate_hashes, result.candidate_ts, n - 1, policy.mode));
  result.alternate_ts =
      with_first_view(greedy_pick(result.candidate_hashes, result.candidate_ts, n - 1, other));
  return result;
}

SelectionResult select_task_prior(Task task, std::size_t n, const TaskPriorTable& table) {
  if (n < 1) throw DomainError("view count must be at least 1");
  const auto it = table.find(task);
  if (it == table.end()) {
    throw DomainError(fmt::format("no task-prior entry for task '{}'", task_name(task)));
  }
  const auto& ranked = it->second;
  if (ranked.size() < n - 1) {
    throw DomainError(fmt::format("task '{}' lists {} coefficients, {} needed", task_name(task),
                                  ranked.size(), n - 1));
  }
  for (double t : ranked) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw DomainError(fmt::format("task-prior coefficient {} outside (0, 1]", t));
    }
  }
  std::vector<double> picked(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n - 1));
  auto chosen = with_first_view(std::move(picked));
  if (std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end()) {
    throw DomainError(fmt::format("task '{}' table repeats a coefficient", task_name(task)));
  }
  SelectionResult result;
  result.policy = TaskPrior{task, table};
  result.chosen_ts = std::move(chosen);
  return result;
}

SelectionResult select_no_prior(std::size_t n, std::uint64_t seed,
                                std::span<const double> candidate_ts) {
  check_candidate_ts(candidate_ts);
  SelectionResult result;
  result.policy = NoPrior{seed, {candidate_ts.begin(), candidate_ts.end()}};
  for (std::size_t idx : sample_view_indices(candidate_ts.size() + 1, n, seed)) {
    result.chosen_ts.push_back(idx == 0 ? 0.0 : candidate_ts[idx - 1]);
  }
  return result;
}

SelectionResult select_views(const SelectionPolicy& policy, const ImageRaster& img,
                             const Box& region, std::size_t n) {
  if (const auto* p = std::get_if<NoPrior>(&policy)) {
    return select_no_prior(n, p->seed, p->candidate_ts);
  }
  if (const auto* p = std::get_if<TaskPrior>(&policy)) {
    return select_task_prior(p->task, n, p->table);
  }
  return select_image_prior(img, region, n, std::get<ImagePrior>(policy));
}

ViewSet chosen_view_set(std::span<const double> chosen_ts, const Box& region,
                        const Box& image, int out_size) {
  if (chosen_ts.empty() || chosen_ts.front() != 0.0) {
    throw DomainError("chosen coefficients must start with 0");
  }
  return build_candidate_views(region, image, chosen_ts.subspan(1), out_size);
}

}  // namespace dynview
