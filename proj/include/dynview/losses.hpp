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

// Reference implementations of the three training objectives, each returning
// the scalar loss and its analytic gradient. Meant for validating the kernels
// of a training stack, not for training.

namespace dynview::losses {

inline constexpr double kProbEpsilon = 1e-7;

/// Scalar loss plus the gradient with respect to the input, same layout.
struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Asymmetric multi-label loss. Defaults follow the recommendation of its
/// original authors (gamma_pos 0, gamma_neg 4, clip 0.05).
struct AslParams {
  double gamma_pos = 0.0;
  double gamma_neg = 4.0;
  double clip = 0.05;
};

/// Row-major matrix view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// Per element, with p clamped to [eps, 1 - eps]:
///   positive: (1 - p)^gamma_pos * log(p)
///   negative: p_m^gamma_neg * log(1 - p_m),  p_m = max(p - clip, 0)
/// loss = -mean. Gradient is with respect to `probs` and is zero where the
/// clamp is active.
LossResult asl_loss(std::span<const double> probs, std::span<const double> targets,
                    const AslParams& params = {});

struct SiglipParams {
  double temperature = 10.0;
  double bias = -10.0;
};

/// Pairwise sigmoid loss over an N x N similarity matrix with positives on
/// the diagonal: (1/N) * sum_ij log(1 + exp(-z_ij * (temperature * s_ij + bias))).
LossResult pairwise_sigmoid_loss(MatrixView similarity, const SiglipParams& params = {});

inline constexpr std::int64_t kIgnoreIndex = -100;

/// Mean token cross-entropy over positions whose target is not ignore_index.
/// Gradient is with respect to the T x V logits; ignored rows get zeros.
LossResult token_cross_entropy(MatrixView logits, std::span<const std::int64_t> target_ids,
                               std::int64_t ignore_index = kIgnoreIndex);

}  // namespace dynview::losses
