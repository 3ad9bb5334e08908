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

#include "dynview/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dynview/error.hpp"

namespace dynview::losses {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(fmt::format("{} contains a non-finite value", what));
  }
}

}  // namespace

LossResult asl_loss(std::span<const double> probs, std::span<const double> targets,
                    const AslParams& params) {
  if (probs.size() != targets.size()) {
    throw DomainError(fmt::format("asl_loss: {} probabilities but {} targets", probs.size(),
                                  targets.size()));
  }
  if (probs.empty()) throw DomainError("asl_loss: empty input");
  if (!(params.gamma_pos >= 0.0) || !(params.gamma_neg >= 0.0)) {
    throw DomainError("asl_loss: focusing exponents must be non-negative");
  }
  if (!(params.clip >= 0.0 && params.clip < 1.0)) {
    throw DomainError(fmt::format("asl_loss: clip {} outside [0, 1)", params.clip));
  }
  check_finite(probs, "asl_loss probabilities");

  const double n = static_cast<double>(probs.size());
  LossResult out;
  out.grad.assign(probs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double raw = probs[i];
    const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
    const bool clamped = raw != p;
    double value = 0.0;
    double slope = 0.0;
    if (targets[i] == 1.0) {
      const double g = params.gamma_pos;
      const double q = 1.0 - p;
      const double w = std::pow(q, g);
      value = w * std::log(p);
      slope = w / p - (g == 0.0 ? 0.0 : g * std::pow(q, g - 1.0) * std::log(p));
    } else if (targets[i] == 0.0) {
      const double pm = p - params.clip;
      if (pm > 0.0) {
        const double g = params.gamma_neg;
        const double w = std::pow(pm, g);
        value = w * std::log1p(-pm);
        slope = (g == 0.0 ? 0.0 : g * std::pow(pm, g - 1.0) * std::log1p(-pm)) - w / (1.0 - pm);
      }
    } else {
      throw DomainError(fmt::format("asl_loss: target {} is neither 0 nor 1", targets[i]));
    }
    total += value;
    out.grad[i] = clamped ? 0.0 : -slope / n;
  }
  out.loss = -total / n;
  return out;
}

LossResult pairwise_sigmoid_loss(MatrixView similarity, const SiglipParams& params) {
  if (similarity.rows != similarity.cols) {
    throw DomainError(fmt::format("pairwise_sigmoid_loss: similarity matrix is {}x{}, not square",
                                  similarity.rows, similarity.cols));
  }
  if (similarity.rows == 0) throw DomainError("pairwise_sigmoid_loss: empty matrix");
  if (similarity.data.size() != similarity.rows * similarity.cols) {
    throw DomainError("pairwise_sigmoid_loss: data length does not match shape");
  }
  if (!(params.temperature > 0.0) || !std::isfinite(params.temperature) ||
      !std::isfinite(params.bias)) {
    throw DomainError("pairwise_sigmoid_loss: temperature must be positive and finite");
  }
  check_finite(similarity.data, "similarity matrix");

  const std::size_t n = similarity.rows;
  LossResult out;
  out.grad.assign(n * n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double z = i == j ? 1.0 : -1.0;
      const double logit = params.temperature * similarity.data[i * n + j] + params.bias;
      total += softplus(-z * logit);
      out.grad[i * n + j] = -z * params.temperature * sigmoid(-z * logit) / static_cast<double>(n);
    }
  }
  out.loss = total / static_cast<double>(n);
  return out;
}

LossResult token_cross_entropy(MatrixView logits, std::span<const std::int64_t> target_ids,
                               std::int64_t ignore_index) {
  if (logits.data.size() != logits.rows * logits.cols) {
    throw DomainError("token_cross_entropy: data length does not match shape");
  }
  if (target_ids.size() != logits.rows) {
    throw DomainError(fmt::format("token_cross_entropy: {} targets for {} positions",
                                  target_ids.size(), logits.rows));
  }
  if (logits.cols == 0) throw DomainError("token_cross_entropy: empty vocabulary");
  check_finite(logits.data, "logits");

  const std::size_t vocab = logits.cols;
  for (std::int64_t id : target_ids) {
    if (id != ignore_index && (id < 0 || static_cast<std::size_t>(id) >= vocab)) {
      throw DomainError(
          fmt::format("token_cross_entropy: target {} outside vocabulary of {}", id, vocab));
    }
  }
  const auto counted = static_cast<std::size_t>(
      std::count_if(target_ids.begin(), target_ids.end(),
                    [&](std::int64_t id) { return id != ignore_index; }));

  LossResult out;
  out.grad.assign(logits.data.size(), 0.0);
  if (counted == 0) return out;
  double total = 0.0;
  for (std::size_t t = 0; t < logits.rows; ++t) {
    if (target_ids[t] == ignore_index) continue;
    const auto row = logits.data.subspan(t * vocab, vocab);
    const double peak = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - peak);
    const double log_norm = peak + std::log(sum);
    const auto target = static_cast<std::size_t>(target_ids[t]);
    total += log_norm - row[target];
    for (std::size_t v = 0; v < vocab; ++v) {
      const double prob = std::exp(row[v] - log_norm);
      out.grad[t * vocab + v] = (prob - (v == target ? 1.0 : 0.0)) / static_cast<double>(counted);
    }
  }
  out.loss = total / static_cast<double>(counted);
  return out;
}

}  // namespace dynview::losses
