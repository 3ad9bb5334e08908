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

#include "dynview/phash.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "dynview/error.hpp"

namespace dynview {
namespace {

// basis[k * n + i] = alpha(k) * cos(pi * (2i + 1) * k / 2n)
std::vector<double> dct_basis(int n) {
  std::vector<double> basis(static_cast<std::size_t>(n) * n);
  const double a0 = std::sqrt(1.0 / n);
  const double ak = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      basis[k * n + i] =
          (k == 0 ? a0 : ak) * std::cos(std::numbers::pi * (2 * i + 1) * k / (2.0 * n));
    }
  }
  return basis;
}

const std::vector<double>& cached_basis(int n) {
  static const std::vector<double> basis32 = dct_basis(phash_params::kInputSize);
  if (n == phash_params::kInputSize) return basis32;
  thread_local std::vector<double> other;
  thread_local int other_n = 0;
  if (other_n != n) {
    other = dct_basis(n);
    other_n = n;
  }
  return other;
}

void check_block(std::span<const double> block, int n) {
  if (n <= 0 || block.size() != static_cast<std::size_t>(n) * n) {
    throw DomainError(fmt::format("DCT block of {} values is not {}x{}", block.size(), n, n));
  }
}

}  // namespace

std::vector<double> dct2d(std::span<const double> block, int n) {
  check_block(block, n);
  const auto& basis = cached_basis(n);
  const auto un = static_cast<std::size_t>(n);
  // rows first: tmp[y][k] = sum_x basis[k][x] * block[y][x]
  std::vector<double> tmp(un * un, 0.0);
  for (std::size_t y = 0; y < un; ++y) {
    for (std::size_t k = 0; k < un; ++k) {
      double acc = 0.0;
      for (std::size_t x = 0; x < un; ++x) acc += basis[k * un + x] * block[y * un + x];
      tmp[y * un + k] = acc;
    }
  }
  std::vector<double> out(un * un, 0.0);
  for (std::size_t k = 0; k < un; ++k) {
    for (std::size_t l = 0; l < un; ++l) {
      double acc = 0.0;
      for (std::size_t y = 0; y < un; ++y) acc += basis[k * un + y] * tmp[y * un + l];
      out[k * un + l] = acc;
    }
  }
  return out;
}

std::vector<double> idct2d(std::span<const double> coeffs, int n) {
  check_block(coeffs, n);
  const auto& basis = cached_basis(n);
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> tmp(un * un, 0.0);
  for (std::size_t k = 0; k < un; ++k) {
    for (std::size_t x = 0; x < un; ++x) {
      double acc = 0.0;
      for (std::size_t l = 0; l < un; ++l) acc += basis[l * un + x] * coeffs[k * un + l];
      tmp[k * un + x] = acc;
    }
  }
  std::vector<double> out(un * un, 0.0);
  for (std::size_t y = 0; y < un; ++y) {
    for (std::size_t x = 0; x < un; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < un; ++k) acc += basis[k * un + y] * tmp[k * un + x];
      out[y * un + x] = acc;
    }
  }
  return out;
}

PerceptualHash64 hash_from_coefficients(std::span<const double, 64> block) {
  std::array<double, 63> ac{};
  std::copy(block.begin() + 1, block.end(), ac.begin());
  std::nth_element(ac.begin(), ac.begin() + 31, ac.end());
  const double threshold = ac[31] + phash_params::kTieTolerance;
  std::uint64_t bits = 0;
  for (int k = 0; k < 64; ++k) {
    if (block[k] > threshold) bits |= std::uint64_t{1} << (63 - k);
  }
  return PerceptualHash64{bits};
}

PerceptualHash64 phash64(const ImageRaster& img) {
  if (img.empty()) throw DomainError("cannot hash an empty raster");
  constexpr int n = phash_params::kInputSize;
  constexpr int b = phash_params::kBlockSize;
  const ImageRaster small = crop_resize(to_luma(img), img.bounds(), n);
  std::vector<double> samples(small.data().begin(), small.data().end());
  const auto coeffs = dct2d(samples, n);
  std::array<double, 64> block{};
  for (int k = 0; k < b; ++k) {
    for (int l = 0; l < b; ++l) block[k * b + l] = coeffs[k * n + l];
  }
  return hash_from_coefficients(block);
}

std::string PerceptualHash64::hex() const { return fmt::format("{:016x}", bits); }

std::optional<PerceptualHash64> PerceptualHash64::from_hex(std::string_view hex) {
  if (hex.size() != 16) return std::nullopt;
  for (char c : hex) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return std::nullopt;
  }
  std::uint64_t v = 0;
  const auto res = std::from_chars(hex.data(), hex.data() + hex.size(), v, 16);
  if (res.ec != std::errc{} || res.ptr != hex.data() + hex.size()) return std::nullopt;
  return PerceptualHash64{v};
}

}  // namespace dynview
