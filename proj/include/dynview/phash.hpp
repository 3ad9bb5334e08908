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

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dynview/raster.hpp"

namespace dynview {

/// 64-bit DCT perceptual hash. Bit 63 holds the DC coefficient and the
/// remaining bits follow the 8x8 low-frequency block in row-major order, so
/// the hex form reads left to right over the block.
struct PerceptualHash64 {
  std::uint64_t bits = 0;

  std::string hex() const;  // 16 lowercase hex digits
  static std::optional<PerceptualHash64> from_hex(std::string_view hex);

  friend bool operator==(const PerceptualHash64&, const PerceptualHash64&) = default;
};

inline int hamming(PerceptualHash64 a, PerceptualHash64 b) {
  return std::popcount(a.bits ^ b.bits);
}

namespace phash_params {
inline constexpr int kInputSize = 32;  // luma is resampled to 32x32
inline constexpr int kBlockSize = 8;   // top-left 8x8 DCT block
inline constexpr int kBits = 64;
// Coefficients must exceed the AC median by more than this to set a bit.
// Absorbs floating-point noise on coefficients that are equal by symmetry.
inline constexpr double kTieTolerance = 1e-9;
}  // namespace phash_params

/// Orthonormal 2D DCT-II of an n x n row-major block (separable, O(n^3)).
std::vector<double> dct2d(std::span<const double> block, int n);
/// Inverse of dct2d (orthonormal DCT-III).
std::vector<double> idct2d(std::span<const double> coeffs, int n);

/// Bits from a row-major 8x8 coefficient block; the median is taken over the
/// 63 AC coefficients only, then every coefficient, DC included, is compared
/// against it.
PerceptualHash64 hash_from_coefficients(std::span<const double, 64> block);

/// to_luma -> 32x32 bilinear resample of the full image -> DCT -> threshold.
PerceptualHash64 phash64(const ImageRaster& img);

}  // namespace dynview
