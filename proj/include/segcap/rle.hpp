// Copyright 2026 The segcap Authors.
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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segcap/errors.hpp"

namespace segcap {

// Tight bounding box in pixel coordinates. x/y is the top-left corner
// (x = column, y = row); w/h are at least 1.
struct BBox {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t w = 0;
  std::uint32_t h = 0;

  bool operator==(const BBox&) const = default;
};

// Dense 0/1 grid, stored column-major so a linear walk matches the RLE scan
// order. Used at mask construction boundaries and by test oracles; the set
// algebra below never materializes one.
class Bitmap {
 public:
  Bitmap(std::uint32_t height, std::uint32_t width)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width, 0) {}

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }

  bool at(std::uint32_t row, std::uint32_t col) const {
    return data_[static_cast<std::size_t>(col) * height_ + row] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool value) {
    data_[static_cast<std::size_t>(col) * height_ + row] = value ? 1 : 0;
  }

  // Column-major backing bytes (0 or 1), pixel (r, c) at index c*height + r.
  std::span<const std::uint8_t> bytes() const { return data_; }
  std::span<std::uint8_t> bytes() { return data_; }

  bool operator==(const Bitmap&) const = default;

 private:
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<std::uint8_t> data_;
};

// Run-length-encoded binary mask in column-major scan order. `counts`
// alternates runs of 0-pixels and 1-pixels starting with the 0-run; the
// canonical form has no interior zero counts and keeps a leading 0 only when
// the mask starts with a 1-pixel. Immutable after construction.
class BinaryMask {
 public:
  BinaryMask() = default;  // 0x0 placeholder; not a valid mask

  // Validates sum(counts) == height*width and canonicalizes zero runs.
  // Throws CorruptRle on mismatch.
  static BinaryMask from_counts(std::uint32_t height, std::uint32_t width,
                                std::vector<std::uint64_t> counts);

  static BinaryMask encode(const Bitmap& grid);

  Bitmap decode() const;

  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  // Number of 1-pixels; precomputed from the odd-indexed counts.
  std::uint64_t area() const { return area_; }
  bool empty() const { return area_ == 0; }

  std::uint64_t num_pixels() const {
    return static_cast<std::uint64_t>(height_) * width_;
  }

  // Tight bounding box of the 1-pixels; nullopt for an empty mask.
  std::optional<BBox> bbox() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::uint64_t area_ = 0;
  std::vector<std::uint64_t> counts_;
};

// --- compressed-string interchange -----------------------------------------
//
// The de-facto compressed RLE text form: counts delta-encoded against the
// count two positions back (from the third index on), each value emitted as a
// variable-length integer, 5 data bits per character plus a continuation flag
// in bit 5, low bits first, sign-extended on the final chunk, over the ASCII
// alphabet 48..111.

std::string compress_counts(const std::vector<std::uint64_t>& counts);

// Inverse of compress_counts. Throws CorruptRle on characters outside the
// alphabet, truncated streams, negative counts, or a total that does not
// cover height*width pixels.
std::vector<std::uint64_t> decompress_counts(std::string_view text,
                                             std::uint32_t height,
                                             std::uint32_t width);

// --- set algebra (runs directly on RLE, no decode) --------------------------

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);

// |A n B| / |A u B|; 1.0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

// |inner n outer| / |inner|; 0.0 when inner is empty.
double containment_ratio(const BinaryMask& inner, const BinaryMask& outer);

// Pixelwise OR of a nonempty sequence of same-size masks.
BinaryMask union_masks(std::span<const BinaryMask> masks);

}  // namespace segcap
