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

#include "segcap/rle.hpp"

#include <algorithm>
#include <utility>

#include "segcap/simd_scan.hpp"

namespace segcap {

namespace {

// Walks the 1-runs of a mask as half-open [start, end) intervals of linear
// (column-major) pixel indices.
struct OneRunCursor {
  explicit OneRunCursor(const BinaryMask& mask) : counts(mask.counts()) {}

  const std::vector<std::uint64_t>& counts;
  std::size_t idx = 0;
  std::uint64_t pos = 0;

  bool next(std::uint64_t& start, std::uint64_t& end) {
    while (idx < counts.size()) {
      const std::uint64_t len = counts[idx];
      const bool ones = (idx % 2) == 1;
      ++idx;
      if (ones && len > 0) {
        start = pos;
        end = pos + len;
        pos = end;
        return true;
      }
      pos += len;
    }
    return false;
  }
};

std::vector<std::uint64_t> canonicalize(std::vector<std::uint64_t> counts) {
  // Runs carry an implicit bit from their index parity; merge zero-length
  // runs, then rebuild with the leading-0 convention.
  std::vector<std::pair<bool, std::uint64_t>> runs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const bool bit = (i % 2) == 1;
    const std::uint64_t len = counts[i];
    if (len == 0) continue;
    if (!runs.empty() && runs.back().first == bit) {
      runs.back().second += len;
    } else {
      runs.emplace_back(bit, len);
    }
  }
  std::vector<std::uint64_t> out;
  out.reserve(runs.size() + 1);
  bool expect = false;  // canonical sequence starts with a 0-run
  for (const auto& [bit, len] : runs) {
    if (bit != expect) {
      out.push_back(0);
      expect = bit;
    }
    out.push_back(len);
    expect = !expect;
  }
  return out;
}

}  // namespace

BinaryMask BinaryMask::from_counts(std::uint32_t height, std::uint32_t width,
                                   std::vector<std::uint64_t> counts) {
  BinaryMask mask;
  mask.height_ = height;
  mask.width_ = width;
  mask.counts_ = canonicalize(std::move(counts));
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < mask.counts_.size(); ++i) {
    total += mask.counts_[i];
    if (i % 2 == 1) mask.area_ += mask.counts_[i];
  }
  if (total != mask.num_pixels()) {
    throw Error(ErrorKind::CorruptRle,
                "counts cover " + std::to_string(total) + " pixels, expected " +
                    std::to_string(mask.num_pixels()));
  }
  return mask;
}

BinaryMask BinaryMask::encode(const Bitmap& grid) {
  BinaryMask mask;
  mask.height_ = grid.height();
  mask.width_ = grid.width();
  const auto bytes = grid.bytes();

  std::vector<std::uint64_t> runs;
  simd::scan_runs(bytes.data(), bytes.size(), runs);

  // Runs alternate in value starting with the first pixel; prepend a zero
  // 0-run when the mask starts with a 1-pixel.
  auto& counts = mask.counts_;
  counts.reserve(runs.size() + 1);
  const bool starts_set = !bytes.empty() && bytes[0] != 0;
  if (starts_set) counts.push_back(0);
  counts.insert(counts.end(), runs.begin(), runs.end());
  for (std::size_t i = 1; i < counts.size(); i += 2) mask.area_ += counts[i];
  return mask;
}

Bitmap BinaryMask::decode() const {
  std::uint64_t total = 0;
  for (const auto c : counts_) total += c;
  if (total != num_pixels()) {
    throw Error(ErrorKind::CorruptRle,
                "counts cover " + std::to_string(total) + " pixels, expected " +
                    std::to_string(num_pixels()));
  }
  Bitmap grid(height_, width_);
  auto bytes = grid.bytes();
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (i % 2 == 1) {
      std::fill(bytes.begin() + pos, bytes.begin() + pos + counts_[i], 1);
    }
    pos += counts_[i];
  }
  return grid;
}

std::optional<BBox> BinaryMask::bbox() const {
  if (empty()) return std::nullopt;
  const std::uint64_t h = height_;
  std::uint64_t min_row = h, max_row = 0, min_col = num_pixels(), max_col = 0;

  OneRunCursor cursor(*this);
  std::uint64_t start = 0, end = 0;
  while (cursor.next(start, end)) {
    const std::uint64_t col_s = start / h;
    const std::uint64_t col_e = (end - 1) / h;
    min_col = std::min(min_col, col_s);
    max_col = std::max(max_col, col_e);
    if (col_s == col_e) {
      min_row = std::min(min_row, start % h);
      max_row = std::max(max_row, (end - 1) % h);
    } else {
      // Spans a column boundary, so the full row range is covered.
      min_row = 0;
      max_row = h - 1;
    }
  }
  return BBox{static_cast<std::uint32_t>(min_col),
              static_cast<std::uint32_t>(min_row),
              static_cast<std::uint32_t>(max_col - min_col + 1),
              static_cast<std::uint32_t>(max_row - min_row + 1)};
}

std::string compress_counts(const std::vector<std::uint64_t>& counts) {
  std::string out;
  out.reserve(counts.size() * 2);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::int64_t x = static_cast<std::int64_t>(counts[i]);
    if (i > 2) x -= static_cast<std::int64_t>(counts[i - 2]);
    bool more = true;
    while (more) {
      int c = static_cast<int>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      out.push_back(static_cast<char>(c + 48));
    }
  }
  return out;
}

std::vector<std::uint64_t> decompress_counts(std::string_view text,
                                             std::uint32_t height,
                                             std::uint32_t width) {
  std::vector<std::uint64_t> counts;
  std::size_t p = 0;
  while (p < text.size()) {
    std::int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= text.size()) {
        throw Error(ErrorKind::CorruptRle, "truncated compressed stream");
      }
      const int c = static_cast<unsigned char>(text[p]) - 48;
      if (c < 0 || c > 63) {
        throw Error(ErrorKind::CorruptRle,
                    "character out of alphabet at offset " + std::to_string(p));
      }
      if (5 * k >= 64) {
        throw Error(ErrorKind::CorruptRle, "overlong compressed value");
      }
      x |= static_cast<std::int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (counts.size() > 2) {
      x += static_cast<std::int64_t>(counts[counts.size() - 2]);
    }
    if (x < 0) {
      throw Error(ErrorKind::CorruptRle, "negative count after delta");
    }
    counts.push_back(static_cast<std::uint64_t>(x));
  }
  std::uint64_t total = 0;
  for (const auto c : counts) total += c;
  const std::uint64_t expected =
      static_cast<std::uint64_t>(height) * width;
  if (total != expected) {
    throw Error(ErrorKind::CorruptRle,
                "counts cover " + std::to_string(total) + " pixels, expected " +
                    std::to_string(expected));
  }
  return counts;
}

namespace {

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                    " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
}

}  // namespace

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  OneRunCursor ca(a), cb(b);
  std::uint64_t as = 0, ae = 0, bs = 0, be = 0;
  bool have_a = ca.next(as, ae);
  bool have_b = cb.next(bs, be);
  std::uint64_t total = 0;
  while (have_a && have_b) {
    const std::uint64_t lo = std::max(as, bs);
    const std::uint64_t hi = std::min(ae, be);
    if (lo < hi) total += hi - lo;
    if (ae <= be) {
      have_a = ca.next(as, ae);
    } else {
      have_b = cb.next(bs, be);
    }
  }
  return total;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_area(a, b);
  const std::uint64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double containment_ratio(const BinaryMask& inner, const BinaryMask& outer) {
  const std::uint64_t denom = inner.area();
  if (denom == 0) return 0.0;
  const std::uint64_t inter = intersection_area(inner, outer);
  return static_cast<double>(inter) / static_cast<double>(denom);
}

BinaryMask union_masks(std::span<const BinaryMask> masks) {
  if (masks.empty()) {
    throw Error(ErrorKind::EmptyInput, "union of zero masks");
  }
  const std::uint32_t h = masks.front().height();
  const std::uint32_t w = masks.front().width();
  for (const auto& m : masks) require_same_dims(masks.front(), m);

  // Gather every 1-interval, then sweep-merge. Each mask's intervals are
  // already sorted, so a sort of the concatenation is O(R log R) in the
  // total run count.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> intervals;
  for (const auto& m : masks) {
    OneRunCursor cursor(m);
    std::uint64_t s = 0, e = 0;
    while (cursor.next(s, e)) intervals.emplace_back(s, e);
  }
  std::sort(intervals.begin(), intervals.end());

  std::vector<std::uint64_t> counts;
  std::uint64_t pos = 0;
  std::size_t i = 0;
  while (i < intervals.size()) {
    std::uint64_t s = intervals[i].first;
    std::uint64_t e = intervals[i].second;
    ++i;
    while (i < intervals.size() && intervals[i].first <= e) {
      e = std::max(e, intervals[i].second);
      ++i;
    }
    counts.push_back(s - pos);
    counts.push_back(e - s);
    pos = e;
  }
  const std::uint64_t total = static_cast<std::uint64_t>(h) * w;
  counts.push_back(total - pos);
  return BinaryMask::from_counts(h, w, std::move(counts));
}

}  // namespace segcap
