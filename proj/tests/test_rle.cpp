#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "segcap/rle.hpp"
#include "test_helpers.hpp"

using segcap::BBox;
using segcap::BinaryMask;
using segcap::Bitmap;
using segcap::Error;
using segcap::ErrorKind;

namespace {

std::string testdata_path(const char* name) {
  const char* root = std::getenv("SEGCAP_TESTDATA");
  REQUIRE_MESSAGE(root != nullptr, "SEGCAP_TESTDATA must point at testdata/");
  return std::string(root) + "/" + name;
}

}  // namespace

TEST_CASE("encode: point examples") {
  SUBCASE("all-false 4x4") {
    Bitmap g(4, 4);
    CHECK(BinaryMask::encode(g).counts() == std::vector<std::uint64_t>{16});
  }
  SUBCASE("first column true") {
    Bitmap g(4, 4);
    for (int r = 0; r < 4; ++r) g.set(r, 0, true);
    CHECK(BinaryMask::encode(g).counts() ==
          std::vector<std::uint64_t>{0, 4, 12});
  }
  SUBCASE("1x1 true") {
    Bitmap g(1, 1);
    g.set(0, 0, true);
    CHECK(BinaryMask::encode(g).counts() == std::vector<std::uint64_t>{0, 1});
  }
}

TEST_CASE("decode: point examples and corrupt input") {
  auto mask = BinaryMask::from_counts(4, 4, {16});
  CHECK(mask.decode() == Bitmap(4, 4));

  auto col = BinaryMask::from_counts(4, 4, {0, 4, 12});
  Bitmap expect(4, 4);
  for (int r = 0; r < 4; ++r) expect.set(r, 0, true);
  CHECK(col.decode() == expect);

  CHECK_THROWS_WITH_AS(BinaryMask::from_counts(4, 4, {15}), doctest::Contains("15"),
                       Error);
  try {
    BinaryMask::from_counts(4, 4, {15});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptRle);
  }
}

TEST_CASE("from_counts canonicalizes interior and trailing zero runs") {
  auto a = BinaryMask::from_counts(4, 4, {3, 0, 4, 1, 8});
  CHECK(a.counts() == std::vector<std::uint64_t>{7, 1, 8});
  auto b = BinaryMask::from_counts(4, 4, {3, 1, 12, 0});
  CHECK(b.counts() == std::vector<std::uint64_t>{3, 1, 12});
  auto c = BinaryMask::from_counts(4, 4, {0, 0, 16});
  CHECK(c.counts() == std::vector<std::uint64_t>{16});
}

TEST_CASE("encode/decode roundtrip on random grids") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> dim(1, 64);
  for (int it = 0; it < 300; ++it) {
    const int h = dim(rng), w = dim(rng);
    auto grid = helpers::to_bitmap(helpers::random_grid(rng, h, w));
    auto mask = BinaryMask::encode(grid);
    CHECK(mask.decode() == grid);
    // canonical: no interior zeros
    const auto& counts = mask.counts();
    for (size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] != 0);
    std::uint64_t sum = 0;
    for (auto cnt : counts) sum += cnt;
    CHECK(sum == mask.num_pixels());
  }
}

TEST_CASE("area: point examples") {
  CHECK(BinaryMask::from_counts(4, 4, {16}).area() == 0);
  CHECK(BinaryMask::from_counts(4, 4, {0, 4, 12}).area() == 4);
  CHECK(BinaryMask::from_counts(4, 4, {0, 16}).area() == 16);
}

TEST_CASE("compressed string: golden fixtures") {
  std::ifstream in(testdata_path("rle_golden.json"));
  REQUIRE(in.good());
  nlohmann::json doc;
  in >> doc;
  REQUIRE(doc["cases"].size() >= 30);
  for (const auto& entry : doc["cases"]) {
    const auto counts = entry["counts"].get<std::vector<std::uint64_t>>();
    const auto text = entry["compressed"].get<std::string>();
    const auto h = entry["height"].get<std::uint32_t>();
    const auto w = entry["width"].get<std::uint32_t>();
    CHECK(segcap::compress_counts(counts) == text);
    CHECK(segcap::decompress_counts(text, h, w) == counts);
  }
}

TEST_CASE("compressed string: frozen empty-mask value") {
  CHECK(segcap::compress_counts({16}) == "`0");
  CHECK(segcap::decompress_counts("`0", 4, 4) ==
        std::vector<std::uint64_t>{16});
}

TEST_CASE("compress/decompress roundtrip on random masks") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> dim(1, 64);
  for (int it = 0; it < 1000; ++it) {
    const int h = dim(rng), w = dim(rng);
    auto mask = helpers::mask_of(helpers::random_grid(rng, h, w));
    const auto text = segcap::compress_counts(mask.counts());
    CHECK(segcap::decompress_counts(text, h, w) == mask.counts());
  }
}

TEST_CASE("decompress: degenerate and corrupt inputs") {
  CHECK(segcap::decompress_counts("", 0, 0).empty());

  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  // '!' (33) is below the 48-offset alphabet
  CHECK(kind_of([] { segcap::decompress_counts("!", 4, 4); }) ==
        ErrorKind::CorruptRle);
  // continuation flag set on the final character
  CHECK(kind_of([] { segcap::decompress_counts("p", 4, 4); }) ==
        ErrorKind::CorruptRle);
  // valid stream, wrong pixel total
  CHECK(kind_of([] { segcap::decompress_counts("`0", 4, 5); }) ==
        ErrorKind::CorruptRle);
}

TEST_CASE("intersection_area: block examples") {
  // 10x10; A = rows 0-1 x cols 0-1, B = rows 0-3 x cols 0-1
  auto a = helpers::mask_of(helpers::rect_grid(10, 10, 0, 1, 0, 1));
  auto b = helpers::mask_of(helpers::rect_grid(10, 10, 0, 3, 0, 1));
  CHECK(segcap::intersection_area(a, a) == 4);
  CHECK(segcap::intersection_area(a, b) == 4);

  oracle::Grid comp(10, 10);
  for (auto& p : comp.px) p = 1;
  for (int r = 0; r <= 1; ++r)
    for (int c = 0; c <= 1; ++c) comp.at(r, c) = 0;
  CHECK(segcap::intersection_area(a, helpers::mask_of(comp)) == 0);

  auto other = helpers::mask_of(helpers::rect_grid(8, 8, 0, 1, 0, 1));
  CHECK_THROWS_AS(segcap::intersection_area(a, other), Error);
}

TEST_CASE("iou: block examples and conventions") {
  auto a = helpers::mask_of(helpers::rect_grid(10, 10, 0, 1, 0, 1));
  auto b = helpers::mask_of(helpers::rect_grid(10, 10, 0, 3, 0, 1));
  CHECK(segcap::iou(a, a) == doctest::Approx(1.0));
  CHECK(segcap::iou(a, b) == doctest::Approx(0.5));
  auto empty = BinaryMask::from_counts(10, 10, {100});
  CHECK(segcap::iou(empty, empty) == doctest::Approx(1.0));
}

TEST_CASE("containment_ratio: subset, identity, disjoint, empty") {
  auto a = helpers::mask_of(helpers::rect_grid(10, 10, 0, 1, 0, 1));
  auto b = helpers::mask_of(helpers::rect_grid(10, 10, 0, 3, 0, 1));
  auto c = helpers::mask_of(helpers::rect_grid(10, 10, 5, 9, 5, 9));
  CHECK(segcap::containment_ratio(a, a) == doctest::Approx(1.0));
  CHECK(segcap::containment_ratio(a, b) == doctest::Approx(1.0));
  CHECK(segcap::containment_ratio(a, c) == doctest::Approx(0.0));
  auto empty = BinaryMask::from_counts(10, 10, {100});
  CHECK(segcap::containment_ratio(empty, a) == doctest::Approx(0.0));
}

TEST_CASE("union_masks: identity, disjoint additivity, overlap") {
  auto a = helpers::mask_of(helpers::rect_grid(10, 10, 0, 1, 0, 1));
  auto b = helpers::mask_of(helpers::rect_grid(10, 10, 0, 3, 0, 1));
  auto c = helpers::mask_of(helpers::rect_grid(10, 10, 5, 9, 5, 9));

  std::vector<BinaryMask> just_a{a};
  CHECK(segcap::union_masks(just_a) == a);

  std::vector<BinaryMask> ac{a, c};
  CHECK(segcap::union_masks(ac).area() == a.area() + c.area());

  std::vector<BinaryMask> ab{a, b};
  CHECK(segcap::union_masks(ab).area() == 8);

  CHECK_THROWS_AS(segcap::union_masks(std::span<const BinaryMask>{}), Error);
}

TEST_CASE("set algebra matches the bitmap oracle on random pairs") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> dim(1, 48);
  for (int it = 0; it < 200; ++it) {
    const int h = dim(rng), w = dim(rng);
    auto ga = helpers::random_grid(rng, h, w);
    auto gb = helpers::random_grid(rng, h, w);
    auto ma = helpers::mask_of(ga);
    auto mb = helpers::mask_of(gb);

    CHECK(ma.area() == oracle::area(ga));
    CHECK(segcap::intersection_area(ma, mb) == oracle::intersection(ga, gb));
    CHECK(segcap::iou(ma, mb) == doctest::Approx(oracle::iou(ga, gb)).epsilon(1e-12));
    CHECK(segcap::iou(ma, mb) == doctest::Approx(segcap::iou(mb, ma)).epsilon(1e-12));
    CHECK(segcap::containment_ratio(ma, mb) ==
          doctest::Approx(oracle::containment(ga, gb)).epsilon(1e-12));

    std::vector<BinaryMask> both{ma, mb};
    auto u = segcap::union_masks(both);
    CHECK(u.area() == oracle::union_area(ga, gb));
    CHECK(u.area() == ma.area() + mb.area() - segcap::intersection_area(ma, mb));
    CHECK(helpers::to_grid(u.decode()).px == oracle::union_of({ga, gb}).px);
  }
}

TEST_CASE("containment_ratio is 1 iff inner is a subset") {
  std::mt19937 rng(31);
  for (int it = 0; it < 100; ++it) {
    auto ga = helpers::random_grid(rng, 16, 16);
    auto gb = helpers::random_grid(rng, 16, 16);
    auto ma = helpers::mask_of(ga);
    auto mb = helpers::mask_of(gb);
    if (ma.empty()) continue;
    const bool subset =
        segcap::intersection_area(ma, mb) == ma.area();
    CHECK((segcap::containment_ratio(ma, mb) == 1.0) == subset);
  }
}

TEST_CASE("bbox: tight box and empty mask") {
  auto a = helpers::mask_of(helpers::rect_grid(10, 10, 2, 5, 3, 7));
  auto box = a.bbox();
  REQUIRE(box.has_value());
  CHECK(*box == BBox{3, 2, 5, 4});

  auto empty = BinaryMask::from_counts(10, 10, {100});
  CHECK_FALSE(empty.bbox().has_value());

  // full mask
  auto full = BinaryMask::from_counts(3, 5, {0, 15});
  CHECK(*full.bbox() == BBox{0, 0, 5, 3});

  // random grids: bbox equals scan-derived bounds
  std::mt19937 rng(41);
  for (int it = 0; it < 100; ++it) {
    auto g = helpers::random_grid(rng, 20, 20);
    auto m = helpers::mask_of(g);
    int minr = 20, maxr = -1, minc = 20, maxc = -1;
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c)
        if (g.at(r, c)) {
          minr = std::min(minr, r);
          maxr = std::max(maxr, r);
          minc = std::min(minc, c);
          maxc = std::max(maxc, c);
        }
    auto bb = m.bbox();
    if (maxr < 0) {
      CHECK_FALSE(bb.has_value());
    } else {
      REQUIRE(bb.has_value());
      CHECK(*bb == BBox{static_cast<std::uint32_t>(minc),
                        static_cast<std::uint32_t>(minr),
                        static_cast<std::uint32_t>(maxc - minc + 1),
                        static_cast<std::uint32_t>(maxr - minr + 1)});
    }
  }
}
