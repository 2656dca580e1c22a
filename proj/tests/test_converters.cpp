#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "segcap/converters.hpp"
#include "segcap/errors.hpp"
#include "test_helpers.hpp"

using helpers::mask_of;
using helpers::rect_grid;
using namespace segcap;

namespace {

ImageMeta meta10() {
  ImageMeta m;
  m.image_id = "img";
  m.image_path = "/data/img.jpg";
  m.height = 10;
  m.width = 10;
  return m;
}

const TemplatePool& tpl() {
  static const TemplatePool t = TemplatePool::defaults();
  return t;
}

std::set<std::string> store_of(const ConvertedImage& c) {
  std::set<std::string> ids;
  for (const auto& [id, mask] : c.masks) ids.insert(id);
  return ids;
}

}  // namespace

TEST_CASE("join_list uses commas with a final and") {
  CHECK(join_list({}) == "");
  CHECK(join_list({"a"}) == "a");
  CHECK(join_list({"a", "b"}) == "a, and b");
  CHECK(join_list({"a", "b", "c"}) == "a, b, and c");
}

TEST_CASE("from_referring grounds one expression per referent") {
  const auto c = from_referring(
      meta10(),
      {{"sky", mask_of(rect_grid(10, 10, 0, 4, 0, 9))},
       {"sea", mask_of(rect_grid(10, 10, 5, 9, 0, 9))}},
      tpl());
  REQUIRE(c.samples.size() == 1);
  const auto& s = c.samples[0];
  CHECK(s.granularity == Granularity::kReferring);
  CHECK(s.instruction == "<IMAGE> Please segment the sky, and sea.");
  CHECK(s.response.raw_text ==
        "Sure, <p> sky </p> [SEG], and <p> sea </p> [SEG].");
  CHECK(s.seg_bindings == std::vector<std::string>{"m0", "m1"});
  CHECK(validate_sample(s, store_of(c)).ok());
}

TEST_CASE("a single referent matches the canonical example") {
  const auto c = from_referring(
      meta10(), {{"dog", mask_of(rect_grid(10, 10, 2, 5, 2, 5))}}, tpl());
  CHECK(c.samples[0].instruction == "<IMAGE> Please segment the dog.");
  CHECK(c.samples[0].response.raw_text == "Sure, <p> dog </p> [SEG].");
  CHECK(c.samples[0].response.plain_text == "Sure, dog.");
}

TEST_CASE("an empty referent list states absence with zero spans") {
  const auto c = from_referring(meta10(), {}, tpl());
  REQUIRE(c.samples.size() == 1);
  const auto& s = c.samples[0];
  CHECK(s.granularity == Granularity::kReferring);
  CHECK(s.response.raw_text == "There is no target to segment.");
  CHECK(s.response.spans.empty());
  CHECK(s.seg_bindings.empty());
  CHECK(c.masks.empty());
  CHECK(validate_sample(s, {}).ok());
}

TEST_CASE("referring rejects masks of the wrong size") {
  CHECK_THROWS_AS(
      from_referring(meta10(), {{"dog", mask_of(rect_grid(9, 10, 0, 1, 0, 1))}},
                     tpl()),
      Error);
}

TEST_CASE("from_panoptic orders segments by area descending") {
  const auto small = mask_of(rect_grid(10, 10, 0, 0, 0, 4));   // 5 px
  const auto large = mask_of(rect_grid(10, 10, 5, 9, 0, 3));   // 20 px
  const auto medium = mask_of(rect_grid(10, 10, 0, 1, 5, 9));  // 10 px
  const auto c = from_panoptic(
      meta10(), {{"grass", small}, {"sky", large}, {"road", medium}}, tpl());
  REQUIRE(c.samples.size() == 1);
  const auto& s = c.samples[0];
  CHECK(s.granularity == Granularity::kPanoptic);
  CHECK(s.seg_bindings == std::vector<std::string>{"m1", "m2", "m0"});
  REQUIRE(s.response.spans.size() == 3);
  CHECK(s.response.spans[0].text == "sky");
  CHECK(s.response.spans[1].text == "road");
  CHECK(s.response.spans[2].text == "grass");
  CHECK(validate_sample(s, store_of(c)).ok());

  // The mask store preserves input order and content.
  CHECK(c.masks[0].second == small);
  CHECK(c.masks[1].second == large);
  CHECK(c.masks[2].second == medium);
}

TEST_CASE("duplicate panoptic labels stay separate spans") {
  const auto a = mask_of(rect_grid(10, 10, 0, 1, 0, 1));
  const auto b = mask_of(rect_grid(10, 10, 5, 6, 5, 6));
  const auto c = from_panoptic(meta10(), {{"car", a}, {"car", b}}, tpl());
  REQUIRE(c.samples[0].response.spans.size() == 2);
  CHECK(c.samples[0].response.spans[0].text == "car");
  CHECK(c.samples[0].response.spans[1].text == "car");
  CHECK(store_of(c).size() == 2);
}

TEST_CASE("an empty panoptic annotation is an error") {
  CHECK_THROWS_AS(from_panoptic(meta10(), {}, tpl()), Error);
  try {
    from_panoptic(meta10(), {}, tpl());
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyPanoptic);
  }
}

TEST_CASE("from_gcg wraps grounded ranges in place") {
  const std::string caption = "A dog chases a ball.";
  const auto dog = mask_of(rect_grid(10, 10, 0, 4, 0, 4));
  const auto ball = mask_of(rect_grid(10, 10, 6, 8, 6, 8));
  const auto c =
      from_gcg(meta10(), caption, {{2, 5, dog}, {15, 19, ball}}, tpl());
  REQUIRE(c.samples.size() == 1);
  const auto& s = c.samples[0];
  CHECK(s.granularity == Granularity::kPanoptic);
  CHECK(s.response.raw_text ==
        "A <p> dog </p> [SEG] chases a <p> ball </p> [SEG].");
  CHECK(s.response.plain_text == caption);
  CHECK(s.seg_bindings == std::vector<std::string>{"m0", "m1"});
  CHECK(validate_sample(s, store_of(c)).ok());
}

TEST_CASE("gcg grounding order follows the text, ids follow the input") {
  const std::string caption = "A dog chases a ball.";
  const auto dog = mask_of(rect_grid(10, 10, 0, 4, 0, 4));
  const auto ball = mask_of(rect_grid(10, 10, 6, 8, 6, 8));
  // Ball listed first: it gets id m0 but binds second.
  const auto c =
      from_gcg(meta10(), caption, {{15, 19, ball}, {2, 5, dog}}, tpl());
  CHECK(c.samples[0].response.raw_text ==
        "A <p> dog </p> [SEG] chases a <p> ball </p> [SEG].");
  CHECK(c.samples[0].seg_bindings == std::vector<std::string>{"m1", "m0"});
  CHECK(c.masks[0].second == ball);
  CHECK(c.masks[1].second == dog);
}

TEST_CASE("gcg range edges shed whitespace into the surrounding text") {
  const std::string caption = "A dog runs.";
  const auto m = mask_of(rect_grid(10, 10, 0, 1, 0, 1));
  const auto tight = from_gcg(meta10(), caption, {{2, 5, m}}, tpl());
  const auto padded = from_gcg(meta10(), caption, {{1, 6, m}}, tpl());
  CHECK(tight.samples[0].response.raw_text ==
        padded.samples[0].response.raw_text);
  CHECK(padded.samples[0].response.raw_text ==
        "A <p> dog </p> [SEG] runs.");
}

TEST_CASE("gcg without groundings is a plain caption") {
  const auto c = from_gcg(meta10(), "Just a scene.", {}, tpl());
  const auto& s = c.samples[0];
  CHECK(s.granularity == Granularity::kCaptionOnly);
  CHECK(s.response.raw_text == "Just a scene.");
  CHECK(s.response.spans.empty());
  CHECK(c.masks.empty());
}

TEST_CASE("gcg rejects bad ranges") {
  const auto m = mask_of(rect_grid(10, 10, 0, 1, 0, 1));
  CHECK_THROWS_AS(from_gcg(meta10(), "short", {{2, 99, m}}, tpl()), Error);
  CHECK_THROWS_AS(from_gcg(meta10(), "short", {{3, 3, m}}, tpl()), Error);
  try {
    from_gcg(meta10(), "overlap here", {{0, 7, m}, {4, 11, m}}, tpl());
    FAIL("expected OverlappingRanges");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OverlappingRanges);
  }
  // Adjacent ranges are fine.
  CHECK_NOTHROW(from_gcg(meta10(), "ab", {{0, 1, m}, {1, 2, m}}, tpl()));
}

namespace {

MaskTree abc_tree() {
  std::vector<MaskRecord> recs;
  recs.push_back(MaskRecord::make("A", mask_of(rect_grid(10, 10, 0, 9, 0, 4)),
                                  "wall", "the left wall"));
  recs.push_back(MaskRecord::make("B", mask_of(rect_grid(10, 10, 0, 1, 0, 1)),
                                  "outlet", "a power outlet"));
  recs.push_back(MaskRecord::make("C", mask_of(rect_grid(10, 10, 5, 9, 5, 9)),
                                  "rug", "a woven rug"));
  ImageMeta meta;
  meta.image_id = "img";
  meta.image_path = "/data/img.jpg";
  meta.height = 10;
  meta.width = 10;
  return build_tree(meta, std::move(recs), 0.9);
}

}  // namespace

TEST_CASE("from_mask_tree emits panoptic plus fine-grained samples") {
  const auto tree = abc_tree();
  const auto samples = from_mask_tree(tree, tpl());
  REQUIRE(samples.size() == 2);

  const auto& pano = samples[0];
  CHECK(pano.granularity == Granularity::kPanoptic);
  CHECK_FALSE(pano.target_node.has_value());
  CHECK(pano.seg_bindings == std::vector<std::string>{"A", "C"});
  REQUIRE(pano.response.spans.size() == 2);
  CHECK(pano.response.spans[0].text == "wall");
  CHECK(pano.response.spans[1].text == "rug");

  const auto& fine = samples[1];
  CHECK(fine.granularity == Granularity::kFineGrained);
  CHECK(fine.target_node == "A");
  CHECK(fine.seg_bindings == std::vector<std::string>{"B"});
  CHECK(fine.instruction ==
        "<IMAGE> Please describe the wall in detail, segmenting each part.");
  CHECK(fine.response.raw_text ==
        "The wall consists of <p> outlet </p> [SEG].");

  std::set<std::string> store = {"A", "B", "C"};
  for (const auto& s : samples) CHECK(validate_sample(s, store).ok());
}

TEST_CASE("flat trees produce only the panoptic sample") {
  std::vector<MaskRecord> recs;
  recs.push_back(MaskRecord::make("L", mask_of(rect_grid(6, 12, 1, 4, 1, 4)),
                                  "lamp", ""));
  recs.push_back(MaskRecord::make("R", mask_of(rect_grid(6, 12, 1, 4, 7, 10)),
                                  "desk", ""));
  ImageMeta meta;
  meta.image_id = "img";
  meta.height = 6;
  meta.width = 12;
  const auto tree = build_tree(meta, std::move(recs), 0.9);
  const auto samples = from_mask_tree(tree, tpl());
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].granularity == Granularity::kPanoptic);
  CHECK(samples[0].seg_bindings == std::vector<std::string>{"L", "R"});
}

TEST_CASE("an empty tree yields no samples") {
  ImageMeta meta;
  meta.image_id = "img";
  meta.height = 4;
  meta.width = 4;
  const auto tree = build_tree(meta, {}, 0.9);
  CHECK(from_mask_tree(tree, tpl()).empty());
}

TEST_CASE("unlabeled nodes fall back to their ids as phrases") {
  std::vector<MaskRecord> recs;
  recs.push_back(
      MaskRecord::make("solo", mask_of(rect_grid(4, 4, 0, 2, 0, 2))));
  ImageMeta meta;
  meta.image_id = "img";
  meta.height = 4;
  meta.width = 4;
  const auto tree = build_tree(meta, std::move(recs), 0.9);
  const auto samples = from_mask_tree(tree, tpl());
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].response.spans[0].text == "solo");
  CHECK(validate_sample(samples[0], {"solo"}).ok());
}

TEST_CASE("converted images assemble into valid documents") {
  const auto c = from_referring(
      meta10(),
      {{"sky", mask_of(rect_grid(10, 10, 0, 4, 0, 9))},
       {"sea", mask_of(rect_grid(10, 10, 5, 9, 0, 9))}},
      tpl());
  const auto doc = to_document(c);
  CHECK(doc.image_id == "img");
  CHECK(doc.height == 10);
  REQUIRE(doc.masks.size() == 2);
  REQUIRE(doc.conversations.size() == 1);
  CHECK(validate_document(doc).empty());
}

TEST_CASE("trees assemble into valid documents") {
  const auto tree = abc_tree();
  ImageMeta meta;
  meta.image_id = tree.image_id();
  meta.image_path = "/data/img.jpg";
  meta.height = tree.height();
  meta.width = tree.width();
  const auto doc = to_document(meta, tree, from_mask_tree(tree, tpl()));
  CHECK(doc.masks.size() == 3);
  CHECK(doc.tree_parent.at("B") == "A");
  CHECK(doc.conversations.size() == 2);
  CHECK(validate_document(doc).empty());

  // Documents keep the captions from the tree nodes.
  const auto& wall = *std::find_if(doc.masks.begin(), doc.masks.end(),
                                   [](const MaskEntry& m) { return m.id == "A"; });
  CHECK(wall.short_caption == "wall");
  CHECK(wall.detailed_caption == "the left wall");
}

TEST_CASE("template pools load overrides from json") {
  const auto dir = std::filesystem::temp_directory_path() / "segcap_io_tests";
  std::filesystem::create_directories(dir);
  const auto path = dir / "templates.json";
  {
    std::ofstream out(path);
    out << R"({"referring_instruction": ["Find the {list}!"]})";
  }
  const auto pool = load_template_pool(path.string());
  CHECK(pool.referring_instruction ==
        std::vector<std::string>{"Find the {list}!"});
  CHECK(pool.panoptic_instruction ==
        TemplatePool::defaults().panoptic_instruction);

  const auto c = from_referring(
      meta10(), {{"dog", mask_of(rect_grid(10, 10, 2, 5, 2, 5))}}, pool);
  CHECK(c.samples[0].instruction == "<IMAGE> Find the dog!");
}

TEST_CASE("template pool files are checked") {
  const auto dir = std::filesystem::temp_directory_path() / "segcap_io_tests";
  std::filesystem::create_directories(dir);
  const auto bad = dir / "bad_templates.json";
  {
    std::ofstream out(bad);
    out << R"({"referring_instruction": []})";
  }
  CHECK_THROWS_AS(load_template_pool(bad.string()), Error);
  {
    std::ofstream out(bad);
    out << R"({"referring_instruction": [3]})";
  }
  CHECK_THROWS_AS(load_template_pool(bad.string()), Error);
  {
    std::ofstream out(bad);
    out << "not json";
  }
  CHECK_THROWS_AS(load_template_pool(bad.string()), Error);
  CHECK_THROWS_AS(load_template_pool((dir / "missing.json").string()), Error);
}
