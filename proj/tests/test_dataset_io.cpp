#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "segcap/dataset_io.hpp"
#include "segcap/errors.hpp"
#include "test_helpers.hpp"

using helpers::mask_of;
using helpers::rect_grid;
using nlohmann::json;
using namespace segcap;

namespace {

std::filesystem::path scratch_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "segcap_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

DatasetDocument example_document() {
  DatasetDocument doc;
  doc.image_id = "img-1";
  doc.image_path = "/data/img-1.jpg";
  doc.height = 10;
  doc.width = 10;

  MaskEntry wall;
  wall.id = "m0";
  wall.mask = mask_of(rect_grid(10, 10, 0, 9, 0, 4));
  wall.short_caption = "wall";
  wall.detailed_caption = "a painted wall filling the left half";
  MaskEntry outlet;
  outlet.id = "m1";
  outlet.mask = mask_of(rect_grid(10, 10, 0, 1, 0, 1));
  outlet.short_caption = "outlet";
  outlet.detailed_caption = "a small power outlet on the wall";
  doc.masks = {wall, outlet};

  doc.tree_parent = {{"m0", std::string(kRootId)}, {"m1", "m0"}};

  Conversation pano;
  pano.granularity = Granularity::kPanoptic;
  pano.user = "<IMAGE> Please segment all objects in the image.";
  pano.assistant = "Sure, <p> wall </p> [SEG].";
  pano.seg_bindings = {"m0"};

  Conversation fine;
  fine.granularity = Granularity::kFineGrained;
  fine.target_node = "m0";
  fine.user = "<IMAGE> Describe the wall in detail.";
  fine.assistant = "It holds <p> outlet </p> [SEG].";
  fine.seg_bindings = {"m1"};

  doc.conversations = {pano, fine};
  return doc;
}

}  // namespace

TEST_CASE("rle json roundtrips through the string form") {
  const auto mask = mask_of(rect_grid(6, 7, 1, 4, 2, 5));
  const json j = rle_to_json(mask);
  CHECK(j.at("size") == json::array({6, 7}));
  CHECK(j.at("counts").is_string());
  CHECK(rle_from_json(j) == mask);
}

TEST_CASE("rle json accepts the integer array form") {
  const auto mask = BinaryMask::from_counts(4, 4, {0, 4, 12});
  json j;
  j["size"] = {4, 4};
  j["counts"] = {0, 4, 12};
  CHECK(rle_from_json(j) == mask);
  // Both forms decode to the same mask.
  CHECK(rle_from_json(rle_to_json(mask)) == mask);
}

TEST_CASE("rle json rejects malformed records") {
  CHECK_THROWS_AS(rle_from_json(json::parse("{}")), Error);
  CHECK_THROWS_AS(rle_from_json(json::parse(R"({"size":[4],"counts":"0"})")),
                  Error);
  CHECK_THROWS_AS(
      rle_from_json(json::parse(R"({"size":[4,4],"counts":true})")), Error);
  CHECK_THROWS_AS(
      rle_from_json(json::parse(R"({"size":[4,4],"counts":[1,2]})")), Error);
  CHECK_THROWS_AS(
      rle_from_json(json::parse(R"({"size":[4,4],"counts":[-1,17]})")), Error);
}

TEST_CASE("documents roundtrip through json") {
  const auto doc = example_document();
  const json j = document_to_json(doc);
  CHECK(j.at("schema_version") == "1");
  CHECK(document_from_json(j) == doc);

  // Serialization is byte deterministic.
  const std::string once = j.dump();
  const std::string twice = document_to_json(document_from_json(j)).dump();
  CHECK(once == twice);
}

TEST_CASE("documents without optional target_node roundtrip") {
  auto doc = example_document();
  doc.conversations.pop_back();
  const json j = document_to_json(doc);
  CHECK_FALSE(j.at("conversations")[0].contains("target_node"));
  CHECK(document_from_json(j) == doc);
}

TEST_CASE("schema version is enforced") {
  json j = document_to_json(example_document());
  j["schema_version"] = "0";
  CHECK_THROWS_AS(document_from_json(j), Error);
  j.erase("schema_version");
  CHECK_THROWS_AS(document_from_json(j), Error);
}

TEST_CASE("document files roundtrip") {
  const auto path = scratch_file("docs.jsonl");
  std::vector<DatasetDocument> docs = {example_document(), example_document()};
  docs[1].image_id = "img-2";
  write_documents(path.string(), docs);
  CHECK(read_documents(path.string()) == docs);

  // Rewriting produces the identical file.
  const auto path2 = scratch_file("docs2.jsonl");
  write_documents(path2.string(), read_documents(path.string()));
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
}

TEST_CASE("reader reports the offending line") {
  const auto path = scratch_file("broken.jsonl");
  {
    std::ofstream out(path, std::ios::binary);
    out << document_to_json(example_document()).dump() << "\n";
    out << "{not json}\n";
  }
  try {
    read_documents(path.string());
    FAIL("expected SchemaError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SchemaError);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(read_documents("/nonexistent/nowhere.jsonl"), Error);
}

TEST_CASE("validate_document accepts the example") {
  CHECK(validate_document(example_document()).empty());
}

TEST_CASE("validate_document reports structural problems") {
  auto doc = example_document();
  doc.masks[1].id = "m0";
  auto v = validate_document(doc);
  CHECK_FALSE(v.empty());

  doc = example_document();
  doc.masks[0].mask = mask_of(rect_grid(9, 10, 0, 1, 0, 1));
  v = validate_document(doc);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].find("size") != std::string::npos);

  doc = example_document();
  doc.tree_parent["ghost"] = "m0";
  CHECK_FALSE(validate_document(doc).empty());

  doc = example_document();
  doc.tree_parent["m1"] = "ghost";
  CHECK_FALSE(validate_document(doc).empty());

  doc = example_document();
  doc.tree_merged_from["m0"] = {"m0"};
  CHECK_FALSE(validate_document(doc).empty());
}

TEST_CASE("validate_document reports conversation problems") {
  auto doc = example_document();
  doc.conversations[0].seg_bindings = {"mX"};
  auto v = validate_document(doc);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].find("dangling_mask_id") != std::string::npos);

  doc = example_document();
  doc.conversations[0].assistant = "Sure, <p> wall </p>.";
  v = validate_document(doc);
  REQUIRE_FALSE(v.empty());

  doc = example_document();
  doc.conversations[1].target_node = "ghost";
  CHECK_FALSE(validate_document(doc).empty());

  doc = example_document();
  doc.conversations[0].seg_bindings = {};
  v = validate_document(doc);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].find("binding_count_mismatch") != std::string::npos);
}

TEST_CASE("whitespace token counting") {
  CHECK(count_whitespace_tokens("") == 0);
  CHECK(count_whitespace_tokens("   ") == 0);
  CHECK(count_whitespace_tokens("one") == 1);
  CHECK(count_whitespace_tokens("a b  c") == 3);
  CHECK(count_whitespace_tokens(" leading and trailing ") == 3);
  CHECK(count_whitespace_tokens("tabs\tand\nnewlines") == 3);
}

TEST_CASE("stats recount the corpus") {
  std::vector<DatasetDocument> docs = {example_document(), example_document()};
  docs[1].image_id = "img-2";
  docs[1].conversations.pop_back();

  const auto s = compute_stats(docs);
  CHECK(s.images == 2);
  CHECK(s.masks == 4);
  CHECK(s.conversations == 3);
  CHECK(s.by_granularity.at("panoptic") == 2);
  CHECK(s.by_granularity.at("fine_grained") == 1);

  std::uint64_t tokens = 0;
  for (const auto& d : docs)
    for (const auto& c : d.conversations)
      tokens += count_whitespace_tokens(c.user) +
                count_whitespace_tokens(c.assistant);
  CHECK(s.tokens == tokens);
}

TEST_CASE("manifest entries accept bare and tagged masks") {
  const auto path = scratch_file("manifest.jsonl");
  const auto m0 = mask_of(rect_grid(4, 4, 0, 1, 0, 1));
  const auto m1 = mask_of(rect_grid(4, 4, 2, 3, 2, 3));
  {
    std::ofstream out(path, std::ios::binary);
    json j;
    j["image_id"] = "a";
    j["image_path"] = "/imgs/a.jpg";
    j["masks"] = json::array({rle_to_json(m0), {{"id", "roof"}, {"rle", rle_to_json(m1)}}});
    out << j.dump() << "\n";
  }
  const auto entries = read_manifest(path.string());
  REQUIRE(entries.size() == 1);
  REQUIRE(entries[0].masks.size() == 2);
  CHECK(entries[0].masks[0].first == "m0");
  CHECK(entries[0].masks[0].second == m0);
  CHECK(entries[0].masks[1].first == "roof");
  CHECK(entries[0].masks[1].second == m1);

  const auto path2 = scratch_file("manifest2.jsonl");
  write_manifest(path2.string(), entries);
  const auto again = read_manifest(path2.string());
  CHECK(again[0].masks == entries[0].masks);
  CHECK(again[0].image_id == "a");
}

TEST_CASE("prediction files roundtrip and default the score") {
  const auto path = scratch_file("preds.jsonl");
  const auto m = mask_of(rect_grid(4, 4, 0, 1, 0, 1));
  {
    std::ofstream out(path, std::ios::binary);
    json j;
    j["image_id"] = "a";
    j["pairs"] = json::array(
        {{{"phrase", "dog"}, {"rle", rle_to_json(m)}},
         {{"phrase", "cat"}, {"score", 0.25}, {"rle", rle_to_json(m)}}});
    out << j.dump() << "\n";
  }
  const auto preds = read_predictions(path.string());
  REQUIRE(preds.size() == 1);
  REQUIRE(preds[0].pairs.size() == 2);
  CHECK(preds[0].pairs[0].score == doctest::Approx(1.0));
  CHECK(preds[0].pairs[1].score == doctest::Approx(0.25));
  CHECK(preds[0].caption.empty());

  std::vector<PredDocument> docs = preds;
  docs[0].caption = "a dog and a cat";
  const auto path2 = scratch_file("preds2.jsonl");
  write_predictions(path2.string(), docs);
  const auto again = read_predictions(path2.string());
  CHECK(again[0].caption == "a dog and a cat");
  CHECK(again[0].pairs[1].phrase == "cat");
}

TEST_CASE("prediction scores must stay in range") {
  const auto path = scratch_file("badscore.jsonl");
  const auto m = mask_of(rect_grid(2, 2, 0, 0, 0, 0));
  {
    std::ofstream out(path, std::ios::binary);
    json j;
    j["image_id"] = "a";
    j["pairs"] =
        json::array({{{"phrase", "x"}, {"score", 1.5}, {"rle", rle_to_json(m)}}});
    out << j.dump() << "\n";
  }
  CHECK_THROWS_AS(read_predictions(path.string()), Error);
}
