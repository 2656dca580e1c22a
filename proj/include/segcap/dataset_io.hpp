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
//
// Line-delimited file schemas: dataset documents (one image per line),
// pipeline manifests, and prediction files. Serialization is byte
// deterministic: object keys are emitted sorted and numbers are integers.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "segcap/mask_tree.hpp"
#include "segcap/rle.hpp"
#include "segcap/uscdf.hpp"

namespace segcap {

inline constexpr std::string_view kSchemaVersion = "1";

struct MaskEntry {
  std::string id;
  BinaryMask mask;
  std::string short_caption;
  std::string detailed_caption;

  friend bool operator==(const MaskEntry&, const MaskEntry&) = default;
};

struct Conversation {
  Granularity granularity = Granularity::kCaptionOnly;
  std::optional<std::string> target_node;
  std::string user;
  std::string assistant;  // grounded raw_text
  std::vector<std::string> seg_bindings;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct DatasetDocument {
  std::string image_id;
  std::string image_path;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<MaskEntry> masks;
  std::map<std::string, std::string> tree_parent;
  std::map<std::string, std::vector<std::string>> tree_merged_from;
  std::vector<Conversation> conversations;

  friend bool operator==(const DatasetDocument&,
                         const DatasetDocument&) = default;
};

// RLE interchange record: {"size": [h, w], "counts": ...} where counts is
// either the compressed string form or a plain integer array.
nlohmann::json rle_to_json(const BinaryMask& mask);
BinaryMask rle_from_json(const nlohmann::json& j);  // throws SchemaError

nlohmann::json document_to_json(const DatasetDocument& doc);
DatasetDocument document_from_json(const nlohmann::json& j);

std::vector<DatasetDocument> read_documents(const std::string& path);
void write_documents(const std::string& path,
                     const std::vector<DatasetDocument>& docs);

// Violations as human-readable strings; empty means the document is valid.
std::vector<std::string> validate_document(const DatasetDocument& doc);

struct DatasetStats {
  std::uint64_t images = 0;
  std::uint64_t conversations = 0;
  std::uint64_t masks = 0;
  std::uint64_t tokens = 0;  // whitespace tokens over user + assistant text
  std::map<std::string, std::uint64_t> by_granularity;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

DatasetStats compute_stats(const std::vector<DatasetDocument>& docs);
std::uint64_t count_whitespace_tokens(std::string_view text);

// --- pipeline manifest -------------------------------------------------------

// One line per image: {"image_id", "image_path", "masks": [rle | {"id",
// "rle"}]}. Bare RLE entries get ids "m0", "m1", ...; image dimensions come
// from the RLE records themselves.
struct ManifestEntry {
  std::string image_id;
  std::string image_path;
  std::vector<std::pair<std::string, BinaryMask>> masks;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// --- prediction files --------------------------------------------------------

// One line per image: {"image_id", "pairs": [{"phrase", "score", "rle"}],
// "caption"}. A missing score defaults to 1.0.
struct PredPairRecord {
  std::string phrase;
  double score = 1.0;
  BinaryMask mask;
};

struct PredDocument {
  std::string image_id;
  std::vector<PredPairRecord> pairs;
  std::string caption;
};

std::vector<PredDocument> read_predictions(const std::string& path);
void write_predictions(const std::string& path,
                       const std::vector<PredDocument>& docs);

}  // namespace segcap
