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

#include "segcap/dataset_io.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "segcap/errors.hpp"

namespace segcap {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& what) {
  throw Error(ErrorKind::SchemaError, what);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) schema_fail(std::string("missing field '") + key + "'");
  return *it;
}

std::string str_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) schema_fail(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t nonneg_int(const json& v, const char* what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  schema_fail(std::string(what) + " must be a nonnegative integer");
}

std::uint32_t uint_field(const json& j, const char* key) {
  return static_cast<std::uint32_t>(nonneg_int(field(j, key), key));
}

// Wraps a per-line parser into a JSONL reader with line diagnostics.
template <typename T, typename Fn>
std::vector<T> read_jsonl(const std::string& path, Fn parse_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SchemaError,
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      out.push_back(parse_line(j));
    } catch (const Error& e) {
      throw Error(e.kind(),
                  path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

template <typename T, typename Fn>
void write_jsonl(const std::string& path, const std::vector<T>& items,
                 Fn to_json_line) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path + " for writing");
  for (const T& item : items) {
    out << to_json_line(item).dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "short write to " + path);
}

}  // namespace

json rle_to_json(const BinaryMask& mask) {
  json j;
  j["size"] = {mask.height(), mask.width()};
  j["counts"] = compress_counts(mask.counts());
  return j;
}

BinaryMask rle_from_json(const json& j) {
  if (!j.is_object()) schema_fail("rle record must be an object");
  const json& size = field(j, "size");
  if (!size.is_array() || size.size() != 2) {
    schema_fail("rle 'size' must be [height, width]");
  }
  const auto h = static_cast<std::uint32_t>(nonneg_int(size[0], "height"));
  const auto w = static_cast<std::uint32_t>(nonneg_int(size[1], "width"));
  const json& counts = field(j, "counts");
  if (counts.is_string()) {
    return BinaryMask::from_counts(
        h, w, decompress_counts(counts.get<std::string>(), h, w));
  }
  if (counts.is_array()) {
    std::vector<std::uint64_t> c;
    c.reserve(counts.size());
    for (const json& v : counts) c.push_back(nonneg_int(v, "rle count"));
    return BinaryMask::from_counts(h, w, c);
  }
  schema_fail("rle 'counts' must be a string or an integer array");
}

json document_to_json(const DatasetDocument& doc) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["image_id"] = doc.image_id;
  j["image_path"] = doc.image_path;
  j["height"] = doc.height;
  j["width"] = doc.width;

  json masks = json::array();
  for (const auto& m : doc.masks) {
    json e;
    e["id"] = m.id;
    e["rle"] = rle_to_json(m.mask);
    e["short_caption"] = m.short_caption;
    e["detailed_caption"] = m.detailed_caption;
    masks.push_back(std::move(e));
  }
  j["masks"] = std::move(masks);

  j["tree"]["parent"] = doc.tree_parent;
  j["tree"]["merged_from"] = doc.tree_merged_from;

  json convs = json::array();
  for (const auto& c : doc.conversations) {
    json e;
    e["granularity"] = to_string(c.granularity);
    if (c.target_node) e["target_node"] = *c.target_node;
    e["user"] = c.user;
    e["assistant"] = c.assistant;
    e["seg_bindings"] = c.seg_bindings;
    convs.push_back(std::move(e));
  }
  j["conversations"] = std::move(convs);
  return j;
}

DatasetDocument document_from_json(const json& j) {
  if (!j.is_object()) schema_fail("document must be an object");
  const std::string version = str_field(j, "schema_version");
  if (version != kSchemaVersion) {
    schema_fail("unsupported schema_version '" + version + "'");
  }

  DatasetDocument doc;
  doc.image_id = str_field(j, "image_id");
  doc.image_path = str_field(j, "image_path");
  doc.height = uint_field(j, "height");
  doc.width = uint_field(j, "width");

  const json& masks = field(j, "masks");
  if (!masks.is_array()) schema_fail("'masks' must be an array");
  for (const json& e : masks) {
    MaskEntry m;
    m.id = str_field(e, "id");
    m.mask = rle_from_json(field(e, "rle"));
    m.short_caption = str_field(e, "short_caption");
    m.detailed_caption = str_field(e, "detailed_caption");
    doc.masks.push_back(std::move(m));
  }

  const json& tree = field(j, "tree");
  const json& parent = field(tree, "parent");
  if (!parent.is_object()) schema_fail("'tree.parent' must be an object");
  for (auto it = parent.begin(); it != parent.end(); ++it) {
    if (!it.value().is_string()) schema_fail("tree parent values must be strings");
    doc.tree_parent[it.key()] = it.value().get<std::string>();
  }
  const json& merged = field(tree, "merged_from");
  if (!merged.is_object()) schema_fail("'tree.merged_from' must be an object");
  for (auto it = merged.begin(); it != merged.end(); ++it) {
    if (!it.value().is_array()) schema_fail("merged_from values must be arrays");
    std::vector<std::string> ids;
    for (const json& v : it.value()) {
      if (!v.is_string()) schema_fail("merged_from ids must be strings");
      ids.push_back(v.get<std::string>());
    }
    doc.tree_merged_from[it.key()] = std::move(ids);
  }

  const json& convs = field(j, "conversations");
  if (!convs.is_array()) schema_fail("'conversations' must be an array");
  for (const json& e : convs) {
    Conversation c;
    c.granularity = granularity_from_string(str_field(e, "granularity"));
    if (e.contains("target_node") && !e["target_node"].is_null()) {
      if (!e["target_node"].is_string()) schema_fail("'target_node' must be a string");
      c.target_node = e["target_node"].get<std::string>();
    }
    c.user = str_field(e, "user");
    c.assistant = str_field(e, "assistant");
    const json& bindings = field(e, "seg_bindings");
    if (!bindings.is_array()) schema_fail("'seg_bindings' must be an array");
    for (const json& v : bindings) {
      if (!v.is_string()) schema_fail("seg binding ids must be strings");
      c.seg_bindings.push_back(v.get<std::string>());
    }
    doc.conversations.push_back(std::move(c));
  }
  return doc;
}

std::vector<DatasetDocument> read_documents(const std::string& path) {
  return read_jsonl<DatasetDocument>(
      path, [](const json& j) { return document_from_json(j); });
}

void write_documents(const std::string& path,
                     const std::vector<DatasetDocument>& docs) {
  write_jsonl(path, docs,
              [](const DatasetDocument& d) { return document_to_json(d); });
}

std::vector<std::string> validate_document(const DatasetDocument& doc) {
  std::vector<std::string> out;
  std::set<std::string> ids;
  for (const auto& m : doc.masks) {
    if (!ids.insert(m.id).second) {
      out.push_back("duplicate mask id '" + m.id + "'");
    }
    if (m.mask.height() != doc.height || m.mask.width() != doc.width) {
      out.push_back("mask '" + m.id + "' size does not match the image");
    }
  }

  for (const auto& [id, parent] : doc.tree_parent) {
    if (ids.count(id) == 0) {
      out.push_back("tree references unknown mask id '" + id + "'");
    }
    if (parent != kRootId && ids.count(parent) == 0) {
      out.push_back("tree parent '" + parent + "' is not a mask id");
    }
  }
  for (const auto& [id, members] : doc.tree_merged_from) {
    if (ids.count(id) == 0) {
      out.push_back("merged_from references unknown mask id '" + id + "'");
    }
    if (members.size() < 2) {
      out.push_back("merged_from['" + id + "'] lists fewer than two members");
    }
  }

  for (std::size_t i = 0; i < doc.conversations.size(); ++i) {
    const Conversation& c = doc.conversations[i];
    const std::string where = "conversation " + std::to_string(i) + ": ";
    GroundedSample sample;
    sample.image_id = doc.image_id;
    sample.instruction = c.user;
    try {
      sample.response = parse(c.assistant);
    } catch (const Error& e) {
      out.push_back(where + e.what());
      continue;
    }
    sample.seg_bindings = c.seg_bindings;
    sample.granularity = c.granularity;
    sample.target_node = c.target_node;
    if (c.target_node && ids.count(*c.target_node) == 0) {
      out.push_back(where + "target node '" + *c.target_node +
                    "' is not a mask id");
    }
    for (const auto& v : validate_sample(sample, ids).violations) {
      out.push_back(where + std::string(to_string(v.issue)) + ": " + v.detail);
    }
  }
  return out;
}

std::uint64_t count_whitespace_tokens(std::string_view text) {
  std::uint64_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

DatasetStats compute_stats(const std::vector<DatasetDocument>& docs) {
  DatasetStats s;
  s.images = docs.size();
  for (const auto& doc : docs) {
    s.masks += doc.masks.size();
    s.conversations += doc.conversations.size();
    for (const auto& c : doc.conversations) {
      s.tokens += count_whitespace_tokens(c.user);
      s.tokens += count_whitespace_tokens(c.assistant);
      s.by_granularity[std::string(to_string(c.granularity))] += 1;
    }
  }
  return s;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  return read_jsonl<ManifestEntry>(path, [](const json& j) {
    ManifestEntry e;
    e.image_id = str_field(j, "image_id");
    e.image_path = str_field(j, "image_path");
    const json& masks = field(j, "masks");
    if (!masks.is_array()) schema_fail("'masks' must be an array");
    std::size_t auto_id = 0;
    for (const json& m : masks) {
      if (m.is_object() && m.contains("id")) {
        e.masks.emplace_back(str_field(m, "id"), rle_from_json(field(m, "rle")));
      } else {
        e.masks.emplace_back("m" + std::to_string(auto_id), rle_from_json(m));
      }
      ++auto_id;
    }
    return e;
  });
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  write_jsonl(path, entries, [](const ManifestEntry& e) {
    json j;
    j["image_id"] = e.image_id;
    j["image_path"] = e.image_path;
    json masks = json::array();
    for (const auto& [id, mask] : e.masks) {
      json m;
      m["id"] = id;
      m["rle"] = rle_to_json(mask);
      masks.push_back(std::move(m));
    }
    j["masks"] = std::move(masks);
    return j;
  });
}

std::vector<PredDocument> read_predictions(const std::string& path) {
  return read_jsonl<PredDocument>(path, [](const json& j) {
    PredDocument d;
    d.image_id = str_field(j, "image_id");
    const json& pairs = field(j, "pairs");
    if (!pairs.is_array()) schema_fail("'pairs' must be an array");
    for (const json& p : pairs) {
      PredPairRecord r;
      r.phrase = str_field(p, "phrase");
      if (p.contains("score")) {
        if (!p["score"].is_number()) schema_fail("'score' must be a number");
        r.score = p["score"].get<double>();
        if (r.score < 0.0 || r.score > 1.0) {
          schema_fail("'score' must lie in [0, 1]");
        }
      }
      r.mask = rle_from_json(field(p, "rle"));
      d.pairs.push_back(std::move(r));
    }
    d.caption = j.contains("caption") ? str_field(j, "caption") : "";
    return d;
  });
}

void write_predictions(const std::string& path,
                       const std::vector<PredDocument>& docs) {
  write_jsonl(path, docs, [](const PredDocument& d) {
    json j;
    j["image_id"] = d.image_id;
    json pairs = json::array();
    for (const auto& p : d.pairs) {
      json e;
      e["phrase"] = p.phrase;
      e["score"] = p.score;
      e["rle"] = rle_to_json(p.mask);
      pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    j["caption"] = d.caption;
    return j;
  });
}

}  // namespace segcap
