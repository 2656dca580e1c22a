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

#include "segcap/converters.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "segcap/errors.hpp"

namespace segcap {

using nlohmann::json;

TemplatePool TemplatePool::defaults() {
  TemplatePool t;
  t.referring_instruction = {"Please segment the {list}."};
  t.referring_response = {"Sure, {units}."};
  t.empty_referring_instruction = {"Please segment the target in the image."};
  t.empty_referring_response = {"There is no target to segment."};
  t.panoptic_instruction = {
      "Please segment all objects in the image and describe each one."};
  t.panoptic_response = {"Sure, the image contains {units}."};
  t.fine_grained_instruction = {
      "Please describe the {target} in detail, segmenting each part."};
  t.fine_grained_response = {"The {target} consists of {units}."};
  t.gcg_instruction = {
      "Please describe the image in detail, segmenting every object you "
      "mention."};
  return t;
}

TemplatePool load_template_pool(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorKind::ConfigError, path + ": expected a JSON object");
  }

  TemplatePool t = TemplatePool::defaults();
  const auto assign = [&](const char* key, std::vector<std::string>& pool) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_array() || v.empty()) {
      throw Error(ErrorKind::ConfigError,
                  std::string("template pool '") + key +
                      "' must be a nonempty array");
    }
    pool.clear();
    for (const json& e : v) {
      if (!e.is_string()) {
        throw Error(ErrorKind::ConfigError,
                    std::string("template pool '") + key +
                        "' must hold strings");
      }
      pool.push_back(e.get<std::string>());
    }
  };
  assign("referring_instruction", t.referring_instruction);
  assign("referring_response", t.referring_response);
  assign("empty_referring_instruction", t.empty_referring_instruction);
  assign("empty_referring_response", t.empty_referring_response);
  assign("panoptic_instruction", t.panoptic_instruction);
  assign("panoptic_response", t.panoptic_response);
  assign("fine_grained_instruction", t.fine_grained_instruction);
  assign("fine_grained_response", t.fine_grained_response);
  assign("gcg_instruction", t.gcg_instruction);
  return t;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? ", and " : ", ";
    out += items[i];
  }
  return out;
}

namespace {

std::string expand(std::string text, std::string_view key,
                   std::string_view value) {
  const std::string token = "{" + std::string(key) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

// "{0}, {1}, and {2}" for n slots.
std::string slot_list(std::size_t n) {
  std::vector<std::string> slots(n);
  for (std::size_t i = 0; i < n; ++i) slots[i] = "{" + std::to_string(i) + "}";
  return join_list(slots);
}

std::string instruction_of(std::string body) {
  return std::string(kImageToken) + " " + std::move(body);
}

void require_dims(const ImageMeta& meta, const BinaryMask& mask,
                  const std::string& what) {
  if (mask.height() != meta.height || mask.width() != meta.width) {
    throw Error(ErrorKind::DimensionMismatch,
                what + " does not match image " + meta.image_id + " (" +
                    std::to_string(meta.height) + "x" +
                    std::to_string(meta.width) + ")");
  }
}

}  // namespace

ConvertedImage from_referring(const ImageMeta& meta,
                              const std::vector<Referent>& referents,
                              const TemplatePool& templates) {
  ConvertedImage out;
  out.meta = meta;

  GroundedSample sample;
  sample.image_id = meta.image_id;
  sample.granularity = Granularity::kReferring;

  if (referents.empty()) {
    sample.instruction =
        instruction_of(templates.empty_referring_instruction.front());
    sample.response = serialize({}, templates.empty_referring_response.front());
    out.samples.push_back(std::move(sample));
    return out;
  }

  std::vector<std::string> expressions;
  std::vector<PhraseBinding> bindings;
  for (std::size_t i = 0; i < referents.size(); ++i) {
    require_dims(meta, referents[i].mask, "referent mask " + std::to_string(i));
    const std::string id = "m" + std::to_string(i);
    out.masks.emplace_back(id, referents[i].mask);
    expressions.push_back(referents[i].expression);
    bindings.push_back({referents[i].expression, id});
  }

  sample.instruction = instruction_of(expand(
      templates.referring_instruction.front(), "list", join_list(expressions)));
  sample.response =
      serialize(bindings, expand(templates.referring_response.front(), "units",
                                 slot_list(bindings.size())));
  for (const auto& b : bindings) sample.seg_bindings.push_back(b.mask_id);
  out.samples.push_back(std::move(sample));
  return out;
}

ConvertedImage from_panoptic(const ImageMeta& meta,
                             const std::vector<Segment>& segments,
                             const TemplatePool& templates) {
  if (segments.empty()) {
    throw Error(ErrorKind::EmptyPanoptic,
                "image " + meta.image_id + " has no segments");
  }
  ConvertedImage out;
  out.meta = meta;

  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    require_dims(meta, segments[i].mask, "segment mask " + std::to_string(i));
    out.masks.emplace_back("m" + std::to_string(i), segments[i].mask);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return segments[a].mask.area() > segments[b].mask.area();
                   });

  std::vector<PhraseBinding> bindings;
  for (std::size_t idx : order) {
    bindings.push_back({segments[idx].category, out.masks[idx].first});
  }

  GroundedSample sample;
  sample.image_id = meta.image_id;
  sample.granularity = Granularity::kPanoptic;
  sample.instruction =
      instruction_of(templates.panoptic_instruction.front());
  sample.response =
      serialize(bindings, expand(templates.panoptic_response.front(), "units",
                                 slot_list(bindings.size())));
  for (const auto& b : bindings) sample.seg_bindings.push_back(b.mask_id);
  out.samples.push_back(std::move(sample));
  return out;
}

ConvertedImage from_gcg(const ImageMeta& meta, const std::string& caption,
                        const std::vector<Grounding>& groundings,
                        const TemplatePool& templates) {
  ConvertedImage out;
  out.meta = meta;

  std::vector<std::size_t> order(groundings.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < groundings.size(); ++i) {
    const Grounding& g = groundings[i];
    require_dims(meta, g.mask, "grounding mask " + std::to_string(i));
    if (g.end > caption.size() || g.begin >= g.end) {
      throw Error(ErrorKind::RangeOutOfBounds,
                  "grounding " + std::to_string(i) + " range [" +
                      std::to_string(g.begin) + ", " + std::to_string(g.end) +
                      ") does not fit the caption");
    }
    out.masks.emplace_back("m" + std::to_string(i), g.mask);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return groundings[a].begin < groundings[b].begin;
                   });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (groundings[order[k]].begin < groundings[order[k - 1]].end) {
      throw Error(ErrorKind::OverlappingRanges,
                  "grounding ranges overlap at byte " +
                      std::to_string(groundings[order[k]].begin));
    }
  }

  GroundedSample sample;
  sample.image_id = meta.image_id;
  sample.granularity = groundings.empty() ? Granularity::kCaptionOnly
                                          : Granularity::kPanoptic;
  sample.instruction = instruction_of(templates.gcg_instruction.front());

  std::string raw;
  std::size_t pos = 0;
  for (std::size_t idx : order) {
    const Grounding& g = groundings[idx];
    // Whitespace at the range edges stays outside the markers.
    std::size_t b = g.begin, e = g.end;
    while (b < e && std::isspace(static_cast<unsigned char>(caption[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(caption[e - 1]))) {
      --e;
    }
    raw += caption.substr(pos, b - pos);
    raw += kPhraseOpen;
    raw += ' ';
    raw += caption.substr(b, e - b);
    raw += ' ';
    raw += kPhraseClose;
    raw += ' ';
    raw += kSegToken;
    raw += caption.substr(e, g.end - e);
    pos = g.end;
    sample.seg_bindings.push_back(out.masks[idx].first);
  }
  raw += caption.substr(pos);

  sample.response = parse(raw);
  out.samples.push_back(std::move(sample));
  return out;
}

std::vector<GroundedSample> from_mask_tree(const MaskTree& tree,
                                           const TemplatePool& templates) {
  std::vector<GroundedSample> out;
  if (tree.nodes().empty()) return out;

  const auto phrase_of = [&](const std::string& id) {
    const std::string& label = tree.node(id).short_caption;
    return label.empty() ? id : label;
  };

  const auto weave = [&](const std::vector<std::string>& ids,
                         const std::string& skeleton) {
    std::vector<PhraseBinding> bindings;
    for (const auto& id : ids) bindings.push_back({phrase_of(id), id});
    return serialize(bindings, expand(skeleton, "units",
                                      slot_list(bindings.size())));
  };

  GroundedSample pano;
  pano.image_id = tree.image_id();
  pano.granularity = Granularity::kPanoptic;
  pano.instruction = instruction_of(templates.panoptic_instruction.front());
  const auto& top = tree.children(std::string(kRootId));
  pano.response = weave(top, templates.panoptic_response.front());
  pano.seg_bindings = top;
  out.push_back(std::move(pano));

  for (const std::string& id : descendants(tree, std::string(kRootId))) {
    const auto& kids = tree.children(id);
    if (kids.empty()) continue;
    GroundedSample fine;
    fine.image_id = tree.image_id();
    fine.granularity = Granularity::kFineGrained;
    fine.target_node = id;
    fine.instruction = instruction_of(
        expand(templates.fine_grained_instruction.front(), "target",
               phrase_of(id)));
    const auto scope = descendants(tree, id);
    fine.response = weave(scope, expand(templates.fine_grained_response.front(),
                                        "target", phrase_of(id)));
    fine.seg_bindings = scope;
    out.push_back(std::move(fine));
  }
  return out;
}

DatasetDocument to_document(const ConvertedImage& image) {
  DatasetDocument doc;
  doc.image_id = image.meta.image_id;
  doc.image_path = image.meta.image_path;
  doc.height = image.meta.height;
  doc.width = image.meta.width;
  for (const auto& [id, mask] : image.masks) {
    MaskEntry e;
    e.id = id;
    e.mask = mask;
    doc.masks.push_back(std::move(e));
  }
  for (const auto& s : image.samples) {
    Conversation c;
    c.granularity = s.granularity;
    c.target_node = s.target_node;
    c.user = s.instruction;
    c.assistant = s.response.raw_text;
    c.seg_bindings = s.seg_bindings;
    doc.conversations.push_back(std::move(c));
  }
  return doc;
}

DatasetDocument to_document(const ImageMeta& meta, const MaskTree& tree,
                            const std::vector<GroundedSample>& samples) {
  DatasetDocument doc;
  doc.image_id = meta.image_id;
  doc.image_path = meta.image_path;
  doc.height = meta.height;
  doc.width = meta.width;
  for (const auto& [id, node] : tree.nodes()) {
    MaskEntry e;
    e.id = id;
    e.mask = node.mask;
    e.short_caption = node.short_caption;
    e.detailed_caption = node.detailed_caption;
    doc.masks.push_back(std::move(e));
  }
  doc.tree_parent = tree.parents();
  doc.tree_merged_from = tree.merged_from();
  for (const auto& s : samples) {
    Conversation c;
    c.granularity = s.granularity;
    c.target_node = s.target_node;
    c.user = s.instruction;
    c.assistant = s.response.raw_text;
    c.seg_bindings = s.seg_bindings;
    doc.conversations.push_back(std::move(c));
  }
  return doc;
}

}  // namespace segcap
