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
// Adapters that turn referring, panoptic, and grounded-caption annotations
// into grounded samples, plus the template-driven assembly of samples from a
// mask tree.

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "segcap/dataset_io.hpp"
#include "segcap/mask_tree.hpp"
#include "segcap/rle.hpp"
#include "segcap/uscdf.hpp"

namespace segcap {

// Placeholder the user turn carries for the image position.
inline constexpr std::string_view kImageToken = "<IMAGE>";

// Instruction/response wording pools. The first entry of each pool is used,
// so output is deterministic; override pools from a config file to vary
// phrasing. "{list}" expands to the enumerated expressions, "{units}" to the
// grounded `<p>...</p> [SEG]` slots, "{target}" to the described node label.
struct TemplatePool {
  std::vector<std::string> referring_instruction;
  std::vector<std::string> referring_response;
  std::vector<std::string> empty_referring_instruction;
  std::vector<std::string> empty_referring_response;
  std::vector<std::string> panoptic_instruction;
  std::vector<std::string> panoptic_response;
  std::vector<std::string> fine_grained_instruction;
  std::vector<std::string> fine_grained_response;
  std::vector<std::string> gcg_instruction;

  static TemplatePool defaults();
};

// Reads a JSON object whose keys name the pools above; present keys replace
// the default pool, absent keys keep it. Throws ConfigError / IoError.
TemplatePool load_template_pool(const std::string& path);

// Joins items as "a", "a, and b", "a, b, and c".
std::string join_list(const std::vector<std::string>& items);

struct Referent {
  std::string expression;
  BinaryMask mask;
};

struct Segment {
  std::string category;
  BinaryMask mask;
};

// Grounded caption fragment: [begin, end) byte range within the caption.
struct Grounding {
  std::size_t begin = 0;
  std::size_t end = 0;
  BinaryMask mask;
};

// Conversion result for one image: the mask store (ids assigned "m0",
// "m1", ... in input order) and the grounded samples referring to it.
struct ConvertedImage {
  ImageMeta meta;
  std::vector<std::pair<std::string, BinaryMask>> masks;
  std::vector<GroundedSample> samples;
};

// Referring expressions, one phrase+[SEG] per referent; an empty referent
// list produces a zero-span absence response. Throws DimensionMismatch.
ConvertedImage from_referring(const ImageMeta& meta,
                              const std::vector<Referent>& referents,
                              const TemplatePool& templates);

// Whole-image segmentation: every segment becomes a phrase+[SEG], ordered by
// area descending (ties keep input order). Throws EmptyPanoptic,
// DimensionMismatch.
ConvertedImage from_panoptic(const ImageMeta& meta,
                             const std::vector<Segment>& segments,
                             const TemplatePool& templates);

// Grounded caption: wraps each grounded range in markers in place,
// preserving non-grounded text. Whitespace at range edges stays outside the
// markers. Throws RangeOutOfBounds, OverlappingRanges, DimensionMismatch.
ConvertedImage from_gcg(const ImageMeta& meta, const std::string& caption,
                        const std::vector<Grounding>& groundings,
                        const TemplatePool& templates);

// Template-woven samples from a labeled tree: one panoptic sample over
// ROOT's children plus one fine_grained sample per non-leaf node covering
// its descendants. Nodes with empty labels fall back to their id as the
// phrase. An empty tree yields no samples.
std::vector<GroundedSample> from_mask_tree(const MaskTree& tree,
                                           const TemplatePool& templates);

// Document assembly: a converted image becomes one dataset document with an
// empty tree; a labeled tree plus its samples becomes a document whose masks
// are the tree nodes (id order) and whose tree maps mirror the hierarchy.
DatasetDocument to_document(const ConvertedImage& image);
DatasetDocument to_document(const ImageMeta& meta, const MaskTree& tree,
                            const std::vector<GroundedSample>& samples);

}  // namespace segcap
