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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segcap/rle.hpp"

namespace segcap {

struct ImageMeta {
  std::string image_id;
  std::string image_path;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
};

// One labeled mask: the mask itself plus its semantic label (short caption)
// and a longer reference description.
struct MaskRecord {
  std::string id;
  BinaryMask mask;
  std::string short_caption;
  std::string detailed_caption;
  std::uint64_t area = 0;
  std::optional<BBox> bbox;

  static MaskRecord make(std::string id, BinaryMask mask,
                         std::string short_caption = {},
                         std::string detailed_caption = {});
};

inline constexpr std::string_view kRootId = "ROOT";

// Label key used when grouping siblings: case-folded (ASCII), trimmed,
// internal whitespace collapsed to single spaces.
std::string normalize_label(std::string_view label);

// Inclusion hierarchy over one image's masks. ROOT is a pseudo-node standing
// for the all-ones image mask; it never appears in nodes(). Immutable after
// construction; build with build_tree / merge_same_label_siblings.
class MaskTree {
 public:
  const std::string& image_id() const { return image_id_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }

  const std::map<std::string, MaskRecord>& nodes() const { return nodes_; }
  const MaskRecord& node(const std::string& id) const;
  bool has_node(const std::string& id) const { return nodes_.count(id) > 0; }

  // Parent id, or kRootId for top-level nodes.
  const std::string& parent(const std::string& id) const;
  const std::map<std::string, std::string>& parents() const { return parent_; }

  // Children in placement order (area descending, id ascending on ties).
  const std::vector<std::string>& children(const std::string& id) const;

  // Ids of the original records a merged node replaced; empty for nodes that
  // never merged.
  const std::map<std::string, std::vector<std::string>>& merged_from() const {
    return merged_from_;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  friend MaskTree build_tree(const ImageMeta&, std::vector<MaskRecord>,
                             double);
  friend MaskTree merge_same_label_siblings(MaskTree);

  std::string image_id_;
  std::uint32_t height_ = 0;
  std::uint32_t width_ = 0;
  std::map<std::string, MaskRecord> nodes_;
  std::map<std::string, std::string> parent_;
  std::map<std::string, std::vector<std::string>> children_;
  std::map<std::string, std::vector<std::string>> merged_from_;
};

// Places each record under the smallest-area already-placed record that
// contains it by at least tau_contain, else under ROOT. Records are placed
// in area-descending order, ties broken by ascending id, which makes the
// result deterministic. Throws DimensionMismatch or DuplicateId.
MaskTree build_tree(const ImageMeta& meta, std::vector<MaskRecord> records,
                    double tau_contain);

// Collapses same-labeled children of each parent into a single node whose
// mask is the union of the group. Walks the tree from the root down so
// sibling groups formed by a parent merge are themselves merged; nodes with
// empty labels never merge. The merged node keeps the lexicographically
// smallest member id, the first member's captions and position, and the
// concatenation of the members' children.
MaskTree merge_same_label_siblings(MaskTree tree);

// Pre-order traversal of the subtree below node_id (node_id excluded),
// children visited in stored order. node_id may be kRootId.
std::vector<std::string> descendants(const MaskTree& tree,
                                     const std::string& node_id);

}  // namespace segcap
