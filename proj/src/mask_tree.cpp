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

#include "segcap/mask_tree.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "segcap/errors.hpp"

namespace segcap {

MaskRecord MaskRecord::make(std::string id, BinaryMask mask,
                            std::string short_caption,
                            std::string detailed_caption) {
  MaskRecord r;
  r.id = std::move(id);
  r.area = mask.area();
  r.bbox = mask.bbox();
  r.mask = std::move(mask);
  r.short_caption = std::move(short_caption);
  r.detailed_caption = std::move(detailed_caption);
  return r;
}

std::string normalize_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  bool pending_space = false;
  for (unsigned char c : label) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

const MaskRecord& MaskTree::node(const std::string& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorKind::UnknownId, "no node " + id);
  return it->second;
}

const std::string& MaskTree::parent(const std::string& id) const {
  auto it = parent_.find(id);
  if (it == parent_.end()) throw Error(ErrorKind::UnknownId, "no node " + id);
  return it->second;
}

const std::vector<std::string>& MaskTree::children(
    const std::string& id) const {
  static const std::vector<std::string> kEmpty;
  if (id != kRootId && nodes_.count(id) == 0) {
    throw Error(ErrorKind::UnknownId, "no node " + id);
  }
  auto it = children_.find(id);
  return it == children_.end() ? kEmpty : it->second;
}

MaskTree build_tree(const ImageMeta& meta, std::vector<MaskRecord> records,
                    double tau_contain) {
  MaskTree tree;
  tree.image_id_ = meta.image_id;
  tree.height_ = meta.height;
  tree.width_ = meta.width;

  for (auto& r : records) {
    if (r.id == kRootId) {
      throw Error(ErrorKind::DuplicateId, "record id ROOT is reserved");
    }
    if (r.mask.height() != meta.height || r.mask.width() != meta.width) {
      throw Error(ErrorKind::DimensionMismatch,
                  "mask " + r.id + " does not match image size");
    }
    r.area = r.mask.area();
    r.bbox = r.mask.bbox();
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const MaskRecord& a, const MaskRecord& b) {
                     if (a.area != b.area) return a.area > b.area;
                     return a.id < b.id;
                   });

  // Ids of already-placed records, in placement order. Placement order is
  // also the tie-break among equal-area candidate parents.
  std::vector<const MaskRecord*> placed;
  placed.reserve(records.size());

  for (auto& r : records) {
    if (tree.nodes_.count(r.id) > 0) {
      throw Error(ErrorKind::DuplicateId, "duplicate record id " + r.id);
    }
    const MaskRecord* best = nullptr;
    for (const MaskRecord* cand : placed) {
      if (containment_ratio(r.mask, cand->mask) < tau_contain) continue;
      if (best == nullptr || cand->area < best->area) best = cand;
    }
    std::string parent_id = best ? best->id : std::string(kRootId);
    tree.children_[parent_id].push_back(r.id);
    tree.parent_[r.id] = std::move(parent_id);
    auto [it, ok] = tree.nodes_.emplace(r.id, std::move(r));
    (void)ok;
    placed.push_back(&it->second);
  }
  return tree;
}

namespace {

void merge_children_of(std::map<std::string, std::vector<std::string>>& kids,
                       std::map<std::string, MaskRecord>& nodes,
                       std::map<std::string, std::string>& parent,
                       std::map<std::string, std::vector<std::string>>& origin,
                       const std::string& node_id) {
  auto kit = kids.find(node_id);
  if (kit == kids.end()) return;
  const std::vector<std::string> child_ids = kit->second;

  // Group siblings by normalized label, preserving first-seen order.
  std::map<std::string, std::vector<std::string>> groups;
  std::vector<std::string> order;
  for (const std::string& cid : child_ids) {
    const std::string key = normalize_label(nodes.at(cid).short_caption);
    if (key.empty()) continue;
    auto [git, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    git->second.push_back(cid);
  }

  for (const std::string& key : order) {
    std::vector<std::string>& members = groups.at(key);
    if (members.size() < 2) continue;

    std::string merged_id = *std::min_element(members.begin(), members.end());
    const MaskRecord& first = nodes.at(members.front());

    std::vector<BinaryMask> parts;
    parts.reserve(members.size());
    std::vector<std::string> new_kids;
    std::vector<std::string> provenance;
    for (const std::string& mid : members) {
      const MaskRecord& m = nodes.at(mid);
      parts.push_back(m.mask);
      auto cit = kids.find(mid);
      if (cit != kids.end()) {
        new_kids.insert(new_kids.end(), cit->second.begin(), cit->second.end());
      }
      auto oit = origin.find(mid);
      if (oit != origin.end()) {
        provenance.insert(provenance.end(), oit->second.begin(),
                          oit->second.end());
      } else {
        provenance.push_back(mid);
      }
    }

    MaskRecord merged = MaskRecord::make(merged_id, union_masks(parts),
                                         first.short_caption,
                                         first.detailed_caption);

    // Drop the members, then install the merged node at the first member's
    // sibling position.
    for (const std::string& mid : members) {
      nodes.erase(mid);
      parent.erase(mid);
      kids.erase(mid);
      origin.erase(mid);
    }
    std::vector<std::string>& sib = kids.at(node_id);
    std::vector<std::string> rebuilt;
    rebuilt.reserve(sib.size());
    bool inserted = false;
    for (const std::string& cid : sib) {
      bool member =
          std::find(members.begin(), members.end(), cid) != members.end();
      if (member) {
        if (!inserted) {
          rebuilt.push_back(merged_id);
          inserted = true;
        }
        continue;
      }
      rebuilt.push_back(cid);
    }
    sib = std::move(rebuilt);

    nodes.emplace(merged_id, std::move(merged));
    parent[merged_id] = node_id;
    origin[merged_id] = std::move(provenance);
    if (!new_kids.empty()) {
      for (const std::string& cid : new_kids) parent[cid] = merged_id;
      kids[merged_id] = std::move(new_kids);
    }
  }
}

void merge_subtree(std::map<std::string, std::vector<std::string>>& kids,
                   std::map<std::string, MaskRecord>& nodes,
                   std::map<std::string, std::string>& parent,
                   std::map<std::string, std::vector<std::string>>& origin,
                   const std::string& node_id) {
  merge_children_of(kids, nodes, parent, origin, node_id);
  auto kit = kids.find(node_id);
  if (kit == kids.end()) return;
  // Children may change while descending, so copy the post-merge list.
  const std::vector<std::string> child_ids = kit->second;
  for (const std::string& cid : child_ids) {
    merge_subtree(kids, nodes, parent, origin, cid);
  }
}

}  // namespace

MaskTree merge_same_label_siblings(MaskTree tree) {
  merge_subtree(tree.children_, tree.nodes_, tree.parent_, tree.merged_from_,
                std::string(kRootId));
  return tree;
}

namespace {
void collect(const MaskTree& tree, const std::string& id,
             std::vector<std::string>& out) {
  for (const std::string& cid : tree.children(id)) {
    out.push_back(cid);
    collect(tree, cid, out);
  }
}
}  // namespace

std::vector<std::string> descendants(const MaskTree& tree,
                                     const std::string& node_id) {
  if (node_id != kRootId && !tree.has_node(node_id)) {
    throw Error(ErrorKind::UnknownId, "no node " + node_id);
  }
  std::vector<std::string> out;
  collect(tree, node_id, out);
  return out;
}

}  // namespace segcap
