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
// Grounded response text: `<p> phrase </p> [SEG]` units embedded in prose.
// Each phrase owns exactly one [SEG] slot; slots bind to mask ids on the
// sample, in order of appearance.

#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace segcap {

inline constexpr std::string_view kPhraseOpen = "<p>";
inline constexpr std::string_view kPhraseClose = "</p>";
inline constexpr std::string_view kSegToken = "[SEG]";

struct PhraseSpan {
  std::string text;         // phrase content, markers excluded, edge-trimmed
  std::size_t byte_start = 0;  // offsets into GroundedResponse::plain_text
  std::size_t byte_end = 0;
  std::size_t seg_index = 0;   // ordinal of the owned [SEG], by appearance

  friend bool operator==(const PhraseSpan&, const PhraseSpan&) = default;
};

struct GroundedResponse {
  std::string raw_text;    // full text including markers
  std::string plain_text;  // markers and their padding stripped
  std::vector<PhraseSpan> spans;

  friend bool operator==(const GroundedResponse&,
                         const GroundedResponse&) = default;
};

enum class Granularity {
  kPanoptic,
  kFineGrained,
  kReferring,
  kReasoning,
  kCaptionOnly,
};

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);  // throws SchemaError

// One conversation turn bound to an image: instruction, grounded response,
// and one mask id per [SEG] slot.
struct GroundedSample {
  std::string image_id;
  std::string instruction;
  GroundedResponse response;
  std::vector<std::string> seg_bindings;
  Granularity granularity = Granularity::kCaptionOnly;
  std::optional<std::string> target_node;

  friend bool operator==(const GroundedSample&, const GroundedSample&) = default;
};

struct PhraseBinding {
  std::string phrase;
  std::string mask_id;
};

// Renders `<p> {phrase} </p> [SEG]` units into a skeleton whose
// placeholders {0}, {1}, ... appear exactly once each, in ascending order.
// Phrase edges are trimmed. Throws PlaceholderMismatch.
GroundedResponse serialize(const std::vector<PhraseBinding>& spans,
                           std::string_view skeleton);

// Extracts phrase spans left to right. Every `<p>` needs a matching `</p>`
// and every closed phrase needs a `[SEG]` separated by whitespace only.
// Throws UnbalancedTag, NestedTag, OrphanSeg, UnboundPhrase.
GroundedResponse parse(std::string_view raw_text);

enum class ValidationIssue {
  kBindingCountMismatch,
  kDanglingMaskId,
  kEmptyPhrase,
  kDuplicateBinding,
  kMarkerInPhrase,
};

std::string_view to_string(ValidationIssue issue);

struct Violation {
  ValidationIssue issue;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

// Checks a sample against the set of mask ids available on its image.
ValidationReport validate_sample(const GroundedSample& sample,
                                 const std::set<std::string>& mask_ids);

}  // namespace segcap
