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

#include "segcap/uscdf.hpp"

#include <algorithm>
#include <cctype>

#include "segcap/errors.hpp"

namespace segcap {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool all_space(std::string_view s) {
  return std::all_of(s.begin(), s.end(), is_space);
}

}  // namespace

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kPanoptic: return "panoptic";
    case Granularity::kFineGrained: return "fine_grained";
    case Granularity::kReferring: return "referring";
    case Granularity::kReasoning: return "reasoning";
    case Granularity::kCaptionOnly: return "caption_only";
  }
  throw Error(ErrorKind::SchemaError, "bad granularity value");
}

Granularity granularity_from_string(std::string_view s) {
  if (s == "panoptic") return Granularity::kPanoptic;
  if (s == "fine_grained") return Granularity::kFineGrained;
  if (s == "referring") return Granularity::kReferring;
  if (s == "reasoning") return Granularity::kReasoning;
  if (s == "caption_only") return Granularity::kCaptionOnly;
  throw Error(ErrorKind::SchemaError,
              "unknown granularity '" + std::string(s) + "'");
}

std::string_view to_string(ValidationIssue issue) {
  switch (issue) {
    case ValidationIssue::kBindingCountMismatch: return "binding_count_mismatch";
    case ValidationIssue::kDanglingMaskId: return "dangling_mask_id";
    case ValidationIssue::kEmptyPhrase: return "empty_phrase";
    case ValidationIssue::kDuplicateBinding: return "duplicate_binding";
    case ValidationIssue::kMarkerInPhrase: return "marker_in_phrase";
  }
  throw Error(ErrorKind::SchemaError, "bad validation issue value");
}

GroundedResponse serialize(const std::vector<PhraseBinding>& spans,
                           std::string_view skeleton) {
  GroundedResponse out;
  std::size_t next = 0;    // placeholder index expected next
  std::size_t pos = 0;     // start of text not yet copied out
  std::size_t search = 0;  // cursor for the brace scan
  while (search < skeleton.size()) {
    const std::size_t brace = skeleton.find('{', search);
    if (brace == std::string_view::npos) break;
    // A placeholder is '{', one or more digits, '}'. Anything else is text.
    std::size_t d = brace + 1;
    while (d < skeleton.size() && std::isdigit(static_cast<unsigned char>(
                                      skeleton[d]))) {
      ++d;
    }
    if (d == brace + 1 || d >= skeleton.size() || skeleton[d] != '}') {
      search = brace + 1;
      continue;
    }
    if (d - brace - 1 > 9) {
      throw Error(ErrorKind::PlaceholderMismatch, "placeholder index too large");
    }
    const std::size_t index =
        std::stoul(std::string(skeleton.substr(brace + 1, d - brace - 1)));
    if (index != next) {
      throw Error(ErrorKind::PlaceholderMismatch,
                  "expected placeholder {" + std::to_string(next) +
                      "}, found {" + std::to_string(index) + "}");
    }
    if (next >= spans.size()) {
      throw Error(ErrorKind::PlaceholderMismatch,
                  "skeleton has more placeholders than spans");
    }

    const std::string_view before = skeleton.substr(pos, brace - pos);
    out.raw_text += before;
    out.plain_text += before;

    const std::string phrase(trim(spans[next].phrase));
    PhraseSpan span;
    span.text = phrase;
    span.byte_start = out.plain_text.size();
    out.plain_text += phrase;
    span.byte_end = out.plain_text.size();
    span.seg_index = next;
    out.spans.push_back(std::move(span));

    out.raw_text += kPhraseOpen;
    out.raw_text += ' ';
    out.raw_text += phrase;
    out.raw_text += ' ';
    out.raw_text += kPhraseClose;
    out.raw_text += ' ';
    out.raw_text += kSegToken;

    ++next;
    pos = d + 1;
    search = pos;
  }
  if (next != spans.size()) {
    throw Error(ErrorKind::PlaceholderMismatch,
                "skeleton has " + std::to_string(next) +
                    " placeholders for " + std::to_string(spans.size()) +
                    " spans");
  }
  const std::string_view tail = skeleton.substr(pos);
  out.raw_text += tail;
  out.plain_text += tail;
  return out;
}

GroundedResponse parse(std::string_view raw) {
  GroundedResponse out;
  out.raw_text = std::string(raw);

  enum class State { kOutside, kInPhrase, kAwaitSeg };
  State state = State::kOutside;
  std::size_t pos = 0;
  std::size_t phrase_start = 0;  // content start while kInPhrase
  std::size_t close_end = 0;     // end of "</p>" while kAwaitSeg
  std::string pending;           // trimmed phrase awaiting its [SEG]

  const auto next_token = [&](std::size_t from, std::string_view& tok) {
    const std::size_t o = raw.find(kPhraseOpen, from);
    const std::size_t c = raw.find(kPhraseClose, from);
    const std::size_t s = raw.find(kSegToken, from);
    std::size_t best = std::min({o, c, s});
    if (best == std::string_view::npos) return best;
    // "<p>" never occurs inside "</p>" or "[SEG]", and vice versa, so the
    // smallest offset identifies the token unambiguously.
    tok = (best == c) ? kPhraseClose : (best == o) ? kPhraseOpen : kSegToken;
    return best;
  };

  for (;;) {
    std::string_view tok;
    const std::size_t at = next_token(pos, tok);
    if (at == std::string_view::npos) break;

    switch (state) {
      case State::kOutside:
        if (tok == kPhraseOpen) {
          out.plain_text += raw.substr(pos, at - pos);
          phrase_start = at + tok.size();
          state = State::kInPhrase;
        } else if (tok == kPhraseClose) {
          throw Error(ErrorKind::UnbalancedTag,
                      "</p> without an open <p> at byte " + std::to_string(at));
        } else {
          throw Error(ErrorKind::OrphanSeg,
                      "[SEG] without a closed phrase at byte " +
                          std::to_string(at));
        }
        break;

      case State::kInPhrase:
        if (tok == kPhraseClose) {
          pending = std::string(trim(raw.substr(phrase_start, at - phrase_start)));
          close_end = at + tok.size();
          state = State::kAwaitSeg;
        } else if (tok == kPhraseOpen) {
          throw Error(ErrorKind::NestedTag,
                      "<p> inside an open phrase at byte " + std::to_string(at));
        } else {
          throw Error(ErrorKind::OrphanSeg,
                      "[SEG] inside an open phrase at byte " +
                          std::to_string(at));
        }
        break;

      case State::kAwaitSeg:
        if (tok == kSegToken) {
          if (!all_space(raw.substr(close_end, at - close_end))) {
            throw Error(ErrorKind::OrphanSeg,
                        "[SEG] separated from its phrase at byte " +
                            std::to_string(at));
          }
          PhraseSpan span;
          span.text = pending;
          span.byte_start = out.plain_text.size();
          out.plain_text += pending;
          span.byte_end = out.plain_text.size();
          span.seg_index = out.spans.size();
          out.spans.push_back(std::move(span));
          state = State::kOutside;
        } else if (tok == kPhraseOpen) {
          throw Error(ErrorKind::UnboundPhrase,
                      "phrase closed at byte " + std::to_string(close_end) +
                          " has no [SEG]");
        } else {
          throw Error(ErrorKind::UnbalancedTag,
                      "</p> without an open <p> at byte " + std::to_string(at));
        }
        break;
    }
    pos = at + tok.size();
  }

  switch (state) {
    case State::kOutside:
      out.plain_text += raw.substr(pos);
      break;
    case State::kInPhrase:
      throw Error(ErrorKind::UnbalancedTag, "<p> never closed");
    case State::kAwaitSeg:
      throw Error(ErrorKind::UnboundPhrase, "final phrase has no [SEG]");
  }
  return out;
}

ValidationReport validate_sample(const GroundedSample& sample,
                                 const std::set<std::string>& mask_ids) {
  ValidationReport report;
  const auto& spans = sample.response.spans;

  if (sample.seg_bindings.size() != spans.size()) {
    report.violations.push_back(
        {ValidationIssue::kBindingCountMismatch,
         std::to_string(sample.seg_bindings.size()) + " bindings for " +
             std::to_string(spans.size()) + " spans"});
  }

  std::set<std::string> seen;
  for (const auto& id : sample.seg_bindings) {
    if (mask_ids.count(id) == 0) {
      report.violations.push_back(
          {ValidationIssue::kDanglingMaskId, "mask id '" + id + "'"});
    }
    if (!seen.insert(id).second) {
      report.violations.push_back(
          {ValidationIssue::kDuplicateBinding, "mask id '" + id + "'"});
    }
  }

  for (const auto& span : spans) {
    if (trim(span.text).empty()) {
      report.violations.push_back(
          {ValidationIssue::kEmptyPhrase,
           "span " + std::to_string(span.seg_index)});
      continue;
    }
    for (std::string_view marker : {kPhraseOpen, kPhraseClose, kSegToken}) {
      if (span.text.find(marker) != std::string::npos) {
        report.violations.push_back(
            {ValidationIssue::kMarkerInPhrase,
             "span " + std::to_string(span.seg_index) + " contains '" +
                 std::string(marker) + "'"});
      }
    }
  }
  return report;
}

}  // namespace segcap
