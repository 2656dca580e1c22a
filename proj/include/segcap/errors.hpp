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

#include <stdexcept>
#include <string>

namespace segcap {

enum class ErrorKind {
  // mask codec / algebra
  CorruptRle,
  DimensionMismatch,
  // tree
  DuplicateId,
  UnknownId,
  // grounded-text grammar
  PlaceholderMismatch,
  UnbalancedTag,
  OrphanSeg,
  NestedTag,
  UnboundPhrase,
  // converters
  OverlappingRanges,
  RangeOutOfBounds,
  EmptyPanoptic,
  // pipeline
  ClientError,
  EmptyCaption,
  AlignmentFailure,
  EmptyInput,
  // metrics
  EmptyCorpus,
  // io / config
  IoError,
  SchemaError,
  ConfigError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CorruptRle: return "CorruptRle";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::PlaceholderMismatch: return "PlaceholderMismatch";
    case ErrorKind::UnbalancedTag: return "UnbalancedTag";
    case ErrorKind::OrphanSeg: return "OrphanSeg";
    case ErrorKind::NestedTag: return "NestedTag";
    case ErrorKind::UnboundPhrase: return "UnboundPhrase";
    case ErrorKind::OverlappingRanges: return "OverlappingRanges";
    case ErrorKind::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorKind::EmptyPanoptic: return "EmptyPanoptic";
    case ErrorKind::ClientError: return "ClientError";
    case ErrorKind::EmptyCaption: return "EmptyCaption";
    case ErrorKind::AlignmentFailure: return "AlignmentFailure";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace segcap
