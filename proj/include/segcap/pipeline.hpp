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
// Three-step annotation pipeline: label every mask, build the containment
// tree, weave dense grounded context. Images stream through with bounded
// concurrency; output appends one dataset document per image in manifest
// order, so runs are byte deterministic and resumable.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segcap/annotator.hpp"
#include "segcap/converters.hpp"
#include "segcap/dataset_io.hpp"
#include "segcap/mask_tree.hpp"

namespace segcap {

struct PipelineConfig {
  double tau_contain = 0.9;
  int max_retries = 2;
  int concurrency = 1;
  ClientConfig client;
  TemplatePool templates = TemplatePool::defaults();

  void check() const;  // throws ConfigError when invariants fail
};

// Reads {tau_contain?, max_retries?, concurrency?, client?{kind, endpoint,
// model, api_key_env, label_prompt, organize_prompt}, templates?{...}}.
PipelineConfig load_pipeline_config(const std::string& path);

// Labels every mask, preserving order. Empty captions and client exceptions
// are retried up to max_retries extra attempts, then raised as EmptyCaption
// or ClientError. An empty mask list raises EmptyInput.
std::vector<MaskRecord> step1_label_objects(
    const std::string& image_ref,
    const std::vector<std::pair<std::string, BinaryMask>>& masks,
    AnnotatorClient& client, int max_retries);

// Containment tree plus same-label sibling merging.
MaskTree step2_build_tree(const ImageMeta& meta,
                          std::vector<MaskRecord> records,
                          const PipelineConfig& config);

// Dense context weaving: one panoptic sample over ROOT's children and one
// fine-grained sample per non-leaf node over its descendants. The client's
// woven text must mention each node exactly once as
// `<p> label </p> [SEG:node_id]`; violations are retried, then the sample is
// dropped with a log entry. Every returned sample validates.
std::vector<GroundedSample> step3_dense_context(
    const MaskTree& tree, AnnotatorClient& client, int max_retries,
    const TemplatePool& templates, std::vector<std::string>* dropped_log);

struct RunReport {
  std::uint64_t images = 0;   // documents in the output file
  std::uint64_t samples = 0;  // conversations across documents
  std::uint64_t masks = 0;
  std::uint64_t tokens = 0;   // whitespace tokens, conversation text
  std::uint64_t failures = 0; // failure_log size
  std::vector<std::string> failure_log;
};

// Streams manifest entries through steps 1-3 and appends documents to
// out_path in manifest order. Per-image errors are logged and skipped; the
// run continues. With resume, images whose documents already exist in
// out_path are kept as-is (a torn final line is discarded first); without
// it the file is rewritten. Counts are recounted from the finished file.
RunReport run_pipeline(const std::vector<ManifestEntry>& manifest,
                       const PipelineConfig& config, AnnotatorClient& client,
                       const std::string& out_path, bool resume);

// Convenience wrapper: reads the manifest and builds the configured client.
RunReport run_pipeline(const std::string& manifest_path,
                       const PipelineConfig& config,
                       const std::string& out_path, bool resume);

}  // namespace segcap
