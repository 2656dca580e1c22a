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
// Annotator-model clients used by the pipeline: a deterministic stub for
// tests and offline runs, and a generic HTTP chat-completions client.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "segcap/rle.hpp"

namespace segcap {

class AnnotatorClient {
 public:
  virtual ~AnnotatorClient() = default;

  struct Labels {
    std::string short_caption;
    std::string detailed_caption;
  };

  struct ContextItem {
    std::string node_id;
    std::string short_caption;
    std::string detailed_caption;
  };

  // Names one mask of the image: a short semantic label plus a detailed
  // reference description.
  virtual Labels label_object(const std::string& image_ref,
                              const std::string& mask_id,
                              const BinaryMask& mask) = 0;

  // Weaves the labeled nodes into one coherent text in which every node's
  // label appears exactly once as `<p> label </p> [SEG:node_id]`.
  virtual std::string organize_context(
      const std::string& image_ref,
      const std::vector<ContextItem>& items) = 0;

  // Whether the orchestrator may issue calls from several threads at once.
  virtual bool supports_concurrent_calls() const { return false; }
};

// Deterministic offline client: labels are derived from mask ids and the
// woven text lists the items in order.
class StubAnnotator : public AnnotatorClient {
 public:
  Labels label_object(const std::string& image_ref, const std::string& mask_id,
                      const BinaryMask& mask) override;
  std::string organize_context(const std::string& image_ref,
                               const std::vector<ContextItem>& items) override;
  bool supports_concurrent_calls() const override { return true; }
};

struct ClientConfig {
  std::string kind = "stub";  // "stub" or "http"
  std::string endpoint;       // http(s)://host[:port][/path]
  std::string model;
  std::string api_key_env = "SEGCAP_API_KEY";
  std::string label_prompt =
      "You name one region of an image. Reply with a JSON object "
      "{\"short\": <label>, \"detailed\": <one-sentence description>}.";
  std::string organize_prompt =
      "You write one coherent paragraph about an image. Mention every listed "
      "node exactly once, wrapping its short caption as "
      "<p> caption </p> [SEG:node_id].";
};

// Chat-completions client. Requests carry the prompt from the config; the
// API key is read from the configured environment variable at call time and
// sent as a bearer token when present. label_object expects the assistant
// message content to be the JSON object described in the label prompt;
// organize_context uses the content verbatim. Failures throw ClientError.
class HttpChatAnnotator : public AnnotatorClient {
 public:
  explicit HttpChatAnnotator(ClientConfig config);  // throws ConfigError

  Labels label_object(const std::string& image_ref, const std::string& mask_id,
                      const BinaryMask& mask) override;
  std::string organize_context(const std::string& image_ref,
                               const std::vector<ContextItem>& items) override;
  bool supports_concurrent_calls() const override { return true; }

 private:
  std::string complete(const std::string& system_prompt,
                       const std::string& user_content);

  ClientConfig config_;
  std::string base_;  // scheme://host[:port]
  std::string path_;
};

// Builds a client from config.kind. Throws ConfigError on unknown kinds.
std::unique_ptr<AnnotatorClient> make_client(const ClientConfig& config);

}  // namespace segcap
