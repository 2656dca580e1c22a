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

#include "segcap/annotator.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "segcap/errors.hpp"

namespace segcap {

using nlohmann::json;

AnnotatorClient::Labels StubAnnotator::label_object(const std::string&,
                                                    const std::string& mask_id,
                                                    const BinaryMask&) {
  return {"object-" + mask_id, "a region labeled object-" + mask_id};
}

std::string StubAnnotator::organize_context(
    const std::string&, const std::vector<ContextItem>& items) {
  std::string out = "The scene contains";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out += (i == 0) ? " " : ", ";
    out += "<p> " + items[i].short_caption + " </p> [SEG:" +
           items[i].node_id + "]";
  }
  out += ".";
  return out;
}

HttpChatAnnotator::HttpChatAnnotator(ClientConfig config)
    : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::ConfigError, "endpoint must be an http(s) URL");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorKind::ConfigError,
                "unsupported endpoint scheme '" + scheme + "'");
  }
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = url;
    path_ = "/v1/chat/completions";
  } else {
    base_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

std::string HttpChatAnnotator::complete(const std::string& system_prompt,
                                        const std::string& user_content) {
  json body;
  body["model"] = config_.model;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", system_prompt}},
      json{{"role", "user"}, {"content", user_content}},
  });

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str());
      key != nullptr && key[0] != '\0') {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  // One client per request keeps concurrent calls independent.
  httplib::Client cli(base_);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(60);
  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorKind::ClientError,
                "request to " + base_ + path_ + " failed: " +
                    httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorKind::ClientError,
                "annotator returned status " + std::to_string(res->status));
  }

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ClientError,
                std::string("annotator reply is not JSON: ") + e.what());
  }
  try {
    return reply.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ClientError,
                "annotator reply lacks choices[0].message.content");
  }
}

AnnotatorClient::Labels HttpChatAnnotator::label_object(
    const std::string& image_ref, const std::string& mask_id,
    const BinaryMask& mask) {
  json payload;
  payload["image"] = image_ref;
  payload["mask_id"] = mask_id;
  payload["size"] = {mask.height(), mask.width()};
  payload["area"] = mask.area();
  if (const auto box = mask.bbox()) {
    payload["bbox"] = {box->x, box->y, box->w, box->h};
  }

  const std::string content = complete(config_.label_prompt, payload.dump());
  json parsed;
  try {
    parsed = json::parse(content);
  } catch (const json::exception&) {
    throw Error(ErrorKind::ClientError,
                "label reply is not the requested JSON object");
  }
  if (!parsed.is_object() || !parsed.contains("short") ||
      !parsed["short"].is_string() || !parsed.contains("detailed") ||
      !parsed["detailed"].is_string()) {
    throw Error(ErrorKind::ClientError,
                "label reply must carry string fields 'short' and 'detailed'");
  }
  return {parsed["short"].get<std::string>(),
          parsed["detailed"].get<std::string>()};
}

std::string HttpChatAnnotator::organize_context(
    const std::string& image_ref, const std::vector<ContextItem>& items) {
  json payload;
  payload["image"] = image_ref;
  json nodes = json::array();
  for (const auto& item : items) {
    nodes.push_back(json{{"node_id", item.node_id},
                         {"short_caption", item.short_caption},
                         {"detailed_caption", item.detailed_caption}});
  }
  payload["nodes"] = std::move(nodes);
  return complete(config_.organize_prompt, payload.dump());
}

std::unique_ptr<AnnotatorClient> make_client(const ClientConfig& config) {
  if (config.kind == "stub") return std::make_unique<StubAnnotator>();
  if (config.kind == "http") {
    return std::make_unique<HttpChatAnnotator>(config);
  }
  throw Error(ErrorKind::ConfigError,
              "unknown client kind '" + config.kind + "'");
}

}  // namespace segcap
