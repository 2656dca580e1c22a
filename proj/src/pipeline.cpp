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

#include "segcap/pipeline.hpp"

#include <algorithm>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string_view>
#include <thread>

#include "json.hpp"
#include "segcap/errors.hpp"
#include "segcap/uscdf.hpp"

namespace segcap {

using nlohmann::json;

void PipelineConfig::check() const {
  if (!(tau_contain > 0.0) || tau_contain > 1.0) {
    throw Error(ErrorKind::ConfigError, "tau_contain must lie in (0, 1]");
  }
  if (max_retries < 0) {
    throw Error(ErrorKind::ConfigError, "max_retries must be >= 0");
  }
  if (concurrency < 1) {
    throw Error(ErrorKind::ConfigError, "concurrency must be >= 1");
  }
}

PipelineConfig load_pipeline_config(const std::string& path) {
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

  PipelineConfig cfg;
  const auto get_str = [&](const json& obj, const char* key,
                           std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) {
      throw Error(ErrorKind::ConfigError,
                  std::string("config field '") + key + "' must be a string");
    }
    out = obj.at(key).get<std::string>();
  };

  if (j.contains("tau_contain")) {
    if (!j["tau_contain"].is_number()) {
      throw Error(ErrorKind::ConfigError, "tau_contain must be a number");
    }
    cfg.tau_contain = j["tau_contain"].get<double>();
  }
  if (j.contains("max_retries")) {
    if (!j["max_retries"].is_number_integer()) {
      throw Error(ErrorKind::ConfigError, "max_retries must be an integer");
    }
    cfg.max_retries = j["max_retries"].get<int>();
  }
  if (j.contains("concurrency")) {
    if (!j["concurrency"].is_number_integer()) {
      throw Error(ErrorKind::ConfigError, "concurrency must be an integer");
    }
    cfg.concurrency = j["concurrency"].get<int>();
  }
  if (j.contains("client")) {
    const json& c = j["client"];
    if (!c.is_object()) {
      throw Error(ErrorKind::ConfigError, "'client' must be an object");
    }
    get_str(c, "kind", cfg.client.kind);
    get_str(c, "endpoint", cfg.client.endpoint);
    get_str(c, "model", cfg.client.model);
    get_str(c, "api_key_env", cfg.client.api_key_env);
    get_str(c, "label_prompt", cfg.client.label_prompt);
    get_str(c, "organize_prompt", cfg.client.organize_prompt);
  }
  if (j.contains("templates")) {
    // Template overrides share the loader's schema; route through a file
    // would be awkward here, so apply the same rules inline.
    const json& t = j["templates"];
    if (!t.is_object()) {
      throw Error(ErrorKind::ConfigError, "'templates' must be an object");
    }
    const auto pool = [&](const char* key, std::vector<std::string>& dst) {
      if (!t.contains(key)) return;
      const json& v = t.at(key);
      if (!v.is_array() || v.empty()) {
        throw Error(ErrorKind::ConfigError,
                    std::string("template pool '") + key +
                        "' must be a nonempty array");
      }
      dst.clear();
      for (const json& e : v) {
        if (!e.is_string()) {
          throw Error(ErrorKind::ConfigError,
                      std::string("template pool '") + key +
                          "' must hold strings");
        }
        dst.push_back(e.get<std::string>());
      }
    };
    pool("referring_instruction", cfg.templates.referring_instruction);
    pool("referring_response", cfg.templates.referring_response);
    pool("empty_referring_instruction",
         cfg.templates.empty_referring_instruction);
    pool("empty_referring_response", cfg.templates.empty_referring_response);
    pool("panoptic_instruction", cfg.templates.panoptic_instruction);
    pool("panoptic_response", cfg.templates.panoptic_response);
    pool("fine_grained_instruction", cfg.templates.fine_grained_instruction);
    pool("fine_grained_response", cfg.templates.fine_grained_response);
    pool("gcg_instruction", cfg.templates.gcg_instruction);
  }
  cfg.check();
  return cfg;
}

std::vector<MaskRecord> step1_label_objects(
    const std::string& image_ref,
    const std::vector<std::pair<std::string, BinaryMask>>& masks,
    AnnotatorClient& client, int max_retries) {
  if (masks.empty()) {
    throw Error(ErrorKind::EmptyInput, image_ref + " carries no masks");
  }
  std::vector<MaskRecord> out;
  out.reserve(masks.size());
  for (const auto& [id, mask] : masks) {
    AnnotatorClient::Labels labels;
    std::string last_error;
    bool labeled = false;
    bool empty_caption = false;
    for (int attempt = 0; attempt <= max_retries && !labeled; ++attempt) {
      try {
        labels = client.label_object(image_ref, id, mask);
      } catch (const std::exception& e) {
        last_error = e.what();
        empty_caption = false;
        continue;
      }
      if (labels.short_caption.empty() || labels.detailed_caption.empty()) {
        empty_caption = true;
        continue;
      }
      labeled = true;
    }
    if (!labeled) {
      if (empty_caption) {
        throw Error(ErrorKind::EmptyCaption,
                    "annotator kept returning empty captions for mask " + id);
      }
      throw Error(ErrorKind::ClientError,
                  "labeling mask " + id + " failed: " + last_error);
    }
    out.push_back(MaskRecord::make(id, mask, labels.short_caption,
                                   labels.detailed_caption));
  }
  return out;
}

MaskTree step2_build_tree(const ImageMeta& meta,
                          std::vector<MaskRecord> records,
                          const PipelineConfig& config) {
  return merge_same_label_siblings(
      build_tree(meta, std::move(records), config.tau_contain));
}

namespace {

constexpr std::string_view kSegTagOpen = "[SEG:";

// Replaces every `[SEG:id]` with `[SEG]` and returns the ids in order.
// A malformed tag (unterminated) is left in place for parse to reject.
std::string rewrite_seg_tags(std::string_view woven,
                             std::vector<std::string>& ids) {
  std::string out;
  out.reserve(woven.size());
  std::size_t pos = 0;
  while (pos < woven.size()) {
    const std::size_t at = woven.find(kSegTagOpen, pos);
    if (at == std::string_view::npos) {
      out += woven.substr(pos);
      break;
    }
    const std::size_t close = woven.find(']', at + kSegTagOpen.size());
    if (close == std::string_view::npos) {
      out += woven.substr(pos);
      break;
    }
    out += woven.substr(pos, at - pos);
    out += kSegToken;
    ids.emplace_back(
        woven.substr(at + kSegTagOpen.size(), close - at - kSegTagOpen.size()));
    pos = close + 1;
  }
  return out;
}

struct WeaveResult {
  GroundedResponse response;
  std::vector<std::string> bindings;
};

// Asks the client for woven text and enforces the coverage contract: every
// scope node exactly once, labels matching, grammar intact.
WeaveResult weave_context(const MaskTree& tree, AnnotatorClient& client,
                          const std::vector<std::string>& scope,
                          int max_retries) {
  std::vector<AnnotatorClient::ContextItem> items;
  std::map<std::string, std::string> label_of;
  for (const auto& id : scope) {
    const MaskRecord& node = tree.node(id);
    items.push_back({id, node.short_caption, node.detailed_caption});
    label_of[id] = node.short_caption;
  }

  std::string last_error;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::string woven;
    try {
      woven = client.organize_context(tree.image_id(), items);
    } catch (const std::exception& e) {
      last_error = e.what();
      continue;
    }

    std::vector<std::string> ids;
    const std::string rewritten = rewrite_seg_tags(woven, ids);

    if (ids.size() != scope.size()) {
      last_error = "woven text binds " + std::to_string(ids.size()) +
                   " of " + std::to_string(scope.size()) + " nodes";
      continue;
    }
    const std::set<std::string> want(scope.begin(), scope.end());
    const std::set<std::string> got(ids.begin(), ids.end());
    if (want != got) {
      last_error = "woven text omits, repeats, or invents node ids";
      continue;
    }

    GroundedResponse response;
    try {
      response = parse(rewritten);
    } catch (const Error& e) {
      last_error = e.what();
      continue;
    }
    if (response.spans.size() != ids.size()) {
      last_error = "woven text has stray phrases without [SEG:...] tags";
      continue;
    }
    bool labels_match = true;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (response.spans[i].text.empty()) {
        labels_match = false;
        last_error = "node " + ids[i] + " weaves an empty phrase";
        break;
      }
      if (response.spans[i].text != label_of.at(ids[i])) {
        labels_match = false;
        last_error = "phrase '" + response.spans[i].text +
                     "' does not match the label of node " + ids[i];
        break;
      }
    }
    if (!labels_match) continue;

    return {std::move(response), std::move(ids)};
  }
  throw Error(ErrorKind::AlignmentFailure, last_error);
}

std::string expand_target(std::string text, std::string_view value) {
  const std::string token = "{target}";
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

std::vector<GroundedSample> step3_dense_context(
    const MaskTree& tree, AnnotatorClient& client, int max_retries,
    const TemplatePool& templates, std::vector<std::string>* dropped_log) {
  std::vector<GroundedSample> out;
  if (tree.nodes().empty()) return out;
  const std::string image_token(kImageToken);

  const auto emit = [&](Granularity granularity,
                        const std::optional<std::string>& target,
                        const std::string& instruction_body,
                        const std::vector<std::string>& scope) {
    WeaveResult woven;
    try {
      woven = weave_context(tree, client, scope, max_retries);
    } catch (const Error& e) {
      if (dropped_log != nullptr) {
        dropped_log->push_back(
            tree.image_id() + ": " +
            (target ? "fine-grained sample for node " + *target
                    : std::string("panoptic sample")) +
            " dropped: " + e.what());
      }
      return;
    }
    GroundedSample sample;
    sample.image_id = tree.image_id();
    sample.granularity = granularity;
    sample.target_node = target;
    sample.instruction = image_token + " " + instruction_body;
    sample.response = std::move(woven.response);
    sample.seg_bindings = std::move(woven.bindings);
    out.push_back(std::move(sample));
  };

  emit(Granularity::kPanoptic, std::nullopt,
       templates.panoptic_instruction.front(),
       tree.children(std::string(kRootId)));

  for (const std::string& id : descendants(tree, std::string(kRootId))) {
    if (tree.children(id).empty()) continue;
    const std::string& label = tree.node(id).short_caption;
    emit(Granularity::kFineGrained, id,
         expand_target(templates.fine_grained_instruction.front(),
                       label.empty() ? id : label),
         descendants(tree, id));
  }
  return out;
}

namespace {

struct ImageOutcome {
  std::optional<DatasetDocument> document;
  std::vector<std::string> log;
};

ImageOutcome process_image(const ManifestEntry& entry,
                           const PipelineConfig& config,
                           AnnotatorClient& client) {
  ImageOutcome outcome;
  try {
    if (!std::filesystem::exists(entry.image_path)) {
      throw Error(ErrorKind::IoError,
                  "image file " + entry.image_path + " is missing");
    }
    if (entry.masks.empty()) {
      throw Error(ErrorKind::EmptyInput, "manifest entry carries no masks");
    }
    ImageMeta meta;
    meta.image_id = entry.image_id;
    meta.image_path = entry.image_path;
    meta.height = entry.masks.front().second.height();
    meta.width = entry.masks.front().second.width();

    auto records =
        step1_label_objects(entry.image_id, entry.masks, client,
                            config.max_retries);
    auto tree = step2_build_tree(meta, std::move(records), config);
    auto samples = step3_dense_context(tree, client, config.max_retries,
                                       config.templates, &outcome.log);
    outcome.document = to_document(meta, tree, samples);
  } catch (const std::exception& e) {
    outcome.document.reset();
    outcome.log.push_back(entry.image_id + ": " + e.what());
  }
  return outcome;
}

// Scans an existing output file; returns the ids of intact documents and
// truncates any torn final line (no trailing newline or unparseable tail).
std::set<std::string> recover_output(const std::string& path) {
  std::set<std::string> done;
  std::ifstream in(path, std::ios::binary);
  if (!in) return done;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();

  std::size_t good_end = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t nl = content.find('\n', pos);
    if (nl == std::string::npos) break;  // no terminator: torn line
    const std::string line = content.substr(pos, nl - pos);
    if (!line.empty()) {
      try {
        done.insert(document_from_json(json::parse(line)).image_id);
      } catch (...) {
        break;  // cut the file at the first damaged line
      }
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end != content.size()) {
    std::filesystem::resize_file(path, good_end);
  }
  return done;
}

}  // namespace

RunReport run_pipeline(const std::vector<ManifestEntry>& manifest,
                       const PipelineConfig& config, AnnotatorClient& client,
                       const std::string& out_path, bool resume) {
  config.check();
  {
    std::set<std::string> ids;
    for (const auto& e : manifest) {
      if (!ids.insert(e.image_id).second) {
        throw Error(ErrorKind::DuplicateId,
                    "manifest lists image " + e.image_id + " twice");
      }
    }
  }

  std::set<std::string> done;
  if (resume) {
    done = recover_output(out_path);
  } else if (std::filesystem::exists(out_path)) {
    std::filesystem::resize_file(out_path, 0);
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (done.count(manifest[i].image_id) == 0) pending.push_back(i);
  }

  std::ofstream out(out_path, std::ios::binary | std::ios::app);
  if (!out) {
    throw Error(ErrorKind::IoError, "cannot open " + out_path + " for append");
  }

  RunReport report;
  const int threads =
      client.supports_concurrent_calls()
          ? std::min<int>(config.concurrency,
                          static_cast<int>(std::max<std::size_t>(pending.size(), 1)))
          : 1;

  std::mutex mu;
  std::condition_variable cv;
  std::size_t next_claim = 0;   // next pending slot to hand to a worker
  std::size_t next_write = 0;   // next pending slot the writer needs
  std::map<std::size_t, ImageOutcome> ready;

  const auto worker = [&] {
    for (;;) {
      std::size_t slot;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next_claim >= pending.size()) return;
        slot = next_claim++;
      }
      ImageOutcome outcome =
          process_image(manifest[pending[slot]], config, client);
      {
        std::lock_guard<std::mutex> lock(mu);
        ready.emplace(slot, std::move(outcome));
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);

  while (next_write < pending.size()) {
    ImageOutcome outcome;
    {
      std::unique_lock<std::mutex> lock(mu);
      cv.wait(lock, [&] { return ready.count(next_write) > 0; });
      outcome = std::move(ready.at(next_write));
      ready.erase(next_write);
      ++next_write;
    }
    if (outcome.document) {
      out << document_to_json(*outcome.document).dump() << '\n';
      out.flush();
      if (!out) {
        for (auto& th : pool) th.join();
        throw Error(ErrorKind::IoError, "short write to " + out_path);
      }
    }
    for (auto& line : outcome.log) {
      report.failure_log.push_back(std::move(line));
    }
  }
  for (auto& th : pool) th.join();
  out.close();

  const auto docs = read_documents(out_path);
  const DatasetStats stats = compute_stats(docs);
  report.images = stats.images;
  report.samples = stats.conversations;
  report.masks = stats.masks;
  report.tokens = stats.tokens;
  report.failures = report.failure_log.size();
  return report;
}

RunReport run_pipeline(const std::string& manifest_path,
                       const PipelineConfig& config,
                       const std::string& out_path, bool resume) {
  const auto manifest = read_manifest(manifest_path);
  const auto client = make_client(config.client);
  return run_pipeline(manifest, config, *client, out_path, resume);
}

}  // namespace segcap
