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
// Command-line surface: convert adapter inputs, run the annotation pipeline,
// inspect containment trees, validate and summarize dataset files, and score
// prediction files.

#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "segcap/converters.hpp"
#include "segcap/dataset_io.hpp"
#include "segcap/errors.hpp"
#include "segcap/metrics.hpp"
#include "segcap/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace segcap;

[[noreturn]] void schema_fail(const std::string& context,
                              const std::string& what) {
  throw Error(ErrorKind::SchemaError, context + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) {
    schema_fail(context, std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string str_field(const json& j, const char* key,
                      const std::string& context) {
  const json& v = need(j, key, context);
  if (!v.is_string()) {
    schema_fail(context, std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::uint32_t dim_field(const json& j, const char* key,
                        const std::string& context) {
  const json& v = need(j, key, context);
  if (!(v.is_number_unsigned() ||
        (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
    schema_fail(context,
                std::string("field '") + key + "' must be a nonnegative int");
  }
  return v.get<std::uint32_t>();
}

// Streams JSON lines through fn(line_json, "path:lineno"); blank lines skip.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      schema_fail(context, e.what());
    }
    fn(j, context);
  }
}

ImageMeta meta_of(const json& j, const std::string& context) {
  ImageMeta meta;
  meta.image_id = str_field(j, "image_id", context);
  meta.image_path = str_field(j, "image_path", context);
  meta.height = dim_field(j, "height", context);
  meta.width = dim_field(j, "width", context);
  return meta;
}

BinaryMask mask_field(const json& j, const std::string& context) {
  try {
    return rle_from_json(need(j, "rle", context));
  } catch (const Error& e) {
    schema_fail(context, e.what());
  }
}

int cmd_convert(const std::string& task, const std::string& in_path,
                const std::string& out_path,
                const std::string& templates_path) {
  const TemplatePool pool = templates_path.empty()
                                ? TemplatePool::defaults()
                                : load_template_pool(templates_path);
  std::vector<DatasetDocument> docs;
  for_each_line(in_path, [&](const json& j, const std::string& context) {
    const ImageMeta meta = meta_of(j, context);
    ConvertedImage converted;
    if (task == "referring") {
      std::vector<Referent> referents;
      const json& arr = need(j, "referents", context);
      if (!arr.is_array()) schema_fail(context, "'referents' must be a list");
      for (const json& r : arr) {
        referents.push_back(
            {str_field(r, "expression", context), mask_field(r, context)});
      }
      converted = from_referring(meta, referents, pool);
    } else if (task == "panoptic") {
      std::vector<Segment> segments;
      const json& arr = need(j, "segments", context);
      if (!arr.is_array()) schema_fail(context, "'segments' must be a list");
      for (const json& s : arr) {
        segments.push_back(
            {str_field(s, "category", context), mask_field(s, context)});
      }
      converted = from_panoptic(meta, segments, pool);
    } else {
      const std::string caption = str_field(j, "caption", context);
      std::vector<Grounding> groundings;
      const json& arr = need(j, "groundings", context);
      if (!arr.is_array()) schema_fail(context, "'groundings' must be a list");
      for (const json& g : arr) {
        Grounding grounding;
        grounding.begin = dim_field(g, "begin", context);
        grounding.end = dim_field(g, "end", context);
        grounding.mask = mask_field(g, context);
        groundings.push_back(std::move(grounding));
      }
      converted = from_gcg(meta, caption, groundings, pool);
    }
    docs.push_back(to_document(converted));
  });

  std::size_t violations = 0;
  std::size_t conversations = 0;
  for (const auto& doc : docs) {
    conversations += doc.conversations.size();
    for (const auto& violation : validate_document(doc)) {
      std::cerr << doc.image_id << ": " << violation << "\n";
      ++violations;
    }
  }
  write_documents(out_path, docs);
  std::cout << "converted " << docs.size() << " images into " << conversations
            << " conversations -> " << out_path << "\n";
  if (violations > 0) {
    std::cerr << violations << " validation violation(s)\n";
    return 1;
  }
  return 0;
}

int cmd_annotate(const std::string& manifest_path,
                 const std::string& config_path, const std::string& out_path,
                 bool resume, const std::string& client_override,
                 const std::string& report_path) {
  PipelineConfig config = config_path.empty() ? PipelineConfig{}
                                              : load_pipeline_config(config_path);
  if (!client_override.empty()) config.client.kind = client_override;
  const RunReport report = run_pipeline(manifest_path, config, out_path, resume);

  std::cout << "images       " << report.images << "\n"
            << "samples      " << report.samples << "\n"
            << "masks        " << report.masks << "\n"
            << "tokens       " << report.tokens << "\n"
            << "failures     " << report.failures << "\n";
  for (const auto& line : report.failure_log) {
    std::cerr << "failed: " << line << "\n";
  }
  if (!report_path.empty()) {
    json j{{"images", report.images},       {"samples", report.samples},
           {"masks", report.masks},         {"tokens", report.tokens},
           {"failures", report.failures},   {"failure_log", report.failure_log}};
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + report_path);
    out << j.dump() << "\n";
  }
  return report.failures == 0 ? 0 : 1;
}

int cmd_tree(const std::string& manifest_path, double tau,
             const std::string& out_path) {
  const auto entries = read_manifest(manifest_path);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + out_path);
  std::size_t failures = 0;
  for (const auto& entry : entries) {
    try {
      if (entry.masks.empty()) {
        throw Error(ErrorKind::EmptyInput, "manifest entry carries no masks");
      }
      ImageMeta meta;
      meta.image_id = entry.image_id;
      meta.image_path = entry.image_path;
      meta.height = entry.masks.front().second.height();
      meta.width = entry.masks.front().second.width();
      std::vector<MaskRecord> records;
      for (const auto& [id, mask] : entry.masks) {
        records.push_back(MaskRecord::make(id, mask));
      }
      const MaskTree tree =
          merge_same_label_siblings(build_tree(meta, std::move(records), tau));
      json parent = json::object();
      for (const auto& [id, pid] : tree.parents()) parent[id] = pid;
      json merged = json::object();
      for (const auto& [id, members] : tree.merged_from()) {
        merged[id] = members;
      }
      out << json{{"image_id", entry.image_id},
                  {"parent", std::move(parent)},
                  {"merged_from", std::move(merged)}}
                 .dump()
          << "\n";
    } catch (const Error& e) {
      std::cerr << entry.image_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  std::cout << "processed " << (entries.size() - failures) << " of "
            << entries.size() << " images -> " << out_path << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_validate(const std::string& dataset_path) {
  const auto docs = read_documents(dataset_path);
  std::size_t violations = 0;
  std::set<std::string> seen;
  for (const auto& doc : docs) {
    if (!seen.insert(doc.image_id).second) {
      std::cerr << doc.image_id << ": duplicate image id\n";
      ++violations;
    }
    for (const auto& violation : validate_document(doc)) {
      std::cerr << doc.image_id << ": " << violation << "\n";
      ++violations;
    }
  }
  if (violations > 0) {
    std::cout << docs.size() << " documents, " << violations
              << " violation(s)\n";
    return 1;
  }
  std::cout << docs.size() << " documents, all valid\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path, bool as_json) {
  const auto docs = read_documents(dataset_path);
  const DatasetStats stats = compute_stats(docs);
  if (as_json) {
    json by_granularity = json::object();
    for (const auto& [name, n] : stats.by_granularity) by_granularity[name] = n;
    std::cout << json{{"images", stats.images},
                      {"conversations", stats.conversations},
                      {"masks", stats.masks},
                      {"tokens", stats.tokens},
                      {"by_granularity", std::move(by_granularity)}}
                     .dump()
              << "\n";
    return 0;
  }
  std::cout << "images         " << stats.images << "\n"
            << "conversations  " << stats.conversations << "\n"
            << "masks          " << stats.masks << "\n"
            << "tokens         " << stats.tokens << "\n";
  for (const auto& [name, n] : stats.by_granularity) {
    std::cout << "  " << name << "  " << n << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& task_name, const std::string& pred_path,
                 const std::string& gt_path, const std::string& report_path) {
  const EvalTask task = eval_task_from_string(task_name);
  const EvalReport report = evaluate_dataset(pred_path, gt_path, task);
  std::cout << format_report(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + report_path);
    out << report_to_json(report).dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segcap: multi-granularity segmentation-and-captioning toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  auto* convert = app.add_subcommand(
      "convert", "Convert adapter inputs (JSONL) into dataset documents");
  std::string convert_task, convert_in, convert_out, convert_templates;
  convert->add_option("--task", convert_task, "Input flavor")
      ->required()
      ->check(CLI::IsMember({"referring", "panoptic", "gcg"}));
  convert->add_option("--in", convert_in, "Adapter input file")->required();
  convert->add_option("--out", convert_out, "Dataset output file")->required();
  convert->add_option("--templates", convert_templates,
                      "JSON file overriding instruction/response templates");
  convert->callback([&] {
    exit_code = cmd_convert(convert_task, convert_in, convert_out,
                            convert_templates);
  });

  auto* annotate = app.add_subcommand(
      "annotate", "Run the labeling pipeline over a mask manifest");
  std::string annotate_manifest, annotate_config, annotate_out,
      annotate_client, annotate_report;
  bool annotate_resume = false;
  annotate->add_option("--manifest", annotate_manifest, "Manifest JSONL file")
      ->required();
  annotate->add_option("--config", annotate_config, "Pipeline config JSON");
  annotate->add_option("--out", annotate_out, "Dataset output file")
      ->required();
  annotate->add_flag("--resume", annotate_resume,
                     "Keep finished documents in the output file");
  annotate->add_option("--client", annotate_client,
                       "Override the configured annotator client")
      ->check(CLI::IsMember({"stub", "http"}));
  annotate->add_option("--report", annotate_report, "Write a JSON run report");
  annotate->callback([&] {
    exit_code = cmd_annotate(annotate_manifest, annotate_config, annotate_out,
                             annotate_resume, annotate_client,
                             annotate_report);
  });

  auto* tree = app.add_subcommand(
      "tree", "Build containment trees for a manifest and dump them");
  std::string tree_manifest, tree_out;
  double tree_tau = 0.9;
  tree->add_option("--manifest", tree_manifest, "Manifest JSONL file")
      ->required();
  tree->add_option("--tau", tree_tau,
                   "Containment threshold for nesting (default 0.9)")
      ->check(CLI::Range(0.0, 1.0));
  tree->add_option("--out", tree_out, "Tree dump output file")->required();
  tree->callback(
      [&] { exit_code = cmd_tree(tree_manifest, tree_tau, tree_out); });

  auto* validate = app.add_subcommand(
      "validate", "Check a dataset file; exits nonzero on any violation");
  std::string validate_dataset;
  validate->add_option("--dataset", validate_dataset, "Dataset JSONL file")
      ->required();
  validate->callback([&] { exit_code = cmd_validate(validate_dataset); });

  auto* stats = app.add_subcommand(
      "stats",
      "Count images, conversations, masks, and whitespace tokens "
      "(token = whitespace-separated word in conversation text)");
  std::string stats_dataset;
  bool stats_json = false;
  stats->add_option("--dataset", stats_dataset, "Dataset JSONL file")
      ->required();
  stats->add_flag("--json", stats_json, "Emit the counters as JSON");
  stats->callback([&] { exit_code = cmd_stats(stats_dataset, stats_json); });

  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a prediction file against a ground-truth dataset");
  std::string eval_task, eval_pred, eval_gt, eval_report;
  evaluate->add_option("--task", eval_task, "Evaluation protocol")
      ->required()
      ->check(CLI::IsMember({"referring", "gcg", "mgsc"}));
  evaluate->add_option("--pred", eval_pred, "Prediction JSONL file")
      ->required();
  evaluate->add_option("--gt", eval_gt, "Ground-truth dataset file")
      ->required();
  evaluate->add_option("--report", eval_report, "Write the report as JSON");
  evaluate->callback([&] {
    exit_code = cmd_evaluate(eval_task, eval_pred, eval_gt, eval_report);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
