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

#include "segcap/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "segcap/dataset_io.hpp"
#include "segcap/errors.hpp"
#include "segcap/uscdf.hpp"

namespace segcap {

using nlohmann::json;

std::vector<std::string> tokenize_caption(std::string_view text) {
  std::string norm;
  norm.reserve(text.size());
  for (const char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::ispunct(c)) {
      norm += ' ';
    } else {
      norm += static_cast<char>(std::tolower(c));
    }
  }
  std::vector<std::string> tokens;
  std::istringstream stream(norm);
  std::string token;
  while (stream >> token) tokens.push_back(std::move(token));
  return tokens;
}

double token_f1(std::string_view a, std::string_view b) {
  const auto ta = tokenize_caption(a);
  const auto tb = tokenize_caption(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : ta) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : tb) {
    const auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / ta.size();
  const double recall = static_cast<double>(common) / tb.size();
  return 2.0 * precision * recall / (precision + recall);
}

double ciou(const std::vector<MaskSample>& samples) {
  std::uint64_t inter_sum = 0;
  std::uint64_t union_sum = 0;
  for (const auto& s : samples) {
    const std::uint64_t inter = intersection_area(s.pred, s.gt);
    inter_sum += inter;
    union_sum += s.pred.area() + s.gt.area() - inter;
  }
  if (union_sum == 0) return 1.0;
  return static_cast<double>(inter_sum) / static_cast<double>(union_sum);
}

double giou(const std::vector<MaskSample>& samples) {
  if (samples.empty()) return 1.0;
  double total = 0.0;
  for (const auto& s : samples) {
    if (s.pred.empty() && s.gt.empty()) {
      total += 1.0;
    } else if (s.pred.empty() || s.gt.empty()) {
      total += 0.0;
    } else {
      total += iou(s.pred, s.gt);
    }
  }
  return total / static_cast<double>(samples.size());
}

double miou(const std::vector<MaskSample>& samples) {
  if (samples.empty()) return 1.0;
  double total = 0.0;
  for (const auto& s : samples) total += iou(s.pred, s.gt);
  return total / static_cast<double>(samples.size());
}

double ap50(const std::vector<ImagePairs>& images) {
  struct Detection {
    double score;
    std::size_t image;
    std::size_t index;
  };
  std::vector<Detection> detections;
  std::uint64_t total_gt = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    total_gt += images[i].gts.size();
    for (std::size_t j = 0; j < images[i].preds.size(); ++j) {
      detections.push_back({images[i].preds[j].score, i, j});
    }
  }
  if (total_gt == 0) return detections.empty() ? 1.0 : 0.0;
  if (detections.empty()) return 0.0;

  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.score > b.score;
                   });

  std::vector<std::vector<bool>> gt_used(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    gt_used[i].assign(images[i].gts.size(), false);
  }

  const std::size_t n = detections.size();
  std::vector<double> precision(n), recall(n);
  std::uint64_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Detection& det = detections[k];
    const auto& pred = images[det.image].preds[det.index];
    const auto& gts = images[det.image].gts;
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[det.image][g]) continue;
      const double overlap = iou(pred.mask, gts[g].mask);
      if (overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best >= 0.5) {
      gt_used[det.image][best_gt] = true;
      ++tp;
    }
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }

  // All-point interpolation: running precision envelope from the right,
  // integrated over the recall steps.
  for (std::size_t k = n - 1; k-- > 0;) {
    precision[k] = std::max(precision[k], precision[k + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

double mask_recall(const std::vector<ImagePairs>& images, double iou_thr,
                   double text_thr) {
  std::uint64_t total_gt = 0;
  std::uint64_t matched = 0;
  for (const auto& image : images) {
    total_gt += image.gts.size();
    std::vector<bool> used(image.preds.size(), false);
    for (const auto& gt : image.gts) {
      std::vector<std::pair<double, std::size_t>> candidates;
      for (std::size_t j = 0; j < image.preds.size(); ++j) {
        if (used[j]) continue;
        candidates.emplace_back(iou(image.preds[j].mask, gt.mask), j);
      }
      std::stable_sort(candidates.begin(), candidates.end(),
                       [](const auto& a, const auto& b) {
                         return a.first > b.first;
                       });
      for (const auto& [overlap, j] : candidates) {
        if (overlap < iou_thr) break;
        if (token_f1(image.preds[j].phrase, gt.phrase) >= text_thr) {
          used[j] = true;
          ++matched;
          break;
        }
      }
    }
  }
  if (total_gt == 0) return 1.0;
  return static_cast<double>(matched) / static_cast<double>(total_gt);
}

namespace {

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::uint64_t>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts out;
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() < len) return out;
  for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
    Ngram gram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
               tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
    ++out[std::move(gram)];
  }
  return out;
}

using TfIdf = std::map<Ngram, double>;

double vector_norm(const TfIdf& v) {
  double sum = 0.0;
  for (const auto& [gram, weight] : v) sum += weight * weight;
  return std::sqrt(sum);
}

double cosine(const TfIdf& a, const TfIdf& b) {
  const double na = vector_norm(a);
  const double nb = vector_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [gram, weight] : a) {
    const auto it = b.find(gram);
    if (it != b.end()) dot += weight * it->second;
  }
  return dot / (na * nb);
}

}  // namespace

double cider(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "candidate and reference sequences differ in length");
  }
  if (candidates.empty()) {
    throw Error(ErrorKind::EmptyCorpus, "no images to score");
  }
  const std::size_t corpus = candidates.size();

  std::vector<std::vector<std::string>> cand_tokens(corpus);
  std::vector<std::vector<std::vector<std::string>>> ref_tokens(corpus);
  for (std::size_t i = 0; i < corpus; ++i) {
    if (references[i].empty()) {
      throw Error(ErrorKind::EmptyCorpus,
                  "image " + std::to_string(i) + " has no references");
    }
    cand_tokens[i] = tokenize_caption(candidates[i]);
    for (const auto& ref : references[i]) {
      ref_tokens[i].push_back(tokenize_caption(ref));
    }
  }

  // Document frequency per n: how many images' reference sets hold the gram.
  std::array<std::map<Ngram, std::uint64_t>, 5> doc_freq;
  for (std::size_t i = 0; i < corpus; ++i) {
    for (int n = 1; n <= 4; ++n) {
      std::set<Ngram> seen;
      for (const auto& ref : ref_tokens[i]) {
        for (const auto& [gram, count] : count_ngrams(ref, n)) {
          seen.insert(gram);
        }
      }
      for (const auto& gram : seen) ++doc_freq[n][gram];
    }
  }

  const auto weigh = [&](const std::vector<std::string>& tokens, int n) {
    TfIdf v;
    const auto& df = doc_freq[n];
    for (const auto& [gram, count] : count_ngrams(tokens, n)) {
      const auto it = df.find(gram);
      const std::uint64_t d = it == df.end() ? 0 : it->second;
      const double idf = std::log(static_cast<double>(corpus)) -
                         std::log(static_cast<double>(std::max<std::uint64_t>(1, d)));
      v[gram] = static_cast<double>(count) * idf;
    }
    return v;
  };

  double total = 0.0;
  for (std::size_t i = 0; i < corpus; ++i) {
    double image_score = 0.0;
    for (int n = 1; n <= 4; ++n) {
      const TfIdf cand = weigh(cand_tokens[i], n);
      double avg = 0.0;
      for (const auto& ref : ref_tokens[i]) {
        avg += cosine(cand, weigh(ref, n));
      }
      image_score += avg / static_cast<double>(ref_tokens[i].size());
    }
    total += 10.0 * image_score / 4.0;
  }
  return total / static_cast<double>(corpus);
}

std::string to_string(EvalTask task) {
  switch (task) {
    case EvalTask::kReferring: return "referring";
    case EvalTask::kGcg: return "gcg";
    case EvalTask::kMgsc: return "mgsc";
  }
  throw Error(ErrorKind::ConfigError, "unknown evaluation task value");
}

EvalTask eval_task_from_string(std::string_view text) {
  if (text == "referring") return EvalTask::kReferring;
  if (text == "gcg") return EvalTask::kGcg;
  if (text == "mgsc") return EvalTask::kMgsc;
  throw Error(ErrorKind::ConfigError,
              "unknown evaluation task '" + std::string(text) + "'");
}

namespace {

bool task_selects(EvalTask task, Granularity granularity) {
  switch (task) {
    case EvalTask::kReferring:
      return granularity == Granularity::kReferring;
    case EvalTask::kGcg:
      return granularity == Granularity::kPanoptic ||
             granularity == Granularity::kCaptionOnly;
    case EvalTask::kMgsc:
      return granularity == Granularity::kPanoptic ||
             granularity == Granularity::kFineGrained;
  }
  return false;
}

bool task_uses_captions(EvalTask task) { return task != EvalTask::kReferring; }

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  json metrics;
  metrics["ciou"] = report.ciou;
  if (task_uses_captions(report.task)) {
    metrics["miou"] = report.miou;
    metrics["ap50"] = report.ap50;
    metrics["mask_recall"] = report.mask_recall;
    metrics["cider"] = report.cider;
  } else {
    metrics["giou"] = report.giou;
  }
  json images = json::array();
  for (const auto& row : report.per_image) {
    images.push_back(json{{"image_id", row.image_id},
                          {"pred_pairs", row.pred_pairs},
                          {"gt_pairs", row.gt_pairs},
                          {"mean_iou", row.mean_iou}});
  }
  return json{{"task", to_string(report.task)},
              {"metrics", std::move(metrics)},
              {"images", std::move(images)}};
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "task: " << to_string(report.task) << "\n";
  char line[64];
  const auto metric = [&](const char* name, double value) {
    std::snprintf(line, sizeof(line), "%-12s %.6f\n", name, value);
    out << line;
  };
  metric("ciou", report.ciou);
  if (task_uses_captions(report.task)) {
    metric("miou", report.miou);
    metric("ap50", report.ap50);
    metric("mask_recall", report.mask_recall);
    metric("cider", report.cider);
  } else {
    metric("giou", report.giou);
  }
  out << "\nimage  preds  gts  mean_iou\n";
  for (const auto& row : report.per_image) {
    std::snprintf(line, sizeof(line), "  %zu  %zu  %.6f\n",
                  static_cast<std::size_t>(row.pred_pairs),
                  static_cast<std::size_t>(row.gt_pairs), row.mean_iou);
    out << row.image_id << line;
  }
  return out.str();
}

EvalReport evaluate_dataset(const std::string& pred_path,
                            const std::string& gt_path, EvalTask task) {
  const auto gt_docs = read_documents(gt_path);
  if (gt_docs.empty()) {
    throw Error(ErrorKind::EmptyInput, gt_path + " holds no documents");
  }
  const auto pred_docs = read_predictions(pred_path);
  std::map<std::string, const PredDocument*> preds_by_id;
  for (const auto& pred : pred_docs) {
    if (!preds_by_id.emplace(pred.image_id, &pred).second) {
      throw Error(ErrorKind::DuplicateId,
                  pred_path + " lists image " + pred.image_id + " twice");
    }
  }

  EvalReport report;
  report.task = task;
  std::vector<MaskSample> samples;
  std::vector<ImagePairs> images;
  std::vector<std::string> captions;
  std::vector<std::vector<std::string>> reference_sets;
  std::set<std::string> seen_gt_ids;

  for (const auto& doc : gt_docs) {
    if (!seen_gt_ids.insert(doc.image_id).second) {
      throw Error(ErrorKind::DuplicateId,
                  gt_path + " lists image " + doc.image_id + " twice");
    }
    std::map<std::string, const BinaryMask*> mask_of;
    for (const auto& entry : doc.masks) mask_of[entry.id] = &entry.mask;

    ImagePairs image;
    std::vector<std::string> references;
    for (const auto& conv : doc.conversations) {
      if (!task_selects(task, conv.granularity)) continue;
      GroundedResponse response;
      try {
        response = parse(conv.assistant);
      } catch (const Error& e) {
        throw Error(ErrorKind::SchemaError,
                    doc.image_id + ": unparseable assistant text: " +
                        e.what());
      }
      if (response.spans.size() != conv.seg_bindings.size()) {
        throw Error(ErrorKind::SchemaError,
                    doc.image_id + ": conversation binds " +
                        std::to_string(conv.seg_bindings.size()) +
                        " masks for " + std::to_string(response.spans.size()) +
                        " phrases");
      }
      for (std::size_t k = 0; k < response.spans.size(); ++k) {
        const auto it = mask_of.find(conv.seg_bindings[k]);
        if (it == mask_of.end()) {
          throw Error(ErrorKind::SchemaError,
                      doc.image_id + ": seg binding " + conv.seg_bindings[k] +
                          " names no mask");
        }
        image.gts.push_back({response.spans[k].text, *it->second});
      }
      references.push_back(response.plain_text);
    }

    std::string caption;
    if (const auto it = preds_by_id.find(doc.image_id);
        it != preds_by_id.end()) {
      for (const auto& pair : it->second->pairs) {
        if (pair.mask.height() != doc.height ||
            pair.mask.width() != doc.width) {
          throw Error(ErrorKind::DimensionMismatch,
                      doc.image_id + ": prediction mask is " +
                          std::to_string(pair.mask.height()) + "x" +
                          std::to_string(pair.mask.width()) + ", image is " +
                          std::to_string(doc.height) + "x" +
                          std::to_string(doc.width));
        }
        image.preds.push_back({pair.phrase, pair.mask, pair.score});
      }
      caption = it->second->caption;
    }

    const BinaryMask blank = BinaryMask::from_counts(
        doc.height, doc.width,
        {static_cast<std::uint64_t>(doc.height) * doc.width});
    const std::size_t paired =
        std::max(image.preds.size(), image.gts.size());
    std::vector<MaskSample> image_samples;
    for (std::size_t i = 0; i < paired; ++i) {
      MaskSample sample;
      sample.pred = i < image.preds.size() ? image.preds[i].mask : blank;
      sample.gt = i < image.gts.size() ? image.gts[i].mask : blank;
      image_samples.push_back(sample);
    }

    ImageBreakdown row;
    row.image_id = doc.image_id;
    row.pred_pairs = image.preds.size();
    row.gt_pairs = image.gts.size();
    row.mean_iou = miou(image_samples);
    report.per_image.push_back(std::move(row));

    samples.insert(samples.end(), image_samples.begin(), image_samples.end());
    images.push_back(std::move(image));
    captions.push_back(std::move(caption));
    reference_sets.push_back(std::move(references));
  }

  report.ciou = ciou(samples);
  if (task_uses_captions(task)) {
    report.miou = miou(samples);
    report.ap50 = ap50(images);
    report.mask_recall = mask_recall(images);
    report.cider = cider(captions, reference_sets);
  } else {
    report.giou = giou(samples);
  }
  return report;
}

}  // namespace segcap
