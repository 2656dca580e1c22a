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
// Evaluation metrics for grounded segmentation outputs: cumulative and mean
// IoU, average precision at IoU 0.5, phrase-aware mask recall, and a tf-idf
// consensus captioning score, plus a file-level evaluation driver.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segcap/rle.hpp"

namespace segcap {

// Case-folds ASCII letters, replaces punctuation with spaces, and splits on
// whitespace. Bytes outside ASCII pass through untouched.
std::vector<std::string> tokenize_caption(std::string_view text);

// Token-multiset F1 of two captions after tokenize_caption. Two empty token
// lists score 1.0; exactly one empty list scores 0.0.
double token_f1(std::string_view a, std::string_view b);

// One prediction/ground-truth mask pairing for the IoU aggregates.
struct MaskSample {
  BinaryMask pred;
  BinaryMask gt;
};

// Cumulative IoU: sum of intersections over sum of unions across the whole
// set, a single ratio. A zero union total (every mask empty) scores 1.0, as
// does an empty sample list.
double ciou(const std::vector<MaskSample>& samples);

// Mean per-sample IoU with the empty-target convention applied explicitly:
// (empty, empty) scores 1.0 and a one-sided empty scores 0.0. An empty
// sample list scores 1.0.
double giou(const std::vector<MaskSample>& samples);

// Mean per-sample IoU, relying on iou's own (empty, empty) = 1 convention.
// Numerically identical to giou under that convention.
double miou(const std::vector<MaskSample>& samples);

// Phrase-grounded predictions and ground truth, grouped per image.
struct PredPair {
  std::string phrase;
  BinaryMask mask;
  double score = 1.0;

  friend bool operator==(const PredPair&, const PredPair&) = default;
};

struct GtPair {
  std::string phrase;
  BinaryMask mask;

  friend bool operator==(const GtPair&, const GtPair&) = default;
};

struct ImagePairs {
  std::vector<PredPair> preds;
  std::vector<GtPair> gts;
};

// Class-agnostic average precision at mask-IoU threshold 0.5. Predictions
// are sorted by score descending, ties keeping input order (image order,
// then in-image order); each is a true positive iff its best-IoU unmatched
// ground-truth mask in the same image (ties to the lowest index) reaches
// 0.5. The precision-recall curve is integrated with all-point
// interpolation. No ground truth: 1.0 without predictions, else 0.0.
double ap50(const std::vector<ImagePairs>& images);

// Fraction of ground-truth pairs matched one-to-one by a prediction with
// mask IoU >= iou_thr and token_f1 phrase similarity >= text_thr. Ground
// truths match greedily in input order, each scanning its image's unused
// predictions by descending IoU (ties by input order) for the first that
// passes both thresholds. No ground truth at all scores 1.0.
double mask_recall(const std::vector<ImagePairs>& images,
                   double iou_thr = 0.5, double text_thr = 0.5);

// Consensus captioning score: per n in 1..4, n-gram tf-idf cosine between
// the candidate and each reference, averaged over the image's references;
// the image score is 10 times the mean over n, and the corpus score is the
// mean over images. idf = log(images) - log(max(1, images whose reference
// set holds the n-gram)). candidates[i] pairs with references[i]. Throws
// EmptyCorpus when there are no images or an image has no references, and
// DimensionMismatch when the two sequences disagree in length.
double cider(const std::vector<std::string>& candidates,
             const std::vector<std::vector<std::string>>& references);

// --- dataset-level evaluation ------------------------------------------------

enum class EvalTask {
  kReferring,   // referring conversations; reports ciou and giou
  kGcg,         // panoptic + caption-only; reports ciou, miou, ap50,
                // mask_recall, cider
  kMgsc,        // panoptic + fine-grained; same report as gcg
};

std::string to_string(EvalTask task);
EvalTask eval_task_from_string(std::string_view text);  // throws ConfigError

struct ImageBreakdown {
  std::string image_id;
  std::uint64_t pred_pairs = 0;
  std::uint64_t gt_pairs = 0;
  double mean_iou = 0.0;  // over index-paired samples; 1.0 when there are none

  friend bool operator==(const ImageBreakdown&,
                         const ImageBreakdown&) = default;
};

// Metrics outside the task's protocol stay 0.0.
struct EvalReport {
  EvalTask task = EvalTask::kReferring;
  double ciou = 0.0;
  double giou = 0.0;
  double miou = 0.0;
  double ap50 = 0.0;
  double mask_recall = 0.0;
  double cider = 0.0;
  std::vector<ImageBreakdown> per_image;
};

nlohmann::json report_to_json(const EvalReport& report);
std::string format_report(const EvalReport& report);  // aligned text table

// Scores a prediction file against a ground-truth dataset file. Ground-truth
// pairs come from the conversations the task selects: each grounded phrase
// pairs with the mask its seg binding names, concatenated in conversation
// order; reference captions are those conversations' plain texts. Preds
// match by image_id; a ground-truth image without predictions is scored
// against empty masks and an empty caption, and predictions for unknown
// image ids are ignored. For the IoU aggregates, predictions and ground
// truths pair up by index within each image, padding the shorter side with
// empty masks.
EvalReport evaluate_dataset(const std::string& pred_path,
                            const std::string& gt_path, EvalTask task);

}  // namespace segcap
