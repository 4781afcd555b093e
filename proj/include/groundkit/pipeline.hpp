#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundkit/assets.hpp"
#include "groundkit/dataset.hpp"
#include "groundkit/infer.hpp"
#include "groundkit/io.hpp"
#include "groundkit/metrics.hpp"

namespace groundkit::pipeline {

// One extracted relation tuple at file granularity, with its pairwise
// classifier key when the relation words route to one.
struct TupleRecord {
  std::string image_id;
  std::string sentence_id;
  std::string left_phrase;
  std::string right_phrase;
  ling::RelationKind kind = ling::RelationKind::Verb;
  std::vector<std::string> rel_words;
  std::optional<ppc::PairKey> key;
  bool crossed_coordination = false;
};

std::vector<TupleRecord> load_tuples_jsonl(const std::string& path);
void save_tuples_jsonl(const std::string& path,
                       std::span<const TupleRecord> tuples);

struct ExtractInputs {
  std::span<const io::SentenceRecord> sentences;
  const std::map<std::string, io::ImageBoxes>* boxes_by_image = nullptr;
  const io::FeatureTable* phrase_features = nullptr;  // key: phrase_id
  const io::FeatureTable* region_features = nullptr;  // key: image_id:b<index>
  const assets::AssetPack* assets = nullptr;
  const io::ModelBundle* bundle = nullptr;  // cca required
  const cues::DetectorScoreTable* object_scores = nullptr;
  const cues::DetectorScoreTable* adjective_scores = nullptr;
  const cues::DetectorScoreTable* subject_verb_scores = nullptr;
  const cues::DetectorScoreTable* verb_object_scores = nullptr;
};

struct ExtractResult {
  data::ValDataset dataset;  // one entry per sentence, no relations yet
  std::vector<TupleRecord> tuples;
  std::vector<metrics::GtItem> gt;
  std::vector<metrics::CandidateItem> candidates;
  std::vector<std::string> warnings;
};

// Sentence records -> parse, tuple + pronoun extraction, SPC assembly over
// the image's candidate boxes. Ground-truth cue rows are taken from a
// candidate that coincides with the ground-truth union box, when present.
ExtractResult extract_cues(const ExtractInputs& in);

// Fill per-image relations with raw pairwise costs (PPC stage): psi from the
// bank's classifier, with SPC scores under ws feeding the pair feature.
void attach_relations(data::ValDataset& ds, std::span<const TupleRecord> tuples,
                      const ppc::PairBank& bank, std::span<const double> ws);

// Pair-bank training set from an extracted dataset: one instance per keyed
// tuple whose phrases carry ground truth and ground-truth cue rows.
std::vector<ppc::PairInstance> pair_training_instances(
    const data::ValDataset& ds, std::span<const TupleRecord> tuples,
    std::span<const double> ws, std::vector<std::string>* warnings = nullptr);

struct InferConfig {
  int m = 30;
  double nms_iou = 0.8;
  enum class Solver { Auto, Exact, Relaxed } solver = Solver::Auto;
  uint64_t budget = 1000000;
  int relax_iters = 500;
  double relax_tol = 1e-6;
};

// Joint inference per image: NMS-truncated candidates under S, pair terms
// summed per phrase pair, exact or relaxed solve. Deterministic; threads only
// fan images out.
std::vector<metrics::PredItem> infer_dataset(const data::ValDataset& ds,
                                             std::span<const double> ws,
                                             std::span<const double> wq,
                                             const InferConfig& cfg,
                                             int threads = 1);

// Ground-truth and candidate views of a dataset (for eval / upper-bound).
std::vector<metrics::GtItem> dataset_gt(const data::ValDataset& ds);
std::vector<metrics::CandidateItem> dataset_candidates(const data::ValDataset& ds);

}  // namespace groundkit::pipeline
