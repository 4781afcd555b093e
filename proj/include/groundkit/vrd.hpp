#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/cca.hpp"
#include "groundkit/geometry.hpp"
#include "groundkit/svm.hpp"

namespace groundkit::vrd {

inline constexpr int kNumCcaScores = 6;
inline constexpr int kFeatureDim = 11;
inline constexpr int kDefaultTopK = 10;

struct VrdConfig {
  int num_object_classes = 100;
  int num_predicates = 70;
};

// Closed object/predicate vocabulary with precomputed text vectors per name.
struct VrdVocabulary {
  std::vector<std::string> object_classes;
  std::vector<std::string> predicates;
  std::unordered_map<std::string, Eigen::VectorXd> name_vecs;

  void validate(const VrdConfig& cfg) const;  // counts + vector coverage
  const Eigen::VectorXd& vec(const std::string& name) const;
  int predicate_index(const std::string& name) const;
};

// The six embedding slots: entity models for subject and object (typically
// the same fitted model), subject+predicate, predicate+object, union-predicate
// and union-triple. Text sides of the last four are concatenated name vectors.
enum class CcaSlot : int {
  SubjEntity = 0,
  ObjEntity = 1,
  SubjPred = 2,
  PredObj = 3,
  UnionPred = 4,
  UnionTriple = 5,
};

struct VrdModels {
  std::vector<cca::CcaModel> cca;  // exactly kNumCcaScores entries
  svm::RbfSvmModel position;       // shared box-position model
  std::map<int, svm::RbfSvmModel> predicate_spatial;  // one-vs-rest per predicate
  svm::RankSvmModel rank;

  void save(const std::string& dir) const;
  static VrdModels load(const std::string& dir);
};

Eigen::VectorXd concat(std::span<const Eigen::VectorXd> parts);

// Six cosine-distance costs in slot order; throws when the model bank does
// not hold exactly six entries.
Eigen::Matrix<double, kNumCcaScores, 1> vrd_cca_scores(
    std::span<const cca::CcaModel> models, const Eigen::VectorXd& subj_feat,
    const Eigen::VectorXd& obj_feat, const Eigen::VectorXd& union_feat,
    const Eigen::VectorXd& subj_name, const Eigen::VectorXd& pred_name,
    const Eigen::VectorXd& obj_name);

// Fixed layout: [cca x 6, size_subj, size_obj, pos_subj, pos_obj,
// spatial_pred_prob].
Eigen::VectorXd vrd_feature(const Eigen::Matrix<double, kNumCcaScores, 1>& cca6,
                            double size_subj, double size_obj, double pos_subj,
                            double pos_obj, double spatial_pred_prob);

// Externally supplied object detections for one image (boxes + class names).
struct Detections {
  std::string image_id;
  geom::ImageSize image;
  std::vector<geom::Box> boxes;
  std::vector<std::string> classes;
};

// Ingested region features: one vector per detected box plus one per ordered
// pair's union box. Missing entries raise errors naming the box.
struct RegionFeatures {
  Eigen::MatrixXd box_feats;  // boxes x d
  std::map<std::pair<int, int>, Eigen::VectorXd> union_feats;

  Eigen::VectorXd box(int i) const;
  const Eigen::VectorXd& union_of(int i, int j) const;
};

struct RelationshipCandidate {
  std::string image_id;
  int subject_index = 0;
  int object_index = 0;
  geom::Box subject_box, object_box;
  std::string subject_class, predicate, object_class;
  Eigen::VectorXd feature;  // kFeatureDim
  double score = 0;
};

// Score every ordered pair of detected boxes against all predicates and keep
// the top_k predicates per pair; the result is sorted by descending score
// with stable, enumeration-order tie-breaking.
std::vector<RelationshipCandidate> score_relationships(
    const Detections& det, const RegionFeatures& feats,
    const VrdVocabulary& vocab, const VrdModels& models,
    int top_k = kDefaultTopK);

struct VrdGtRelationship {
  std::string image_id;
  std::string subject_class, predicate, object_class;
  geom::Box subject_box, object_box;
  bool seen_in_training = true;
};

struct RecallResult {
  double value = 0;
  bool applicable = false;  // false when the (filtered) ground truth is empty
  int matched = 0;
  int gt_count = 0;
};

// Recall@k with greedy one-to-one matching down the ranking: a ground-truth
// relationship is recalled by a candidate with the same class triple and both
// boxes at IOU >= 0.5. zero_shot_only restricts to unseen triples.
RecallResult eval_recall_at(std::span<const RelationshipCandidate> ranked,
                            std::span<const VrdGtRelationship> gt, int k,
                            bool zero_shot_only, bool dedup_gt = true);

// Spatial predicate classifiers on the 4-dim pair feature, one-vs-rest.
struct SpatialExample {
  int predicate = 0;
  std::array<double, 4> feature{};
};
std::map<int, svm::RbfSvmModel> train_predicate_spatial(
    std::span<const SpatialExample> examples, int num_predicates, double c,
    double gamma, uint64_t seed, int min_positives = 1);

// (positive, negative) feature pairs for the rank-SVM: positives match a
// ground-truth triple with both boxes at IOU >= 0.5, negatives are same-image
// candidates failing either test. Throws when there is no positive.
std::vector<svm::RankPair> build_rank_training(
    std::span<const RelationshipCandidate> candidates,
    std::span<const VrdGtRelationship> gt, int negatives_per_positive,
    uint64_t seed);

}  // namespace groundkit::vrd
