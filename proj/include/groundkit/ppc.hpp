#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/cues.hpp"
#include "groundkit/geometry.hpp"
#include "groundkit/lingcue.hpp"
#include "groundkit/svm.hpp"

namespace groundkit::ppc {

inline constexpr int kNumPpcSlots = 3;  // verb, preposition, attachment
inline constexpr int kPairFeatureDim = 6;

inline int ppc_slot(ling::RelationKind kind) { return static_cast<int>(kind); }
const std::array<std::string, kNumPpcSlots>& ppc_slot_names();

// Identity of one pairwise spatial classifier. People-type phrases collapse
// to "people"; everything else keys by its head words joined with '+'.
// Attachment keys carry no relation word.
struct PairKey {
  ling::RelationKind kind = ling::RelationKind::Verb;
  std::string left;
  std::string rel;
  std::string right;

  std::string canonical() const;
  auto operator<=>(const PairKey&) const = default;
};

// Phrase-side key: "people" for people-type mentions, else the head tokens
// lowercased and joined with '+'.
std::string phrase_key(const ling::EntityMention& m);

// Relation-word key for a tuple, or nullopt when the words route to no
// classifier: verbs normalize through the verb dictionary, prepositions must
// be one of the configured preposition list, attachment needs no word.
std::optional<PairKey> make_key(const ling::RelationTuple& tuple,
                                std::span<const ling::EntityMention> entities,
                                const cues::Dictionary& verbs,
                                std::span<const std::string> prepositions);

// [Eq-8 spatial feature, S(p_left, b), S(p_right, b')].
Eigen::Matrix<double, kPairFeatureDim, 1> pair_feature(const geom::Box& b,
                                                       const geom::Box& b2,
                                                       double s_left,
                                                       double s_right);

struct PairBank {
  std::map<PairKey, svm::RbfSvmModel> models;
  int min_count = 30;

  bool has(const PairKey& key) const { return models.count(key) > 0; }
  void save(const std::string& dir) const;
  static PairBank load(const std::string& dir);
};

// One ground-truth relationship occurrence plus the image's candidate boxes
// (with their current SPC scores) for negative sampling.
struct PairInstance {
  PairKey key;
  geom::Box gt_left, gt_right;
  double s_left = 0, s_right = 0;
  std::vector<geom::Box> left_candidates;
  std::vector<geom::Box> right_candidates;
  std::vector<double> s_left_candidates;
  std::vector<double> s_right_candidates;
};

struct PairTrainConfig {
  int min_count = 30;
  int negatives_per_positive = 3;
  double svm_c = 1.0;
  double svm_gamma = 1.0 / kPairFeatureDim;
  uint64_t seed = 0;
};

struct PairTrainReport {
  std::map<std::string, int> skipped_below_min_count;  // key -> occurrences
  int trained = 0;
};

// One RBF SVM per key with at least min_count occurrences; negatives are
// random candidate pairings whose boxes are both under 0.5 IOU with the
// ground truth.
PairBank train_pair_bank(std::span<const PairInstance> instances,
                         const PairTrainConfig& config,
                         PairTrainReport* report = nullptr);

struct PpcResult {
  double cost = 0;
  bool available = false;
};

// -log Platt probability of the key's classifier, or unavailable when the
// bank has no model for the key.
PpcResult ppc_cost(const PairBank& bank, const PairKey& key, const geom::Box& b,
                   const geom::Box& b2, double s_left, double s_right);

}  // namespace groundkit::ppc
