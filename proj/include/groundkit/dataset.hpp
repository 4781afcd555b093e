#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/cues.hpp"
#include "groundkit/geometry.hpp"
#include "groundkit/lingcue.hpp"
#include "groundkit/ppc.hpp"

namespace groundkit::data {

// Assembled per-phrase cue costs plus candidates and ground truth; the unit
// the weight learners and the joint solver consume.
struct ValPhrase {
  std::string phrase_id;
  ling::PhraseType type = ling::PhraseType::Other;
  cues::SpcRow row;
  std::vector<geom::Box> candidates;
  bool has_gt = false;
  geom::Box gt_union;
  // Cue costs evaluated at the ground-truth box itself (empty when unknown);
  // the pair-bank trainer needs S at the ground truth.
  Eigen::VectorXd gt_costs;
};

// One relation between two phrases of the same image with its raw pairwise
// classifier costs over candidate pairs.
struct ValRelation {
  int left = 0;
  int right = 0;
  int slot = 0;  // ppc slot: verb / preposition / attachment
  bool available = false;
  Eigen::MatrixXd psi;  // |cand_left| x |cand_right|
};

struct ValImage {
  std::string image_id;
  std::vector<ValPhrase> phrases;
  std::vector<ValRelation> relations;
};

using ValDataset = std::vector<ValImage>;

}  // namespace groundkit::data
