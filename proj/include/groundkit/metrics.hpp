#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "groundkit/geometry.hpp"
#include "groundkit/lingcue.hpp"

namespace groundkit::metrics {

struct PredItem {
  std::string image_id;
  std::string phrase_id;
  geom::Box box;
};

struct GtItem {
  std::string image_id;
  std::string phrase_id;
  ling::PhraseType type = ling::PhraseType::Other;
  std::vector<geom::Box> boxes;  // union taken at evaluation time
};

struct CandidateItem {
  std::string image_id;
  std::string phrase_id;
  std::vector<geom::Box> boxes;
};

// Overall ratio plus the per-phrase-type breakdown.
struct RecallBreakdown {
  int correct = 0;
  int total = 0;
  std::array<int, ling::kNumPhraseTypes> correct_by_type{};
  std::array<int, ling::kNumPhraseTypes> total_by_type{};

  double overall() const { return total > 0 ? static_cast<double>(correct) / total : 0.0; }
  double by_type(ling::PhraseType t) const {
    const int i = static_cast<int>(t);
    return total_by_type[i] > 0
               ? static_cast<double>(correct_by_type[i]) / total_by_type[i]
               : 0.0;
  }
  std::string table() const;  // plain-text report
};

// Proportion of phrases whose predicted box reaches IOU >= 0.5 with the union
// of the ground-truth boxes. Ground-truth entries with no boxes are excluded;
// a missing prediction counts as a miss.
RecallBreakdown recall_at_1(std::span<const PredItem> preds,
                            std::span<const GtItem> gt);

// Proportion of phrases with at least one candidate at IOU >= 0.5.
RecallBreakdown upper_bound(std::span<const CandidateItem> candidates,
                            std::span<const GtItem> gt);

}  // namespace groundkit::metrics
