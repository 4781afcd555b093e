#include "groundkit/metrics.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace groundkit::metrics {

namespace {

using Key = std::pair<std::string, std::string>;

}  // namespace

std::string RecallBreakdown::table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "overall " << overall() << " (" << correct << "/" << total << ")\n";
  for (int t = 0; t < ling::kNumPhraseTypes; ++t) {
    if (total_by_type[t] == 0) continue;
    os << std::setw(12) << ling::to_string(static_cast<ling::PhraseType>(t))
       << " " << by_type(static_cast<ling::PhraseType>(t)) << " ("
       << correct_by_type[t] << "/" << total_by_type[t] << ")\n";
  }
  return os.str();
}

RecallBreakdown recall_at_1(std::span<const PredItem> preds,
                            std::span<const GtItem> gt) {
  std::map<Key, const PredItem*> by_key;
  for (const PredItem& p : preds) by_key[{p.image_id, p.phrase_id}] = &p;

  RecallBreakdown out;
  for (const GtItem& g : gt) {
    if (g.boxes.empty()) continue;  // no ground truth box: not evaluated
    const geom::Box target = geom::union_hull(g.boxes);
    const int t = static_cast<int>(g.type);
    out.total++;
    out.total_by_type[t]++;
    auto it = by_key.find({g.image_id, g.phrase_id});
    if (it != by_key.end() && geom::iou(it->second->box, target) >= 0.5) {
      out.correct++;
      out.correct_by_type[t]++;
    }
  }
  return out;
}

RecallBreakdown upper_bound(std::span<const CandidateItem> candidates,
                            std::span<const GtItem> gt) {
  std::map<Key, const CandidateItem*> by_key;
  for (const CandidateItem& c : candidates)
    by_key[{c.image_id, c.phrase_id}] = &c;

  RecallBreakdown out;
  for (const GtItem& g : gt) {
    if (g.boxes.empty()) continue;
    const geom::Box target = geom::union_hull(g.boxes);
    const int t = static_cast<int>(g.type);
    out.total++;
    out.total_by_type[t]++;
    auto it = by_key.find({g.image_id, g.phrase_id});
    if (it == by_key.end()) continue;
    for (const geom::Box& b : it->second->boxes) {
      if (geom::iou(b, target) >= 0.5) {
        out.correct++;
        out.correct_by_type[t]++;
        break;
      }
    }
  }
  return out;
}

}  // namespace groundkit::metrics
