#include "groundkit/vrd.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "groundkit/cues.hpp"
#include "groundkit/rng.hpp"

namespace groundkit::vrd {

namespace fs = std::filesystem;

void VrdVocabulary::validate(const VrdConfig& cfg) const {
  if (static_cast<int>(object_classes.size()) != cfg.num_object_classes)
    throw std::runtime_error("vocabulary has " +
                             std::to_string(object_classes.size()) +
                             " object classes, config expects " +
                             std::to_string(cfg.num_object_classes));
  if (static_cast<int>(predicates.size()) != cfg.num_predicates)
    throw std::runtime_error("vocabulary has " + std::to_string(predicates.size()) +
                             " predicates, config expects " +
                             std::to_string(cfg.num_predicates));
  Eigen::Index dim = -1;
  for (const auto& names : {object_classes, predicates}) {
    for (const std::string& n : names) {
      auto it = name_vecs.find(n);
      if (it == name_vecs.end())
        throw std::runtime_error("vocabulary name without vector: " + n);
      if (dim < 0) dim = it->second.size();
      if (it->second.size() != dim)
        throw std::runtime_error("vocabulary vector dim mismatch at: " + n);
    }
  }
}

const Eigen::VectorXd& VrdVocabulary::vec(const std::string& name) const {
  auto it = name_vecs.find(name);
  if (it == name_vecs.end())
    throw std::runtime_error("no text vector for name: " + name);
  return it->second;
}

int VrdVocabulary::predicate_index(const std::string& name) const {
  auto it = std::find(predicates.begin(), predicates.end(), name);
  if (it == predicates.end())
    throw std::runtime_error("unknown predicate: " + name);
  return static_cast<int>(it - predicates.begin());
}

Eigen::VectorXd concat(std::span<const Eigen::VectorXd> parts) {
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.size();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

Eigen::Matrix<double, kNumCcaScores, 1> vrd_cca_scores(
    std::span<const cca::CcaModel> models, const Eigen::VectorXd& subj_feat,
    const Eigen::VectorXd& obj_feat, const Eigen::VectorXd& union_feat,
    const Eigen::VectorXd& subj_name, const Eigen::VectorXd& pred_name,
    const Eigen::VectorXd& obj_name) {
  if (models.size() != kNumCcaScores)
    throw std::invalid_argument("vrd_cca_scores: expected " +
                                std::to_string(kNumCcaScores) + " models, got " +
                                std::to_string(models.size()));
  const std::array<Eigen::VectorXd, 2> sp = {subj_name, pred_name};
  const std::array<Eigen::VectorXd, 2> po = {pred_name, obj_name};
  const std::array<Eigen::VectorXd, 3> spo = {subj_name, pred_name, obj_name};
  Eigen::Matrix<double, kNumCcaScores, 1> out;
  out[0] = cca::cca_cost(models[0], subj_feat, subj_name);
  out[1] = cca::cca_cost(models[1], obj_feat, obj_name);
  out[2] = cca::cca_cost(models[2], subj_feat, concat(sp));
  out[3] = cca::cca_cost(models[3], obj_feat, concat(po));
  out[4] = cca::cca_cost(models[4], union_feat, pred_name);
  out[5] = cca::cca_cost(models[5], union_feat, concat(spo));
  return out;
}

Eigen::VectorXd vrd_feature(const Eigen::Matrix<double, kNumCcaScores, 1>& cca6,
                            double size_subj, double size_obj, double pos_subj,
                            double pos_obj, double spatial_pred_prob) {
  Eigen::VectorXd f(kFeatureDim);
  f << cca6, size_subj, size_obj, pos_subj, pos_obj, spatial_pred_prob;
  return f;
}

Eigen::VectorXd RegionFeatures::box(int i) const {
  if (i < 0 || i >= box_feats.rows())
    throw std::runtime_error("no region feature for box " + std::to_string(i));
  return box_feats.row(i).transpose();
}

const Eigen::VectorXd& RegionFeatures::union_of(int i, int j) const {
  auto it = union_feats.find({i, j});
  if (it == union_feats.end())
    throw std::runtime_error("no region feature for union box (" +
                             std::to_string(i) + "," + std::to_string(j) + ")");
  return it->second;
}

std::vector<RelationshipCandidate> score_relationships(
    const Detections& det, const RegionFeatures& feats,
    const VrdVocabulary& vocab, const VrdModels& models, int top_k) {
  if (det.boxes.size() != det.classes.size())
    throw std::invalid_argument("detections: boxes and classes differ");
  if (models.cca.size() != kNumCcaScores)
    throw std::invalid_argument("vrd models: expected " +
                                std::to_string(kNumCcaScores) + " cca models");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  const int n = static_cast<int>(det.boxes.size());
  std::vector<RelationshipCandidate> out;
  if (n < 2) return out;

  // Per-box size/position costs are shared across pairs.
  std::vector<double> size_cost(n), pos_cost(n);
  for (int i = 0; i < n; ++i) {
    size_cost[i] = cues::size_cost(det.boxes[i], det.image);
    pos_cost[i] = cues::position_cost(models.position, det.boxes[i], det.image);
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Eigen::VectorXd subj_feat = feats.box(i);
      const Eigen::VectorXd obj_feat = feats.box(j);
      const Eigen::VectorXd& union_feat = feats.union_of(i, j);
      const Eigen::VectorXd& subj_name = vocab.vec(det.classes[i]);
      const Eigen::VectorXd& obj_name = vocab.vec(det.classes[j]);

      auto spatial = geom::spatial_pair_feature(det.boxes[i], det.boxes[j]);
      Eigen::VectorXd spatial_vec = Eigen::Map<Eigen::Vector4d>(spatial.data());

      std::vector<RelationshipCandidate> per_pair;
      per_pair.reserve(vocab.predicates.size());
      for (size_t p = 0; p < vocab.predicates.size(); ++p) {
        const std::string& pred = vocab.predicates[p];
        auto cca6 = vrd_cca_scores(models.cca, subj_feat, obj_feat, union_feat,
                                   subj_name, vocab.vec(pred), obj_name);
        double spatial_prob = 0.5;
        auto sp_it = models.predicate_spatial.find(static_cast<int>(p));
        if (sp_it != models.predicate_spatial.end())
          spatial_prob = svm::predict_prob(sp_it->second, spatial_vec);
        RelationshipCandidate cand;
        cand.image_id = det.image_id;
        cand.subject_index = i;
        cand.object_index = j;
        cand.subject_box = det.boxes[i];
        cand.object_box = det.boxes[j];
        cand.subject_class = det.classes[i];
        cand.predicate = pred;
        cand.object_class = det.classes[j];
        cand.feature = vrd_feature(cca6, size_cost[i], size_cost[j], pos_cost[i],
                                   pos_cost[j], spatial_prob);
        cand.score = svm::rank_score(models.rank, cand.feature);
        per_pair.push_back(std::move(cand));
      }
      std::stable_sort(per_pair.begin(), per_pair.end(),
                       [](const auto& a, const auto& b) { return a.score > b.score; });
      if (static_cast<int>(per_pair.size()) > top_k) per_pair.resize(top_k);
      out.insert(out.end(), std::make_move_iterator(per_pair.begin()),
                 std::make_move_iterator(per_pair.end()));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

namespace {

bool boxes_match(const RelationshipCandidate& c, const VrdGtRelationship& g) {
  return geom::iou(c.subject_box, g.subject_box) >= 0.5 &&
         geom::iou(c.object_box, g.object_box) >= 0.5;
}

bool triple_match(const RelationshipCandidate& c, const VrdGtRelationship& g) {
  return c.subject_class == g.subject_class && c.predicate == g.predicate &&
         c.object_class == g.object_class;
}

}  // namespace

RecallResult eval_recall_at(std::span<const RelationshipCandidate> ranked,
                            std::span<const VrdGtRelationship> gt, int k,
                            bool zero_shot_only, bool dedup_gt) {
  std::vector<const VrdGtRelationship*> targets;
  for (const VrdGtRelationship& g : gt)
    if (!zero_shot_only || !g.seen_in_training) targets.push_back(&g);
  RecallResult res;
  res.gt_count = static_cast<int>(targets.size());
  if (targets.empty()) return res;  // not applicable
  res.applicable = true;

  const int limit = std::min<int>(k, static_cast<int>(ranked.size()));
  if (dedup_gt) {
    std::vector<char> used(targets.size(), 0);
    for (int r = 0; r < limit; ++r) {
      for (size_t t = 0; t < targets.size(); ++t) {
        if (used[t]) continue;
        if (triple_match(ranked[r], *targets[t]) &&
            boxes_match(ranked[r], *targets[t])) {
          used[t] = 1;
          res.matched++;
          break;
        }
      }
    }
  } else {
    for (size_t t = 0; t < targets.size(); ++t) {
      for (int r = 0; r < limit; ++r) {
        if (triple_match(ranked[r], *targets[t]) &&
            boxes_match(ranked[r], *targets[t])) {
          res.matched++;
          break;
        }
      }
    }
  }
  res.value = static_cast<double>(res.matched) / res.gt_count;
  return res;
}

std::map<int, svm::RbfSvmModel> train_predicate_spatial(
    std::span<const SpatialExample> examples, int num_predicates, double c,
    double gamma, uint64_t seed, int min_positives) {
  std::map<int, svm::RbfSvmModel> bank;
  Rng rng(seed);
  for (int p = 0; p < num_predicates; ++p) {
    std::vector<const SpatialExample*> pos, neg;
    for (const SpatialExample& e : examples)
      (e.predicate == p ? pos : neg).push_back(&e);
    if (static_cast<int>(pos.size()) < min_positives || neg.empty()) continue;
    Eigen::MatrixXd pm(pos.size(), 4), nm(neg.size(), 4);
    for (size_t i = 0; i < pos.size(); ++i)
      for (int d = 0; d < 4; ++d) pm(static_cast<int>(i), d) = pos[i]->feature[d];
    for (size_t i = 0; i < neg.size(); ++i)
      for (int d = 0; d < 4; ++d) nm(static_cast<int>(i), d) = neg[i]->feature[d];
    bank.emplace(p, svm::train_rbf_svm(pm, nm, c, gamma, rng.next()));
  }
  return bank;
}

std::vector<svm::RankPair> build_rank_training(
    std::span<const RelationshipCandidate> candidates,
    std::span<const VrdGtRelationship> gt, int negatives_per_positive,
    uint64_t seed) {
  std::vector<int> positives, negatives;
  for (size_t i = 0; i < candidates.size(); ++i) {
    bool is_pos = false;
    for (const VrdGtRelationship& g : gt) {
      if (g.image_id != candidates[i].image_id) continue;
      if (triple_match(candidates[i], g) && boxes_match(candidates[i], g)) {
        is_pos = true;
        break;
      }
    }
    (is_pos ? positives : negatives).push_back(static_cast<int>(i));
  }
  if (positives.empty())
    throw std::runtime_error("build_rank_training: no positive relationships");

  Rng rng(seed);
  std::vector<svm::RankPair> pairs;
  for (int p : positives) {
    // Sample negatives from the same image when possible.
    std::vector<int> same_image;
    for (int n : negatives)
      if (candidates[n].image_id == candidates[p].image_id)
        same_image.push_back(n);
    const std::vector<int>& pool = same_image.empty() ? negatives : same_image;
    for (int k = 0; k < negatives_per_positive && !pool.empty(); ++k) {
      int n = pool[rng.uniform_int(static_cast<int>(pool.size()))];
      pairs.emplace_back(candidates[p].feature, candidates[n].feature);
    }
  }
  return pairs;
}

void VrdModels::save(const std::string& dir) const {
  fs::create_directories(dir);
  if (cca.size() != kNumCcaScores)
    throw std::runtime_error("vrd models: expected 6 cca models");
  for (size_t i = 0; i < cca.size(); ++i)
    cca[i].save((fs::path(dir) / ("cca_" + std::to_string(i) + ".json")).string());
  position.save((fs::path(dir) / "position.json").string());
  rank.save((fs::path(dir) / "rank.json").string());
  nlohmann::json sp = nlohmann::json::array();
  fs::create_directories(fs::path(dir) / "spatial");
  for (const auto& [pred, model] : predicate_spatial) {
    std::string file = "spatial/pred_" + std::to_string(pred) + ".json";
    model.save((fs::path(dir) / file).string());
    sp.push_back({{"predicate", pred}, {"file", file}});
  }
  std::ofstream out(fs::path(dir) / "index.json");
  out << nlohmann::json{{"spatial", sp}}.dump(2) << "\n";
}

VrdModels VrdModels::load(const std::string& dir) {
  VrdModels m;
  for (int i = 0; i < kNumCcaScores; ++i) {
    fs::path p = fs::path(dir) / ("cca_" + std::to_string(i) + ".json");
    if (!fs::exists(p))
      throw std::runtime_error("vrd models: missing " + p.string() +
                               " (need exactly 6 cca models)");
    m.cca.push_back(cca::CcaModel::load(p.string()));
  }
  m.position = svm::RbfSvmModel::load((fs::path(dir) / "position.json").string());
  m.rank = svm::RankSvmModel::load((fs::path(dir) / "rank.json").string());
  if (m.rank.dim() != kFeatureDim)
    throw std::runtime_error("vrd rank model dim " + std::to_string(m.rank.dim()) +
                             ", expected " + std::to_string(kFeatureDim));
  std::ifstream in(fs::path(dir) / "index.json");
  if (in) {
    nlohmann::json j;
    in >> j;
    for (const auto& e : j.at("spatial"))
      m.predicate_spatial.emplace(
          e.at("predicate").get<int>(),
          svm::RbfSvmModel::load(
              (fs::path(dir) / e.at("file").get<std::string>()).string()));
  }
  return m;
}

}  // namespace groundkit::vrd
