#include "groundkit/ppc.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "groundkit/rng.hpp"

namespace groundkit::ppc {

namespace fs = std::filesystem;

const std::array<std::string, kNumPpcSlots>& ppc_slot_names() {
  static const std::array<std::string, kNumPpcSlots> names = {
      "verb", "preposition", "attachment"};
  return names;
}

std::string PairKey::canonical() const {
  if (kind == ling::RelationKind::Attachment) return left + "-" + right;
  return left + "-" + rel + "-" + right;
}

std::string phrase_key(const ling::EntityMention& m) {
  if (m.type == ling::PhraseType::People) return "people";
  std::string key;
  for (const std::string& t : m.head_tokens) {
    if (!key.empty()) key += "+";
    key += ling::lowercase(t);
  }
  return key;
}

std::optional<PairKey> make_key(const ling::RelationTuple& tuple,
                                std::span<const ling::EntityMention> entities,
                                const cues::Dictionary& verbs,
                                std::span<const std::string> prepositions) {
  if (tuple.left.pronoun() || tuple.right.pronoun()) return std::nullopt;
  if (tuple.left.entity == tuple.right.entity) return std::nullopt;
  PairKey key;
  key.kind = tuple.kind;
  key.left = phrase_key(entities[tuple.left.entity]);
  key.right = phrase_key(entities[tuple.right.entity]);
  if (key.left.empty() || key.right.empty()) return std::nullopt;

  if (tuple.kind == ling::RelationKind::Attachment) return key;
  if (tuple.rel_words.empty()) return std::nullopt;
  const std::string word = ling::lowercase(tuple.rel_words.front());
  if (tuple.kind == ling::RelationKind::Verb) {
    const auto* cats = verbs.categories_for(word);
    if (!cats || cats->empty()) return std::nullopt;
    key.rel = cats->front();
  } else {
    if (std::find(prepositions.begin(), prepositions.end(), word) ==
        prepositions.end())
      return std::nullopt;
    key.rel = word;
  }
  return key;
}

Eigen::Matrix<double, kPairFeatureDim, 1> pair_feature(const geom::Box& b,
                                                       const geom::Box& b2,
                                                       double s_left,
                                                       double s_right) {
  auto spatial = geom::spatial_pair_feature(b, b2);
  Eigen::Matrix<double, kPairFeatureDim, 1> f;
  f << spatial[0], spatial[1], spatial[2], spatial[3], s_left, s_right;
  return f;
}

PairBank train_pair_bank(std::span<const PairInstance> instances,
                         const PairTrainConfig& config,
                         PairTrainReport* report) {
  std::map<PairKey, std::vector<const PairInstance*>> by_key;
  for (const PairInstance& inst : instances) by_key[inst.key].push_back(&inst);

  PairBank bank;
  bank.min_count = config.min_count;
  Rng rng(config.seed);
  for (const auto& [key, group] : by_key) {
    if (static_cast<int>(group.size()) < config.min_count) {
      if (report)
        report->skipped_below_min_count[key.canonical()] =
            static_cast<int>(group.size());
      continue;
    }
    std::vector<Eigen::Matrix<double, kPairFeatureDim, 1>> pos, neg;
    for (const PairInstance* inst : group) {
      pos.push_back(
          pair_feature(inst->gt_left, inst->gt_right, inst->s_left, inst->s_right));
      // Negatives: candidate pairings with both boxes off the ground truth.
      std::vector<std::pair<int, int>> eligible;
      for (size_t i = 0; i < inst->left_candidates.size(); ++i)
        for (size_t j = 0; j < inst->right_candidates.size(); ++j)
          if (geom::iou(inst->left_candidates[i], inst->gt_left) < 0.5 &&
              geom::iou(inst->right_candidates[j], inst->gt_right) < 0.5)
            eligible.emplace_back(static_cast<int>(i), static_cast<int>(j));
      for (int k = 0; k < config.negatives_per_positive && !eligible.empty(); ++k) {
        auto [i, j] = eligible[rng.uniform_int(static_cast<int>(eligible.size()))];
        const double sl = i < static_cast<int>(inst->s_left_candidates.size())
                              ? inst->s_left_candidates[i]
                              : 0.0;
        const double sr = j < static_cast<int>(inst->s_right_candidates.size())
                              ? inst->s_right_candidates[j]
                              : 0.0;
        neg.push_back(pair_feature(inst->left_candidates[i],
                                   inst->right_candidates[j], sl, sr));
      }
    }
    if (pos.empty() || neg.empty()) {
      if (report)
        report->skipped_below_min_count[key.canonical()] =
            static_cast<int>(group.size());
      continue;
    }
    Eigen::MatrixXd pos_m(pos.size(), kPairFeatureDim);
    Eigen::MatrixXd neg_m(neg.size(), kPairFeatureDim);
    for (size_t i = 0; i < pos.size(); ++i) pos_m.row(static_cast<int>(i)) = pos[i];
    for (size_t i = 0; i < neg.size(); ++i) neg_m.row(static_cast<int>(i)) = neg[i];
    bank.models.emplace(key, svm::train_rbf_svm(pos_m, neg_m, config.svm_c,
                                                config.svm_gamma, rng.next()));
    if (report) report->trained++;
  }
  return bank;
}

PpcResult ppc_cost(const PairBank& bank, const PairKey& key, const geom::Box& b,
                   const geom::Box& b2, double s_left, double s_right) {
  auto it = bank.models.find(key);
  if (it == bank.models.end()) return {0.0, false};
  const double p = svm::predict_prob(it->second, pair_feature(b, b2, s_left, s_right));
  return {-std::log(p), true};
}

void PairBank::save(const std::string& dir) const {
  fs::create_directories(dir);
  nlohmann::json index = nlohmann::json::array();
  int i = 0;
  for (const auto& [key, model] : models) {
    std::string file = "pair_" + std::to_string(i++) + ".json";
    model.save((fs::path(dir) / file).string());
    index.push_back({{"kind", std::string(ling::to_string(key.kind))},
                     {"left", key.left},
                     {"rel", key.rel},
                     {"right", key.right},
                     {"file", file}});
  }
  std::ofstream out(fs::path(dir) / "index.json");
  if (!out) throw std::runtime_error("cannot write pair bank index in " + dir);
  out << nlohmann::json{{"min_count", min_count}, {"models", index}}.dump(2)
      << "\n";
}

PairBank PairBank::load(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "index.json");
  if (!in) throw std::runtime_error("cannot open pair bank index in " + dir);
  nlohmann::json j;
  in >> j;
  PairBank bank;
  bank.min_count = j.value("min_count", 30);
  for (const auto& entry : j.at("models")) {
    PairKey key;
    key.kind = ling::relation_kind_from_string(entry.at("kind").get<std::string>());
    key.left = entry.at("left").get<std::string>();
    key.rel = entry.at("rel").get<std::string>();
    key.right = entry.at("right").get<std::string>();
    svm::RbfSvmModel model = svm::RbfSvmModel::load(
        (fs::path(dir) / entry.at("file").get<std::string>()).string());
    if (model.dim() != kPairFeatureDim)
      throw std::runtime_error("pair bank model " + key.canonical() +
                               " has dim " + std::to_string(model.dim()) +
                               ", expected " + std::to_string(kPairFeatureDim));
    bank.models.emplace(key, std::move(model));
  }
  return bank;
}

}  // namespace groundkit::ppc
