#include "groundkit/cues.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace groundkit::cues {

const std::array<std::string, kNumSpcSlots>& spc_slot_names() {
  static const std::array<std::string, kNumSpcSlots> names = {
      "cca",           "position",      "size_people",    "size_clothing",
      "size_bodyparts", "size_animals", "size_vehicles",  "size_instruments",
      "size_scene",    "size_other",    "object_detector", "adjective",
      "subject_verb",  "verb_object"};
  return names;
}

void Dictionary::add(std::string_view term, std::string_view category) {
  std::string t = ling::lowercase(term);
  std::string c(category);
  if (t.empty() || c.empty())
    throw std::invalid_argument("dictionary entry with empty term or category");
  auto& cats = term_to_categories_[t];
  if (std::find(cats.begin(), cats.end(), c) == cats.end()) cats.push_back(c);
  categories_.emplace(std::move(c), 1);
}

Dictionary Dictionary::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dictionary: " + path);
  Dictionary d;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected term<TAB>category");
    d.add(line.substr(0, tab), line.substr(tab + 1));
  }
  return d;
}

Dictionary Dictionary::load_tsv(const std::string& path,
                                size_t expected_categories) {
  Dictionary d = load_tsv(path);
  if (d.num_categories() != expected_categories)
    throw std::runtime_error(path + ": expected " +
                             std::to_string(expected_categories) +
                             " categories, found " +
                             std::to_string(d.num_categories()));
  return d;
}

const std::vector<std::string>* Dictionary::categories_for(
    const std::string& term) const {
  auto it = term_to_categories_.find(ling::lowercase(term));
  return it == term_to_categories_.end() ? nullptr : &it->second;
}

bool Dictionary::has_category(const std::string& category) const {
  return categories_.count(category) > 0;
}

void DetectorScoreTable::set(const std::string& image_id, int box_index,
                             const std::string& category, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0))
    throw std::invalid_argument("detector probability outside [0,1]");
  scores_[{image_id, box_index, category}] = prob;
}

std::optional<double> DetectorScoreTable::get(const std::string& image_id,
                                              int box_index,
                                              const std::string& category) const {
  auto it = scores_.find({image_id, box_index, category});
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

DetectorScoreTable DetectorScoreTable::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score table: " + path);
  DetectorScoreTable t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      t.set(j.at("image_id").get<std::string>(), j.at("box").get<int>(),
            j.at("category").get<std::string>(), j.at("prob").get<double>());
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return t;
}

void DetectorScoreTable::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [key, prob] : scores_) {
    nlohmann::json j = {{"image_id", std::get<0>(key)},
                        {"box", std::get<1>(key)},
                        {"category", std::get<2>(key)},
                        {"prob", prob}};
    out << j.dump() << "\n";
  }
}

double size_cost(const geom::Box& b, const geom::ImageSize& img) {
  return 1.0 - (b.w / img.width) * (b.h / img.height);
}

double position_cost(const svm::RbfSvmModel& model, const geom::Box& b,
                     const geom::ImageSize& img) {
  auto f = geom::position_feature(b, img);
  Eigen::VectorXd x = Eigen::Map<Eigen::Vector4d>(f.data());
  return -std::log(svm::predict_prob(model, x));
}

double detector_cost(const DetectorScoreTable& table,
                     std::span<const std::string> categories,
                     const std::string& image_id, int box_index, double floor) {
  if (categories.empty())
    throw std::invalid_argument("detector_cost: no matched categories");
  double sum = 0;
  for (const std::string& cat : categories) {
    double p = table.get(image_id, box_index, cat).value_or(floor);
    sum += std::max(p, floor);
  }
  return -std::log(sum / static_cast<double>(categories.size()));
}

std::vector<std::string> adjective_categories(const PhraseCueConfig& cfg,
                                              std::span<const std::string> tokens,
                                              ling::PhraseType type) {
  std::vector<std::string> out;
  for (const std::string& tok : tokens) {
    const auto* cats = cfg.adjectives.categories_for(tok);
    if (!cats) continue;
    // Color terms describing people route to the people-specific category.
    std::vector<std::string> people_cats, plain_cats;
    for (const std::string& c : *cats)
      (c.rfind("people-", 0) == 0 ? people_cats : plain_cats).push_back(c);
    const auto& chosen = (type == ling::PhraseType::People && !people_cats.empty())
                             ? people_cats
                             : plain_cats;
    for (const std::string& c : chosen)
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::vector<std::string> object_categories(const PhraseCueConfig& cfg,
                                           std::span<const std::string> tokens) {
  std::vector<std::string> out;
  for (const std::string& tok : tokens) {
    const auto* cats = cfg.objects.categories_for(tok);
    if (!cats) continue;
    for (const std::string& c : *cats)
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

std::vector<std::string> verb_categories(const Dictionary& dict,
                                         const Dictionary& verbs,
                                         ling::PhraseType type,
                                         std::span<const std::string> rel_verbs) {
  std::vector<std::string> out;
  for (const std::string& w : rel_verbs) {
    const auto* vcats = verbs.categories_for(w);
    if (!vcats) continue;
    for (const std::string& v : *vcats) {
      std::string subdivided = std::string(ling::to_string(type)) + "-" + v;
      const std::string& chosen = dict.has_category(subdivided) ? subdivided
                                  : dict.has_category(v)        ? v
                                                                : std::string();
      if (!chosen.empty() &&
          std::find(out.begin(), out.end(), chosen) == out.end())
        out.push_back(chosen);
    }
  }
  return out;
}

SpcRow assemble_spc(const PhraseContext& phrase, const CandidateContext& cands,
                    const CueModels& models) {
  if (cands.boxes.empty())
    throw std::invalid_argument("assemble_spc: no candidate boxes");
  if (!models.cca || !models.config)
    throw std::invalid_argument("assemble_spc: cca model and config required");
  const int n = static_cast<int>(cands.boxes.size());
  if (cands.region_vecs.rows() != n)
    throw std::invalid_argument("assemble_spc: region feature rows != boxes");

  std::vector<int> box_indices = cands.box_indices;
  if (box_indices.empty()) {
    box_indices.resize(n);
    for (int i = 0; i < n; ++i) box_indices[i] = i;
  }

  SpcRow row;
  row.costs = Eigen::MatrixXd::Zero(n, kNumSpcSlots);
  const PhraseCueConfig& cfg = *models.config;

  // Region-phrase compatibility is always on.
  for (int i = 0; i < n; ++i)
    row.costs(i, static_cast<int>(SpcSlot::Cca)) =
        cca::cca_cost(*models.cca, phrase.phrase_vec,
                      cands.region_vecs.row(i).transpose());
  row.available[static_cast<int>(SpcSlot::Cca)] = true;

  if (models.position_svms) {
    auto it = models.position_svms->find(phrase.type);
    if (it != models.position_svms->end()) {
      for (int i = 0; i < n; ++i)
        row.costs(i, static_cast<int>(SpcSlot::Position)) =
            position_cost(it->second, cands.boxes[i], cands.image);
      row.available[static_cast<int>(SpcSlot::Position)] = true;
    }
  }

  const int size_slot = static_cast<int>(size_slot_for(phrase.type));
  for (int i = 0; i < n; ++i)
    row.costs(i, size_slot) = size_cost(cands.boxes[i], cands.image);
  row.available[size_slot] = true;

  auto fill_detector = [&](SpcSlot slot, const DetectorScoreTable* table,
                           const std::vector<std::string>& cats) {
    if (!table || cats.empty()) return;
    for (int i = 0; i < n; ++i)
      row.costs(i, static_cast<int>(slot)) = detector_cost(
          *table, cats, cands.image_id, box_indices[i], cfg.prob_floor);
    row.available[static_cast<int>(slot)] = true;
  };

  fill_detector(SpcSlot::ObjectDetector, models.object_scores,
                object_categories(cfg, phrase.tokens));
  fill_detector(SpcSlot::Adjective, models.adjective_scores,
                adjective_categories(cfg, phrase.tokens, phrase.type));
  fill_detector(SpcSlot::SubjectVerb, models.subject_verb_scores,
                verb_categories(cfg.subject_verb, cfg.verbs, phrase.type,
                                phrase.left_verbs));
  fill_detector(SpcSlot::VerbObject, models.verb_object_scores,
                verb_categories(cfg.verb_object, cfg.verbs, phrase.type,
                                phrase.right_verbs));
  return row;
}

Eigen::VectorXd spc_score(const SpcRow& row, std::span<const double> weights) {
  if (weights.size() != kNumSpcSlots)
    throw std::invalid_argument("spc_score: expected " +
                                std::to_string(kNumSpcSlots) + " weights, got " +
                                std::to_string(weights.size()));
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(kNumSpcSlots);
  for (int s = 0; s < kNumSpcSlots; ++s)
    if (row.available[s]) masked[s] = weights[s];
  return row.costs * masked;
}

}  // namespace groundkit::cues
