#include "groundkit/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace groundkit::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json box_to_json(const geom::Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

geom::Box box_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4)
    throw std::runtime_error("box must be [x, y, w, h]");
  geom::Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>()};
  if (!b.valid()) throw std::runtime_error("invalid box in file");
  return b;
}

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Line-oriented JSONL reader with location-tagged errors.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

void FeatureTable::set(const std::string& key, Eigen::VectorXd vec) {
  if (dim_ >= 0 && vec.size() != dim_)
    throw std::invalid_argument("feature '" + key + "' has dim " +
                                std::to_string(vec.size()) + ", table has " +
                                std::to_string(dim_));
  if (dim_ < 0) dim_ = static_cast<int>(vec.size());
  if (!vecs_.count(key)) order_.push_back(key);
  vecs_[key] = std::move(vec);
}

const Eigen::VectorXd& FeatureTable::get(const std::string& key) const {
  auto it = vecs_.find(key);
  if (it == vecs_.end())
    throw std::runtime_error("missing feature vector for '" + key + "'");
  return it->second;
}

bool FeatureTable::contains(const std::string& key) const {
  return vecs_.count(key) > 0;
}

FeatureTable FeatureTable::load_jsonl(const std::string& path) {
  FeatureTable t;
  for_each_jsonl(path, [&](const json& j) {
    t.set(j.at("key").get<std::string>(), vec_from_json(j.at("vec")));
  });
  return t;
}

void FeatureTable::save_jsonl(const std::string& path) const {
  auto out = open_out(path);
  for (const std::string& key : order_) {
    json j = {{"key", key}, {"vec", vec_to_json(vecs_.at(key))}};
    out << j.dump() << "\n";
  }
}

namespace {
constexpr char kRawMagic[4] = {'G', 'K', 'F', 'V'};
}

void FeatureTable::save_raw(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kRawMagic, 4);
  const uint32_t dim = dim_ < 0 ? 0 : static_cast<uint32_t>(dim_);
  const uint32_t count = static_cast<uint32_t>(order_.size());
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const std::string& key : order_) {
    const uint32_t len = static_cast<uint32_t>(key.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(key.data(), len);
    const Eigen::VectorXd& v = vecs_.at(key);
    for (int i = 0; i < v.size(); ++i) {
      const float f = static_cast<float>(v[i]);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

FeatureTable FeatureTable::load_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kRawMagic, 4) != 0)
    throw std::runtime_error(path + ": not a raw feature table");
  uint32_t dim = 0, count = 0;
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  FeatureTable t;
  for (uint32_t r = 0; r < count; ++r) {
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string key(len, '\0');
    in.read(key.data(), len);
    Eigen::VectorXd v(dim);
    for (uint32_t i = 0; i < dim; ++i) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), 4);
      v[static_cast<int>(i)] = f;
    }
    if (!in) throw std::runtime_error(path + ": truncated raw feature table");
    t.set(key, std::move(v));
  }
  return t;
}

std::vector<SentenceRecord> load_sentences_jsonl(const std::string& path) {
  std::vector<SentenceRecord> out;
  for_each_jsonl(path, [&](const json& j) {
    SentenceRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.sentence_id = j.at("sentence_id").get<std::string>();
    for (const auto& t : j.at("tokens")) r.tokens.push_back(t.get<std::string>());
    r.parse = j.at("parse").get<std::string>();
    for (const auto& e : j.at("entities")) {
      SentenceEntity se;
      se.mention.phrase_id = e.at("phrase_id").get<std::string>();
      se.mention.begin = e.at("span")[0].get<int>();
      se.mention.end = e.at("span")[1].get<int>();
      if (se.mention.begin < 0 || se.mention.end > static_cast<int>(r.tokens.size()) ||
          se.mention.begin >= se.mention.end)
        throw std::runtime_error("entity span outside token range");
      se.mention.type =
          ling::phrase_type_from_string(e.at("type").get<std::string>());
      if (e.contains("head_tokens"))
        for (const auto& h : e.at("head_tokens"))
          se.mention.head_tokens.push_back(h.get<std::string>());
      if (se.mention.head_tokens.empty() && se.mention.end >= 1)
        se.mention.head_tokens.push_back(r.tokens[se.mention.end - 1]);
      if (e.contains("gt_boxes"))
        for (const auto& b : e.at("gt_boxes")) se.gt_boxes.push_back(box_from_json(b));
      r.entities.push_back(std::move(se));
    }
    out.push_back(std::move(r));
  });
  return out;
}

void save_sentences_jsonl(const std::string& path,
                          std::span<const SentenceRecord> records) {
  auto out = open_out(path);
  for (const SentenceRecord& r : records) {
    json entities = json::array();
    for (const SentenceEntity& e : r.entities) {
      json boxes = json::array();
      for (const geom::Box& b : e.gt_boxes) boxes.push_back(box_to_json(b));
      entities.push_back({{"phrase_id", e.mention.phrase_id},
                          {"span", {e.mention.begin, e.mention.end}},
                          {"type", std::string(ling::to_string(e.mention.type))},
                          {"head_tokens", e.mention.head_tokens},
                          {"gt_boxes", std::move(boxes)}});
    }
    json j = {{"image_id", r.image_id},
              {"sentence_id", r.sentence_id},
              {"tokens", r.tokens},
              {"parse", r.parse},
              {"entities", std::move(entities)}};
    out << j.dump() << "\n";
  }
}

std::vector<ImageBoxes> load_boxes_jsonl(const std::string& path) {
  std::vector<ImageBoxes> out;
  for_each_jsonl(path, [&](const json& j) {
    ImageBoxes ib;
    ib.image_id = j.at("image_id").get<std::string>();
    ib.image.width = j.at("width").get<double>();
    ib.image.height = j.at("height").get<double>();
    if (!ib.image.valid()) throw std::runtime_error("invalid image size");
    for (const auto& b : j.at("boxes")) ib.boxes.push_back(box_from_json(b));
    if (j.contains("classes"))
      for (const auto& c : j.at("classes")) ib.classes.push_back(c.get<std::string>());
    if (!ib.classes.empty() && ib.classes.size() != ib.boxes.size())
      throw std::runtime_error("classes and boxes differ in length");
    out.push_back(std::move(ib));
  });
  return out;
}

void save_boxes_jsonl(const std::string& path, std::span<const ImageBoxes> items) {
  auto out = open_out(path);
  for (const ImageBoxes& ib : items) {
    json boxes = json::array();
    for (const geom::Box& b : ib.boxes) boxes.push_back(box_to_json(b));
    json j = {{"image_id", ib.image_id},
              {"width", ib.image.width},
              {"height", ib.image.height},
              {"boxes", std::move(boxes)}};
    if (!ib.classes.empty()) j["classes"] = ib.classes;
    out << j.dump() << "\n";
  }
}

std::vector<metrics::PredItem> load_predictions_jsonl(const std::string& path) {
  std::vector<metrics::PredItem> out;
  for_each_jsonl(path, [&](const json& j) {
    out.push_back({j.at("image_id").get<std::string>(),
                   j.at("phrase_id").get<std::string>(),
                   box_from_json(j.at("box"))});
  });
  return out;
}

void save_predictions_jsonl(const std::string& path,
                            std::span<const metrics::PredItem> items) {
  auto out = open_out(path);
  for (const auto& p : items) {
    json j = {{"image_id", p.image_id},
              {"phrase_id", p.phrase_id},
              {"box", box_to_json(p.box)}};
    out << j.dump() << "\n";
  }
}

std::vector<metrics::GtItem> load_gt_jsonl(const std::string& path) {
  std::vector<metrics::GtItem> out;
  for_each_jsonl(path, [&](const json& j) {
    metrics::GtItem g;
    g.image_id = j.at("image_id").get<std::string>();
    g.phrase_id = j.at("phrase_id").get<std::string>();
    g.type = ling::phrase_type_from_string(j.at("type").get<std::string>());
    for (const auto& b : j.at("boxes")) g.boxes.push_back(box_from_json(b));
    out.push_back(std::move(g));
  });
  return out;
}

void save_gt_jsonl(const std::string& path, std::span<const metrics::GtItem> items) {
  auto out = open_out(path);
  for (const auto& g : items) {
    json boxes = json::array();
    for (const geom::Box& b : g.boxes) boxes.push_back(box_to_json(b));
    json j = {{"image_id", g.image_id},
              {"phrase_id", g.phrase_id},
              {"type", std::string(ling::to_string(g.type))},
              {"boxes", std::move(boxes)}};
    out << j.dump() << "\n";
  }
}

void save_val_dataset(const data::ValDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  auto phrases = open_out((fs::path(dir) / "phrases.jsonl").string());
  auto relations = open_out((fs::path(dir) / "relations.jsonl").string());
  for (const data::ValImage& img : ds) {
    for (const data::ValPhrase& ph : img.phrases) {
      json cands = json::array();
      for (const geom::Box& b : ph.candidates) cands.push_back(box_to_json(b));
      json costs = json::array();
      for (int r = 0; r < ph.row.costs.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < ph.row.costs.cols(); ++c) row.push_back(ph.row.costs(r, c));
        costs.push_back(std::move(row));
      }
      json avail = json::array();
      for (bool b : ph.row.available) avail.push_back(b);
      json j = {{"image_id", img.image_id},
                {"phrase_id", ph.phrase_id},
                {"type", std::string(ling::to_string(ph.type))},
                {"candidates", std::move(cands)},
                {"costs", std::move(costs)},
                {"available", std::move(avail)},
                {"gt_box", ph.has_gt ? box_to_json(ph.gt_union) : json(nullptr)}};
      if (ph.gt_costs.size() > 0) j["gt_costs"] = vec_to_json(ph.gt_costs);
      phrases << j.dump() << "\n";
    }
    for (const data::ValRelation& rel : img.relations) {
      json psi = json::array();
      for (int r = 0; r < rel.psi.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < rel.psi.cols(); ++c) row.push_back(rel.psi(r, c));
        psi.push_back(std::move(row));
      }
      json j = {{"image_id", img.image_id}, {"left", rel.left},
                {"right", rel.right},       {"slot", rel.slot},
                {"available", rel.available}, {"psi", std::move(psi)}};
      relations << j.dump() << "\n";
    }
  }
  json meta = {{"cue_names", cues::spc_slot_names()},
               {"ppc_slots", ppc::ppc_slot_names()}};
  open_out((fs::path(dir) / "meta.json").string()) << meta.dump(2) << "\n";
}

data::ValDataset load_val_dataset(const std::string& dir) {
  data::ValDataset ds;
  std::map<std::string, size_t> image_index;
  auto image_at = [&](const std::string& id) -> data::ValImage& {
    auto it = image_index.find(id);
    if (it == image_index.end()) {
      image_index.emplace(id, ds.size());
      ds.push_back({id, {}, {}});
      return ds.back();
    }
    return ds[it->second];
  };
  for_each_jsonl((fs::path(dir) / "phrases.jsonl").string(), [&](const json& j) {
    data::ValImage& img = image_at(j.at("image_id").get<std::string>());
    data::ValPhrase ph;
    ph.phrase_id = j.at("phrase_id").get<std::string>();
    ph.type = ling::phrase_type_from_string(j.at("type").get<std::string>());
    for (const auto& b : j.at("candidates")) ph.candidates.push_back(box_from_json(b));
    const auto& costs = j.at("costs");
    if (costs.size() != ph.candidates.size())
      throw std::runtime_error("costs rows != candidate count");
    ph.row.costs.resize(costs.size(), cues::kNumSpcSlots);
    for (size_t r = 0; r < costs.size(); ++r) {
      if (costs[r].size() != cues::kNumSpcSlots)
        throw std::runtime_error("cost row must have 14 entries");
      for (int c = 0; c < cues::kNumSpcSlots; ++c)
        ph.row.costs(static_cast<int>(r), c) = costs[r][c].get<double>();
    }
    const auto& avail = j.at("available");
    if (avail.size() != cues::kNumSpcSlots)
      throw std::runtime_error("availability mask must have 14 entries");
    for (int c = 0; c < cues::kNumSpcSlots; ++c)
      ph.row.available[c] = avail[c].get<bool>();
    if (!j.at("gt_box").is_null()) {
      ph.has_gt = true;
      ph.gt_union = box_from_json(j.at("gt_box"));
    }
    if (j.contains("gt_costs")) {
      ph.gt_costs = vec_from_json(j.at("gt_costs"));
      if (ph.gt_costs.size() != cues::kNumSpcSlots)
        throw std::runtime_error("gt_costs must have 14 entries");
    }
    img.phrases.push_back(std::move(ph));
  });
  const std::string rel_path = (fs::path(dir) / "relations.jsonl").string();
  if (fs::exists(rel_path)) {
    for_each_jsonl(rel_path, [&](const json& j) {
      data::ValImage& img = image_at(j.at("image_id").get<std::string>());
      data::ValRelation rel;
      rel.left = j.at("left").get<int>();
      rel.right = j.at("right").get<int>();
      rel.slot = j.at("slot").get<int>();
      rel.available = j.at("available").get<bool>();
      const auto& psi = j.at("psi");
      if (rel.left < 0 || rel.right < 0 ||
          rel.left >= static_cast<int>(img.phrases.size()) ||
          rel.right >= static_cast<int>(img.phrases.size()))
        throw std::runtime_error("relation references unknown phrase");
      rel.psi.resize(psi.size(), psi.empty() ? 0 : psi[0].size());
      for (size_t r = 0; r < psi.size(); ++r)
        for (size_t c = 0; c < psi[r].size(); ++c)
          rel.psi(static_cast<int>(r), static_cast<int>(c)) = psi[r][c].get<double>();
      if (rel.psi.rows() != static_cast<int>(img.phrases[rel.left].candidates.size()) ||
          rel.psi.cols() != static_cast<int>(img.phrases[rel.right].candidates.size()))
        throw std::runtime_error("psi shape does not match candidate counts");
      img.relations.push_back(std::move(rel));
    });
  }
  return ds;
}

std::vector<vrd::VrdGtRelationship> load_vrd_gt_jsonl(const std::string& path) {
  std::vector<vrd::VrdGtRelationship> out;
  for_each_jsonl(path, [&](const json& j) {
    vrd::VrdGtRelationship g;
    g.image_id = j.at("image_id").get<std::string>();
    g.subject_class = j.at("subject_class").get<std::string>();
    g.predicate = j.at("predicate").get<std::string>();
    g.object_class = j.at("object_class").get<std::string>();
    g.subject_box = box_from_json(j.at("subject_box"));
    g.object_box = box_from_json(j.at("object_box"));
    g.seen_in_training = j.at("seen_in_training").get<bool>();
    out.push_back(std::move(g));
  });
  return out;
}

void save_vrd_gt_jsonl(const std::string& path,
                       std::span<const vrd::VrdGtRelationship> items) {
  auto out = open_out(path);
  for (const auto& g : items) {
    json j = {{"image_id", g.image_id},
              {"subject_class", g.subject_class},
              {"predicate", g.predicate},
              {"object_class", g.object_class},
              {"subject_box", box_to_json(g.subject_box)},
              {"object_box", box_to_json(g.object_box)},
              {"seen_in_training", g.seen_in_training}};
    out << j.dump() << "\n";
  }
}

vrd::VrdVocabulary load_vrd_vocab(const std::string& vocab_json,
                                  const FeatureTable& name_vectors) {
  std::ifstream in(vocab_json);
  if (!in) throw std::runtime_error("cannot open " + vocab_json);
  json j;
  in >> j;
  vrd::VrdVocabulary v;
  for (const auto& c : j.at("object_classes"))
    v.object_classes.push_back(c.get<std::string>());
  for (const auto& p : j.at("predicates"))
    v.predicates.push_back(p.get<std::string>());
  for (const auto& names : {v.object_classes, v.predicates})
    for (const std::string& n : names)
      v.name_vecs[n] = name_vectors.get(n);
  return v;
}

std::vector<vrd::RelationshipCandidate> load_vrd_candidates_jsonl(
    const std::string& path) {
  std::vector<vrd::RelationshipCandidate> out;
  for_each_jsonl(path, [&](const json& j) {
    vrd::RelationshipCandidate c;
    c.image_id = j.at("image_id").get<std::string>();
    c.subject_index = j.at("subject_index").get<int>();
    c.object_index = j.at("object_index").get<int>();
    c.subject_box = box_from_json(j.at("subject_box"));
    c.object_box = box_from_json(j.at("object_box"));
    c.subject_class = j.at("subject_class").get<std::string>();
    c.predicate = j.at("predicate").get<std::string>();
    c.object_class = j.at("object_class").get<std::string>();
    c.feature = vec_from_json(j.at("feature"));
    c.score = j.at("score").get<double>();
    out.push_back(std::move(c));
  });
  return out;
}

void save_vrd_candidates_jsonl(const std::string& path,
                               std::span<const vrd::RelationshipCandidate> items) {
  auto out = open_out(path);
  for (const auto& c : items) {
    json j = {{"image_id", c.image_id},
              {"subject_index", c.subject_index},
              {"object_index", c.object_index},
              {"subject_box", box_to_json(c.subject_box)},
              {"object_box", box_to_json(c.object_box)},
              {"subject_class", c.subject_class},
              {"predicate", c.predicate},
              {"object_class", c.object_class},
              {"feature", vec_to_json(c.feature)},
              {"score", c.score}};
    out << j.dump() << "\n";
  }
}

ModelBundle::ModelBundle()
    : ws(Eigen::VectorXd::Ones(cues::kNumSpcSlots)),
      wq(Eigen::VectorXd::Zero(ppc::kNumPpcSlots)) {}

void ModelBundle::save(const std::string& dir) const {
  if (ws.size() != cues::kNumSpcSlots)
    throw std::runtime_error("bundle ws must have 14 entries");
  if (wq.size() != ppc::kNumPpcSlots)
    throw std::runtime_error("bundle wq must have 3 entries");
  fs::create_directories(dir);
  json j = {{"version", 1},
            {"ws", std::vector<double>(ws.begin(), ws.end())},
            {"wq", std::vector<double>(wq.begin(), wq.end())},
            {"fingerprint", fingerprint}};
  json pos = json::object();
  for (const auto& [type, model] : position_svms) {
    std::string file = "position_" + std::string(ling::to_string(type)) + ".json";
    model.save((fs::path(dir) / file).string());
    pos[std::string(ling::to_string(type))] = file;
  }
  j["position_svms"] = std::move(pos);
  if (cca) {
    cca->save((fs::path(dir) / "cca.json").string());
    j["cca"] = "cca.json";
  }
  if (pair_bank) {
    pair_bank->save((fs::path(dir) / "pair_bank").string());
    j["pair_bank"] = "pair_bank";
  }
  if (rank) {
    rank->save((fs::path(dir) / "rank.json").string());
    j["rank"] = "rank.json";
  }
  open_out((fs::path(dir) / "bundle.json").string()) << j.dump(2) << "\n";
}

ModelBundle ModelBundle::load(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "bundle.json");
  if (!in) throw std::runtime_error("cannot open bundle.json in " + dir);
  json j;
  in >> j;
  ModelBundle b;
  const auto& ws = j.at("ws");
  const auto& wq = j.at("wq");
  if (ws.size() != cues::kNumSpcSlots)
    throw std::runtime_error("bundle ws has " + std::to_string(ws.size()) +
                             " entries, expected 14");
  if (wq.size() != ppc::kNumPpcSlots)
    throw std::runtime_error("bundle wq has " + std::to_string(wq.size()) +
                             " entries, expected 3");
  b.ws.resize(cues::kNumSpcSlots);
  b.wq.resize(ppc::kNumPpcSlots);
  for (int i = 0; i < b.ws.size(); ++i) b.ws[i] = ws[i].get<double>();
  for (int i = 0; i < b.wq.size(); ++i) b.wq[i] = wq[i].get<double>();
  b.fingerprint = j.value("fingerprint", "");
  if (j.contains("position_svms"))
    for (const auto& [type, file] : j.at("position_svms").items()) {
      svm::RbfSvmModel m =
          svm::RbfSvmModel::load((fs::path(dir) / file.get<std::string>()).string());
      if (m.dim() != 4)
        throw std::runtime_error("position svm for " + type + " has dim " +
                                 std::to_string(m.dim()) + ", expected 4");
      b.position_svms.emplace(ling::phrase_type_from_string(type), std::move(m));
    }
  if (j.contains("cca"))
    b.cca = cca::CcaModel::load((fs::path(dir) / j.at("cca").get<std::string>()).string());
  if (j.contains("pair_bank"))
    b.pair_bank =
        ppc::PairBank::load((fs::path(dir) / j.at("pair_bank").get<std::string>()).string());
  if (j.contains("rank")) {
    b.rank = svm::RankSvmModel::load(
        (fs::path(dir) / j.at("rank").get<std::string>()).string());
    if (b.rank->dim() != vrd::kFeatureDim)
      throw std::runtime_error("bundle rank svm has dim " +
                               std::to_string(b.rank->dim()) + ", expected 11");
  }
  return b;
}

std::string config_fingerprint(const std::string& description) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : description) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace groundkit::io
