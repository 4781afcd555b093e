#include "groundkit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace groundkit::pipeline {

using nlohmann::json;

std::vector<TupleRecord> load_tuples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TupleRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      TupleRecord t;
      t.image_id = j.at("image_id").get<std::string>();
      t.sentence_id = j.at("sentence_id").get<std::string>();
      t.left_phrase = j.at("left_phrase").get<std::string>();
      t.right_phrase = j.at("right_phrase").get<std::string>();
      t.kind = ling::relation_kind_from_string(j.at("kind").get<std::string>());
      for (const auto& w : j.at("rel_words"))
        t.rel_words.push_back(w.get<std::string>());
      t.crossed_coordination = j.value("crossed_coordination", false);
      if (!j.at("key").is_null()) {
        ppc::PairKey key;
        key.kind = t.kind;
        key.left = j.at("key").at("left").get<std::string>();
        key.rel = j.at("key").value("rel", "");
        key.right = j.at("key").at("right").get<std::string>();
        t.key = std::move(key);
      }
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_tuples_jsonl(const std::string& path,
                       std::span<const TupleRecord> tuples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const TupleRecord& t : tuples) {
    json j = {{"image_id", t.image_id},
              {"sentence_id", t.sentence_id},
              {"left_phrase", t.left_phrase},
              {"right_phrase", t.right_phrase},
              {"kind", std::string(ling::to_string(t.kind))},
              {"rel_words", t.rel_words},
              {"crossed_coordination", t.crossed_coordination},
              {"key", nullptr}};
    if (t.key)
      j["key"] = {{"left", t.key->left},
                  {"rel", t.key->rel},
                  {"right", t.key->right}};
    out << j.dump() << "\n";
  }
}

namespace {

std::string composite_id(const std::string& image_id,
                         const std::string& sentence_id) {
  return image_id + "#" + sentence_id;
}

std::string strip_sentence(const std::string& composite) {
  const size_t cut = composite.find('#');
  return cut == std::string::npos ? composite : composite.substr(0, cut);
}

}  // namespace

ExtractResult extract_cues(const ExtractInputs& in) {
  if (!in.boxes_by_image || !in.phrase_features || !in.region_features ||
      !in.assets || !in.bundle)
    throw std::invalid_argument("extract_cues: missing required inputs");
  if (!in.bundle->cca)
    throw std::invalid_argument("extract_cues: bundle has no embedding model");

  ExtractResult res;
  cues::CueModels models;
  models.cca = &*in.bundle->cca;
  models.position_svms = &in.bundle->position_svms;
  models.object_scores = in.object_scores;
  models.adjective_scores = in.adjective_scores;
  models.subject_verb_scores = in.subject_verb_scores;
  models.verb_object_scores = in.verb_object_scores;
  models.config = &in.assets->cue_config;

  for (const io::SentenceRecord& rec : in.sentences) {
    auto box_it = in.boxes_by_image->find(rec.image_id);
    if (box_it == in.boxes_by_image->end()) {
      res.warnings.push_back("no candidate boxes for image " + rec.image_id +
                             "; sentence " + rec.sentence_id + " skipped");
      continue;
    }
    const io::ImageBoxes& ib = box_it->second;

    ling::ParseTree tree;
    try {
      tree = ling::parse_ptb(rec.parse);
    } catch (const std::exception& e) {
      res.warnings.push_back("sentence " + rec.sentence_id +
                             ": parse error: " + e.what());
      continue;
    }

    std::vector<ling::EntityMention> entities;
    entities.reserve(rec.entities.size());
    for (const io::SentenceEntity& e : rec.entities) entities.push_back(e.mention);

    auto links = ling::resolve_pronouns(tree, entities, in.assets->pronouns);
    auto raw = ling::extract_tuples(tree, entities, &in.assets->pronouns,
                                    &res.warnings);
    auto tuples = ling::expand_tuples_with_pronouns(raw, links, entities);

    std::vector<std::vector<std::string>> left_verbs(entities.size()),
        right_verbs(entities.size());
    for (const ling::RelationTuple& t : tuples) {
      if (t.kind != ling::RelationKind::Verb || t.rel_words.empty()) continue;
      left_verbs[t.left.entity].push_back(t.rel_words.front());
      right_verbs[t.right.entity].push_back(t.rel_words.front());
    }

    // Region features for the image's candidate boxes.
    Eigen::MatrixXd region_vecs;
    for (size_t b = 0; b < ib.boxes.size(); ++b) {
      const Eigen::VectorXd& v =
          in.region_features->get(rec.image_id + ":b" + std::to_string(b));
      if (region_vecs.rows() == 0)
        region_vecs.resize(ib.boxes.size(), v.size());
      region_vecs.row(static_cast<int>(b)) = v;
    }

    data::ValImage img;
    img.image_id = composite_id(rec.image_id, rec.sentence_id);

    for (size_t e = 0; e < rec.entities.size(); ++e) {
      const io::SentenceEntity& ent = rec.entities[e];
      cues::PhraseContext ctx;
      for (int tk = ent.mention.begin; tk < ent.mention.end; ++tk)
        ctx.tokens.push_back(ling::lowercase(tree.tokens[tk]));
      ctx.type = ent.mention.type;
      ctx.phrase_vec = in.phrase_features->get(ent.mention.phrase_id);
      ctx.left_verbs = left_verbs[e];
      ctx.right_verbs = right_verbs[e];

      cues::CandidateContext cand;
      cand.image_id = rec.image_id;
      cand.image = ib.image;
      cand.boxes = ib.boxes;
      cand.region_vecs = region_vecs;

      data::ValPhrase ph;
      ph.phrase_id = ent.mention.phrase_id;
      ph.type = ent.mention.type;
      ph.candidates = ib.boxes;
      ph.row = cues::assemble_spc(ctx, cand, models);
      if (!ent.gt_boxes.empty()) {
        ph.has_gt = true;
        ph.gt_union = geom::union_hull(ent.gt_boxes);
        // The ground-truth cue row comes from a coincident candidate box.
        for (size_t b = 0; b < ib.boxes.size(); ++b) {
          if (geom::iou(ib.boxes[b], ph.gt_union) > 0.999) {
            ph.gt_costs = ph.row.costs.row(static_cast<int>(b));
            break;
          }
        }
        res.gt.push_back({rec.image_id, ent.mention.phrase_id, ent.mention.type,
                          ent.gt_boxes});
      }
      res.candidates.push_back({rec.image_id, ent.mention.phrase_id, ib.boxes});
      img.phrases.push_back(std::move(ph));
    }

    for (const ling::RelationTuple& t : tuples) {
      if (t.left.entity == t.right.entity) continue;  // self-relations feed SPC only
      TupleRecord tr;
      tr.image_id = rec.image_id;
      tr.sentence_id = rec.sentence_id;
      tr.left_phrase = entities[t.left.entity].phrase_id;
      tr.right_phrase = entities[t.right.entity].phrase_id;
      tr.kind = t.kind;
      tr.rel_words = t.rel_words;
      tr.crossed_coordination = t.crossed_coordination;
      tr.key = ppc::make_key(t, entities, in.assets->cue_config.verbs,
                             in.assets->prepositions);
      res.tuples.push_back(std::move(tr));
    }
    res.dataset.push_back(std::move(img));
  }
  return res;
}

namespace {

// Locate a tuple's phrases inside the dataset.
struct PhraseRef {
  int image = -1;
  int phrase = -1;
};

std::map<std::pair<std::string, std::string>, PhraseRef> index_phrases(
    const data::ValDataset& ds) {
  std::map<std::pair<std::string, std::string>, PhraseRef> ix;
  for (size_t i = 0; i < ds.size(); ++i)
    for (size_t p = 0; p < ds[i].phrases.size(); ++p)
      ix[{strip_sentence(ds[i].image_id), ds[i].phrases[p].phrase_id}] = {
          static_cast<int>(i), static_cast<int>(p)};
  return ix;
}

}  // namespace

void attach_relations(data::ValDataset& ds, std::span<const TupleRecord> tuples,
                      const ppc::PairBank& bank, std::span<const double> ws) {
  auto ix = index_phrases(ds);
  // Per-phrase S under ws, computed lazily per image.
  std::vector<std::vector<Eigen::VectorXd>> scores(ds.size());
  auto s_of = [&](int image, int phrase) -> const Eigen::VectorXd& {
    auto& img_scores = scores[image];
    if (img_scores.empty()) {
      img_scores.resize(ds[image].phrases.size());
      for (size_t p = 0; p < ds[image].phrases.size(); ++p)
        img_scores[p] = cues::spc_score(ds[image].phrases[p].row, ws);
    }
    return img_scores[phrase];
  };

  for (const TupleRecord& t : tuples) {
    auto li = ix.find({t.image_id, t.left_phrase});
    auto ri = ix.find({t.image_id, t.right_phrase});
    if (li == ix.end() || ri == ix.end() || li->second.image != ri->second.image)
      continue;
    const int image = li->second.image;
    data::ValImage& img = ds[image];
    data::ValRelation rel;
    rel.left = li->second.phrase;
    rel.right = ri->second.phrase;
    rel.slot = ppc::ppc_slot(t.kind);
    rel.available = t.key && bank.has(*t.key);
    const auto& lc = img.phrases[rel.left].candidates;
    const auto& rc = img.phrases[rel.right].candidates;
    rel.psi = Eigen::MatrixXd::Zero(lc.size(), rc.size());
    if (rel.available) {
      const Eigen::VectorXd& sl = s_of(image, rel.left);
      const Eigen::VectorXd& sr = s_of(image, rel.right);
      for (size_t a = 0; a < lc.size(); ++a)
        for (size_t b = 0; b < rc.size(); ++b)
          rel.psi(static_cast<int>(a), static_cast<int>(b)) =
              ppc::ppc_cost(bank, *t.key, lc[a], rc[b],
                            sl[static_cast<int>(a)], sr[static_cast<int>(b)])
                  .cost;
    }
    img.relations.push_back(std::move(rel));
  }
}

std::vector<ppc::PairInstance> pair_training_instances(
    const data::ValDataset& ds, std::span<const TupleRecord> tuples,
    std::span<const double> ws, std::vector<std::string>* warnings) {
  auto ix = index_phrases(ds);
  std::vector<ppc::PairInstance> out;
  for (const TupleRecord& t : tuples) {
    if (!t.key) continue;
    auto li = ix.find({t.image_id, t.left_phrase});
    auto ri = ix.find({t.image_id, t.right_phrase});
    if (li == ix.end() || ri == ix.end() || li->second.image != ri->second.image)
      continue;
    const data::ValImage& img = ds[li->second.image];
    const data::ValPhrase& pl = img.phrases[li->second.phrase];
    const data::ValPhrase& pr = img.phrases[ri->second.phrase];
    if (!pl.has_gt || !pr.has_gt) continue;
    if (pl.gt_costs.size() == 0 || pr.gt_costs.size() == 0) {
      if (warnings)
        warnings->push_back("tuple " + t.key->canonical() + " in " + t.image_id +
                            ": no ground-truth cue row; skipped");
      continue;
    }
    auto masked_dot = [&](const Eigen::VectorXd& costs,
                          const cues::SpcRow& row) {
      double s = 0;
      for (int c = 0; c < cues::kNumSpcSlots; ++c)
        if (row.available[c]) s += costs[c] * ws[c];
      return s;
    };
    ppc::PairInstance inst;
    inst.key = *t.key;
    inst.gt_left = pl.gt_union;
    inst.gt_right = pr.gt_union;
    inst.s_left = masked_dot(pl.gt_costs, pl.row);
    inst.s_right = masked_dot(pr.gt_costs, pr.row);
    inst.left_candidates = pl.candidates;
    inst.right_candidates = pr.candidates;
    Eigen::VectorXd sl = cues::spc_score(pl.row, ws);
    Eigen::VectorXd sr = cues::spc_score(pr.row, ws);
    inst.s_left_candidates.assign(sl.begin(), sl.end());
    inst.s_right_candidates.assign(sr.begin(), sr.end());
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

std::vector<metrics::PredItem> infer_image(const data::ValImage& img,
                                           std::span<const double> ws,
                                           std::span<const double> wq,
                                           const InferConfig& cfg) {
  const int n = static_cast<int>(img.phrases.size());
  std::vector<metrics::PredItem> preds;
  if (n == 0) return preds;

  std::vector<std::vector<int>> kept(n);
  infer::JointProblem problem;
  problem.unary.resize(n);
  for (int p = 0; p < n; ++p) {
    Eigen::VectorXd s = cues::spc_score(img.phrases[p].row, ws);
    kept[p] = infer::retrieve_candidates(img.phrases[p].candidates,
                                         std::span<const double>(s.data(), s.size()),
                                         cfg.m, cfg.nms_iou);
    problem.unary[p].resize(kept[p].size());
    for (size_t k = 0; k < kept[p].size(); ++k)
      problem.unary[p][static_cast<int>(k)] = s[kept[p][k]];
  }

  // Sum weighted pair terms per ordered phrase pair.
  std::map<std::pair<int, int>, Eigen::MatrixXd> pair_sum;
  for (const data::ValRelation& rel : img.relations) {
    if (!rel.available || wq[rel.slot] == 0.0) continue;
    auto key = std::make_pair(rel.left, rel.right);
    auto [it, inserted] = pair_sum.try_emplace(
        key, Eigen::MatrixXd::Zero(kept[rel.left].size(), kept[rel.right].size()));
    for (size_t a = 0; a < kept[rel.left].size(); ++a)
      for (size_t b = 0; b < kept[rel.right].size(); ++b)
        it->second(static_cast<int>(a), static_cast<int>(b)) +=
            wq[rel.slot] * rel.psi(kept[rel.left][a], kept[rel.right][b]);
  }
  for (auto& [key, q] : pair_sum)
    problem.pairs.push_back({key.first, key.second, std::move(q)});

  uint64_t combos = 1;
  bool fits = true;
  for (const auto& u : problem.unary) {
    combos *= static_cast<uint64_t>(u.size());
    if (combos > cfg.budget) {
      fits = false;
      break;
    }
  }
  infer::Assignment sol;
  switch (cfg.solver) {
    case InferConfig::Solver::Exact:
      sol = infer::solve_exact(problem, cfg.budget);
      break;
    case InferConfig::Solver::Relaxed:
      sol = infer::solve_relaxed(problem, cfg.relax_iters, cfg.relax_tol);
      break;
    case InferConfig::Solver::Auto:
      sol = fits ? infer::solve_exact(problem, cfg.budget)
                 : infer::solve_relaxed(problem, cfg.relax_iters, cfg.relax_tol);
      break;
  }

  const std::string image_id = strip_sentence(img.image_id);
  for (int p = 0; p < n; ++p) {
    const int original = kept[p][sol.chosen[p]];
    preds.push_back({image_id, img.phrases[p].phrase_id,
                     img.phrases[p].candidates[original]});
  }
  return preds;
}

}  // namespace

std::vector<metrics::PredItem> infer_dataset(const data::ValDataset& ds,
                                             std::span<const double> ws,
                                             std::span<const double> wq,
                                             const InferConfig& cfg,
                                             int threads) {
  std::vector<std::vector<metrics::PredItem>> per_image(ds.size());
  const int t = std::max(1, threads);
  if (t == 1) {
    for (size_t i = 0; i < ds.size(); ++i)
      per_image[i] = infer_image(ds[i], ws, wq, cfg);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < t; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < ds.size(); i = next.fetch_add(1))
          per_image[i] = infer_image(ds[i], ws, wq, cfg);
      });
    for (auto& th : pool) th.join();
  }
  std::vector<metrics::PredItem> out;
  for (auto& v : per_image)
    out.insert(out.end(), std::make_move_iterator(v.begin()),
               std::make_move_iterator(v.end()));
  return out;
}

std::vector<metrics::GtItem> dataset_gt(const data::ValDataset& ds) {
  std::vector<metrics::GtItem> out;
  for (const data::ValImage& img : ds)
    for (const data::ValPhrase& ph : img.phrases)
      if (ph.has_gt)
        out.push_back({strip_sentence(img.image_id), ph.phrase_id, ph.type,
                       {ph.gt_union}});
  return out;
}

std::vector<metrics::CandidateItem> dataset_candidates(const data::ValDataset& ds) {
  std::vector<metrics::CandidateItem> out;
  for (const data::ValImage& img : ds)
    for (const data::ValPhrase& ph : img.phrases)
      out.push_back({strip_sentence(img.image_id), ph.phrase_id, ph.candidates});
  return out;
}

}  // namespace groundkit::pipeline
