// groundkit: multi-cue phrase grounding and relationship detection toolkit.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "groundkit/assets.hpp"
#include "groundkit/cca.hpp"
#include "groundkit/io.hpp"
#include "groundkit/learn.hpp"
#include "groundkit/pipeline.hpp"
#include "groundkit/rng.hpp"
#include "groundkit/synth.hpp"
#include "groundkit/vrd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace groundkit;

namespace {

struct GlobalOpts {
  uint64_t seed = 0;
  int threads = 1;
  std::string config_path;
  json config = json::object();

  double config_num(const std::string& key, double fallback) const {
    return config.contains(key) ? config.at(key).get<double>() : fallback;
  }
};

void fail(const std::string& msg) {
  json err = {{"error", msg}};
  std::cerr << err.dump() << "\n";
  std::exit(1);
}

io::FeatureTable load_features(const std::string& path) {
  if (path.ends_with(".gkf") || path.ends_with(".raw"))
    return io::FeatureTable::load_raw(path);
  return io::FeatureTable::load_jsonl(path);
}

std::map<std::string, io::ImageBoxes> boxes_index(const std::string& path) {
  std::map<std::string, io::ImageBoxes> out;
  for (io::ImageBoxes& ib : io::load_boxes_jsonl(path))
    out.emplace(ib.image_id, std::move(ib));
  return out;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<size_t>(v.size())};
}

int run_synth(const GlobalOpts& g, const synth::SynthSpec& spec,
              const std::string& out_dir) {
  data::ValDataset ds = synth::synth_grounding_dataset(spec, g.seed);
  io::save_val_dataset(ds, out_dir);
  io::save_gt_jsonl((fs::path(out_dir) / "gt.jsonl").string(),
                    pipeline::dataset_gt(ds));
  auto cands = pipeline::dataset_candidates(ds);
  std::ofstream out(fs::path(out_dir) / "candidates.jsonl");
  for (const auto& c : cands) {
    json boxes = json::array();
    for (const geom::Box& b : c.boxes)
      boxes.push_back(json::array({b.x, b.y, b.w, b.h}));
    out << json{{"image_id", c.image_id},
                {"phrase_id", c.phrase_id},
                {"boxes", std::move(boxes)}}
               .dump()
        << "\n";
  }
  std::cout << "wrote " << ds.size() << " images to " << out_dir << "\n";
  return 0;
}

int run_extract(const GlobalOpts& g, const std::string& sentences_path,
                const std::string& boxes_path, const std::string& phrase_feats,
                const std::string& region_feats, const std::string& assets_dir,
                const std::string& bundle_dir, const std::string& out_dir,
                const std::map<std::string, std::string>& score_paths,
                const std::string& stage) {
  auto sentences = io::load_sentences_jsonl(sentences_path);
  auto boxes = boxes_index(boxes_path);
  auto pf = load_features(phrase_feats);
  auto rf = load_features(region_feats);
  auto pack = assets::load_assets(assets_dir);
  pack.cue_config.prob_floor = g.config_num("prob_floor", pack.cue_config.prob_floor);
  auto bundle = io::ModelBundle::load(bundle_dir);

  std::map<std::string, cues::DetectorScoreTable> tables;
  for (const auto& [name, path] : score_paths)
    tables.emplace(name, cues::DetectorScoreTable::load_jsonl(path));
  auto table = [&](const char* name) -> const cues::DetectorScoreTable* {
    auto it = tables.find(name);
    return it == tables.end() ? nullptr : &it->second;
  };

  pipeline::ExtractInputs in;
  in.sentences = sentences;
  in.boxes_by_image = &boxes;
  in.phrase_features = &pf;
  in.region_features = &rf;
  in.assets = &pack;
  in.bundle = &bundle;
  in.object_scores = table("objects");
  in.adjective_scores = table("adjectives");
  in.subject_verb_scores = table("subject_verb");
  in.verb_object_scores = table("verb_object");

  pipeline::ExtractResult res = pipeline::extract_cues(in);
  for (const std::string& w : res.warnings) std::cerr << "warning: " << w << "\n";

  if (stage == "ppc" || stage == "both") {
    if (!bundle.pair_bank)
      fail("stage '" + stage + "' needs a pair bank in the bundle");
    pipeline::attach_relations(res.dataset, res.tuples, *bundle.pair_bank,
                               as_span(bundle.ws));
  }

  fs::create_directories(out_dir);
  io::save_val_dataset(res.dataset, out_dir);
  pipeline::save_tuples_jsonl((fs::path(out_dir) / "tuples.jsonl").string(),
                              res.tuples);
  io::save_gt_jsonl((fs::path(out_dir) / "gt.jsonl").string(), res.gt);
  std::cout << "extracted " << res.dataset.size() << " sentences, "
            << res.tuples.size() << " tuples\n";
  return 0;
}

int run_fit_cca(const std::string& x_path, const std::string& y_path, int k,
                double reg, double eig_power, const std::string& out_path) {
  io::FeatureTable xt = load_features(x_path);
  io::FeatureTable yt = load_features(y_path);
  std::vector<std::string> keys;
  for (const std::string& key : xt.keys())
    if (yt.contains(key)) keys.push_back(key);
  if (keys.size() < 2) fail("fewer than 2 paired keys between the two tables");
  Eigen::MatrixXd x(keys.size(), xt.dim()), y(keys.size(), yt.dim());
  for (size_t i = 0; i < keys.size(); ++i) {
    x.row(static_cast<int>(i)) = xt.get(keys[i]);
    y.row(static_cast<int>(i)) = yt.get(keys[i]);
  }
  cca::CcaModel model = cca::fit_cca(x, y, k, reg, eig_power);
  model.save(out_path);
  std::cout << "fit cca on " << keys.size() << " pairs; top correlation "
            << model.correlations[0] << "\n";
  return 0;
}

int run_train_position(const GlobalOpts& g, const std::string& sentences_path,
                       const std::string& boxes_path, const std::string& bundle_dir,
                       double c, double gamma, int neg_ratio) {
  auto sentences = io::load_sentences_jsonl(sentences_path);
  auto boxes = boxes_index(boxes_path);
  io::ModelBundle bundle;
  if (fs::exists(fs::path(bundle_dir) / "bundle.json"))
    bundle = io::ModelBundle::load(bundle_dir);

  std::map<ling::PhraseType, std::vector<Eigen::Vector4d>> pos, neg;
  Rng rng(g.seed);
  for (const io::SentenceRecord& rec : sentences) {
    auto it = boxes.find(rec.image_id);
    if (it == boxes.end()) continue;
    const io::ImageBoxes& ib = it->second;
    for (const io::SentenceEntity& ent : rec.entities) {
      if (ent.gt_boxes.empty()) continue;
      for (const geom::Box& b : ent.gt_boxes) {
        auto f = geom::position_feature(b, ib.image);
        pos[ent.mention.type].push_back(Eigen::Map<Eigen::Vector4d>(f.data()));
      }
      std::vector<int> eligible;
      for (size_t i = 0; i < ib.boxes.size(); ++i) {
        bool off = true;
        for (const geom::Box& b : ent.gt_boxes)
          if (geom::iou(ib.boxes[i], b) >= 0.5) off = false;
        if (off) eligible.push_back(static_cast<int>(i));
      }
      const int want = static_cast<int>(ent.gt_boxes.size()) * neg_ratio;
      for (int k = 0; k < want && !eligible.empty(); ++k) {
        int i = eligible[rng.uniform_int(static_cast<int>(eligible.size()))];
        auto f = geom::position_feature(ib.boxes[i], ib.image);
        neg[ent.mention.type].push_back(Eigen::Map<Eigen::Vector4d>(f.data()));
      }
    }
  }

  int trained = 0;
  for (const auto& [type, ps] : pos) {
    const auto& ns = neg[type];
    if (ps.empty() || ns.empty()) {
      std::cerr << "warning: phrase type " << ling::to_string(type)
                << " lacks positives or negatives; skipped\n";
      continue;
    }
    Eigen::MatrixXd pm(ps.size(), 4), nm(ns.size(), 4);
    for (size_t i = 0; i < ps.size(); ++i) pm.row(static_cast<int>(i)) = ps[i];
    for (size_t i = 0; i < ns.size(); ++i) nm.row(static_cast<int>(i)) = ns[i];
    const double use_gamma = gamma > 0 ? gamma : svm::default_gamma(4);
    bundle.position_svms[type] =
        svm::train_rbf_svm(pm, nm, c, use_gamma, rng.next());
    ++trained;
  }
  bundle.save(bundle_dir);
  std::cout << "trained " << trained << " position models\n";
  return 0;
}

int run_train_pair_bank(const GlobalOpts& g, const std::string& cues_dir,
                        const std::string& bundle_dir, int min_count,
                        int neg_ratio, double c, double gamma) {
  data::ValDataset ds = io::load_val_dataset(cues_dir);
  auto tuples =
      pipeline::load_tuples_jsonl((fs::path(cues_dir) / "tuples.jsonl").string());
  io::ModelBundle bundle = io::ModelBundle::load(bundle_dir);

  std::vector<std::string> warnings;
  auto instances =
      pipeline::pair_training_instances(ds, tuples, as_span(bundle.ws), &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

  ppc::PairTrainConfig cfg;
  cfg.min_count = min_count;
  cfg.negatives_per_positive = neg_ratio;
  cfg.svm_c = c;
  cfg.svm_gamma = gamma > 0 ? gamma : svm::default_gamma(ppc::kPairFeatureDim);
  cfg.seed = g.seed;
  ppc::PairTrainReport report;
  bundle.pair_bank = ppc::train_pair_bank(instances, cfg, &report);
  bundle.save(bundle_dir);
  std::cout << "trained " << report.trained << " pair classifiers; skipped "
            << report.skipped_below_min_count.size() << " under min count\n";
  return 0;
}

int run_learn_weights(const GlobalOpts& g, const std::string& stage,
                      const std::string& val_dir, const std::string& bundle_dir,
                      int restarts, int max_evals) {
  data::ValDataset ds = io::load_val_dataset(val_dir);
  io::ModelBundle bundle;
  if (fs::exists(fs::path(bundle_dir) / "bundle.json"))
    bundle = io::ModelBundle::load(bundle_dir);

  learn::SearchConfig cfg;
  cfg.restarts = restarts;
  cfg.seed = g.seed;
  cfg.nm.max_evals = max_evals;

  int count = 0;
  if (stage == "spc") {
    bundle.ws = learn::learn_weights_s(ds, cfg, &count);
    std::cout << "learned ws; validation recall count " << count << "\n";
  } else if (stage == "ppc") {
    bundle.wq = learn::learn_weights_q(ds, as_span(bundle.ws), cfg, &count);
    if (count == 0)
      std::cerr << "warning: no usable relations; wq left at its random init\n";
    std::cout << "learned wq; validation pair count " << count << "\n";
  } else {
    fail("unknown stage '" + stage + "' (expected spc or ppc)");
  }
  bundle.fingerprint = io::config_fingerprint(
      "stage=" + stage + " seed=" + std::to_string(g.seed) +
      " restarts=" + std::to_string(restarts));
  bundle.save(bundle_dir);
  return 0;
}

int run_infer(const GlobalOpts& g, const std::string& val_dir,
              const std::string& bundle_dir, const std::string& out_path,
              const pipeline::InferConfig& cfg) {
  data::ValDataset ds = io::load_val_dataset(val_dir);
  io::ModelBundle bundle = io::ModelBundle::load(bundle_dir);
  auto preds = pipeline::infer_dataset(ds, as_span(bundle.ws), as_span(bundle.wq),
                                       cfg, g.threads);
  io::save_predictions_jsonl(out_path, preds);
  std::cout << "wrote " << preds.size() << " predictions\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path) {
  auto preds = io::load_predictions_jsonl(pred_path);
  auto gt = io::load_gt_jsonl(gt_path);
  metrics::RecallBreakdown r = metrics::recall_at_1(preds, gt);
  std::cout << "Recall@1\n" << r.table();
  return 0;
}

int run_upper_bound(const std::string& cand_path, const std::string& gt_path) {
  std::vector<metrics::CandidateItem> cands;
  std::ifstream in(cand_path);
  if (!in) fail("cannot open " + cand_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    metrics::CandidateItem c;
    c.image_id = j.at("image_id").get<std::string>();
    c.phrase_id = j.at("phrase_id").get<std::string>();
    for (const auto& b : j.at("boxes"))
      c.boxes.push_back({b[0].get<double>(), b[1].get<double>(),
                         b[2].get<double>(), b[3].get<double>()});
    cands.push_back(std::move(c));
  }
  auto gt = io::load_gt_jsonl(gt_path);
  metrics::RecallBreakdown r = metrics::upper_bound(cands, gt);
  std::cout << "Upper bound\n" << r.table();
  return 0;
}

vrd::Detections to_detections(const io::ImageBoxes& ib) {
  if (ib.classes.empty())
    fail("detections for image " + ib.image_id + " carry no classes");
  return {ib.image_id, ib.image, ib.boxes, ib.classes};
}

vrd::RegionFeatures region_features_for(const io::FeatureTable& feats,
                                        const io::ImageBoxes& ib) {
  vrd::RegionFeatures rf;
  for (size_t i = 0; i < ib.boxes.size(); ++i) {
    const Eigen::VectorXd& v = feats.get(ib.image_id + ":b" + std::to_string(i));
    if (rf.box_feats.rows() == 0) rf.box_feats.resize(ib.boxes.size(), v.size());
    rf.box_feats.row(static_cast<int>(i)) = v;
  }
  for (size_t i = 0; i < ib.boxes.size(); ++i)
    for (size_t j = 0; j < ib.boxes.size(); ++j)
      if (i != j) {
        std::string key =
            ib.image_id + ":u" + std::to_string(i) + ":" + std::to_string(j);
        if (feats.contains(key))
          rf.union_feats[{static_cast<int>(i), static_cast<int>(j)}] =
              feats.get(key);
      }
  return rf;
}

int run_vrd_train(const GlobalOpts& g, const std::string& det_path,
                  const std::string& gt_path, const std::string& feats,
                  const std::string& vocab_json, const std::string& name_vecs,
                  const std::string& cca_dir, const std::string& out_dir,
                  int num_classes, int num_predicates, double rank_c,
                  int rank_epochs, int neg_ratio, double svm_c, double svm_gamma) {
  auto detections = io::load_boxes_jsonl(det_path);
  auto features = load_features(feats);
  auto vocab = io::load_vrd_vocab(vocab_json, load_features(name_vecs));
  vocab.validate({num_classes, num_predicates});
  auto gt = io::load_vrd_gt_jsonl(gt_path);

  vrd::VrdModels models;
  for (int i = 0; i < vrd::kNumCcaScores; ++i)
    models.cca.push_back(cca::CcaModel::load(
        (fs::path(cca_dir) / ("cca_" + std::to_string(i) + ".json")).string()));

  Rng rng(g.seed);
  std::vector<Eigen::Vector4d> pos, neg;
  std::map<std::string, const io::ImageBoxes*> det_by_image;
  for (const auto& ib : detections) det_by_image[ib.image_id] = &ib;
  std::vector<vrd::SpatialExample> spatial;
  for (const auto& rel : gt) {
    auto it = det_by_image.find(rel.image_id);
    if (it == det_by_image.end()) continue;
    const io::ImageBoxes& ib = *it->second;
    for (const geom::Box& b : {rel.subject_box, rel.object_box}) {
      auto f = geom::position_feature(b, ib.image);
      pos.push_back(Eigen::Map<Eigen::Vector4d>(f.data()));
    }
    for (int k = 0; k < neg_ratio; ++k) {
      if (ib.boxes.empty()) break;
      int i = rng.uniform_int(static_cast<int>(ib.boxes.size()));
      if (geom::iou(ib.boxes[i], rel.subject_box) < 0.5 &&
          geom::iou(ib.boxes[i], rel.object_box) < 0.5) {
        auto f = geom::position_feature(ib.boxes[i], ib.image);
        neg.push_back(Eigen::Map<Eigen::Vector4d>(f.data()));
      }
    }
    vrd::SpatialExample ex;
    ex.predicate = vocab.predicate_index(rel.predicate);
    ex.feature = geom::spatial_pair_feature(rel.subject_box, rel.object_box);
    spatial.push_back(ex);
  }
  if (pos.empty() || neg.empty()) fail("vrd-train: no position examples");
  Eigen::MatrixXd pm(pos.size(), 4), nm(neg.size(), 4);
  for (size_t i = 0; i < pos.size(); ++i) pm.row(static_cast<int>(i)) = pos[i];
  for (size_t i = 0; i < neg.size(); ++i) nm.row(static_cast<int>(i)) = neg[i];
  const double use_gamma = svm_gamma > 0 ? svm_gamma : svm::default_gamma(4);
  models.position = svm::train_rbf_svm(pm, nm, svm_c, use_gamma, rng.next());
  models.predicate_spatial = vrd::train_predicate_spatial(
      spatial, num_predicates, svm_c, use_gamma, rng.next());

  // Features are rank-independent; enumerate candidates under a zero model,
  // keeping every predicate so the sampler sees the full pool.
  models.rank = svm::RankSvmModel{Eigen::VectorXd::Zero(vrd::kFeatureDim), rank_c};
  std::vector<vrd::RelationshipCandidate> all;
  for (const auto& ib : detections) {
    auto cands = vrd::score_relationships(to_detections(ib),
                                          region_features_for(features, ib),
                                          vocab, models, num_predicates);
    all.insert(all.end(), cands.begin(), cands.end());
  }
  auto pairs = vrd::build_rank_training(all, gt, neg_ratio, rng.next());
  models.rank = svm::train_rank_svm(pairs, rank_c, rank_epochs, rng.next());
  models.save(out_dir);
  std::cout << "trained vrd models on " << pairs.size() << " ranking pairs\n";
  return 0;
}

int run_vrd_score(const GlobalOpts& g, const std::string& det_path,
                  const std::string& feats, const std::string& vocab_json,
                  const std::string& name_vecs, const std::string& models_dir,
                  const std::string& out_path, int top_k, int num_classes,
                  int num_predicates) {
  auto detections = io::load_boxes_jsonl(det_path);
  auto features = load_features(feats);
  auto vocab = io::load_vrd_vocab(vocab_json, load_features(name_vecs));
  vocab.validate({num_classes, num_predicates});
  vrd::VrdModels models = vrd::VrdModels::load(models_dir);

  std::vector<std::vector<vrd::RelationshipCandidate>> per_image(detections.size());
  const int threads = std::max(1, g.threads);
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < detections.size();
           i = next.fetch_add(1))
        per_image[i] = vrd::score_relationships(
            to_detections(detections[i]),
            region_features_for(features, detections[i]), vocab, models, top_k);
    });
  for (auto& th : pool) th.join();

  std::vector<vrd::RelationshipCandidate> all;
  for (auto& v : per_image)
    all.insert(all.end(), std::make_move_iterator(v.begin()),
               std::make_move_iterator(v.end()));
  io::save_vrd_candidates_jsonl(out_path, all);
  std::cout << "wrote " << all.size() << " relationship candidates\n";
  return 0;
}

int run_vrd_eval(const std::string& cand_path, const std::string& gt_path, int k,
                 bool zero_shot, bool no_dedup) {
  auto cands = io::load_vrd_candidates_jsonl(cand_path);
  auto gt = io::load_vrd_gt_jsonl(gt_path);
  std::map<std::string, std::vector<vrd::RelationshipCandidate>> cand_by_image;
  for (auto& c : cands) {
    std::string id = c.image_id;
    cand_by_image[id].push_back(std::move(c));
  }
  std::map<std::string, std::vector<vrd::VrdGtRelationship>> gt_by_image;
  for (auto& g2 : gt) {
    std::string id = g2.image_id;
    gt_by_image[id].push_back(std::move(g2));
  }

  int matched = 0, total = 0;
  for (const auto& [image_id, image_gt] : gt_by_image) {
    auto it = cand_by_image.find(image_id);
    std::span<const vrd::RelationshipCandidate> ranked;
    if (it != cand_by_image.end()) ranked = it->second;
    vrd::RecallResult r =
        vrd::eval_recall_at(ranked, image_gt, k, zero_shot, !no_dedup);
    matched += r.matched;
    total += r.gt_count;
  }
  if (total == 0) {
    std::cout << "R@" << k << (zero_shot ? " (zero-shot)" : "")
              << ": not applicable (no ground truth)\n";
    return 0;
  }
  std::cout << "R@" << k << (zero_shot ? " (zero-shot)" : "") << ": "
            << static_cast<double>(matched) / total << " (" << matched << "/"
            << total << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groundkit: phrase grounding and relationship detection"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--threads", g.threads, "worker threads for per-image stages");
  app.add_option("--config", g.config_path, "JSON config with defaults");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth::SynthSpec spec;
  std::string out_dir;
  synth_cmd->add_option("--out", out_dir, "output directory")->required();
  synth_cmd->add_option("--images", spec.images);
  synth_cmd->add_option("--phrases", spec.phrases_per_image);
  synth_cmd->add_option("--candidates", spec.candidates_per_phrase);
  synth_cmd->add_option("--noise", spec.informative_noise);
  synth_cmd->add_option("--pair-noise", spec.pair_noise);
  synth_cmd->add_option("--relation-density", spec.relation_density);
  synth_cmd->add_option("--decoy-prob", spec.decoy_prob);
  synth_cmd->add_option("--planted-slot", spec.planted_slot);

  auto* extract_cmd = app.add_subcommand("extract-cues", "assemble cue cost tables");
  std::string sentences_path, boxes_path, phrase_feats, region_feats, assets_dir,
      bundle_dir;
  std::string stage = "spc";
  std::map<std::string, std::string> score_paths;
  extract_cmd->add_option("--sentences", sentences_path)->required();
  extract_cmd->add_option("--boxes", boxes_path)->required();
  extract_cmd->add_option("--phrase-features", phrase_feats)->required();
  extract_cmd->add_option("--region-features", region_feats)->required();
  extract_cmd->add_option("--assets", assets_dir)->required();
  extract_cmd->add_option("--bundle", bundle_dir)->required();
  extract_cmd->add_option("--out", out_dir)->required();
  extract_cmd->add_option("--stage", stage, "spc | ppc | both");
  extract_cmd->add_option("--scores-objects", score_paths["objects"]);
  extract_cmd->add_option("--scores-adjectives", score_paths["adjectives"]);
  extract_cmd->add_option("--scores-subject-verb", score_paths["subject_verb"]);
  extract_cmd->add_option("--scores-verb-object", score_paths["verb_object"]);

  auto* cca_cmd = app.add_subcommand("fit-cca", "fit the two-view embedding");
  std::string x_path, y_path, model_out;
  int cca_k = 16;
  double cca_reg = 1e-4, cca_power = 4.0;
  cca_cmd->add_option("--x", x_path, "view-X features (phrases)")->required();
  cca_cmd->add_option("--y", y_path, "view-Y features (regions)")->required();
  cca_cmd->add_option("--k", cca_k);
  cca_cmd->add_option("--reg", cca_reg);
  cca_cmd->add_option("--eig-power", cca_power);
  cca_cmd->add_option("--out", model_out)->required();

  auto* pos_cmd =
      app.add_subcommand("train-position-svm", "train per-type position models");
  double svm_c = 1.0, svm_gamma = -1;
  int neg_ratio = 3;
  pos_cmd->add_option("--sentences", sentences_path)->required();
  pos_cmd->add_option("--boxes", boxes_path)->required();
  pos_cmd->add_option("--bundle", bundle_dir)->required();
  pos_cmd->add_option("--c", svm_c);
  pos_cmd->add_option("--gamma", svm_gamma, "defaults to 1/dim");
  pos_cmd->add_option("--neg-ratio", neg_ratio);

  auto* bank_cmd =
      app.add_subcommand("train-pair-bank", "train pairwise spatial classifiers");
  std::string cues_dir;
  int min_count = 30;
  bank_cmd->add_option("--cues", cues_dir, "extract-cues output dir")->required();
  bank_cmd->add_option("--bundle", bundle_dir)->required();
  bank_cmd->add_option("--min-count", min_count);
  bank_cmd->add_option("--neg-ratio", neg_ratio);
  bank_cmd->add_option("--c", svm_c);
  bank_cmd->add_option("--gamma", svm_gamma);

  auto* learn_cmd = app.add_subcommand("learn-weights", "direct-search weights");
  std::string val_dir;
  int restarts = 20, max_evals = 4000;
  learn_cmd->add_option("--stage", stage, "spc | ppc")->required();
  learn_cmd->add_option("--val", val_dir)->required();
  learn_cmd->add_option("--bundle", bundle_dir)->required();
  learn_cmd->add_option("--restarts", restarts);
  learn_cmd->add_option("--max-evals", max_evals);

  auto* infer_cmd = app.add_subcommand("infer", "joint assignment");
  pipeline::InferConfig icfg;
  std::string pred_path, solver = "auto";
  infer_cmd->add_option("--val", val_dir)->required();
  infer_cmd->add_option("--bundle", bundle_dir)->required();
  infer_cmd->add_option("--out", pred_path)->required();
  infer_cmd->add_option("--m", icfg.m);
  infer_cmd->add_option("--nms-iou", icfg.nms_iou);
  infer_cmd->add_option("--solver", solver, "auto | exact | relaxed");
  infer_cmd->add_option("--budget", icfg.budget);

  auto* eval_cmd = app.add_subcommand("eval", "Recall@1 with per-type table");
  std::string gt_path, cand_path;
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--gt", gt_path)->required();

  auto* ub_cmd = app.add_subcommand("upper-bound", "candidate-set recall ceiling");
  ub_cmd->add_option("--candidates", cand_path)->required();
  ub_cmd->add_option("--gt", gt_path)->required();

  auto* vt_cmd = app.add_subcommand("vrd-train", "train the VRD models");
  std::string det_path, feats_path, vocab_json, name_vecs, cca_dir, models_dir;
  int num_classes = 100, num_predicates = 70, rank_epochs = 60;
  double rank_c = 1.0;
  vt_cmd->add_option("--detections", det_path)->required();
  vt_cmd->add_option("--gt", gt_path)->required();
  vt_cmd->add_option("--features", feats_path)->required();
  vt_cmd->add_option("--vocab", vocab_json)->required();
  vt_cmd->add_option("--name-vectors", name_vecs)->required();
  vt_cmd->add_option("--cca-dir", cca_dir, "directory with cca_0..5.json")
      ->required();
  vt_cmd->add_option("--out", models_dir)->required();
  vt_cmd->add_option("--classes", num_classes);
  vt_cmd->add_option("--predicates", num_predicates);
  vt_cmd->add_option("--rank-c", rank_c);
  vt_cmd->add_option("--rank-epochs", rank_epochs);
  vt_cmd->add_option("--neg-ratio", neg_ratio);
  vt_cmd->add_option("--c", svm_c);
  vt_cmd->add_option("--gamma", svm_gamma);

  auto* vs_cmd = app.add_subcommand("vrd-score", "score relationship candidates");
  int top_k = vrd::kDefaultTopK;
  vs_cmd->add_option("--detections", det_path)->required();
  vs_cmd->add_option("--features", feats_path)->required();
  vs_cmd->add_option("--vocab", vocab_json)->required();
  vs_cmd->add_option("--name-vectors", name_vecs)->required();
  vs_cmd->add_option("--models", models_dir)->required();
  vs_cmd->add_option("--out", cand_path)->required();
  vs_cmd->add_option("--top-k", top_k);
  vs_cmd->add_option("--classes", num_classes);
  vs_cmd->add_option("--predicates", num_predicates);

  auto* ve_cmd = app.add_subcommand("vrd-eval", "relationship recall at k");
  int at_k = 100;
  bool zero_shot = false, no_dedup = false;
  ve_cmd->add_option("--candidates", cand_path)->required();
  ve_cmd->add_option("--gt", gt_path)->required();
  ve_cmd->add_option("--k", at_k);
  ve_cmd->add_flag("--zero-shot", zero_shot);
  ve_cmd->add_flag("--no-dedup", no_dedup, "allow one candidate to recall many");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      if (!in) fail("cannot open config " + g.config_path);
      in >> g.config;
    }
    if (synth_cmd->parsed()) return run_synth(g, spec, out_dir);
    if (extract_cmd->parsed()) {
      std::map<std::string, std::string> present;
      for (const auto& [k, v] : score_paths)
        if (!v.empty()) present[k] = v;
      return run_extract(g, sentences_path, boxes_path, phrase_feats,
                         region_feats, assets_dir, bundle_dir, out_dir, present,
                         stage);
    }
    if (cca_cmd->parsed())
      return run_fit_cca(x_path, y_path, cca_k, cca_reg, cca_power, model_out);
    if (pos_cmd->parsed())
      return run_train_position(g, sentences_path, boxes_path, bundle_dir, svm_c,
                                svm_gamma, neg_ratio);
    if (bank_cmd->parsed())
      return run_train_pair_bank(g, cues_dir, bundle_dir, min_count, neg_ratio,
                                 svm_c, svm_gamma);
    if (learn_cmd->parsed())
      return run_learn_weights(g, stage, val_dir, bundle_dir, restarts, max_evals);
    if (infer_cmd->parsed()) {
      if (solver == "exact")
        icfg.solver = pipeline::InferConfig::Solver::Exact;
      else if (solver == "relaxed")
        icfg.solver = pipeline::InferConfig::Solver::Relaxed;
      else if (solver != "auto")
        fail("unknown solver '" + solver + "'");
      return run_infer(g, val_dir, bundle_dir, pred_path, icfg);
    }
    if (eval_cmd->parsed()) return run_eval(pred_path, gt_path);
    if (ub_cmd->parsed()) return run_upper_bound(cand_path, gt_path);
    if (vt_cmd->parsed())
      return run_vrd_train(g, det_path, gt_path, feats_path, vocab_json,
                           name_vecs, cca_dir, models_dir, num_classes,
                           num_predicates, rank_c, rank_epochs, neg_ratio, svm_c,
                           svm_gamma);
    if (vs_cmd->parsed())
      return run_vrd_score(g, det_path, feats_path, vocab_json, name_vecs,
                           models_dir, cand_path, top_k, num_classes,
                           num_predicates);
    if (ve_cmd->parsed())
      return run_vrd_eval(cand_path, gt_path, at_k, zero_shot, no_dedup);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return 1;
}
