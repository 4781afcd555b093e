#include <doctest.h>

#include <filesystem>

#include "groundkit/rng.hpp"
#include "groundkit/vrd.hpp"

using namespace groundkit;

namespace {

cca::CcaModel identity_block_model(int dx, int copies) {
  // proj_y stacks `copies` blocks so embed(concat(a, b, ...)) == embed of the
  // block sum; with a single nonzero block this reduces to identity behavior.
  cca::CcaModel m;
  m.proj_x = Eigen::MatrixXd::Identity(dx, dx);
  m.proj_y = Eigen::MatrixXd::Zero(dx * copies, dx);
  m.proj_y.topRows(dx) = Eigen::MatrixXd::Identity(dx, dx);
  m.mean_x = Eigen::VectorXd::Zero(dx);
  m.mean_y = Eigen::VectorXd::Zero(dx * copies);
  m.correlations = Eigen::VectorXd::Ones(dx);
  m.eig_power = 0;
  return m;
}

std::vector<cca::CcaModel> identity_bank(int d) {
  return {identity_block_model(d, 1), identity_block_model(d, 1),
          identity_block_model(d, 2), identity_block_model(d, 2),
          identity_block_model(d, 1), identity_block_model(d, 3)};
}

svm::RbfSvmModel constant_model(double bias, int dim) {
  svm::RbfSvmModel m;
  m.support_vectors = Eigen::MatrixXd::Zero(1, dim);
  m.alphas = Eigen::VectorXd::Zero(1);
  m.bias = bias;
  m.gamma = 1;
  m.platt_a = 1;
  m.platt_b = 0;
  return m;
}

vrd::VrdVocabulary tiny_vocab(int d) {
  vrd::VrdVocabulary v;
  v.object_classes = {"person", "dog", "horse", "table"};
  v.predicates = {"on", "near", "rides"};
  Rng rng(7);
  for (const auto& names : {v.object_classes, v.predicates})
    for (const std::string& n : names) {
      Eigen::VectorXd vec(d);
      for (int i = 0; i < d; ++i) vec[i] = rng.gauss();
      v.name_vecs[n] = vec.normalized();
    }
  return v;
}

}  // namespace

TEST_CASE("six embedding scores, zero when views coincide") {
  const int d = 5;
  auto bank = identity_bank(d);
  Eigen::VectorXd a = Eigen::VectorXd::Unit(d, 0);
  auto scores = vrd::vrd_cca_scores(bank, a, a, a, a, a, a);
  for (int i = 0; i < vrd::kNumCcaScores; ++i)
    CHECK(scores[i] == doctest::Approx(0.0).epsilon(1e-9));

  std::vector<cca::CcaModel> five(bank.begin(), bank.end() - 1);
  CHECK_THROWS_AS(vrd::vrd_cca_scores(five, a, a, a, a, a, a),
                  std::invalid_argument);
}

TEST_CASE("matched pairs score below mismatched on a fitted embedding") {
  Rng rng(120);
  const int n = 150, d = 6;
  Eigen::MatrixXd text(n, d), region(n, d);
  Eigen::MatrixXd map = Eigen::MatrixXd::Random(d, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) text(i, j) = rng.gauss();
  region = text * map;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) region(i, j) += 0.05 * rng.gauss();
  cca::CcaModel m = cca::fit_cca(region, text, 4, 1e-8);

  int better = 0;
  for (int i = 0; i < n; ++i) {
    int j = rng.uniform_int(n - 1);
    if (j >= i) ++j;
    double own = cca::cca_cost(m, region.row(i).transpose(), text.row(i).transpose());
    double other = cca::cca_cost(m, region.row(i).transpose(), text.row(j).transpose());
    if (own < other) ++better;
  }
  CHECK(better >= static_cast<int>(0.9 * n));
}

TEST_CASE("vrd feature is an 11-vector in fixed order") {
  Eigen::Matrix<double, vrd::kNumCcaScores, 1> zeros =
      Eigen::Matrix<double, vrd::kNumCcaScores, 1>::Zero();
  Eigen::VectorXd f = vrd::vrd_feature(zeros, 0, 0, 0, 0, 0);
  CHECK(f.size() == vrd::kFeatureDim);
  CHECK(f.cwiseAbs().maxCoeff() == 0.0);

  Eigen::Matrix<double, vrd::kNumCcaScores, 1> c6;
  c6 << 1, 2, 3, 4, 5, 6;
  Eigen::VectorXd g = vrd::vrd_feature(c6, 7, 8, 9, 10, 11);
  Eigen::VectorXd g2 = vrd::vrd_feature(c6, 7, 8, 9, 10, 11);
  CHECK(g == g2);  // stable order
  for (int i = 0; i < 11; ++i) CHECK(g[i] == doctest::Approx(i + 1.0));
}

namespace {

struct Fixture {
  vrd::Detections det;
  vrd::RegionFeatures feats;
  vrd::VrdVocabulary vocab;
  vrd::VrdModels models;
};

Fixture make_fixture(int d = 5) {
  Fixture f;
  f.vocab = tiny_vocab(d);
  f.det.image_id = "img";
  f.det.image = {200, 200};
  f.det.boxes = {{0, 0, 50, 50}, {60, 0, 50, 50}, {0, 60, 40, 40}};
  f.det.classes = {"person", "horse", "dog"};
  Rng rng(8);
  f.feats.box_feats.resize(3, d);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < d; ++j) f.feats.box_feats(i, j) = rng.gauss();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) {
        Eigen::VectorXd u(d);
        for (int k = 0; k < d; ++k) u[k] = rng.gauss();
        f.feats.union_feats[{i, j}] = u;
      }
  f.models.cca = identity_bank(d);
  f.models.position = constant_model(0, 4);
  // A one-support-vector spatial model whose decision varies with the pair
  // layout, peaked at "object directly right of subject".
  svm::RbfSvmModel spatial;
  spatial.support_vectors = Eigen::MatrixXd(1, 4);
  spatial.support_vectors << -1, 0, 1, 1;
  spatial.alphas = Eigen::VectorXd::Constant(1, 2.0);
  spatial.bias = -1;
  spatial.gamma = 1;
  spatial.platt_a = 1;
  spatial.platt_b = 0;
  f.models.predicate_spatial.emplace(0, spatial);
  Eigen::VectorXd w(vrd::kFeatureDim);
  w << -1, -1, -1, -1, -1, -1, -0.5, -0.5, -0.1, -0.1, 2;
  f.models.rank = {w, 1.0};
  return f;
}

}  // namespace

TEST_CASE("score_relationships respects the per-pair cap and ordering") {
  Fixture f = make_fixture();
  auto cands = vrd::score_relationships(f.det, f.feats, f.vocab, f.models, 2);
  // 3 boxes -> 6 ordered pairs, capped at 2 predicates each.
  CHECK(cands.size() == 12);
  std::map<std::pair<int, int>, int> per_pair;
  for (const auto& c : cands) per_pair[{c.subject_index, c.object_index}]++;
  for (const auto& [pair, count] : per_pair) CHECK(count <= 2);
  for (size_t i = 1; i < cands.size(); ++i)
    CHECK(cands[i - 1].score >= cands[i].score);

  auto top1 = vrd::score_relationships(f.det, f.feats, f.vocab, f.models, 1);
  CHECK(top1.size() == 6);

  // Two boxes -> at most 2 * top_k candidates.
  vrd::Detections two = f.det;
  two.boxes.resize(2);
  two.classes.resize(2);
  auto pair_cands = vrd::score_relationships(two, f.feats, f.vocab, f.models, 10);
  CHECK(pair_cands.size() <= 2 * 10);
  CHECK(pair_cands.size() == 6);  // 2 pairs x 3 predicates

  vrd::Detections one = f.det;
  one.boxes.resize(1);
  one.classes.resize(1);
  CHECK(vrd::score_relationships(one, f.feats, f.vocab, f.models, 10).empty());
}

TEST_CASE("zero rank weights break ties by predicate order") {
  Fixture f = make_fixture();
  f.models.rank = {Eigen::VectorXd::Zero(vrd::kFeatureDim), 1.0};
  auto cands = vrd::score_relationships(f.det, f.feats, f.vocab, f.models, 2);
  std::map<std::pair<int, int>, std::vector<std::string>> preds;
  for (const auto& c : cands)
    preds[{c.subject_index, c.object_index}].push_back(c.predicate);
  for (const auto& [pair, names] : preds) {
    REQUIRE(names.size() == 2);
    CHECK(names[0] == f.vocab.predicates[0]);
    CHECK(names[1] == f.vocab.predicates[1]);
  }
}

TEST_CASE("swapping subject and object moves the spatial slot") {
  Fixture f = make_fixture();
  auto cands = vrd::score_relationships(f.det, f.feats, f.vocab, f.models, 3);
  const vrd::RelationshipCandidate* fwd = nullptr;
  const vrd::RelationshipCandidate* rev = nullptr;
  for (const auto& c : cands) {
    if (c.subject_index == 0 && c.object_index == 1 && c.predicate == "on")
      fwd = &c;
    if (c.subject_index == 1 && c.object_index == 0 && c.predicate == "on")
      rev = &c;
  }
  REQUIRE(fwd);
  REQUIRE(rev);
  CHECK(fwd->feature[10] != doctest::Approx(rev->feature[10]).epsilon(1e-12));
}

TEST_CASE("missing region features raise errors naming the box") {
  Fixture f = make_fixture();
  f.feats.union_feats.erase({0, 1});
  CHECK_THROWS_WITH_AS(
      vrd::score_relationships(f.det, f.feats, f.vocab, f.models, 2),
      doctest::Contains("union box (0,1)"), std::runtime_error);
  CHECK_THROWS_WITH_AS(f.feats.box(7), doctest::Contains("box 7"),
                       std::runtime_error);
}

TEST_CASE("vocabulary validation") {
  vrd::VrdVocabulary v = tiny_vocab(4);
  CHECK_NOTHROW(v.validate({4, 3}));
  CHECK_THROWS_AS(v.validate({100, 70}), std::runtime_error);
  v.name_vecs.erase("dog");
  CHECK_THROWS_WITH_AS(v.validate({4, 3}), doctest::Contains("dog"),
                       std::runtime_error);
  CHECK_THROWS_AS(tiny_vocab(4).vec("zebra"), std::runtime_error);
  CHECK(tiny_vocab(4).predicate_index("near") == 1);
  CHECK_THROWS_AS(tiny_vocab(4).predicate_index("under"), std::runtime_error);
}

namespace {

vrd::RelationshipCandidate cand(const std::string& s, const std::string& p,
                                const std::string& o, geom::Box sb, geom::Box ob,
                                double score) {
  vrd::RelationshipCandidate c;
  c.image_id = "img";
  c.subject_class = s;
  c.predicate = p;
  c.object_class = o;
  c.subject_box = sb;
  c.object_box = ob;
  c.score = score;
  c.feature = Eigen::VectorXd::Zero(vrd::kFeatureDim);
  return c;
}

vrd::VrdGtRelationship gt_rel(const std::string& s, const std::string& p,
                              const std::string& o, geom::Box sb, geom::Box ob,
                              bool seen) {
  return {"img", s, p, o, sb, ob, seen};
}

}  // namespace

TEST_CASE("recall at k with greedy matching") {
  geom::Box a{0, 0, 10, 10}, b{20, 0, 10, 10}, c{40, 0, 10, 10};
  std::vector<vrd::VrdGtRelationship> gt = {
      gt_rel("person", "on", "horse", a, b, true),
      gt_rel("person", "near", "dog", a, c, true),
      gt_rel("dog", "near", "horse", c, b, false),
  };
  std::vector<vrd::RelationshipCandidate> ranked = {
      cand("person", "on", "horse", a, b, 0.9),
      cand("dog", "near", "horse", c, b, 0.8),
      cand("person", "rides", "horse", a, b, 0.7),  // wrong predicate
  };
  auto r = vrd::eval_recall_at(ranked, gt, 100, false);
  CHECK(r.applicable);
  CHECK(r.value == doctest::Approx(2.0 / 3.0));

  // Low-IOU subject box is not a recall even with the right triple.
  std::vector<vrd::RelationshipCandidate> off = {
      cand("person", "on", "horse", {3, 7, 10, 10}, b, 0.9)};
  CHECK(geom::iou(off[0].subject_box, a) < 0.5);
  CHECK(vrd::eval_recall_at(off, gt, 100, false).matched == 0);

  // k is a hard cutoff, and recall grows with it.
  CHECK(vrd::eval_recall_at(ranked, gt, 1, false).matched == 1);
  CHECK(vrd::eval_recall_at(ranked, gt, 1, false).value <=
        vrd::eval_recall_at(ranked, gt, 2, false).value);

  // Zero-shot filter keeps only unseen triples.
  auto zs = vrd::eval_recall_at(ranked, gt, 100, true);
  CHECK(zs.gt_count == 1);
  CHECK(zs.value == doctest::Approx(1.0));

  // Empty ground truth is flagged not applicable.
  auto empty = vrd::eval_recall_at(ranked, {}, 100, false);
  CHECK(!empty.applicable);

  // Greedy one-to-one vs. multi-match behavior on duplicate ground truth.
  std::vector<vrd::VrdGtRelationship> dup = {
      gt_rel("person", "on", "horse", a, b, true),
      gt_rel("person", "on", "horse", a, b, true),
  };
  std::vector<vrd::RelationshipCandidate> onecand = {
      cand("person", "on", "horse", a, b, 0.9)};
  CHECK(vrd::eval_recall_at(onecand, dup, 100, false, true).matched == 1);
  CHECK(vrd::eval_recall_at(onecand, dup, 100, false, false).matched == 2);
}

TEST_CASE("rank training pairs from ground truth") {
  geom::Box a{0, 0, 10, 10}, b{20, 0, 10, 10};
  std::vector<vrd::VrdGtRelationship> gt = {
      gt_rel("person", "on", "horse", a, b, true)};
  std::vector<vrd::RelationshipCandidate> cands = {
      cand("person", "on", "horse", a, b, 0),             // positive
      cand("person", "on", "horse", {3, 7, 10, 10}, b, 0),  // subject IOU 0.3-ish
      cand("person", "near", "horse", a, b, 0),           // triple mismatch
  };
  auto pairs = vrd::build_rank_training(cands, gt, 3, 1);
  CHECK(!pairs.empty());
  CHECK(pairs.size() <= 1 * 3);

  std::vector<vrd::RelationshipCandidate> no_pos = {
      cand("person", "near", "horse", a, b, 0)};
  CHECK_THROWS_AS(vrd::build_rank_training(no_pos, gt, 3, 1), std::runtime_error);
}

TEST_CASE("vrd models directory round trip") {
  Fixture f = make_fixture();
  const std::string dir = "/tmp/groundkit_test_vrd_models";
  f.models.save(dir);
  vrd::VrdModels loaded = vrd::VrdModels::load(dir);
  CHECK(loaded.cca.size() == vrd::kNumCcaScores);
  CHECK(loaded.rank.dim() == vrd::kFeatureDim);
  CHECK(loaded.predicate_spatial.size() == 1);

  // A rank model of the wrong width is rejected at load.
  vrd::VrdModels bad = make_fixture().models;
  bad.rank = {Eigen::VectorXd::Zero(5), 1.0};
  const std::string dir2 = "/tmp/groundkit_test_vrd_models_bad";
  bad.save(dir2);
  CHECK_THROWS_WITH_AS(vrd::VrdModels::load(dir2), doctest::Contains("11"),
                       std::runtime_error);
}

TEST_CASE("spatial predicate bank trains one-vs-rest") {
  Rng rng(121);
  std::vector<vrd::SpatialExample> examples;
  for (int i = 0; i < 60; ++i) {
    vrd::SpatialExample e;
    e.predicate = i % 2;
    // Predicate 0: object to the right; predicate 1: object below.
    if (e.predicate == 0)
      e.feature = {-1.0 + 0.1 * rng.gauss(), 0.05 * rng.gauss(), 1, 1};
    else
      e.feature = {0.05 * rng.gauss(), -1.0 + 0.1 * rng.gauss(), 1, 1};
    examples.push_back(e);
  }
  auto bank = vrd::train_predicate_spatial(examples, 2, 2.0, 1.0, 3);
  REQUIRE(bank.size() == 2);
  Eigen::Vector4d right_of(-1, 0, 1, 1), below(0, -1, 1, 1);
  CHECK(svm::predict_prob(bank.at(0), right_of) > 0.5);
  CHECK(svm::predict_prob(bank.at(1), below) > 0.5);
  CHECK(svm::predict_prob(bank.at(0), below) < 0.5);
}
