#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/cca.hpp"
#include "groundkit/dataset.hpp"
#include "groundkit/metrics.hpp"
#include "groundkit/ppc.hpp"
#include "groundkit/svm.hpp"
#include "groundkit/vrd.hpp"

namespace groundkit::io {

// Dense vectors keyed by string, stored as JSONL {"key":..., "vec":[...]}
// or as a raw little-endian float32 file (magic, dim, count header) for
// large tables.
class FeatureTable {
 public:
  void set(const std::string& key, Eigen::VectorXd vec);
  const Eigen::VectorXd& get(const std::string& key) const;  // throws, names key
  bool contains(const std::string& key) const;
  size_t size() const { return vecs_.size(); }
  int dim() const { return dim_; }
  const std::vector<std::string>& keys() const { return order_; }

  static FeatureTable load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path) const;
  static FeatureTable load_raw(const std::string& path);
  void save_raw(const std::string& path) const;

 private:
  std::unordered_map<std::string, Eigen::VectorXd> vecs_;
  std::vector<std::string> order_;
  int dim_ = -1;
};

// --- grounding dataset records ---

struct SentenceEntity {
  ling::EntityMention mention;
  std::vector<geom::Box> gt_boxes;
};

struct SentenceRecord {
  std::string image_id;
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::string parse;
  std::vector<SentenceEntity> entities;
};

std::vector<SentenceRecord> load_sentences_jsonl(const std::string& path);
void save_sentences_jsonl(const std::string& path,
                          std::span<const SentenceRecord> records);

struct ImageBoxes {
  std::string image_id;
  geom::ImageSize image;
  std::vector<geom::Box> boxes;
  std::vector<std::string> classes;  // optional; used by the VRD pipeline
};

std::vector<ImageBoxes> load_boxes_jsonl(const std::string& path);
void save_boxes_jsonl(const std::string& path, std::span<const ImageBoxes> items);

std::vector<metrics::PredItem> load_predictions_jsonl(const std::string& path);
void save_predictions_jsonl(const std::string& path,
                            std::span<const metrics::PredItem> items);

std::vector<metrics::GtItem> load_gt_jsonl(const std::string& path);
void save_gt_jsonl(const std::string& path, std::span<const metrics::GtItem> items);

// --- assembled cue tables (the unit learners and the solver consume) ---

void save_val_dataset(const data::ValDataset& ds, const std::string& dir);
data::ValDataset load_val_dataset(const std::string& dir);

// --- VRD records ---

std::vector<vrd::VrdGtRelationship> load_vrd_gt_jsonl(const std::string& path);
void save_vrd_gt_jsonl(const std::string& path,
                       std::span<const vrd::VrdGtRelationship> items);

vrd::VrdVocabulary load_vrd_vocab(const std::string& vocab_json,
                                  const FeatureTable& name_vectors);

std::vector<vrd::RelationshipCandidate> load_vrd_candidates_jsonl(
    const std::string& path);
void save_vrd_candidates_jsonl(const std::string& path,
                               std::span<const vrd::RelationshipCandidate> items);

// --- learned model bundle ---

// All learned pieces with their weights; components are stored as files next
// to bundle.json. Loading cross-checks every dimension (14 / 3 / 6 / 11).
struct ModelBundle {
  Eigen::VectorXd ws;  // 14 single-phrase weights
  Eigen::VectorXd wq;  // 3 pairwise weights
  std::map<ling::PhraseType, svm::RbfSvmModel> position_svms;
  std::optional<cca::CcaModel> cca;
  std::optional<ppc::PairBank> pair_bank;
  std::optional<svm::RankSvmModel> rank;
  std::string fingerprint;

  ModelBundle();
  void save(const std::string& dir) const;
  static ModelBundle load(const std::string& dir);
};

// FNV-1a of a canonical description; recorded in bundles for provenance.
std::string config_fingerprint(const std::string& description);

}  // namespace groundkit::io
