#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/cca.hpp"
#include "groundkit/geometry.hpp"
#include "groundkit/lingcue.hpp"
#include "groundkit/svm.hpp"

namespace groundkit::cues {

// The 14 single-phrase cue slots, in fixed order: region-phrase embedding,
// position, one size slot per phrase type, then the four detector cues.
inline constexpr int kNumSpcSlots = 14;

enum class SpcSlot : int {
  Cca = 0,
  Position = 1,
  SizePeople = 2,
  SizeClothing = 3,
  SizeBodyParts = 4,
  SizeAnimals = 5,
  SizeVehicles = 6,
  SizeInstruments = 7,
  SizeScene = 8,
  SizeOther = 9,
  ObjectDetector = 10,
  Adjective = 11,
  SubjectVerb = 12,
  VerbObject = 13,
};

const std::array<std::string, kNumSpcSlots>& spc_slot_names();
inline SpcSlot size_slot_for(ling::PhraseType t) {
  return static_cast<SpcSlot>(2 + static_cast<int>(t));
}

// term -> categories map loaded from TSV "term<TAB>category" (a term may map
// to several categories across rows).
class Dictionary {
 public:
  void add(std::string_view term, std::string_view category);
  static Dictionary load_tsv(const std::string& path);
  static Dictionary load_tsv(const std::string& path, size_t expected_categories);

  const std::vector<std::string>* categories_for(const std::string& term) const;
  bool has_category(const std::string& category) const;
  size_t num_categories() const { return categories_.size(); }
  size_t num_terms() const { return term_to_categories_.size(); }
  bool empty() const { return term_to_categories_.empty(); }

 private:
  std::unordered_map<std::string, std::vector<std::string>> term_to_categories_;
  std::map<std::string, int> categories_;
};

// Precomputed detector softmax scores keyed by (image, box index, category).
class DetectorScoreTable {
 public:
  void set(const std::string& image_id, int box_index,
           const std::string& category, double prob);
  std::optional<double> get(const std::string& image_id, int box_index,
                            const std::string& category) const;
  size_t size() const { return scores_.size(); }

  static DetectorScoreTable load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path) const;

 private:
  std::map<std::tuple<std::string, int, std::string>, double> scores_;
};

struct PhraseCueConfig {
  Dictionary adjectives;
  Dictionary objects;
  Dictionary subject_verb;
  Dictionary verb_object;
  Dictionary verbs;  // verb-word -> catch-all verb category
  double prob_floor = 1e-7;
};

// --- individual cost functions ---

// 1 - (w/W)(h/H); larger boxes cost less.
double size_cost(const geom::Box& b, const geom::ImageSize& img);

// -log of the Platt probability of the phrase-type position SVM.
double position_cost(const svm::RbfSvmModel& model, const geom::Box& b,
                     const geom::ImageSize& img);

// -log of the mean detector probability over the matched categories; table
// misses contribute the floor probability.
double detector_cost(const DetectorScoreTable& table,
                     std::span<const std::string> categories,
                     const std::string& image_id, int box_index, double floor);

// --- assembly ---

// One phrase's costs over its candidate boxes: (candidates x 14) with a
// per-slot availability mask. Unavailable entries are stored as 0.
struct SpcRow {
  Eigen::MatrixXd costs;
  std::array<bool, kNumSpcSlots> available{};

  int num_candidates() const { return static_cast<int>(costs.rows()); }
};

struct CueCostTable {
  std::vector<SpcRow> rows;  // one per phrase
  static const std::array<std::string, kNumSpcSlots>& cue_names() {
    return spc_slot_names();
  }
};

struct PhraseContext {
  std::vector<std::string> tokens;  // phrase tokens
  ling::PhraseType type = ling::PhraseType::Other;
  Eigen::VectorXd phrase_vec;
  std::vector<std::string> left_verbs;   // relation verbs with this phrase as subject
  std::vector<std::string> right_verbs;  // ... as object
};

struct CandidateContext {
  std::string image_id;
  geom::ImageSize image;
  std::vector<geom::Box> boxes;
  std::vector<int> box_indices;  // detector-table keys; defaults to 0..n-1
  Eigen::MatrixXd region_vecs;   // boxes x d
};

struct CueModels {
  const cca::CcaModel* cca = nullptr;
  const std::map<ling::PhraseType, svm::RbfSvmModel>* position_svms = nullptr;
  const DetectorScoreTable* object_scores = nullptr;
  const DetectorScoreTable* adjective_scores = nullptr;
  const DetectorScoreTable* subject_verb_scores = nullptr;
  const DetectorScoreTable* verb_object_scores = nullptr;
  const PhraseCueConfig* config = nullptr;
};

// Fill all 14 slots for one phrase. The embedding cue is always available;
// exactly one size slot (the phrase's type) is; the rest depend on dictionary
// routing and trained models.
SpcRow assemble_spc(const PhraseContext& phrase, const CandidateContext& cands,
                    const CueModels& models);

// Masked dot product of Eq-style costs with the 14 weights, per candidate.
Eigen::VectorXd spc_score(const SpcRow& row, std::span<const double> weights);

// Dictionary routing helpers (exposed for tests and the PPC key builder).
std::vector<std::string> adjective_categories(const PhraseCueConfig& cfg,
                                              std::span<const std::string> tokens,
                                              ling::PhraseType type);
std::vector<std::string> object_categories(const PhraseCueConfig& cfg,
                                           std::span<const std::string> tokens);
// Categories for a (phrase type, relation verb) pair: the type-subdivided
// category when the dictionary has it, otherwise the catch-all verb category.
std::vector<std::string> verb_categories(const Dictionary& dict,
                                         const Dictionary& verbs,
                                         ling::PhraseType type,
                                         std::span<const std::string> rel_verbs);

}  // namespace groundkit::cues
