#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundkit/parse_tree.hpp"

namespace groundkit::ling {

enum class PhraseType {
  People,
  Clothing,
  BodyParts,
  Animals,
  Vehicles,
  Instruments,
  Scene,
  Other,
};
inline constexpr int kNumPhraseTypes = 8;

std::string_view to_string(PhraseType t);
PhraseType phrase_type_from_string(std::string_view s);

// A noun-phrase entity mention; spans index sentence tokens.
struct EntityMention {
  std::string phrase_id;
  int begin = 0;
  int end = 0;
  PhraseType type = PhraseType::Other;
  std::vector<std::string> head_tokens;
};

enum class RelationKind { Verb, Preposition, Attachment };
std::string_view to_string(RelationKind k);
RelationKind relation_kind_from_string(std::string_view s);

// One endpoint of a relation tuple: either a resolved entity (index into the
// entity list) or a pronoun mention awaiting expansion (entity == -1).
struct TupleEnd {
  int entity = -1;
  int begin = 0;
  int end = 0;
  bool pronoun() const { return entity < 0; }
  bool operator==(const TupleEnd&) const = default;
};

struct RelationTuple {
  TupleEnd left;
  TupleEnd right;
  std::vector<std::string> rel_words;
  RelationKind kind = RelationKind::Verb;
  // Set when the entity1 traversal stepped past a coordination node, where
  // the up-and-left rule is least reliable.
  bool crossed_coordination = false;
};

enum class PronounClass {
  Subject,
  Object,
  Reflexive,
  Reciprocal,
  Relative,
  Indefinite,
};
std::string_view to_string(PronounClass c);
PronounClass pronoun_class_from_string(std::string_view s);

// Class-keyed pronoun word lists; entries may span multiple tokens
// ("each other"). Loaded from TSV "word<TAB>class".
class PronounLexicon {
 public:
  void add(std::string_view words, PronounClass cls);
  static PronounLexicon load_tsv(const std::string& path);

  // Longest lexicon entry starting at token position `pos`, matched on
  // lowercased tokens. Returns (match length, class).
  std::optional<std::pair<int, PronounClass>> match(
      std::span<const std::string> tokens, size_t pos) const;

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }

 private:
  std::map<std::vector<std::string>, PronounClass> entries_;
};

struct PronounLink {
  int begin = 0;
  int end = 0;
  int antecedent = -1;  // entity index; -1 = unresolved
  PronounClass cls = PronounClass::Indefinite;
};

// Relation tuples from VP/PP nodes of the parse: entity1 by the up-and-left
// traversal, entity2 as the first mention right of the relational head.
// people -> clothing|bodyparts pairs collapse into a single attachment tuple
// that replaces any verb/preposition tuples for the pair. Endpoints may be
// pronoun mentions (when a lexicon is supplied) for later expansion.
// Entities whose spans do not align to an NP node are skipped with a warning.
std::vector<RelationTuple> extract_tuples(
    const ParseTree& tree, std::span<const EntityMention> entities,
    const PronounLexicon* pronouns = nullptr,
    std::vector<std::string>* warnings = nullptr);

// Rule-based pronominal coreference: subject/object pronouns link to the main
// subject, reflexive/reciprocal/relative to the nearest preceding entity,
// indefinite to nothing. Antecedents always precede the pronoun.
std::vector<PronounLink> resolve_pronouns(const ParseTree& tree,
                                          std::span<const EntityMention> entities,
                                          const PronounLexicon& lexicon);

// Rewrite pronoun endpoints through their links, drop tuples whose pronoun is
// unresolved, re-apply the attachment rule on the resolved types, and dedup.
std::vector<RelationTuple> expand_tuples_with_pronouns(
    std::span<const RelationTuple> tuples, std::span<const PronounLink> links,
    std::span<const EntityMention> entities);

std::string lowercase(std::string_view s);

}  // namespace groundkit::ling
