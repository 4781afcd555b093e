#pragma once

#include <string>
#include <vector>

#include "groundkit/cues.hpp"
#include "groundkit/lingcue.hpp"
#include "groundkit/ppc.hpp"

namespace groundkit::assets {

// The shipped dictionary pack: detector dictionaries, pronoun lexicon, the
// eight-preposition filter and the enumerated pairwise classifier keys.
struct AssetPack {
  cues::PhraseCueConfig cue_config;
  ling::PronounLexicon pronouns;
  std::vector<std::string> prepositions;
  std::vector<ppc::PairKey> pair_keys;

  bool has_pair_key(const ppc::PairKey& key) const;
};

// Expected sizes, cross-checked at load time when validate_counts is set:
// 83 adjectives, 58 verbs, 191 subject-verb, 225 verb-object, 260 verb pairs,
// 216 preposition pairs, 207 attachment keys, 8 prepositions.
AssetPack load_assets(const std::string& dir, bool validate_counts = true);

// Verb-category subdivision helper for dictionary builders: keeps
// "<type>-<verb>" only when the raw (type, verb) count reaches min_count,
// otherwise the occurrences fall through to the catch-all verb category.
struct VerbCount {
  std::string type;
  std::string verb;
  int count = 0;
};
std::vector<std::string> build_verb_dictionary(std::span<const VerbCount> counts,
                                               int min_count = 30);

}  // namespace groundkit::assets
