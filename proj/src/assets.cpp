#include "groundkit/assets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

namespace groundkit::assets {

namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open asset file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

std::vector<ppc::PairKey> read_pair_keys(const std::string& path,
                                         ling::RelationKind kind) {
  std::vector<ppc::PairKey> keys;
  for (const auto& row : read_tsv(path)) {
    ppc::PairKey key;
    key.kind = kind;
    if (kind == ling::RelationKind::Attachment) {
      if (row.size() != 2)
        throw std::runtime_error(path + ": attachment keys need 2 columns");
      key.left = row[0];
      key.right = row[1];
    } else {
      if (row.size() != 3)
        throw std::runtime_error(path + ": pair keys need 3 columns");
      key.left = row[0];
      key.rel = row[1];
      key.right = row[2];
    }
    keys.push_back(std::move(key));
  }
  return keys;
}

void expect(size_t got, size_t want, const std::string& what) {
  if (got != want)
    throw std::runtime_error(what + ": expected " + std::to_string(want) +
                             " entries, found " + std::to_string(got));
}

}  // namespace

bool AssetPack::has_pair_key(const ppc::PairKey& key) const {
  return std::find(pair_keys.begin(), pair_keys.end(), key) != pair_keys.end();
}

AssetPack load_assets(const std::string& dir, bool validate_counts) {
  AssetPack pack;
  auto path = [&](const char* f) { return (fs::path(dir) / f).string(); };

  pack.cue_config.adjectives = cues::Dictionary::load_tsv(path("adjectives.tsv"));
  pack.cue_config.verbs = cues::Dictionary::load_tsv(path("verbs.tsv"));
  pack.cue_config.subject_verb = cues::Dictionary::load_tsv(path("subject_verb.tsv"));
  pack.cue_config.verb_object = cues::Dictionary::load_tsv(path("verb_object.tsv"));
  pack.cue_config.objects = cues::Dictionary::load_tsv(path("objects.tsv"));
  pack.pronouns = ling::PronounLexicon::load_tsv(path("pronouns.tsv"));

  for (const auto& row : read_tsv(path("prepositions.tsv")))
    pack.prepositions.push_back(row[0]);

  auto verb_keys = read_pair_keys(path("pair_verb.tsv"), ling::RelationKind::Verb);
  auto prep_keys =
      read_pair_keys(path("pair_preposition.tsv"), ling::RelationKind::Preposition);
  auto attach_keys =
      read_pair_keys(path("pair_attachment.tsv"), ling::RelationKind::Attachment);

  if (validate_counts) {
    expect(pack.cue_config.adjectives.num_categories(), 83, "adjectives.tsv");
    expect(pack.cue_config.verbs.num_categories(), 58, "verbs.tsv");
    expect(pack.cue_config.subject_verb.num_categories(), 191, "subject_verb.tsv");
    expect(pack.cue_config.verb_object.num_categories(), 225, "verb_object.tsv");
    expect(verb_keys.size(), 260, "pair_verb.tsv");
    expect(prep_keys.size(), 216, "pair_preposition.tsv");
    expect(attach_keys.size(), 207, "pair_attachment.tsv");
    expect(pack.prepositions.size(), 8, "prepositions.tsv");
  }

  pack.pair_keys.reserve(verb_keys.size() + prep_keys.size() + attach_keys.size());
  for (auto* keys : {&verb_keys, &prep_keys, &attach_keys})
    pack.pair_keys.insert(pack.pair_keys.end(), keys->begin(), keys->end());
  return pack;
}

std::vector<std::string> build_verb_dictionary(std::span<const VerbCount> counts,
                                               int min_count) {
  std::set<std::string> cats;
  std::set<std::string> verbs;
  for (const VerbCount& c : counts) {
    verbs.insert(c.verb);
    if (c.count >= min_count) cats.insert(c.type + "-" + c.verb);
  }
  // Every verb keeps a catch-all category for the phrases left over.
  cats.insert(verbs.begin(), verbs.end());
  return {cats.begin(), cats.end()};
}

}  // namespace groundkit::assets
