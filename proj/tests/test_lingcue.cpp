#include <doctest.h>

#include "groundkit/lingcue.hpp"

using namespace groundkit::ling;

namespace {

PronounLexicon test_lexicon() {
  PronounLexicon lex;
  lex.add("him", PronounClass::Object);
  lex.add("her", PronounClass::Object);
  lex.add("he", PronounClass::Subject);
  lex.add("themselves", PronounClass::Reflexive);
  lex.add("herself", PronounClass::Reflexive);
  lex.add("himself", PronounClass::Reflexive);
  lex.add("each other", PronounClass::Reciprocal);
  lex.add("which", PronounClass::Relative);
  lex.add("something", PronounClass::Indefinite);
  return lex;
}

EntityMention entity(std::string id, int begin, int end, PhraseType type,
                     std::vector<std::string> heads) {
  EntityMention m;
  m.phrase_id = std::move(id);
  m.begin = begin;
  m.end = end;
  m.type = type;
  m.head_tokens = std::move(heads);
  return m;
}

}  // namespace

TEST_CASE("boy running in a field with a dog") {
  ParseTree t = parse_ptb(
      "(NP (NP (DT A) (NN boy)) (VP (VBG running) (PP (IN in) (NP (DT a) (NN "
      "field))) (PP (IN with) (NP (DT a) (NN dog)))))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::People, {"boy"}),
      entity("p2", 4, 6, PhraseType::Scene, {"field"}),
      entity("p3", 7, 9, PhraseType::Animals, {"dog"}),
  };
  auto tuples = extract_tuples(t, ents);
  REQUIRE(tuples.size() == 3);

  CHECK(tuples[0].kind == RelationKind::Verb);
  CHECK(tuples[0].left.entity == 0);
  CHECK(tuples[0].right.entity == 1);
  CHECK(tuples[0].rel_words == std::vector<std::string>{"running"});

  CHECK(tuples[1].kind == RelationKind::Preposition);
  CHECK(tuples[1].left.entity == 0);
  CHECK(tuples[1].right.entity == 1);
  CHECK(tuples[1].rel_words == std::vector<std::string>{"in"});

  CHECK(tuples[2].kind == RelationKind::Preposition);
  CHECK(tuples[2].left.entity == 0);
  CHECK(tuples[2].right.entity == 2);
  CHECK(tuples[2].rel_words == std::vector<std::string>{"with"});
}

TEST_CASE("clothing attachment takes precedence and collapses") {
  ParseTree t = parse_ptb(
      "(NP (NP (DT a) (NN boy)) (VP (VBG running) (PP (IN in) (NP (DT a) (NN "
      "jacket)))))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::People, {"boy"}),
      entity("p2", 4, 6, PhraseType::Clothing, {"jacket"}),
  };
  auto tuples = extract_tuples(t, ents);
  REQUIRE(tuples.size() == 1);
  CHECK(tuples[0].kind == RelationKind::Attachment);
  CHECK(tuples[0].left.entity == 0);
  CHECK(tuples[0].right.entity == 1);
  CHECK(tuples[0].rel_words.empty());
}

TEST_CASE("no relational phrases yields no tuples") {
  ParseTree t = parse_ptb("(NP (DT a) (NN boy))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::People, {"boy"})};
  CHECK(extract_tuples(t, ents).empty());
}

TEST_CASE("unaligned entity span produces a warning, not an abort") {
  ParseTree t = parse_ptb("(NP (NP (DT a) (NN boy)) (VP (VBG running)))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::People, {"boy"}),
      entity("bad", 1, 3, PhraseType::Other, {"x"}),
  };
  std::vector<std::string> warnings;
  auto tuples = extract_tuples(t, ents, nullptr, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("bad") != std::string::npos);
  CHECK(tuples.empty());  // no second mention for entity2
}

TEST_CASE("reflexive pronoun links to the nearest antecedent") {
  ParseTree t = parse_ptb("(S (NP (NNS Ducks)) (VP (VBP feed) (NP (PRP themselves))))");
  std::vector<EntityMention> ents = {
      entity("ducks", 0, 1, PhraseType::Animals, {"ducks"})};
  auto lex = test_lexicon();
  auto links = resolve_pronouns(t, ents, lex);
  REQUIRE(links.size() == 1);
  CHECK(links[0].cls == PronounClass::Reflexive);
  CHECK(links[0].begin == 2);
  CHECK(links[0].antecedent == 0);
}

TEST_CASE("tennis player readies herself") {
  ParseTree t = parse_ptb(
      "(S (NP (DT A) (NN tennis) (NN player)) (VP (VBZ readies) (NP (PRP "
      "herself))))");
  std::vector<EntityMention> ents = {
      entity("player", 0, 3, PhraseType::People, {"player"})};
  auto lex = test_lexicon();
  auto links = resolve_pronouns(t, ents, lex);
  REQUIRE(links.size() == 1);
  CHECK(links[0].antecedent == 0);
}

TEST_CASE("object pronoun refers to the main subject, not the nearest") {
  ParseTree t = parse_ptb(
      "(S (NP (NP (DT A) (NN dog)) (VP (VBG laying) (PP (IN on) (NP (DT the) "
      "(NN ground))))) (VP (VBZ looks) (PRT (RP up)) (PP (IN at) (NP (NP (DT "
      "the) (NN dog)) (VP (VBG standing) (PP (IN over) (NP (PRP him))))))))");
  std::vector<EntityMention> ents = {
      entity("dog1", 0, 2, PhraseType::Animals, {"dog"}),
      entity("ground", 4, 6, PhraseType::Scene, {"ground"}),
      entity("dog2", 9, 11, PhraseType::Animals, {"dog"}),
  };
  auto lex = test_lexicon();
  auto links = resolve_pronouns(t, ents, lex);
  REQUIRE(links.size() == 1);
  CHECK(links[0].cls == PronounClass::Object);
  CHECK(links[0].antecedent == 0);  // the first dog, not dog2
}

TEST_CASE("reciprocal pronoun links to the nearest preceding entity") {
  ParseTree t = parse_ptb(
      "(S (NP (CD Two) (NNS men)) (VP (VBP hit) (NP (DT each) (JJ other))))");
  std::vector<EntityMention> ents = {
      entity("men", 0, 2, PhraseType::People, {"men"})};
  auto lex = test_lexicon();
  auto links = resolve_pronouns(t, ents, lex);
  REQUIRE(links.size() == 1);
  CHECK(links[0].cls == PronounClass::Reciprocal);
  CHECK(links[0].begin == 3);
  CHECK(links[0].end == 5);
  CHECK(links[0].antecedent == 0);
}

TEST_CASE("indefinite pronouns stay unresolved") {
  ParseTree t = parse_ptb(
      "(S (NP (NNS Ducks)) (VP (VBP feed) (NP (NN something))))");
  std::vector<EntityMention> ents = {
      entity("ducks", 0, 1, PhraseType::Animals, {"ducks"})};
  auto lex = test_lexicon();
  auto links = resolve_pronouns(t, ents, lex);
  REQUIRE(links.size() == 1);
  CHECK(links[0].cls == PronounClass::Indefinite);
  CHECK(links[0].antecedent == -1);
}

TEST_CASE("pronoun expansion rewrites, drops, and dedups") {
  ParseTree t = parse_ptb("(S (NP (NNS Ducks)) (VP (VBP feed) (NP (PRP themselves))))");
  std::vector<EntityMention> ents = {
      entity("ducks", 0, 1, PhraseType::Animals, {"ducks"})};
  auto lex = test_lexicon();
  auto raw = extract_tuples(t, ents, &lex);
  REQUIRE(raw.size() == 1);
  CHECK(raw[0].right.pronoun());

  auto links = resolve_pronouns(t, ents, lex);
  auto expanded = expand_tuples_with_pronouns(raw, links, ents);
  REQUIRE(expanded.size() == 1);
  CHECK(expanded[0].left.entity == 0);
  CHECK(expanded[0].right.entity == 0);  // the ducks feed the ducks
  CHECK(expanded[0].rel_words == std::vector<std::string>{"feed"});

  // An unresolved (indefinite) endpoint drops the tuple.
  ParseTree t2 = parse_ptb(
      "(S (NP (NNS Ducks)) (VP (VBP feed) (NP (NN something))))");
  auto raw2 = extract_tuples(t2, ents, &lex);
  REQUIRE(raw2.size() == 1);
  auto links2 = resolve_pronouns(t2, ents, lex);
  CHECK(expand_tuples_with_pronouns(raw2, links2, ents).empty());

  // Duplicates collapse to one.
  std::vector<RelationTuple> dup = {expanded[0], expanded[0]};
  CHECK(expand_tuples_with_pronouns(dup, links, ents).size() == 1);
}

TEST_CASE("expansion re-applies the attachment rule") {
  // "a man puts his hand ..." style: pronoun-endpoint tuple resolving to a
  // people -> bodyparts pair becomes a single attachment.
  ParseTree t = parse_ptb(
      "(S (NP (DT A) (NN man)) (VP (VBZ raises) (NP (PRP him))))");
  std::vector<EntityMention> ents = {
      entity("man", 0, 2, PhraseType::People, {"man"}),
      entity("hand", 2, 3, PhraseType::BodyParts, {"hand"}),  // not in tree
  };
  std::vector<RelationTuple> tuples(1);
  tuples[0].left = {0, 0, 2};
  tuples[0].right = {-1, 3, 4};
  tuples[0].rel_words = {"raises"};
  tuples[0].kind = RelationKind::Verb;
  std::vector<PronounLink> links(1);
  links[0] = {3, 4, 1, PronounClass::Object};
  auto expanded = expand_tuples_with_pronouns(tuples, links, ents);
  REQUIRE(expanded.size() == 1);
  CHECK(expanded[0].kind == RelationKind::Attachment);
  (void)t;
}

TEST_CASE("extraction is deterministic") {
  ParseTree t = parse_ptb(
      "(NP (NP (DT A) (NN boy)) (VP (VBG running) (PP (IN in) (NP (DT a) (NN "
      "field))) (PP (IN with) (NP (DT a) (NN dog)))))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::People, {"boy"}),
      entity("p2", 4, 6, PhraseType::Scene, {"field"}),
      entity("p3", 7, 9, PhraseType::Animals, {"dog"}),
  };
  auto a = extract_tuples(t, ents);
  auto b = extract_tuples(t, ents);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].left == b[i].left);
    CHECK(a[i].right == b[i].right);
    CHECK(a[i].kind == b[i].kind);
    CHECK(a[i].rel_words == b[i].rel_words);
  }
}

TEST_CASE("attachment tuples occur only for people -> clothing/bodyparts") {
  ParseTree t = parse_ptb(
      "(NP (NP (DT a) (NN dog)) (VP (VBG running) (PP (IN in) (NP (DT a) (NN "
      "jacket)))))");
  std::vector<EntityMention> ents = {
      entity("p1", 0, 2, PhraseType::Animals, {"dog"}),
      entity("p2", 4, 6, PhraseType::Clothing, {"jacket"}),
  };
  // A dog in a jacket is not an attachment pair; verb + preposition stay.
  auto tuples = extract_tuples(t, ents);
  REQUIRE(tuples.size() == 2);
  for (const auto& tp : tuples) CHECK(tp.kind != RelationKind::Attachment);
}

TEST_CASE("phrase type and pronoun class string round trips") {
  for (int i = 0; i < kNumPhraseTypes; ++i) {
    auto t = static_cast<PhraseType>(i);
    CHECK(phrase_type_from_string(to_string(t)) == t);
  }
  CHECK(phrase_type_from_string("body parts") == PhraseType::BodyParts);
  CHECK_THROWS(phrase_type_from_string("unknown"));
  for (auto c : {PronounClass::Subject, PronounClass::Object,
                 PronounClass::Reflexive, PronounClass::Reciprocal,
                 PronounClass::Relative, PronounClass::Indefinite})
    CHECK(pronoun_class_from_string(to_string(c)) == c);
}
