#include "groundkit/lingcue.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace groundkit::ling {

namespace {

constexpr std::string_view kPhraseTypeNames[] = {
    "people",   "clothing",    "bodyparts", "animals",
    "vehicles", "instruments", "scene",     "other"};

constexpr std::string_view kPronounClassNames[] = {
    "subject", "object", "reflexive", "reciprocal", "relative", "indefinite"};

bool is_verb_tag(std::string_view tag) {
  return tag.size() >= 2 && tag[0] == 'V' && tag[1] == 'B';
}

bool is_prep_tag(std::string_view tag) { return tag == "IN" || tag == "TO"; }

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view to_string(PhraseType t) {
  return kPhraseTypeNames[static_cast<int>(t)];
}

PhraseType phrase_type_from_string(std::string_view s) {
  std::string low = lowercase(s);
  // Accept the spaced spelling used in annotation files.
  if (low == "body parts" || low == "body_parts") low = "bodyparts";
  if (low == "scenes") low = "scene";
  for (int i = 0; i < kNumPhraseTypes; ++i)
    if (low == kPhraseTypeNames[i]) return static_cast<PhraseType>(i);
  throw std::invalid_argument("unknown phrase type: " + std::string(s));
}

std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::Verb: return "verb";
    case RelationKind::Preposition: return "preposition";
    case RelationKind::Attachment: return "attachment";
  }
  return "";
}

RelationKind relation_kind_from_string(std::string_view s) {
  std::string low = lowercase(s);
  if (low == "verb") return RelationKind::Verb;
  if (low == "preposition") return RelationKind::Preposition;
  if (low == "attachment") return RelationKind::Attachment;
  throw std::invalid_argument("unknown relation kind: " + std::string(s));
}

std::string_view to_string(PronounClass c) {
  return kPronounClassNames[static_cast<int>(c)];
}

PronounClass pronoun_class_from_string(std::string_view s) {
  std::string low = lowercase(s);
  for (int i = 0; i < 6; ++i)
    if (low == kPronounClassNames[i]) return static_cast<PronounClass>(i);
  throw std::invalid_argument("unknown pronoun class: " + std::string(s));
}

void PronounLexicon::add(std::string_view words, PronounClass cls) {
  std::istringstream ss{lowercase(words)};
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  if (toks.empty()) throw std::invalid_argument("empty pronoun entry");
  entries_.emplace(std::move(toks), cls);
}

PronounLexicon PronounLexicon::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pronoun lexicon: " + path);
  PronounLexicon lex;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected word<TAB>class");
    lex.add(line.substr(0, tab),
            pronoun_class_from_string(line.substr(tab + 1)));
  }
  return lex;
}

std::optional<std::pair<int, PronounClass>> PronounLexicon::match(
    std::span<const std::string> tokens, size_t pos) const {
  std::optional<std::pair<int, PronounClass>> best;
  for (const auto& [words, cls] : entries_) {
    if (pos + words.size() > tokens.size()) continue;
    bool ok = true;
    for (size_t i = 0; i < words.size(); ++i)
      if (lowercase(tokens[pos + i]) != words[i]) { ok = false; break; }
    if (ok && (!best || static_cast<int>(words.size()) > best->first))
      best = {static_cast<int>(words.size()), cls};
  }
  return best;
}

namespace {

// Flattened view of the parse with parent links, plus the mention nodes
// (entity-aligned NPs and pronoun NPs) used by the traversals.
struct TreeIndex {
  std::vector<const ParseNode*> nodes;
  std::vector<int> parent;
  std::vector<int> child_pos;  // index of node within its parent's children

  struct Mention {
    int node = -1;
    int entity = -1;  // -1 = pronoun mention
    int begin = 0, end = 0;
  };
  std::vector<Mention> mentions;            // sorted by (begin, end)
  std::vector<int> mention_of_node;         // node id -> mention id or -1

  const ParseNode& at(int id) const { return *nodes[id]; }
};

void flatten(const ParseNode& n, int parent, int child_pos, TreeIndex& ix) {
  int id = static_cast<int>(ix.nodes.size());
  ix.nodes.push_back(&n);
  ix.parent.push_back(parent);
  ix.child_pos.push_back(child_pos);
  for (size_t i = 0; i < n.children.size(); ++i)
    flatten(n.children[i], id, static_cast<int>(i), ix);
}

bool span_is_pronoun(const ParseTree& tree, int begin, int end,
                     const PronounLexicon& lex) {
  auto m = lex.match(tree.tokens, begin);
  return m && begin + m->first == end;
}

TreeIndex build_index(const ParseTree& tree,
                      std::span<const EntityMention> entities,
                      const PronounLexicon* pronouns,
                      std::vector<std::string>* warnings) {
  TreeIndex ix;
  flatten(tree.root, -1, 0, ix);
  ix.mention_of_node.assign(ix.nodes.size(), -1);

  std::vector<char> matched(entities.size(), 0);
  for (size_t id = 0; id < ix.nodes.size(); ++id) {
    const ParseNode& n = ix.at(static_cast<int>(id));
    if (label_base(n.label) != "NP") continue;
    int found_entity = -1;
    for (size_t e = 0; e < entities.size(); ++e) {
      if (entities[e].begin == n.begin && entities[e].end == n.end) {
        found_entity = static_cast<int>(e);
        matched[e] = 1;
        break;
      }
    }
    if (found_entity < 0 && pronouns &&
        !span_is_pronoun(tree, n.begin, n.end, *pronouns))
      continue;
    ix.mention_of_node[id] = static_cast<int>(ix.mentions.size());
    ix.mentions.push_back({static_cast<int>(id), found_entity, n.begin, n.end});
  }
  std::sort(ix.mentions.begin(), ix.mentions.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.begin, a.end) < std::tie(b.begin, b.end);
            });
  ix.mention_of_node.assign(ix.nodes.size(), -1);
  for (size_t m = 0; m < ix.mentions.size(); ++m)
    ix.mention_of_node[ix.mentions[m].node] = static_cast<int>(m);

  if (warnings) {
    for (size_t e = 0; e < entities.size(); ++e)
      if (!matched[e])
        warnings->push_back("entity '" + entities[e].phrase_id + "' span [" +
                            std::to_string(entities[e].begin) + "," +
                            std::to_string(entities[e].end) +
                            ") does not align to an NP node; skipped");
  }
  return ix;
}

bool has_coordination(const ParseNode& n) {
  for (const ParseNode& c : n.children)
    if (label_base(c.label) == "CC") return true;
  return false;
}

// Resolve a found NP node to a mention by walking its head chain: the node
// itself if it is a mention, otherwise its NP children left to right.
std::optional<int> resolve_np_mention(const TreeIndex& ix, int node_id) {
  if (ix.mention_of_node[node_id] >= 0) return ix.mention_of_node[node_id];
  const ParseNode& n = ix.at(node_id);
  int child_id = node_id + 1;  // children follow the parent in DFS order
  for (const ParseNode& c : n.children) {
    if (!c.leaf() && label_base(c.label) == "NP") {
      if (auto m = resolve_np_mention(ix, child_id)) return m;
    }
    // Advance past this child's subtree.
    int sub = 1;
    std::vector<const ParseNode*> stack{&c};
    while (!stack.empty()) {
      const ParseNode* s = stack.back();
      stack.pop_back();
      for (const ParseNode& cc : s->children) {
        ++sub;
        stack.push_back(&cc);
      }
    }
    child_id += sub;
  }
  return std::nullopt;
}

// Up-and-left traversal from the relational phrase to the nearest NP mention.
std::optional<int> find_entity1(const TreeIndex& ix, int rel_node,
                                bool* crossed_cc) {
  int cur = rel_node;
  while (ix.parent[cur] >= 0) {
    int par = ix.parent[cur];
    if (has_coordination(ix.at(par))) *crossed_cc = true;
    // Locate siblings left of cur, nearest first.
    int pos = ix.child_pos[cur];
    std::vector<int> sibling_ids;
    {
      int child_id = par + 1;
      for (const ParseNode& c : ix.at(par).children) {
        sibling_ids.push_back(child_id);
        int sub = 1;
        std::vector<const ParseNode*> stack{&c};
        while (!stack.empty()) {
          const ParseNode* s = stack.back();
          stack.pop_back();
          for (const ParseNode& cc : s->children) {
            ++sub;
            stack.push_back(&cc);
          }
        }
        child_id += sub;
      }
    }
    for (int p = pos - 1; p >= 0; --p) {
      int sib = sibling_ids[p];
      if (label_base(ix.at(sib).label) != "NP") continue;
      if (auto m = resolve_np_mention(ix, sib)) return m;
    }
    cur = par;
  }
  return std::nullopt;
}

// First token index of the relational head inside `node`: the leftmost verb
// (VP) or preposition (PP) leaf, not descending into nested clause/NP/PP
// material.
std::optional<std::pair<int, std::string>> find_rel_head(const ParseNode& node,
                                                         bool is_vp) {
  for (const ParseNode& c : node.children) {
    if (c.leaf()) {
      std::string_view tag = label_base(c.label);
      if (is_vp ? is_verb_tag(tag) : is_prep_tag(tag))
        return std::make_pair(c.begin, lowercase(c.token));
      continue;
    }
    std::string_view base = label_base(c.label);
    if (base == "NP" || base == "S" || base == "SBAR") continue;
    if (is_vp && base == "PP") continue;
    if (!is_vp && base == "VP") continue;
    if (auto h = find_rel_head(c, is_vp)) return h;
  }
  return std::nullopt;
}

// First mention strictly right of the head token.
std::optional<int> find_entity2(const TreeIndex& ix, int head_idx) {
  for (size_t m = 0; m < ix.mentions.size(); ++m)
    if (ix.mentions[m].begin > head_idx) return static_cast<int>(m);
  return std::nullopt;
}

TupleEnd mention_end(const TreeIndex::Mention& m) {
  return TupleEnd{m.entity, m.begin, m.end};
}

bool attachment_pair(const EntityMention& left, const EntityMention& right) {
  return left.type == PhraseType::People &&
         (right.type == PhraseType::Clothing ||
          right.type == PhraseType::BodyParts);
}

std::vector<RelationTuple> dedup_tuples(std::vector<RelationTuple> tuples) {
  std::vector<RelationTuple> out;
  std::set<std::tuple<int, int, int, int, int, int, int, std::string>> seen;
  for (auto& t : tuples) {
    std::string rel;
    for (const auto& w : t.rel_words) rel += w + " ";
    auto key = std::make_tuple(t.left.entity, t.left.begin, t.left.end,
                               t.right.entity, t.right.begin, t.right.end,
                               static_cast<int>(t.kind), rel);
    if (seen.insert(key).second) out.push_back(std::move(t));
  }
  return out;
}

void apply_attachment_rule(RelationTuple& t,
                           std::span<const EntityMention> entities) {
  if (t.left.pronoun() || t.right.pronoun()) return;
  if (t.left.entity == t.right.entity) return;
  if (attachment_pair(entities[t.left.entity], entities[t.right.entity])) {
    t.kind = RelationKind::Attachment;
    t.rel_words.clear();  // the exact relationship words do not matter
  }
}

}  // namespace

std::vector<RelationTuple> extract_tuples(
    const ParseTree& tree, std::span<const EntityMention> entities,
    const PronounLexicon* pronouns, std::vector<std::string>* warnings) {
  TreeIndex ix = build_index(tree, entities, pronouns, warnings);
  std::vector<RelationTuple> tuples;

  for (size_t id = 0; id < ix.nodes.size(); ++id) {
    const ParseNode& n = ix.at(static_cast<int>(id));
    if (n.leaf()) continue;
    std::string_view base = label_base(n.label);
    bool is_vp = base == "VP";
    bool is_pp = base == "PP";
    if (!is_vp && !is_pp) continue;

    auto head = find_rel_head(n, is_vp);
    if (!head) continue;
    bool crossed_cc = false;
    auto e1 = find_entity1(ix, static_cast<int>(id), &crossed_cc);
    if (!e1) continue;
    auto e2 = find_entity2(ix, head->first);
    if (!e2 || *e1 == *e2) continue;
    const auto& m1 = ix.mentions[*e1];
    const auto& m2 = ix.mentions[*e2];
    if (m1.entity >= 0 && m1.entity == m2.entity) continue;

    RelationTuple t;
    t.left = mention_end(m1);
    t.right = mention_end(m2);
    t.rel_words = {head->second};
    t.kind = is_vp ? RelationKind::Verb : RelationKind::Preposition;
    t.crossed_coordination = crossed_cc;
    apply_attachment_rule(t, entities);
    tuples.push_back(std::move(t));
  }
  return dedup_tuples(std::move(tuples));
}

std::vector<PronounLink> resolve_pronouns(const ParseTree& tree,
                                          std::span<const EntityMention> entities,
                                          const PronounLexicon& lexicon) {
  // Main subject: leftmost entity inside the first direct child of the root
  // clause that contains one.
  const ParseNode* clause = &tree.root;
  while ((label_base(clause->label) == "ROOT" ||
          label_base(clause->label) == "TOP") &&
         clause->children.size() == 1 && !clause->children[0].leaf())
    clause = &clause->children[0];

  int main_subject = -1;
  for (const ParseNode& child : clause->children) {
    int best = -1;
    for (size_t e = 0; e < entities.size(); ++e) {
      if (entities[e].begin >= child.begin && entities[e].end <= child.end) {
        if (best < 0 || std::tie(entities[e].begin, entities[e].end) <
                            std::tie(entities[best].begin, entities[best].end))
          best = static_cast<int>(e);
      }
    }
    if (best >= 0) {
      main_subject = best;
      break;
    }
  }

  auto nearest_preceding = [&](int pos) {
    int best = -1;
    for (size_t e = 0; e < entities.size(); ++e) {
      if (entities[e].end > pos) continue;
      if (best < 0 || std::tie(entities[e].end, entities[e].begin) >
                          std::tie(entities[best].end, entities[best].begin))
        best = static_cast<int>(e);
    }
    return best;
  };

  std::vector<PronounLink> links;
  size_t pos = 0;
  while (pos < tree.tokens.size()) {
    auto m = lexicon.match(tree.tokens, pos);
    if (!m) {
      ++pos;
      continue;
    }
    PronounLink link;
    link.begin = static_cast<int>(pos);
    link.end = static_cast<int>(pos) + m->first;
    link.cls = m->second;
    switch (m->second) {
      case PronounClass::Subject:
      case PronounClass::Object:
        if (main_subject >= 0 && entities[main_subject].end <= link.begin)
          link.antecedent = main_subject;
        break;
      case PronounClass::Reflexive:
      case PronounClass::Reciprocal:
      case PronounClass::Relative:
        link.antecedent = nearest_preceding(link.begin);
        break;
      case PronounClass::Indefinite:
        link.antecedent = -1;
        break;
    }
    links.push_back(link);
    pos += m->first;
  }
  return links;
}

std::vector<RelationTuple> expand_tuples_with_pronouns(
    std::span<const RelationTuple> tuples, std::span<const PronounLink> links,
    std::span<const EntityMention> entities) {
  auto link_for = [&](const TupleEnd& end) -> const PronounLink* {
    for (const PronounLink& l : links)
      if (l.begin == end.begin && l.end == end.end) return &l;
    return nullptr;
  };

  std::vector<RelationTuple> out;
  for (const RelationTuple& t : tuples) {
    RelationTuple r = t;
    bool ok = true;
    for (TupleEnd* end : {&r.left, &r.right}) {
      if (!end->pronoun()) continue;
      const PronounLink* l = link_for(*end);
      if (!l || l->antecedent < 0) {
        ok = false;
        break;
      }
      end->entity = l->antecedent;
      end->begin = entities[l->antecedent].begin;
      end->end = entities[l->antecedent].end;
    }
    if (!ok) continue;
    apply_attachment_rule(r, entities);
    out.push_back(std::move(r));
  }
  return dedup_tuples(std::move(out));
}

}  // namespace groundkit::ling
