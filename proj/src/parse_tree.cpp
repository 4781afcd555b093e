#include "groundkit/parse_tree.hpp"

#include <cctype>

namespace groundkit::ling {

namespace {

struct Cursor {
  std::string_view text;
  size_t pos = 0;

  bool done() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }
  void skip_ws() {
    while (!done() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  std::string read_atom() {
    size_t start = pos;
    while (!done() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    return std::string(text.substr(start, pos - start));
  }
};

ParseNode parse_node(Cursor& c, std::vector<std::string>& tokens) {
  c.skip_ws();
  if (c.done() || c.peek() != '(')
    throw ParseError("expected '('", c.pos);
  ++c.pos;
  c.skip_ws();
  ParseNode node;
  node.label = c.read_atom();
  if (node.label.empty())
    throw ParseError("empty constituent label", c.pos);
  c.skip_ws();
  if (c.done()) throw ParseError("unexpected end of input", c.pos);
  if (c.peek() == '(') {
    node.begin = static_cast<int>(tokens.size());
    while (!c.done() && c.peek() == '(') {
      node.children.push_back(parse_node(c, tokens));
      c.skip_ws();
    }
    node.end = static_cast<int>(tokens.size());
  } else if (c.peek() == ')') {
    throw ParseError("constituent with no children or token", c.pos);
  } else {
    node.token = c.read_atom();
    node.begin = static_cast<int>(tokens.size());
    node.end = node.begin + 1;
    tokens.push_back(node.token);
    c.skip_ws();
  }
  if (c.done() || c.peek() != ')')
    throw ParseError("expected ')'", c.pos);
  ++c.pos;
  return node;
}

}  // namespace

ParseTree parse_ptb(std::string_view text) {
  Cursor c{text};
  ParseTree tree;
  tree.root = parse_node(c, tree.tokens);
  c.skip_ws();
  if (!c.done()) throw ParseError("trailing input after parse", c.pos);
  return tree;
}

std::string_view label_base(std::string_view label) {
  size_t cut = label.find_first_of("-=");
  // Keep bare "-LRB-"-style labels intact.
  if (cut == 0) return label;
  return cut == std::string_view::npos ? label : label.substr(0, cut);
}

}  // namespace groundkit::ling
