#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace groundkit::ling {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, size_t offset)
      : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  size_t offset;
};

// Node of a bracketed constituency parse. Leaves carry exactly one token
// (the label is then the POS tag); spans index sentence tokens, [begin, end).
struct ParseNode {
  std::string label;
  std::string token;
  std::vector<ParseNode> children;
  int begin = 0;
  int end = 0;

  bool leaf() const { return children.empty(); }
};

struct ParseTree {
  ParseNode root;
  std::vector<std::string> tokens;
};

// Parse a Penn-Treebank-style bracketed string, e.g. "(NP (DT a) (NN boy))".
// Token spans are assigned left to right. Malformed input raises ParseError
// with the character offset of the problem.
ParseTree parse_ptb(std::string_view text);

// Constituent label with any -FUNC or =NN decoration stripped: "PP-LOC" -> "PP".
std::string_view label_base(std::string_view label);

}  // namespace groundkit::ling
