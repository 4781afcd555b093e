#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "groundkit/geometry.hpp"

namespace groundkit::infer {

// Joint assignment problem over per-phrase candidate lists: unary costs are
// combined SPC scores, pair terms are weighted PPC cost matrices.
struct JointProblem {
  std::vector<Eigen::VectorXd> unary;  // per phrase, one cost per candidate

  struct PairTerm {
    int i = 0;
    int j = 0;
    Eigen::MatrixXd q;  // |cand_i| x |cand_j|
  };
  std::vector<PairTerm> pairs;

  int num_phrases() const { return static_cast<int>(unary.size()); }
  void validate() const;  // throws on empty candidates, bad indices, non-finite
};

struct Assignment {
  std::vector<int> chosen;
  double objective = 0;
};

// Candidate retrieval: NMS over ascending-cost order, then truncate to m.
// Returns indices into `boxes` ordered best (lowest cost) first.
std::vector<int> retrieve_candidates(std::span<const geom::Box> boxes,
                                     std::span<const double> costs, int m,
                                     double nms_iou);

// Exact objective of a full assignment.
double objective_of(const JointProblem& p, std::span<const int> chosen);

// Global optimum by enumeration; ties break lexicographically by candidate
// index. Throws when the candidate-count product exceeds the budget.
Assignment solve_exact(const JointProblem& p, uint64_t budget = 1000000);

// Continuous relaxation over per-phrase probability simplices minimized by
// projected gradient with backtracking line search, rounded by maximum mass
// with conditional-improvement passes. Always returns a feasible assignment
// whose objective is evaluated exactly.
Assignment solve_relaxed(const JointProblem& p, int iters = 500,
                         double tol = 1e-6);

}  // namespace groundkit::infer
