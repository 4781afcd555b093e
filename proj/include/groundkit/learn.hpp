#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Dense>

#include "groundkit/dataset.hpp"

namespace groundkit::learn {

struct NmConfig {
  int max_evals = 4000;
  double xtol = 1e-8;   // simplex diameter tolerance
  double ftol = 1e-12;  // f-spread tolerance
  double init_step = 0.05;       // per-coordinate simplex perturbation
  double zero_step = 0.00025;    // perturbation for zero coordinates
};

struct NmResult {
  Eigen::VectorXd x;
  double f = 0;
  int evals = 0;
};

// Nelder-Mead simplex search (reflection 1, expansion 2, contraction 0.5,
// shrink 0.5). Returns the best point ever evaluated. Vertex-order ties on
// equal f break by vertex age then index, so flat regions behave
// deterministically.
NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const NmConfig& cfg = {});

struct SearchConfig {
  int restarts = 20;
  uint64_t seed = 0;
  double init_lo = 0.0;  // random inits uniform in [init_lo, init_hi]^d
  double init_hi = 1.0;
  NmConfig nm;
};

// Number of phrases whose argmin-cost candidate overlaps the ground-truth
// union box at IOU >= 0.5. Phrases without ground truth are excluded.
int recall_objective_s(std::span<const double> w, const data::ValDataset& val);

// Restart-best direct search maximizing recall_objective_s; deterministic
// per seed, ties broken by lower restart index.
Eigen::VectorXd learn_weights_s(const data::ValDataset& val,
                                const SearchConfig& cfg,
                                int* best_count = nullptr);

// Pairwise recall (0, 1 or 2 per relation) of the best box pair under
// S + S + Q with ws fixed. Relations lacking ground truth on either side are
// excluded.
int recall_objective_q(std::span<const double> wq, std::span<const double> ws,
                       const data::ValDataset& val);

Eigen::VectorXd learn_weights_q(const data::ValDataset& val,
                                std::span<const double> ws,
                                const SearchConfig& cfg,
                                int* best_count = nullptr);

// Alternative rank-SVM weight learning over masked cue costs, provided for
// comparison runs.
Eigen::VectorXd learn_weights_s_ranksvm(const data::ValDataset& val, double c,
                                        int epochs, int negatives_per_positive,
                                        uint64_t seed);

}  // namespace groundkit::learn
