#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

namespace groundkit::svm {

// RBF-kernel SVM with Platt-calibrated probabilities. Alphas are stored
// signed (alpha_i * y_i), so decision(x) = sum_i alphas_i k(sv_i, x) + bias.
struct RbfSvmModel {
  Eigen::MatrixXd support_vectors;  // n_sv x d
  Eigen::VectorXd alphas;           // signed coefficients, |alpha| <= C
  double bias = 0;
  double gamma = 1;
  double platt_a = 1;  // probability = sigmoid(platt_a * decision + platt_b)
  double platt_b = 0;
  double c = 1;

  int dim() const { return static_cast<int>(support_vectors.cols()); }
  double decision(const Eigen::VectorXd& x) const;

  nlohmann::json to_json() const;
  static RbfSvmModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RbfSvmModel load(const std::string& path);
};

struct SvmTrainDiagnostics {
  std::vector<double> dual_objective;  // one entry per SMO sweep
};

// Train on positive/negative example matrices (one row per example) by
// SMO-style pairwise updates to KKT tolerance 1e-3, then fit the Platt
// sigmoid on 3-fold cross-validated decision values. The seed drives fold
// assignment only; training itself is deterministic.
RbfSvmModel train_rbf_svm(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                          double c, double gamma, uint64_t seed,
                          SvmTrainDiagnostics* diag = nullptr);

// Platt probability of the positive class, clamped to [1e-7, 1 - 1e-7].
double predict_prob(const RbfSvmModel& m, const Eigen::VectorXd& x);

inline double default_gamma(int dim) { return 1.0 / dim; }

// 3-fold CV accuracy over candidate gammas; returns the best candidate
// (ties break toward the earlier candidate).
double grid_search_gamma(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                         double c, std::span<const double> candidates,
                         uint64_t seed);

// Linear model trained on pairwise ordering constraints.
struct RankSvmModel {
  Eigen::VectorXd weights;
  double c = 1;

  int dim() const { return static_cast<int>(weights.size()); }

  nlohmann::json to_json() const;
  static RankSvmModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RankSvmModel load(const std::string& path);
};

struct RankTrainDiagnostics {
  std::vector<double> epoch_loss;
};

using RankPair = std::pair<Eigen::VectorXd, Eigen::VectorXd>;  // (better, worse)

// Minimize sum_k max(0, 1 - w.(better_k - worse_k)) + |w|^2 / (2 c n) by
// epoch-shuffled subgradient descent with a decaying step. Deterministic
// given (pairs, c, epochs, seed).
RankSvmModel train_rank_svm(std::span<const RankPair> pairs, double c,
                            int epochs, uint64_t seed,
                            RankTrainDiagnostics* diag = nullptr);

double rank_score(const RankSvmModel& m, const Eigen::VectorXd& x);

}  // namespace groundkit::svm
