#pragma once

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

namespace groundkit::cca {

// Two-view linear embedding fitted by canonical correlation analysis.
// embed() centers, projects, scales components by correlations^eig_power and
// L2-normalizes, so cosine distances in the joint space are meaningful.
struct CcaModel {
  Eigen::MatrixXd proj_x;       // d_x x k
  Eigen::MatrixXd proj_y;       // d_y x k
  Eigen::VectorXd mean_x;
  Eigen::VectorXd mean_y;
  Eigen::VectorXd correlations; // k, non-increasing, in [0, 1]
  double eig_power = 4.0;
  double reg = 0.0;

  int k() const { return static_cast<int>(proj_x.cols()); }
  int dim_x() const { return static_cast<int>(proj_x.rows()); }
  int dim_y() const { return static_cast<int>(proj_y.rows()); }

  nlohmann::json to_json() const;
  static CcaModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static CcaModel load(const std::string& path);
};

// Fit by whitening both views (ridge `reg` added to the auto-covariances) and
// taking the SVD of the whitened cross-covariance. Rows of X and Y are paired
// samples. Component signs are fixed so the largest-magnitude entry of each
// x-projection column is positive.
CcaModel fit_cca(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int k,
                 double reg, double eig_power = 4.0);

enum class View { X, Y };

struct Embedded {
  Eigen::VectorXd vec;
  bool degenerate = false;  // zero vector after projection; not normalizable
};

Embedded embed(const CcaModel& m, const Eigen::VectorXd& v, View view);

// Cosine distance between the embedded phrase (view X) and region (view Y)
// vectors, in [0, 2]. Degenerate embeddings cost the maximal 2.
double cca_cost(const CcaModel& m, const Eigen::VectorXd& phrase_vec,
                const Eigen::VectorXd& region_vec, bool* degenerate = nullptr);

}  // namespace groundkit::cca
