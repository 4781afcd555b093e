#include "groundkit/cca.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace groundkit::cca {

namespace {

// Inverse square root of a symmetric PSD matrix, with ridge added first.
// Reports the smallest eigenvalue so the caller can detect rank deficiency.
Eigen::MatrixXd inv_sqrt(const Eigen::MatrixXd& cov, double reg,
                         double* min_eig, double* max_eig) {
  Eigen::MatrixXd a = cov;
  a.diagonal().array() += reg;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("fit_cca: eigendecomposition failed");
  Eigen::VectorXd vals = eig.eigenvalues();
  *min_eig = vals.minCoeff();
  *max_eig = vals.maxCoeff();
  Eigen::VectorXd inv = vals.unaryExpr([](double v) {
    return v > 1e-300 ? 1.0 / std::sqrt(v) : 0.0;
  });
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd json_to_matrix(const nlohmann::json& j) {
  int rows = j.at("rows").get<int>();
  int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::runtime_error("matrix data size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[r * cols + c].get<double>();
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

}  // namespace

CcaModel fit_cca(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, int k,
                 double reg, double eig_power) {
  const int n = static_cast<int>(X.rows());
  if (Y.rows() != n) throw std::invalid_argument("fit_cca: row counts differ");
  if (n < 2) throw std::invalid_argument("fit_cca: need at least 2 samples");
  if (reg < 0) throw std::invalid_argument("fit_cca: reg must be >= 0");
  const int dx = static_cast<int>(X.cols());
  const int dy = static_cast<int>(Y.cols());
  if (k < 1 || k > std::min(dx, dy))
    throw std::invalid_argument("fit_cca: k must be in [1, min(d_x, d_y)]");
  if (!X.allFinite() || !Y.allFinite())
    throw std::invalid_argument("fit_cca: non-finite input");

  CcaModel m;
  m.mean_x = X.colwise().mean();
  m.mean_y = Y.colwise().mean();
  Eigen::MatrixXd Xc = X.rowwise() - m.mean_x.transpose();
  Eigen::MatrixXd Yc = Y.rowwise() - m.mean_y.transpose();

  // 1/n normalization keeps the fit exactly invariant to duplicating every
  // paired row; correlations are unaffected by the common scale.
  Eigen::MatrixXd cxx = Xc.transpose() * Xc / n;
  Eigen::MatrixXd cyy = Yc.transpose() * Yc / n;
  Eigen::MatrixXd cxy = Xc.transpose() * Yc / n;

  double min_x, max_x, min_y, max_y;
  Eigen::MatrixXd wx = inv_sqrt(cxx, reg, &min_x, &max_x);
  Eigen::MatrixXd wy = inv_sqrt(cyy, reg, &min_y, &max_y);
  if (reg == 0.0 &&
      (min_x <= 1e-12 * std::max(max_x, 1e-300) ||
       min_y <= 1e-12 * std::max(max_y, 1e-300)))
    throw std::runtime_error(
        "fit_cca: rank-deficient covariance; set reg > 0");

  Eigen::MatrixXd t = wx * cxy * wy;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  m.proj_x = wx * svd.matrixU().leftCols(k);
  m.proj_y = wy * svd.matrixV().leftCols(k);
  m.correlations = svd.singularValues().head(k).cwiseMin(1.0).cwiseMax(0.0);
  m.eig_power = eig_power;
  m.reg = reg;

  for (int c = 0; c < k; ++c) {
    int imax;
    m.proj_x.col(c).cwiseAbs().maxCoeff(&imax);
    if (m.proj_x(imax, c) < 0) {
      m.proj_x.col(c) = -m.proj_x.col(c);
      m.proj_y.col(c) = -m.proj_y.col(c);
    }
  }
  return m;
}

Embedded embed(const CcaModel& m, const Eigen::VectorXd& v, View view) {
  const Eigen::MatrixXd& proj = view == View::X ? m.proj_x : m.proj_y;
  const Eigen::VectorXd& mean = view == View::X ? m.mean_x : m.mean_y;
  if (v.size() != proj.rows())
    throw std::invalid_argument("embed: vector dim " + std::to_string(v.size()) +
                                " does not match view dim " +
                                std::to_string(proj.rows()));
  Eigen::VectorXd z = proj.transpose() * (v - mean);
  if (m.eig_power != 0.0)
    z.array() *= m.correlations.array().pow(m.eig_power);
  const double norm = z.norm();
  if (norm < 1e-300) return {Eigen::VectorXd::Zero(m.k()), true};
  return {z / norm, false};
}

double cca_cost(const CcaModel& m, const Eigen::VectorXd& phrase_vec,
                const Eigen::VectorXd& region_vec, bool* degenerate) {
  Embedded p = embed(m, phrase_vec, View::X);
  Embedded r = embed(m, region_vec, View::Y);
  if (degenerate) *degenerate = p.degenerate || r.degenerate;
  if (p.degenerate || r.degenerate) return 2.0;
  return 1.0 - p.vec.dot(r.vec);
}

nlohmann::json CcaModel::to_json() const {
  return {{"kind", "cca"},
          {"proj_x", matrix_to_json(proj_x)},
          {"proj_y", matrix_to_json(proj_y)},
          {"mean_x", std::vector<double>(mean_x.begin(), mean_x.end())},
          {"mean_y", std::vector<double>(mean_y.begin(), mean_y.end())},
          {"correlations",
           std::vector<double>(correlations.begin(), correlations.end())},
          {"eig_power", eig_power},
          {"reg", reg}};
}

CcaModel CcaModel::from_json(const nlohmann::json& j) {
  CcaModel m;
  m.proj_x = json_to_matrix(j.at("proj_x"));
  m.proj_y = json_to_matrix(j.at("proj_y"));
  auto vec = [](const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
  };
  m.mean_x = vec(j.at("mean_x"));
  m.mean_y = vec(j.at("mean_y"));
  m.correlations = vec(j.at("correlations"));
  m.eig_power = j.at("eig_power").get<double>();
  m.reg = j.value("reg", 0.0);
  if (m.mean_x.size() != m.proj_x.rows() || m.mean_y.size() != m.proj_y.rows() ||
      m.correlations.size() != m.proj_x.cols() ||
      m.proj_x.cols() != m.proj_y.cols())
    throw std::runtime_error("CcaModel: inconsistent dimensions in file");
  return m;
}

void CcaModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(2) << "\n";
}

CcaModel CcaModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

}  // namespace groundkit::cca
