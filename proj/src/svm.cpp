#include "groundkit/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "groundkit/rng.hpp"

namespace groundkit::svm {

namespace {

constexpr double kKktTol = 1e-3;
constexpr double kAlphaEps = 1e-12;
constexpr double kProbClamp = 1e-7;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Dual SMO solver over a precomputed kernel matrix.
class SmoSolver {
 public:
  SmoSolver(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double c,
            double gamma)
      : x_(x), y_(y), c_(c), n_(static_cast<int>(x.rows())) {
    Eigen::VectorXd sq = x.rowwise().squaredNorm();
    k_ = -2.0 * (x * x.transpose());
    k_.colwise() += sq;
    k_.rowwise() += sq.transpose();
    k_ = (-gamma * k_.array()).exp();
    alpha_ = Eigen::VectorXd::Zero(n_);
    bias_ = 0;
    errors_ = -y;  // f = 0 initially
  }

  void solve(std::vector<double>* objective_per_sweep, int max_sweeps = 2000) {
    bool examine_all = true;
    int changed = 0;
    int sweeps = 0;
    while ((changed > 0 || examine_all) && sweeps < max_sweeps) {
      changed = 0;
      for (int i = 0; i < n_; ++i) {
        if (!examine_all && (alpha_[i] <= kAlphaEps || alpha_[i] >= c_ - kAlphaEps))
          continue;
        changed += examine(i);
      }
      if (objective_per_sweep) objective_per_sweep->push_back(dual_objective());
      examine_all = examine_all ? false : (changed == 0);
      ++sweeps;
    }
  }

  double dual_objective() const {
    Eigen::VectorXd ay = alpha_.cwiseProduct(y_);
    return alpha_.sum() - 0.5 * ay.dot(k_ * ay);
  }

  const Eigen::VectorXd& alpha() const { return alpha_; }
  double bias() const { return bias_; }

 private:
  int examine(int i2) {
    const double y2 = y_[i2], a2 = alpha_[i2], e2 = errors_[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -kKktTol && a2 < c_ - kAlphaEps) ||
          (r2 > kKktTol && a2 > kAlphaEps)))
      return 0;
    // First heuristic: maximal |E1 - E2| among non-bound alphas.
    int best = -1;
    double best_gap = -1;
    for (int i = 0; i < n_; ++i) {
      if (alpha_[i] <= kAlphaEps || alpha_[i] >= c_ - kAlphaEps) continue;
      double gap = std::abs(errors_[i] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && take_step(best, i2)) return 1;
    for (int i = 0; i < n_; ++i) {
      if (alpha_[i] <= kAlphaEps || alpha_[i] >= c_ - kAlphaEps) continue;
      if (take_step(i, i2)) return 1;
    }
    for (int i = 0; i < n_; ++i)
      if (take_step(i, i2)) return 1;
    return 0;
  }

  bool take_step(int i1, int i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = errors_[i1], e2 = errors_[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (lo >= hi) return false;
    const double k11 = k_(i1, i1), k12 = k_(i1, i2), k22 = k_(i2, i2);
    const double eta = k11 + k22 - 2 * k12;
    double a2new;
    if (eta > 0) {
      a2new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Flat direction: evaluate the dual at both clip bounds.
      const double f1 = y1 * (e1 + bias_) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 + bias_) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12)
        a2new = lo;
      else if (obj_hi < obj_lo - 1e-12)
        a2new = hi;
      else
        return false;
    }
    if (std::abs(a2new - a2) < kAlphaEps * (a2new + a2 + kAlphaEps)) return false;
    const double a1new = a1 + s * (a2 - a2new);

    const double b1 = e1 + y1 * (a1new - a1) * k11 + y2 * (a2new - a2) * k12 + bias_;
    const double b2 = e2 + y1 * (a1new - a1) * k12 + y2 * (a2new - a2) * k22 + bias_;
    double bnew;
    if (a1new > kAlphaEps && a1new < c_ - kAlphaEps)
      bnew = b1;
    else if (a2new > kAlphaEps && a2new < c_ - kAlphaEps)
      bnew = b2;
    else
      bnew = (b1 + b2) / 2;

    const double d1 = y1 * (a1new - a1), d2 = y2 * (a2new - a2);
    errors_ += d1 * k_.col(i1) + d2 * k_.col(i2);
    errors_.array() += bias_ - bnew;
    alpha_[i1] = a1new;
    alpha_[i2] = a2new;
    bias_ = bnew;
    errors_[i1] = decision_of(i1) - y1;
    errors_[i2] = decision_of(i2) - y2;
    return true;
  }

  double decision_of(int i) const {
    return alpha_.cwiseProduct(y_).dot(k_.col(i)) - bias_;
  }

  const Eigen::MatrixXd& x_;
  Eigen::VectorXd y_;
  double c_;
  int n_;
  Eigen::MatrixXd k_;
  Eigen::VectorXd alpha_;
  double bias_;
  Eigen::VectorXd errors_;
};

struct PlattFit {
  double a = 1;  // probability = sigmoid(a * f + b)
  double b = 0;
};

// Sigmoid fit by regularized maximum likelihood (Newton iterations with
// backtracking), on decision value / label pairs.
PlattFit fit_platt(const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(f.size());
  double np = 0, nn = 0;
  for (int i = 0; i < n; ++i) (y[i] > 0 ? np : nn) += 1;
  const double t_pos = (np + 1) / (np + 2);
  const double t_neg = 1 / (nn + 2);

  // Classical parameterization: p_i = 1 / (1 + exp(A f_i + B)).
  double a = 0, b = std::log((nn + 1) / (np + 1));
  auto nll = [&](double av, double bv) {
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double t = y[i] > 0 ? t_pos : t_neg;
      const double z = av * f[i] + bv;
      // Stable log(1 + exp(z)) formulation.
      const double l1pez = z > 0 ? z + std::log1p(std::exp(-z))
                                 : std::log1p(std::exp(z));
      s += t * z + l1pez - z;  // t*z + log(1+e^{-z}) rearranged
    }
    return s;
  };
  double fval = nll(a, b);
  for (int it = 0; it < 100; ++it) {
    double h11 = 1e-12, h22 = 1e-12, h21 = 0, g1 = 0, g2 = 0;
    for (int i = 0; i < n; ++i) {
      const double t = y[i] > 0 ? t_pos : t_neg;
      const double z = a * f[i] + b;
      const double p = 1.0 / (1.0 + std::exp(z));
      const double d2 = p * (1 - p);
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-10 && std::abs(g2) < 1e-10) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1;
    while (step >= 1e-10) {
      const double cand = nll(a + step * da, b + step * db);
      if (cand < fval + 1e-4 * step * gd) {
        a += step * da;
        b += step * db;
        fval = cand;
        break;
      }
      step /= 2;
    }
    if (step < 1e-10) break;
  }
  // Normalize so the stored slope makes probability increase with decision.
  return {-a, -b};
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg) {
  Eigen::MatrixXd x(pos.rows() + neg.rows(), pos.cols());
  x << pos, neg;
  return x;
}

RbfSvmModel train_core(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       double c, double gamma,
                       SvmTrainDiagnostics* diag) {
  SmoSolver solver(x, y, c, gamma);
  solver.solve(diag ? &diag->dual_objective : nullptr);
  RbfSvmModel m;
  m.gamma = gamma;
  m.c = c;
  m.bias = -solver.bias();  // decision = sum alphas k(.) + bias
  std::vector<int> sv;
  for (int i = 0; i < x.rows(); ++i)
    if (solver.alpha()[i] > kAlphaEps) sv.push_back(i);
  if (sv.empty()) {
    // Tolerated degenerate case: keep one flat support vector at alpha 0.
    sv.push_back(0);
  }
  m.support_vectors.resize(static_cast<int>(sv.size()), x.cols());
  m.alphas.resize(static_cast<int>(sv.size()));
  for (size_t i = 0; i < sv.size(); ++i) {
    m.support_vectors.row(static_cast<int>(i)) = x.row(sv[i]);
    m.alphas[static_cast<int>(i)] = solver.alpha()[sv[i]] * y[sv[i]];
  }
  return m;
}

// Stratified fold ids (0..folds-1) with a seeded shuffle inside each class.
std::vector<int> fold_ids(const Eigen::VectorXd& y, int folds, uint64_t seed) {
  Rng rng(seed);
  std::vector<int> pos_idx, neg_idx;
  for (int i = 0; i < y.size(); ++i)
    (y[i] > 0 ? pos_idx : neg_idx).push_back(i);
  rng.shuffle(pos_idx);
  rng.shuffle(neg_idx);
  std::vector<int> fold(y.size(), 0);
  int f = 0;
  for (int i : pos_idx) fold[i] = f++ % folds;
  for (int i : neg_idx) fold[i] = f++ % folds;
  return fold;
}

}  // namespace

double RbfSvmModel::decision(const Eigen::VectorXd& x) const {
  if (x.size() != support_vectors.cols())
    throw std::invalid_argument("svm decision: dim " + std::to_string(x.size()) +
                                " does not match model dim " +
                                std::to_string(support_vectors.cols()));
  Eigen::VectorXd d2 = (support_vectors.rowwise() - x.transpose()).rowwise().squaredNorm();
  return alphas.dot((-gamma * d2.array()).exp().matrix()) + bias;
}

RbfSvmModel train_rbf_svm(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                          double c, double gamma, uint64_t seed,
                          SvmTrainDiagnostics* diag) {
  if (pos.rows() < 1 || neg.rows() < 1)
    throw std::invalid_argument("train_rbf_svm: need examples of both classes");
  if (pos.cols() != neg.cols())
    throw std::invalid_argument("train_rbf_svm: feature dims differ");
  if (!pos.allFinite() || !neg.allFinite())
    throw std::invalid_argument("train_rbf_svm: non-finite feature");
  if (c <= 0 || gamma <= 0)
    throw std::invalid_argument("train_rbf_svm: c and gamma must be > 0");

  Eigen::MatrixXd x = stack(pos, neg);
  Eigen::VectorXd y(x.rows());
  y.head(pos.rows()).setOnes();
  y.tail(neg.rows()).setConstant(-1);

  // Cross-validated decision values for the sigmoid fit.
  const int folds = 3;
  std::vector<int> fold = fold_ids(y, folds, seed);
  Eigen::VectorXd cv_dec(x.rows());
  bool cv_ok = true;
  for (int f = 0; f < folds && cv_ok; ++f) {
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < x.rows(); ++i)
      (fold[i] == f ? test_idx : train_idx).push_back(i);
    int tp = 0, tn = 0;
    for (int i : train_idx) (y[i] > 0 ? tp : tn)++;
    if (test_idx.empty() || tp == 0 || tn == 0) {
      cv_ok = false;
      break;
    }
    Eigen::MatrixXd xt(train_idx.size(), x.cols());
    Eigen::VectorXd yt(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i) {
      xt.row(static_cast<int>(i)) = x.row(train_idx[i]);
      yt[static_cast<int>(i)] = y[train_idx[i]];
    }
    RbfSvmModel sub = train_core(xt, yt, c, gamma, nullptr);
    for (int i : test_idx) cv_dec[i] = sub.decision(x.row(i).transpose());
  }

  RbfSvmModel m = train_core(x, y, c, gamma, diag);
  if (!cv_ok)
    for (int i = 0; i < x.rows(); ++i) cv_dec[i] = m.decision(x.row(i).transpose());
  PlattFit platt = fit_platt(cv_dec, y);
  m.platt_a = platt.a;
  m.platt_b = platt.b;
  return m;
}

double predict_prob(const RbfSvmModel& m, const Eigen::VectorXd& x) {
  const double p = sigmoid(m.platt_a * m.decision(x) + m.platt_b);
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double grid_search_gamma(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                         double c, std::span<const double> candidates,
                         uint64_t seed) {
  if (candidates.empty())
    throw std::invalid_argument("grid_search_gamma: no candidates");
  Eigen::MatrixXd x = stack(pos, neg);
  Eigen::VectorXd y(x.rows());
  y.head(pos.rows()).setOnes();
  y.tail(neg.rows()).setConstant(-1);
  const int folds = 3;
  std::vector<int> fold = fold_ids(y, folds, seed);

  double best_gamma = candidates[0];
  double best_acc = -1;
  for (double gamma : candidates) {
    int correct = 0, total = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<int> train_idx, test_idx;
      for (int i = 0; i < x.rows(); ++i)
        (fold[i] == f ? test_idx : train_idx).push_back(i);
      int tp = 0, tn = 0;
      for (int i : train_idx) (y[i] > 0 ? tp : tn)++;
      if (tp == 0 || tn == 0) continue;
      Eigen::MatrixXd xt(train_idx.size(), x.cols());
      Eigen::VectorXd yt(train_idx.size());
      for (size_t i = 0; i < train_idx.size(); ++i) {
        xt.row(static_cast<int>(i)) = x.row(train_idx[i]);
        yt[static_cast<int>(i)] = y[train_idx[i]];
      }
      RbfSvmModel sub = train_core(xt, yt, c, gamma, nullptr);
      for (int i : test_idx) {
        total++;
        if ((sub.decision(x.row(i).transpose()) > 0 ? 1 : -1) == (y[i] > 0 ? 1 : -1))
          correct++;
      }
    }
    const double acc = total > 0 ? static_cast<double>(correct) / total : 0;
    if (acc > best_acc + 1e-12) {
      best_acc = acc;
      best_gamma = gamma;
    }
  }
  return best_gamma;
}

RankSvmModel train_rank_svm(std::span<const RankPair> pairs, double c,
                            int epochs, uint64_t seed,
                            RankTrainDiagnostics* diag) {
  if (pairs.empty()) throw std::invalid_argument("train_rank_svm: no pairs");
  if (c <= 0) throw std::invalid_argument("train_rank_svm: c must be > 0");
  const int dim = static_cast<int>(pairs[0].first.size());
  std::vector<Eigen::VectorXd> diffs;
  diffs.reserve(pairs.size());
  for (const auto& [better, worse] : pairs) {
    if (better.size() != dim || worse.size() != dim)
      throw std::invalid_argument("train_rank_svm: inconsistent feature dims");
    diffs.push_back(better - worse);
  }
  const int n = static_cast<int>(diffs.size());
  // The objective divided by n is the standard averaged-hinge form with
  // regularizer lambda_p = 1 / (c n^2); Pegasos-style steps minimize it.
  const double lambda_p = 1.0 / (c * static_cast<double>(n) * n);

  Rng rng(seed);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  long t = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (int k : order) {
      ++t;
      const double eta = 1.0 / (lambda_p * (static_cast<double>(t) + n));
      w *= 1.0 - eta * lambda_p;
      if (w.dot(diffs[k]) < 1) w += eta * diffs[k];
    }
    if (diag) {
      double loss = w.squaredNorm() / (2 * c * n);
      for (const auto& d : diffs) loss += std::max(0.0, 1.0 - w.dot(d));
      diag->epoch_loss.push_back(loss);
    }
  }
  return RankSvmModel{w, c};
}

double rank_score(const RankSvmModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.weights.size())
    throw std::invalid_argument("rank_score: dim mismatch");
  return m.weights.dot(x);
}

nlohmann::json RbfSvmModel::to_json() const {
  nlohmann::json sv = nlohmann::json::array();
  for (int r = 0; r < support_vectors.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c2 = 0; c2 < support_vectors.cols(); ++c2)
      row.push_back(support_vectors(r, c2));
    sv.push_back(std::move(row));
  }
  return {{"kind", "rbf_svm"},
          {"support_vectors", std::move(sv)},
          {"alphas", std::vector<double>(alphas.begin(), alphas.end())},
          {"bias", bias},
          {"gamma", gamma},
          {"platt_a", platt_a},
          {"platt_b", platt_b},
          {"c", c}};
}

RbfSvmModel RbfSvmModel::from_json(const nlohmann::json& j) {
  RbfSvmModel m;
  const auto& sv = j.at("support_vectors");
  const auto& al = j.at("alphas");
  if (sv.empty() || sv.size() != al.size())
    throw std::runtime_error("rbf_svm: bad support vector block");
  m.support_vectors.resize(sv.size(), sv[0].size());
  m.alphas.resize(al.size());
  for (size_t r = 0; r < sv.size(); ++r) {
    for (size_t c2 = 0; c2 < sv[r].size(); ++c2)
      m.support_vectors(static_cast<int>(r), static_cast<int>(c2)) =
          sv[r][c2].get<double>();
    m.alphas[static_cast<int>(r)] = al[r].get<double>();
  }
  m.bias = j.at("bias").get<double>();
  m.gamma = j.at("gamma").get<double>();
  m.platt_a = j.at("platt_a").get<double>();
  m.platt_b = j.at("platt_b").get<double>();
  m.c = j.value("c", 1.0);
  return m;
}

void RbfSvmModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(2) << "\n";
}

RbfSvmModel RbfSvmModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json RankSvmModel::to_json() const {
  return {{"kind", "rank_svm"},
          {"weights", std::vector<double>(weights.begin(), weights.end())},
          {"c", c}};
}

RankSvmModel RankSvmModel::from_json(const nlohmann::json& j) {
  RankSvmModel m;
  const auto& w = j.at("weights");
  m.weights.resize(w.size());
  for (size_t i = 0; i < w.size(); ++i) m.weights[static_cast<int>(i)] = w[i].get<double>();
  m.c = j.value("c", 1.0);
  return m;
}

void RankSvmModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(2) << "\n";
}

RankSvmModel RankSvmModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

}  // namespace groundkit::svm
