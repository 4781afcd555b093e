#include "groundkit/infer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace groundkit::infer {

void JointProblem::validate() const {
  for (size_t i = 0; i < unary.size(); ++i) {
    if (unary[i].size() == 0)
      throw std::invalid_argument("phrase " + std::to_string(i) +
                                  " has no candidates");
    if (!unary[i].allFinite())
      throw std::invalid_argument("non-finite unary cost for phrase " +
                                  std::to_string(i));
  }
  for (const PairTerm& t : pairs) {
    if (t.i < 0 || t.j < 0 || t.i >= num_phrases() || t.j >= num_phrases() ||
        t.i == t.j)
      throw std::invalid_argument("pair term with bad phrase indices");
    if (t.q.rows() != unary[t.i].size() || t.q.cols() != unary[t.j].size())
      throw std::invalid_argument("pair term shape does not match candidates");
    if (!t.q.allFinite())
      throw std::invalid_argument("non-finite pair cost");
  }
}

std::vector<int> retrieve_candidates(std::span<const geom::Box> boxes,
                                     std::span<const double> costs, int m,
                                     double nms_iou) {
  if (boxes.size() != costs.size())
    throw std::invalid_argument("retrieve_candidates: length mismatch");
  if (m < 1) throw std::invalid_argument("retrieve_candidates: m must be >= 1");
  // nms ranks by descending score; costs rank ascending.
  std::vector<double> scores(costs.size());
  for (size_t i = 0; i < costs.size(); ++i) scores[i] = -costs[i];
  std::vector<int> kept = geom::nms(boxes, scores, nms_iou);
  if (static_cast<int>(kept.size()) > m) kept.resize(m);
  return kept;
}

double objective_of(const JointProblem& p, std::span<const int> chosen) {
  if (static_cast<int>(chosen.size()) != p.num_phrases())
    throw std::invalid_argument("objective_of: wrong assignment length");
  double obj = 0;
  for (int i = 0; i < p.num_phrases(); ++i) obj += p.unary[i][chosen[i]];
  for (const auto& t : p.pairs) obj += t.q(chosen[t.i], chosen[t.j]);
  return obj;
}

Assignment solve_exact(const JointProblem& p, uint64_t budget) {
  p.validate();
  if (p.num_phrases() == 0) return {{}, 0.0};
  uint64_t combos = 1;
  for (const auto& u : p.unary) {
    combos *= static_cast<uint64_t>(u.size());
    if (combos > budget)
      throw std::runtime_error(
          "solve_exact: candidate combinations exceed budget (" +
          std::to_string(budget) + "); use solve_relaxed");
  }
  const int n = p.num_phrases();
  std::vector<int> idx(n, 0);
  std::vector<int> best = idx;
  double best_obj = objective_of(p, idx);
  // Odometer enumeration in lexicographic order; strict improvement keeps
  // the lexicographically smallest optimum.
  while (true) {
    int pos = n - 1;
    while (pos >= 0 && idx[pos] + 1 >= p.unary[pos].size()) {
      idx[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++idx[pos];
    const double obj = objective_of(p, idx);
    if (obj < best_obj) {
      best_obj = obj;
      best = idx;
    }
  }
  return {best, best_obj};
}

namespace {

// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0;
  double theta = 0;
  int rho = 0;
  for (int i = 0; i < n; ++i) {
    css += u[i];
    const double t = (css - 1.0) / (i + 1);
    if (u[i] - t > 0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  return (v.array() - theta).cwiseMax(0.0);
}

// One pass of per-phrase conditional improvement; returns true if any index
// changed.
bool improve_once(const JointProblem& p, std::vector<int>& chosen) {
  bool changed = false;
  for (int i = 0; i < p.num_phrases(); ++i) {
    Eigen::VectorXd local = p.unary[i];
    for (const auto& t : p.pairs) {
      if (t.i == i)
        local += t.q.col(chosen[t.j]);
      else if (t.j == i)
        local += t.q.row(chosen[t.i]).transpose();
    }
    int best;
    local.minCoeff(&best);
    if (local[best] < local[chosen[i]] - 1e-12) {
      chosen[i] = best;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

Assignment solve_relaxed(const JointProblem& p, int iters, double tol) {
  p.validate();
  const int n = p.num_phrases();
  if (n == 0) return {{}, 0.0};

  std::vector<Eigen::VectorXd> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = Eigen::VectorXd::Constant(p.unary[i].size(),
                                     1.0 / static_cast<double>(p.unary[i].size()));

  auto value = [&](const std::vector<Eigen::VectorXd>& xs) {
    double f = 0;
    for (int i = 0; i < n; ++i) f += p.unary[i].dot(xs[i]);
    for (const auto& t : p.pairs) f += xs[t.i].dot(t.q * xs[t.j]);
    return f;
  };
  auto gradient = [&](const std::vector<Eigen::VectorXd>& xs) {
    std::vector<Eigen::VectorXd> g(n);
    for (int i = 0; i < n; ++i) g[i] = p.unary[i];
    for (const auto& t : p.pairs) {
      g[t.i] += t.q * xs[t.j];
      g[t.j] += t.q.transpose() * xs[t.i];
    }
    return g;
  };

  double f = value(x);
  double step = 1.0;
  for (int it = 0; it < iters; ++it) {
    std::vector<Eigen::VectorXd> g = gradient(x);
    // Backtracking line search over the projected step.
    bool moved = false;
    double trial = std::min(step * 2.0, 1e6);
    while (trial > 1e-12) {
      std::vector<Eigen::VectorXd> cand(n);
      for (int i = 0; i < n; ++i)
        cand[i] = project_simplex(x[i] - trial * g[i]);
      const double fc = value(cand);
      if (fc < f - 1e-12) {
        x = std::move(cand);
        step = trial;
        moved = true;
        if (f - fc < tol) {
          f = fc;
          it = iters;  // converged
        } else {
          f = fc;
        }
        break;
      }
      trial /= 2.0;
    }
    if (!moved) break;
  }

  // Round by maximum mass, then condition on neighbors until stable; also
  // consider the independent per-phrase argmin start so the result is never
  // worse than unary-only selection.
  std::vector<int> rounded(n), indep(n);
  for (int i = 0; i < n; ++i) {
    x[i].maxCoeff(&rounded[i]);
    p.unary[i].minCoeff(&indep[i]);
  }
  for (int pass = 0; pass < 100 && improve_once(p, rounded); ++pass) {
  }
  for (int pass = 0; pass < 100 && improve_once(p, indep); ++pass) {
  }
  const double obj_rounded = objective_of(p, rounded);
  const double obj_indep = objective_of(p, indep);
  if (obj_indep < obj_rounded) return {indep, obj_indep};
  return {rounded, obj_rounded};
}

}  // namespace groundkit::infer
