#include "groundkit/learn.hpp"

#include <algorithm>
#include <stdexcept>

#include "groundkit/rng.hpp"
#include "groundkit/svm.hpp"

namespace groundkit::learn {

namespace {

struct Vertex {
  Eigen::VectorXd x;
  double f = 0;
  long age = 0;
};

}  // namespace

NmResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                     const Eigen::VectorXd& x0, const NmConfig& cfg) {
  const int d = static_cast<int>(x0.size());
  if (d < 1) throw std::invalid_argument("nelder_mead: empty start point");

  int evals = 0;
  Eigen::VectorXd best_x = x0;
  double best_f = 0;
  bool have_best = false;
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x);
    ++evals;
    if (!have_best || v < best_f) {
      best_f = v;
      best_x = x;
      have_best = true;
    }
    return v;
  };

  long age_counter = 0;
  std::vector<Vertex> simplex;
  simplex.push_back({x0, eval(x0), age_counter++});
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd v = x0;
    v[i] += v[i] != 0.0 ? cfg.init_step * v[i] : cfg.zero_step;
    simplex.push_back({v, eval(v), age_counter++});
  }

  auto order = [&]() {
    std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) {
      if (a.f != b.f) return a.f < b.f;
      return a.age < b.age;
    });
  };

  while (evals < cfg.max_evals) {
    order();
    // Convergence: spread of f and of coordinates across the simplex.
    double fspread = 0, xspread = 0;
    for (int i = 1; i <= d; ++i) {
      fspread = std::max(fspread, std::abs(simplex[i].f - simplex[0].f));
      xspread = std::max(xspread,
                         (simplex[i].x - simplex[0].x).cwiseAbs().maxCoeff());
    }
    if (fspread <= cfg.ftol && xspread <= cfg.xtol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[i].x;
    centroid /= d;
    const Vertex& worst = simplex[d];

    Eigen::VectorXd xr = centroid + (centroid - worst.x);
    const double fr = eval(xr);
    if (fr < simplex[0].f) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst.x);
      const double fe = eval(xe);
      if (fe < fr)
        simplex[d] = {xe, fe, age_counter++};
      else
        simplex[d] = {xr, fr, age_counter++};
    } else if (fr < simplex[d - 1].f) {
      simplex[d] = {xr, fr, age_counter++};
    } else {
      bool shrink = false;
      if (fr < worst.f) {
        Eigen::VectorXd xc = centroid + 0.5 * (centroid - worst.x);
        const double fc = eval(xc);
        if (fc <= fr)
          simplex[d] = {xc, fc, age_counter++};
        else
          shrink = true;
      } else {
        Eigen::VectorXd xcc = centroid - 0.5 * (centroid - worst.x);
        const double fcc = eval(xcc);
        if (fcc < worst.f)
          simplex[d] = {xcc, fcc, age_counter++};
        else
          shrink = true;
      }
      if (shrink) {
        for (int i = 1; i <= d; ++i) {
          simplex[i].x = simplex[0].x + 0.5 * (simplex[i].x - simplex[0].x);
          simplex[i].f = eval(simplex[i].x);
          simplex[i].age = age_counter++;
        }
      }
    }
  }
  return {best_x, best_f, evals};
}

int recall_objective_s(std::span<const double> w, const data::ValDataset& val) {
  int count = 0;
  for (const data::ValImage& img : val) {
    for (const data::ValPhrase& ph : img.phrases) {
      if (!ph.has_gt) continue;
      Eigen::VectorXd s = cues::spc_score(ph.row, w);
      int best;
      s.minCoeff(&best);
      if (geom::iou(ph.candidates[best], ph.gt_union) >= 0.5) ++count;
    }
  }
  return count;
}

namespace {

Eigen::VectorXd restart_best(
    int dim, const SearchConfig& cfg,
    const std::function<double(const Eigen::VectorXd&)>& objective,
    int* best_count) {
  if (cfg.restarts < 1)
    throw std::invalid_argument("learn_weights: restarts must be >= 1");
  Rng rng(cfg.seed);
  Eigen::VectorXd best;
  double best_f = 0;
  for (int r = 0; r < cfg.restarts; ++r) {
    Eigen::VectorXd x0(dim);
    for (int i = 0; i < dim; ++i) x0[i] = rng.uniform(cfg.init_lo, cfg.init_hi);
    NmResult res = nelder_mead(objective, x0, cfg.nm);
    if (r == 0 || res.f < best_f) {
      best_f = res.f;
      best = res.x;
    }
  }
  if (best_count) *best_count = static_cast<int>(-best_f);
  return best;
}

}  // namespace

Eigen::VectorXd learn_weights_s(const data::ValDataset& val,
                                const SearchConfig& cfg, int* best_count) {
  auto objective = [&](const Eigen::VectorXd& w) {
    return -static_cast<double>(
        recall_objective_s(std::span<const double>(w.data(), w.size()), val));
  };
  return restart_best(cues::kNumSpcSlots, cfg, objective, best_count);
}

int recall_objective_q(std::span<const double> wq, std::span<const double> ws,
                       const data::ValDataset& val) {
  if (wq.size() != ppc::kNumPpcSlots)
    throw std::invalid_argument("recall_objective_q: expected " +
                                std::to_string(ppc::kNumPpcSlots) + " weights");
  int count = 0;
  for (const data::ValImage& img : val) {
    std::vector<Eigen::VectorXd> s(img.phrases.size());
    for (size_t i = 0; i < img.phrases.size(); ++i)
      s[i] = cues::spc_score(img.phrases[i].row, ws);
    for (const data::ValRelation& rel : img.relations) {
      const data::ValPhrase& pl = img.phrases[rel.left];
      const data::ValPhrase& pr = img.phrases[rel.right];
      if (!pl.has_gt || !pr.has_gt) continue;
      // Best pair under S + S + Q; ties break lexicographically.
      int best_a = 0, best_b = 0;
      double best_cost = 0;
      bool first = true;
      for (int a = 0; a < s[rel.left].size(); ++a) {
        for (int b = 0; b < s[rel.right].size(); ++b) {
          double cost = s[rel.left][a] + s[rel.right][b];
          if (rel.available) cost += wq[rel.slot] * rel.psi(a, b);
          if (first || cost < best_cost) {
            best_cost = cost;
            best_a = a;
            best_b = b;
            first = false;
          }
        }
      }
      if (geom::iou(pl.candidates[best_a], pl.gt_union) >= 0.5) ++count;
      if (geom::iou(pr.candidates[best_b], pr.gt_union) >= 0.5) ++count;
    }
  }
  return count;
}

Eigen::VectorXd learn_weights_q(const data::ValDataset& val,
                                std::span<const double> ws,
                                const SearchConfig& cfg, int* best_count) {
  bool any = false;
  for (const data::ValImage& img : val)
    for (const data::ValRelation& rel : img.relations)
      if (img.phrases[rel.left].has_gt && img.phrases[rel.right].has_gt)
        any = true;
  if (!any) {
    // Vacuous problem: return the first random init untouched.
    Rng rng(cfg.seed);
    Eigen::VectorXd w(ppc::kNumPpcSlots);
    for (int i = 0; i < w.size(); ++i) w[i] = rng.uniform(cfg.init_lo, cfg.init_hi);
    if (best_count) *best_count = 0;
    return w;
  }
  std::vector<double> ws_copy(ws.begin(), ws.end());
  auto objective = [&](const Eigen::VectorXd& w) {
    return -static_cast<double>(recall_objective_q(
        std::span<const double>(w.data(), w.size()), ws_copy, val));
  };
  return restart_best(ppc::kNumPpcSlots, cfg, objective, best_count);
}

Eigen::VectorXd learn_weights_s_ranksvm(const data::ValDataset& val, double c,
                                        int epochs, int negatives_per_positive,
                                        uint64_t seed) {
  Rng rng(seed);
  std::vector<svm::RankPair> pairs;
  for (const data::ValImage& img : val) {
    for (const data::ValPhrase& ph : img.phrases) {
      if (!ph.has_gt) continue;
      std::vector<int> correct, incorrect;
      for (size_t i = 0; i < ph.candidates.size(); ++i)
        (geom::iou(ph.candidates[i], ph.gt_union) >= 0.5 ? correct : incorrect)
            .push_back(static_cast<int>(i));
      if (correct.empty() || incorrect.empty()) continue;
      auto masked = [&](int cand) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(cues::kNumSpcSlots);
        for (int s2 = 0; s2 < cues::kNumSpcSlots; ++s2)
          if (ph.row.available[s2]) v[s2] = ph.row.costs(cand, s2);
        return v;
      };
      for (int pos : correct)
        for (int k = 0; k < negatives_per_positive; ++k) {
          int neg = incorrect[rng.uniform_int(static_cast<int>(incorrect.size()))];
          // Ranking in score space = negated cost space.
          pairs.emplace_back(-masked(pos), -masked(neg));
        }
    }
  }
  if (pairs.empty())
    throw std::runtime_error("learn_weights_s_ranksvm: no ranking pairs");
  svm::RankSvmModel m = svm::train_rank_svm(pairs, c, epochs, seed);
  return m.weights;
}

}  // namespace groundkit::learn
