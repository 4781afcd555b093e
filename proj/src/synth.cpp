#include "groundkit/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "groundkit/rng.hpp"

namespace groundkit::synth {

void SynthSpec::validate() const {
  if (images < 1 || phrases_per_image < 1 || candidates_per_phrase < 2)
    throw std::invalid_argument(
        "synth spec: need >= 1 image, >= 1 phrase, >= 2 candidates");
  if (informative_noise < 0 || pair_noise < 0)
    throw std::invalid_argument("synth spec: noise levels must be >= 0");
  if (relation_density < 0 || relation_density > 1 || decoy_prob < 0 ||
      decoy_prob > 1)
    throw std::invalid_argument("synth spec: probabilities must be in [0,1]");
  if (planted_slot < 0 || planted_slot >= ppc::kNumPpcSlots)
    throw std::invalid_argument("synth spec: planted_slot out of range");
  if (image_width < 10 || image_height < 10)
    throw std::invalid_argument("synth spec: image too small");
}

namespace {

geom::Box random_box(Rng& rng, double w, double h) {
  geom::Box b;
  b.w = rng.uniform(0.08 * w, 0.4 * w);
  b.h = rng.uniform(0.08 * h, 0.4 * h);
  b.x = rng.uniform(0, w - b.w);
  b.y = rng.uniform(0, h - b.h);
  return b;
}

double pair_cost(const geom::Box& a, const geom::Box& b,
                 const geom::Box& gt_a, const geom::Box& gt_b) {
  auto f = geom::spatial_pair_feature(a, b);
  auto g = geom::spatial_pair_feature(gt_a, gt_b);
  double d = 0;
  for (int i = 0; i < 4; ++i) d += std::abs(f[i] - g[i]);
  return std::min(d, 8.0);
}

}  // namespace

data::ValDataset synth_grounding_dataset(const SynthSpec& spec, uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const double w = spec.image_width, h = spec.image_height;

  data::ValDataset out;
  out.reserve(spec.images);
  for (int im = 0; im < spec.images; ++im) {
    data::ValImage image;
    image.image_id = "synth" + std::to_string(im);

    for (int p = 0; p < spec.phrases_per_image; ++p) {
      data::ValPhrase ph;
      ph.phrase_id = image.image_id + "_p" + std::to_string(p);
      ph.type = static_cast<ling::PhraseType>(rng.uniform_int(ling::kNumPhraseTypes));
      ph.gt_union = random_box(rng, w, h);
      ph.has_gt = true;

      const int m = spec.candidates_per_phrase;
      ph.candidates.resize(m);
      const int true_pos = rng.uniform_int(m);
      for (int c = 0; c < m; ++c)
        ph.candidates[c] = c == true_pos ? ph.gt_union : random_box(rng, w, h);

      ph.row.costs = Eigen::MatrixXd::Zero(m, cues::kNumSpcSlots);
      ph.row.available.fill(false);
      ph.row.available[static_cast<int>(cues::SpcSlot::Cca)] = true;
      ph.row.available[static_cast<int>(cues::SpcSlot::Position)] = true;
      const int size_slot = static_cast<int>(cues::size_slot_for(ph.type));
      ph.row.available[size_slot] = true;
      std::array<bool, 4> det_on;
      for (bool& b : det_on) b = rng.uniform() < 0.5;
      for (int d = 0; d < 4; ++d)
        ph.row.available[static_cast<int>(cues::SpcSlot::ObjectDetector) + d] =
            det_on[d];

      for (int c = 0; c < m; ++c) {
        ph.row.costs(c, 0) = 1.0 - geom::iou(ph.candidates[c], ph.gt_union) +
                             (spec.informative_noise > 0
                                  ? rng.gauss(0, spec.informative_noise)
                                  : 0.0);
        ph.row.costs(c, 1) = rng.uniform();
        ph.row.costs(c, size_slot) = rng.uniform();
        for (int d = 0; d < 4; ++d)
          if (det_on[d])
            ph.row.costs(c, static_cast<int>(cues::SpcSlot::ObjectDetector) + d) =
                rng.uniform();
      }
      image.phrases.push_back(std::move(ph));
    }

    for (int i = 0; i < spec.phrases_per_image; ++i) {
      for (int j = i + 1; j < spec.phrases_per_image; ++j) {
        if (rng.uniform() >= spec.relation_density) continue;
        data::ValRelation rel;
        rel.left = i;
        rel.right = j;
        rel.slot = spec.planted_slot;
        rel.available = true;

        data::ValPhrase& pl = image.phrases[i];
        data::ValPhrase& pr = image.phrases[j];
        if (spec.decoy_prob > 0 && rng.uniform() < spec.decoy_prob) {
          // Make some candidate of the right phrase undercut the informative
          // cue while sitting away from the ground truth.
          int best_true = 0;
          double best_cost = pr.row.costs(0, 0);
          for (int c = 1; c < pr.row.costs.rows(); ++c)
            if (pr.row.costs(c, 0) < best_cost) {
              best_cost = pr.row.costs(c, 0);
              best_true = c;
            }
          int decoy = -1;
          for (int attempt = 0; attempt < 50 && decoy < 0; ++attempt) {
            int c = rng.uniform_int(static_cast<int>(pr.candidates.size()));
            if (c != best_true && geom::iou(pr.candidates[c], pr.gt_union) < 0.5)
              decoy = c;
          }
          if (decoy >= 0)
            pr.row.costs(decoy, 0) = best_cost - spec.decoy_margin;
        }

        rel.psi.resize(pl.candidates.size(), pr.candidates.size());
        for (int a = 0; a < rel.psi.rows(); ++a)
          for (int b = 0; b < rel.psi.cols(); ++b)
            rel.psi(a, b) =
                pair_cost(pl.candidates[a], pr.candidates[b], pl.gt_union,
                          pr.gt_union) +
                (spec.pair_noise > 0 ? rng.gauss(0, spec.pair_noise) : 0.0);
        image.relations.push_back(std::move(rel));
      }
    }
    out.push_back(std::move(image));
  }
  return out;
}

}  // namespace groundkit::synth
