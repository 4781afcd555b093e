#pragma once

#include <cstdint>

#include "groundkit/dataset.hpp"

namespace groundkit::synth {

// Generator for desk-scale datasets with known structure: cue 0 carries
// 1 - IOU(candidate, gt) plus Gaussian noise, the other available cues are
// i.i.d. noise, and relations carry a planted spatial cue whose cost grows
// with the distance from the ground-truth pair layout.
struct SynthSpec {
  int images = 50;
  int phrases_per_image = 3;
  int candidates_per_phrase = 10;
  double informative_noise = 0.05;  // sigma on cue 0
  double pair_noise = 0.05;         // sigma on the planted pairwise cue
  double relation_density = 0.0;    // probability of a relation per phrase pair
  // With this probability a related phrase gets a decoy candidate that
  // undercuts the informative cue but sits off the ground truth, so only the
  // pairwise term can recover the pair.
  double decoy_prob = 0.0;
  double decoy_margin = 0.15;
  int planted_slot = 1;  // ppc slot carrying the planted relation
  int image_width = 500;
  int image_height = 400;

  void validate() const;  // throws on nonsensical settings
};

data::ValDataset synth_grounding_dataset(const SynthSpec& spec, uint64_t seed);

}  // namespace groundkit::synth
