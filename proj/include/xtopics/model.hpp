#pragma once

#include <string>
#include <vector>

namespace xtopics {

// Point-estimate snapshot of a trained model, the interface between training
// and evaluation. Per-collection topic ids live in [0, K_c); ids below
// k_common are common topics (mixture of a shared and a collection-specific
// word distribution, mixed by sigma), the rest are owned by one collection.
//
// C-HDP snapshots use the same shape with every live topic treated as
// common and alpha[c][z] = alpha_1 * P(z | collection c).
struct TopicModelSnapshot {
  std::string kind;  // "clda" | "cclda" | "chdp"
  int vocab_size = 0;
  int k_common = 0;
  std::vector<int> k_per_collection;
  std::vector<double> eta;

  std::vector<std::vector<double>> alpha;       // [c][K_c]
  std::vector<double> sigma;                    // [k_common], shared fraction
  std::vector<std::vector<double>> phi_shared;  // [k_common][V]
  // [c][K_c][V]; rows below k_common are the collection-specific component of
  // common topics, the rest are non-common topics.
  std::vector<std::vector<std::vector<double>>> phi_spec;

  int topics_for(int c) const { return k_per_collection.at(c); }

  // Predictive word probability given topic z in collection c, with the
  // shared/specific branch marginalized out.
  double word_prob(int c, int z, int w) const {
    if (z < k_common)
      return sigma[z] * phi_shared[z][w] +
             (1.0 - sigma[z]) * phi_spec[c][z][w];
    return phi_spec[c][z][w];
  }

  double alpha_sum(int c) const {
    double s = 0.0;
    for (double a : alpha[c]) s += a;
    return s;
  }
};

}  // namespace xtopics
