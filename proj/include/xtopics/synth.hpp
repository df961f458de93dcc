#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xtopics/corpus.hpp"
#include "xtopics/model.hpp"

namespace xtopics {

struct SynthSpec {
  std::vector<int> docs_per_collection{1000, 1000};
  int tokens_per_doc = 50;
  int vocab_size = 3000;
  int k_common = 10;
  std::vector<int> k_per_collection{10, 10};
  double beta = 0.01;
  double delta1 = 1.0;
  double delta2 = 1.0;

  enum class AlphaRule {
    Asymmetric,  // alpha_i = 1 / (i + sqrt(K_c)), i in [0, K_c)
    Symmetric,
  };
  AlphaRule alpha_rule = AlphaRule::Asymmetric;
  double alpha_symmetric = 0.1;

  std::string scenario = "custom";  // shared | asymmetric | partial | custom

  void validate() const;
  std::vector<double> alpha_for(int c) const;
};

// Forward-simulation record kept alongside the corpus so evaluation can score
// against the generating parameters.
struct GroundTruth {
  SynthSpec spec;
  std::vector<std::vector<double>> alpha;                  // [c][K_c]
  std::vector<double> sigma;                               // [k_common]
  std::vector<std::vector<double>> phi_shared;             // [k_common][V]
  std::vector<std::vector<std::vector<double>>> phi_spec;  // [c][K_c][V]
  std::vector<std::vector<std::vector<double>>> theta;     // [c][d][K_c]
  std::vector<std::vector<std::vector<int>>> z;            // [c][d][i]
  std::vector<std::vector<std::vector<int>>> y;            // -1 for non-common

  TopicModelSnapshot as_snapshot() const;
};

struct SynthResult {
  Corpus corpus;
  Vocabulary vocab;
  GroundTruth truth;
};

SynthResult generate(const SynthSpec& spec, std::uint64_t seed);

// shared:     K_common = K_1 = K_2 = k
// asymmetric: K_1 = k, K_2 = 40, K_common = 20
// partial:    K_1 = K_2 = 50, K_common = k_common, delta = (5, 5)
SynthSpec scenario_preset(const std::string& name, int k = 50,
                          int k_common = 25);

void write_ground_truth(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& in);

}  // namespace xtopics
