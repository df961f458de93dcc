#pragma once

#include <cstdint>
#include <vector>

#include "xtopics/corpus.hpp"
#include "xtopics/model.hpp"

namespace xtopics {

struct PerplexityReport {
  double perplexity = 0.0;  // exp(-loglik / tokens)
  std::vector<double> per_collection;
  double loglik = 0.0;
  std::size_t tokens = 0;
  std::size_t oov_skipped = 0;
  int particles = 0;
};

// Wallach-style left-to-right particle estimate of held-out log likelihood,
// using the snapshot's point estimates of phi/sigma and the collection's
// alpha. OOV tokens are skipped and counted.
PerplexityReport left_to_right_perplexity(const TopicModelSnapshot& model,
                                          const Corpus& heldout, int particles,
                                          std::uint64_t seed);

// Exact marginal likelihood of a short document by full enumeration over
// topic sequences (branch y marginalized into the per-topic word
// probability). Oracle for validating the estimator; enumeration capped at
// 1e7 joint states.
double exact_doc_likelihood(const TopicModelSnapshot& model,
                            const Document& doc, int collection);

// Document frequency / co-document frequency index over a reference corpus.
class CooccurrenceIndex {
 public:
  static CooccurrenceIndex build(const Corpus& corpus, int vocab_size);

  std::size_t num_docs() const { return num_docs_; }
  double doc_freq(int w) const;
  double co_doc_freq(int w1, int w2) const;

 private:
  std::size_t num_docs_ = 0;
  std::vector<std::vector<std::int32_t>> postings_;  // sorted doc ids per word
};

struct CoherenceResult {
  double value = 0.0;
  std::size_t pairs = 0;
  std::vector<int> excluded;  // words with zero document frequency
};

// C(k) = 2/(n(n-1)) sum_{i<j} log((D(wi,wj)+1) / (D(wi) D(wj)))
CoherenceResult coherence(const std::vector<int>& top_words,
                          const CooccurrenceIndex& index);

// MC(k) = 1/n^2 sum_{i in shared, j in specific} log((D+1)/(D(wi)D(wj)))
CoherenceResult mutual_coherence(const std::vector<int>& shared_top,
                                 const std::vector<int>& specific_top,
                                 const CooccurrenceIndex& index);

struct Distinguishability {
  double common_mean = 0.0;
  double non_common_mean = 0.0;
  bool has_non_common = false;
};

// Means of the k_common_true largest sigma values and of the remainder.
Distinguishability distinguishability(std::vector<double> sigma,
                                      int k_common_true);

}  // namespace xtopics
