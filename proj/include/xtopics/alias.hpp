#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "xtopics/errors.hpp"
#include "xtopics/rng.hpp"

namespace xtopics {

// Walker alias table: O(K) construction, O(1) draws. Immutable after
// construction apart from the remaining-use counter, so it can be shared
// across sampler threads; each draw needs only the caller's rng.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights);
  AliasTable(const AliasTable& other);
  AliasTable& operator=(const AliasTable&) = delete;

  int size() const { return static_cast<int>(prob_.size()); }
  double total_mass() const { return total_; }

  // Normalized probability of index i under the source weights; this is the
  // proposal density that must be used in MH corrections for draws taken
  // from this table, even after the underlying counts have moved on.
  double density(int i) const { return density_[i]; }

  int draw(Rng& rng) const;

  // Draws remaining before the staleness policy asks for a rebuild
  // (initialized to K).
  std::int64_t remaining_uses() const {
    return remaining_.load(std::memory_order_relaxed);
  }
  bool exhausted() const { return remaining_uses() <= 0; }

 private:
  std::vector<double> prob_;     // slot thresholds in [0,1]
  std::vector<int> alias_;
  std::vector<double> density_;  // normalized source weights
  double total_ = 0.0;
  mutable std::atomic<std::int64_t> remaining_{0};
};

struct MhDecision {
  int proposed = 0;
  double acceptance = 0.0;  // min(1, ratio)
  bool accepted = false;
};

// One Metropolis-Hastings step: propose z' ~ proposal, accept with
// min(1, p(z') q(z) / (p(z) q(z'))).
template <typename Target, typename Proposal>
MhDecision mh_step(int current, Target&& target, const AliasTable& proposal_table,
                   Proposal&& proposal_density, Rng& rng) {
  MhDecision dec;
  dec.proposed = proposal_table.draw(rng);
  if (dec.proposed == current) {
    dec.acceptance = 1.0;
    dec.accepted = true;
    return dec;
  }
  const double q_cur = proposal_density(current);
  const double p_cur = target(current);
  if (q_cur <= 0.0)
    throw NumericalError("mh_step: zero proposal mass at current state");
  const double q_new = proposal_density(dec.proposed);
  const double p_new = target(dec.proposed);
  double ratio = (p_new * q_cur) / (p_cur * q_new);
  dec.acceptance = ratio >= 1.0 ? 1.0 : ratio;
  dec.accepted = uniform01(rng) < dec.acceptance;
  return dec;
}

// Cycle MH over one token: steps are 1-based, odd steps use the document
// proposal and even steps the word proposal. n_steps=0 returns `current`.
struct MhStats {
  std::int64_t steps = 0;
  std::int64_t accepts = 0;
  double acceptance_rate() const {
    return steps == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(steps);
  }
};

template <typename Target, typename DocDensity, typename WordDensity>
int mh_cycle(int current, Target&& target, const AliasTable& doc_table,
             DocDensity&& doc_density, const AliasTable& word_table,
             WordDensity&& word_density, int n_steps, Rng& rng,
             MhStats* stats = nullptr, bool word_first = false) {
  int z = current;
  for (int step = 1; step <= n_steps; ++step) {
    const bool use_word = ((step % 2 == 0) != word_first);
    MhDecision dec =
        use_word ? mh_step(z, target, word_table, word_density, rng)
                 : mh_step(z, target, doc_table, doc_density, rng);
    if (stats) {
      stats->steps += 1;
      stats->accepts += dec.accepted ? 1 : 0;
    }
    if (dec.accepted) z = dec.proposed;
  }
  return z;
}

}  // namespace xtopics
