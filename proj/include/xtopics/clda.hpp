#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "xtopics/alias.hpp"
#include "xtopics/corpus.hpp"
#include "xtopics/model.hpp"
#include "xtopics/rng.hpp"

namespace xtopics {

struct CldaConfig {
  int k_common = 10;
  std::vector<int> k_per_collection;  // K_c >= k_common, one per collection

  double beta = 0.01;
  double delta1 = 1.0;  // prior weight of the shared branch (y = 0)
  double delta2 = 1.0;  // prior weight of the specific branch (y = 1)
  double alpha_prior_shape = 1.0;
  double alpha_prior_rate = 1.0;

  int sweeps = 1000;
  int mh_steps = 2;
  bool mh_word_first = false;  // odd steps use q_d by default
  int hyperopt_interval = 20;
  int hyperopt_burnin = 50;
  int eval_interval = 10;
  int eval_particles = 5;

  std::uint64_t seed = 1;
  int threads = 1;

  // There should exist a collection with K_c == k_common; set this to
  // proceed anyway (a warning is logged).
  bool allow_no_anchor = false;

  void validate(const Corpus& corpus) const;
  bool is_cclda() const;  // every K_c equals k_common
};

struct SweepStats {
  std::size_t tokens = 0;
  double seconds = 0.0;
  double acceptance_rate = 0.0;
  double tokens_per_sec() const {
    return seconds > 0.0 ? tokens / seconds : 0.0;
  }
};

struct TopicWordList {
  std::vector<std::pair<int, double>> entries;  // (word id, smoothed count)
};

struct TopicExport {
  struct CommonTopic {
    int topic = 0;
    TopicWordList shared;
    std::vector<TopicWordList> per_collection;
  };
  std::vector<CommonTopic> common;
  // per collection: (topic id, ranked words) for non-common topics
  std::vector<std::vector<std::pair<int, TopicWordList>>> non_common;
};

// Collapsed C-LDA state. All sufficient statistics are eta-weighted reals;
// a token from collection c enters every table with increment eta_c.
//
// Topic layout per collection: common topics occupy [0, k_common), non-common
// [k_common, K_c); collections do not share non-common indices.
class CldaState {
 public:
  CldaState() = default;

  static CldaState init(std::shared_ptr<const Corpus> corpus, int vocab_size,
                        const CldaConfig& config);

  // --- assignments and counts -------------------------------------------
  CldaConfig config;
  std::shared_ptr<const Corpus> corpus;
  int vocab_size = 0;
  std::uint64_t vocab_hash = 0;
  std::vector<double> eta;                 // [c]
  std::vector<std::vector<double>> alpha;  // [c][K_c]

  std::vector<std::vector<std::vector<std::int32_t>>> z;  // [c][d][i]
  std::vector<std::vector<std::vector<std::int8_t>>> y;   // [c][d][i], -1 undef

  std::vector<std::vector<std::vector<double>>> doc_topic;  // [c][d][K_c]
  std::vector<double> branch;        // [2 * k_common]: N(y,k), y-major pairs
  std::vector<double> shared_word;   // [k_common * V]: N(w, y=0, k, *)
  std::vector<double> shared_total;  // [k_common]
  std::vector<std::vector<double>> spec_word;   // [c][K_c * V]
  std::vector<std::vector<double>> spec_total;  // [c][K_c]

  int sweeps_done = 0;

  int k(int c) const { return config.k_per_collection[c]; }
  int k_common() const { return config.k_common; }

  double branch0(int topic) const { return branch[2 * topic]; }
  double branch1(int topic) const { return branch[2 * topic + 1]; }

  // --- Eq.-style conditionals (token's own assignment must be removed) ---
  double q_doc(int c, int d, int topic) const {
    return doc_topic[c][d][topic] + alpha[c][topic];
  }
  // Word-side factor; yy is ignored for non-common topics.
  double q_word(int c, int w, int topic, int yy) const;
  double q_word_marginal(int c, int w, int topic) const;

  // Unnormalized density over (y, z) atoms. Atom layout for collection c:
  // common topic t contributes atoms 2t (y=0) and 2t+1 (y=1); non-common
  // topic t contributes atom k_common + t. Total atoms = k_common + K_c.
  std::vector<double> full_conditional(int c, int d, int w) const;
  int atom_count(int c) const { return k_common() + k(c); }
  // -> (topic, y); y = -1 for non-common topics.
  std::pair<int, int> decode_atom(int atom) const;

  // --- counts maintenance -------------------------------------------------
  void decrement(int c, int d, int i);
  void increment(int c, int d, int i, int topic, int yy);

  // --- proposals and sampling --------------------------------------------
  std::shared_ptr<const AliasTable> build_doc_proposal(int c, int d) const;
  // Cached per (c, w); rebuilt when exhausted (K_c draws) or on sweep start.
  std::shared_ptr<const AliasTable> word_proposal(int c, int w);
  void reset_word_proposals();

  // Resamples one token; returns its new (topic, y).
  std::pair<int, int> sample_token(int c, int d, int i,
                                   const AliasTable& doc_prop, Rng& rng,
                                   MhStats* stats = nullptr);

  SweepStats sweep();

  void estimate_alpha();
  std::vector<double> estimate_sigma() const;  // sigma_k = shared fraction

  TopicModelSnapshot snapshot() const;
  TopicExport export_topics(int top_n) const;

  // Exact per-doc count-conservation and marginal checks; throws on failure.
  void check_invariants() const;

  // (Re)creates the word-proposal cache; needed after loading a state whose
  // caches were not serialized.
  void ensure_slots();

 private:
  struct WordSlot {
    std::shared_ptr<const AliasTable> table;
    mutable std::atomic_flag lock = ATOMIC_FLAG_INIT;
  };
  // lazily sized [c][w]
  std::vector<std::vector<std::unique_ptr<WordSlot>>> word_slots_;
};

struct TraceRow {
  int sweep = 0;
  double seconds = 0.0;       // cumulative wallclock
  double perplexity = 0.0;    // NaN when not evaluated this sweep
  double acceptance = 0.0;
  double tokens_per_sec = 0.0;
  int live_topics = 0;
};

struct TrainResult {
  TopicModelSnapshot model;
  std::vector<TraceRow> trace;
  int sweeps_run = 0;
  bool converged = false;
};

// Runs sweeps with periodic alpha estimation; stops at config.sweeps or when
// the perplexity series changed by < 1% for 10 consecutive evaluations.
// `heldout` may be null: a fixed 10% of training docs is scored instead.
// `state` is updated in place (pass a fresh init or a checkpoint resume).
TrainResult train_clda(CldaState& state, const Corpus* heldout);

}  // namespace xtopics
