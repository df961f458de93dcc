#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "xtopics/alias.hpp"
#include "xtopics/clda.hpp"  // SweepStats, TraceRow, TrainResult
#include "xtopics/corpus.hpp"
#include "xtopics/model.hpp"
#include "xtopics/stirling.hpp"

namespace xtopics {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
  double mean() const { return shape / rate; }
};

struct ChdpConfig {
  int init_common = 10;
  std::vector<int> init_spec;  // extra initial topics per collection

  double beta = 0.01;
  double delta1 = 1.0;
  double delta2 = 1.0;
  GammaPrior gamma_prior{5.0, 0.1};
  GammaPrior alpha0_prior{5.0, 0.1};
  GammaPrior alpha1_prior{0.1, 0.1};

  int sweeps = 1500;
  int mh_steps = 2;
  bool mh_word_first = false;
  int eval_interval = 10;
  int eval_particles = 5;

  std::uint64_t seed = 1;
  // Default single-threaded; > 1 opts into the serialized-creation parallel
  // mode (topic registry mutations behind a lock, empties collected at sweep
  // end).
  int threads = 1;

  void validate(const Corpus& corpus) const;
};

// Table indicator: the highest level at which this token's seating created a
// table (root=0, collection=1, document=2), or none.
enum : std::int8_t { kTableRoot = 0, kTableCollection = 1, kTableDoc = 2, kTableNone = 3 };

// Three-level CRP state. For each live topic z and level l, n_lz counts
// customers (tokens plus proxies) and t_lz tables; invariants
// n_0z = sum_c t_cz and n_cz = sum_{d in c} t_dz are structural because each
// table is owned by exactly one token via its indicator u.
class ChdpState {
 public:
  ChdpState() = default;

  static ChdpState init(std::shared_ptr<const Corpus> corpus, int vocab_size,
                        const ChdpConfig& config);

  ChdpConfig config;
  std::shared_ptr<const Corpus> corpus;
  int vocab_size = 0;
  std::uint64_t vocab_hash = 0;

  double gamma_conc = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;

  // topic registry: slot id = topic id; freed slots are reused
  std::vector<char> live;
  std::vector<int> n_root, t_root;             // per topic
  std::vector<std::vector<int>> n_coll, t_coll;  // [c][topic]
  struct DocCount {
    int n = 0;
    int t = 0;
  };
  std::vector<std::vector<std::unordered_map<int, DocCount>>> doc_crp;  // [c][d]

  // word statistics (unit counts; every topic carries a shared/specific branch)
  std::vector<double> branch;                            // [2 * topic]
  std::vector<std::vector<double>> shared_word;          // [topic][V]
  std::vector<double> shared_total;                      // [topic]
  std::vector<std::vector<std::vector<double>>> spec_word;  // [c][topic][V]
  std::vector<std::vector<double>> spec_total;              // [c][topic]

  std::vector<std::vector<std::vector<std::int32_t>>> z;  // [c][d][i]
  std::vector<std::vector<std::vector<std::int8_t>>> y;
  std::vector<std::vector<std::vector<std::int8_t>>> u;

  int total_root_customers = 0;           // N_0
  std::vector<int> total_coll_customers;  // N_c
  mutable StirlingCache stirling;
  int live_topics = 0;
  std::uint64_t topic_version = 0;  // bumped on create/remove
  int sweeps_done = 0;

  // --- conditionals (token's own contribution must be removed) -------------
  // Word-side factor for topic (y marginalized / by branch); topic = -1 is
  // the new-topic atom.
  double word_term(int c, int w, int topic, int yy) const;
  double word_marginal(int c, int w, int topic) const;
  // CRP factor of the block conditional; topic = -1 with uu = kTableRoot is
  // the new-topic atom. Returns 0 for seatings that are not possible under
  // the current counts.
  double crp_weight(int c, int d, int topic, int uu) const;

  struct Atom {
    int topic = -1;  // -1 = new topic
    std::int8_t uu = kTableRoot;
  };
  // All (topic, u) atoms with positive CRP weight, plus the new-topic atom.
  std::vector<Atom> enumerate_atoms(int c, int d) const;
  // Unnormalized block conditional over (y, z, u): density of atom times the
  // per-branch word term.
  double block_density(int c, int d, int w, const Atom& atom, int yy) const;

  // --- bookkeeping ----------------------------------------------------------
  void decrement(int c, int d, int i);
  void increment(int c, int d, int i, int topic, std::int8_t uu, int yy);
  int create_topic();
  void remove_topic_if_empty(int topic);
  void collect_empty_topics();

  // --- sampling -------------------------------------------------------------
  // Cycle MH over (z, u) with doc/word proposals, then exact y draw. Falls
  // back to an exact draw from the block conditional when the pre-decrement
  // seating has zero proposal mass.
  void sample_token(int c, int d, int i, Rng& rng, MhStats* stats = nullptr);
  SweepStats sweep();

  // One auxiliary-variable round for gamma, alpha0, alpha1 under their
  // gamma priors.
  void resample_concentrations(Rng& rng);

  std::vector<int> live_topic_ids() const;
  TopicModelSnapshot snapshot() const;
  void check_invariants() const;

  // (Re)creates the word-proposal cache, sized from the count tables; needed
  // after loading a state whose caches were not serialized.
  void reset_caches();

 private:
  struct WordProposal {
    AliasTable table;
    std::vector<int> topics;  // alias index -> topic id; last entry -1 = new
    std::uint64_t version = 0;
    WordProposal(const std::vector<double>& weights, std::vector<int> t,
                 std::uint64_t v)
        : table(weights), topics(std::move(t)), version(v) {}
  };
  // slots are swapped with atomic_load/atomic_store so stale tables can keep
  // serving concurrent samplers
  std::vector<std::vector<std::shared_ptr<const WordProposal>>> word_slots_;
  std::shared_ptr<const WordProposal> word_proposal(int c, int w);

  int exact_gibbs_atom(int c, int d, int w, Rng& rng,
                       std::vector<Atom>& atoms) const;
};

TrainResult train_chdp(ChdpState& state, const Corpus* heldout);

}  // namespace xtopics
