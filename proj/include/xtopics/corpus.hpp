#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xtopics/errors.hpp"

namespace xtopics {

// Dense word <-> id bijection. Ids are assigned in order of first appearance
// among retained words, so re-ingesting identical input yields identical ids.
class Vocabulary {
 public:
  int add(const std::string& word);
  int id_of(std::string_view word) const;  // -1 if absent
  const std::string& word(int id) const { return words_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }

  // FNV-1a over words in id order; stored in checkpoints to detect
  // corpus/model mismatches.
  std::uint64_t hash() const;

  void dump(std::ostream& out) const;  // one "id<TAB>word" per line
  static Vocabulary load(std::istream& in);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

struct Document {
  std::string id;
  int collection = 0;
  std::vector<int> tokens;  // word ids, order preserved
  int length() const { return static_cast<int>(tokens.size()); }
};

struct Corpus {
  std::vector<std::string> collection_names;
  std::vector<std::vector<Document>> collections;

  int num_collections() const {
    return static_cast<int>(collections.size());
  }
  std::size_t num_docs() const;
  std::size_t num_tokens() const;
  std::size_t collection_tokens(int c) const;
};

struct PruneOptions {
  int min_doc_freq = 1;          // keep words appearing in >= this many docs
  double max_doc_fraction = 1.0; // drop words appearing in > this fraction
};

// Input: UTF-8 JSONL, one object per line:
//   {"collection": str, "id": str, "tokens": [str, ...]}
// Documents left empty by pruning are dropped; a collection left empty is a
// fatal data error.
std::pair<Corpus, Vocabulary> ingest_corpus(std::istream& in,
                                            const PruneOptions& prune = {});
std::pair<Corpus, Vocabulary> ingest_corpus_file(const std::string& path,
                                                 const PruneOptions& prune = {});

// Maps a JSONL file against an existing vocabulary (for held-out data):
// unknown words become token -1 (skipped and counted by evaluation), and
// collection names must already exist in `names`.
Corpus ingest_with_vocabulary(std::istream& in, const Vocabulary& vocab,
                              const std::vector<std::string>& names);
Corpus ingest_with_vocabulary_file(const std::string& path,
                                   const Vocabulary& vocab,
                                   const std::vector<std::string>& names);

// Stratified per collection; each collection contributes floor(fraction*D_c)
// docs to test with at least one training doc remaining. Reproducible.
std::pair<Corpus, Corpus> holdout_split(const Corpus& corpus, double fraction,
                                        std::uint64_t seed);

// eta_c per collection such that sum_{d in c} eta_c*N_d / K_c is equal across
// collections, anchored at 1 for the collection maximizing sum_d N_d / K_c.
std::vector<double> compute_balance_units(
    const Corpus& corpus, const std::vector<int>& topics_per_collection);

void write_corpus(const Corpus& corpus, const Vocabulary& vocab,
                  std::ostream& out);

}  // namespace xtopics
