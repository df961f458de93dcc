#include "xtopics/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "xtopics/log.hpp"
#include "xtopics/rng.hpp"

namespace xtopics {

using nlohmann::json;

int Vocabulary::add(const std::string& word) {
  auto it = ids_.find(word);
  if (it != ids_.end()) return it->second;
  int id = static_cast<int>(words_.size());
  words_.push_back(word);
  ids_.emplace(word, id);
  return id;
}

int Vocabulary::id_of(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? -1 : it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& w : words_) {
    for (unsigned char ch : w) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    h ^= 0xff;  // word separator
    h *= 1099511628211ull;
  }
  return h;
}

void Vocabulary::dump(std::ostream& out) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    out << i << '\t' << words_[i] << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("vocabulary: malformed line: " + line);
    v.add(line.substr(tab + 1));
  }
  return v;
}

std::size_t Corpus::num_docs() const {
  std::size_t n = 0;
  for (const auto& c : collections) n += c.size();
  return n;
}

std::size_t Corpus::num_tokens() const {
  std::size_t n = 0;
  for (const auto& c : collections)
    for (const auto& d : c) n += d.tokens.size();
  return n;
}

std::size_t Corpus::collection_tokens(int c) const {
  std::size_t n = 0;
  for (const auto& d : collections.at(c)) n += d.tokens.size();
  return n;
}

namespace {

struct RawDoc {
  std::string id;
  int collection;
  std::vector<std::string> tokens;
};

}  // namespace

std::pair<Corpus, Vocabulary> ingest_corpus(std::istream& in,
                                            const PruneOptions& prune) {
  if (prune.min_doc_freq < 1)
    throw UsageError("ingest: min-doc-frequency must be >= 1");
  if (prune.max_doc_fraction <= 0.0 || prune.max_doc_fraction > 1.0)
    throw UsageError("ingest: max-doc-fraction must be in (0, 1]");

  std::vector<RawDoc> docs;
  std::vector<std::string> names;
  std::unordered_map<std::string, int> name_to_id;
  std::unordered_map<std::string, int> doc_freq;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("ingest: line " + std::to_string(lineno) +
                      ": invalid JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("collection") ||
        !rec.contains("id") || !rec.contains("tokens") ||
        !rec["tokens"].is_array())
      throw DataError("ingest: line " + std::to_string(lineno) +
                      ": expected {collection, id, tokens[]}");
    RawDoc d;
    d.id = rec["id"].get<std::string>();
    std::string cname = rec["collection"].get<std::string>();
    auto it = name_to_id.find(cname);
    if (it == name_to_id.end()) {
      it = name_to_id.emplace(cname, static_cast<int>(names.size())).first;
      names.push_back(cname);
    }
    d.collection = it->second;
    for (const auto& t : rec["tokens"]) {
      if (!t.is_string())
        throw DataError("ingest: line " + std::to_string(lineno) +
                        ": tokens must be strings");
      d.tokens.push_back(t.get<std::string>());
    }
    std::vector<std::string> uniq = d.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& w : uniq) doc_freq[w] += 1;
    docs.push_back(std::move(d));
  }
  if (names.empty()) throw DataError("ingest: no documents");

  const double max_df = prune.max_doc_fraction * static_cast<double>(docs.size());

  Corpus corpus;
  corpus.collection_names = names;
  corpus.collections.resize(names.size());
  Vocabulary vocab;
  std::size_t dropped_docs = 0;
  for (auto& raw : docs) {
    Document doc;
    doc.id = raw.id;
    doc.collection = raw.collection;
    for (const auto& w : raw.tokens) {
      int df = doc_freq.at(w);
      if (df < prune.min_doc_freq || static_cast<double>(df) > max_df) continue;
      doc.tokens.push_back(vocab.add(w));
    }
    if (doc.tokens.empty()) {
      ++dropped_docs;
      continue;
    }
    corpus.collections[doc.collection].push_back(std::move(doc));
  }
  if (dropped_docs > 0)
    log::info("ingest: dropped " + std::to_string(dropped_docs) +
              " documents emptied by pruning");
  for (std::size_t c = 0; c < corpus.collections.size(); ++c) {
    if (corpus.collections[c].empty())
      throw DataError("ingest: collection '" + names[c] +
                      "' has no documents after pruning");
  }
  return {std::move(corpus), std::move(vocab)};
}

std::pair<Corpus, Vocabulary> ingest_corpus_file(const std::string& path,
                                                 const PruneOptions& prune) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return ingest_corpus(in, prune);
}

Corpus ingest_with_vocabulary(std::istream& in, const Vocabulary& vocab,
                              const std::vector<std::string>& names) {
  Corpus corpus;
  corpus.collection_names = names;
  corpus.collections.resize(names.size());
  std::unordered_map<std::string, int> name_to_id;
  for (std::size_t c = 0; c < names.size(); ++c)
    name_to_id.emplace(names[c], static_cast<int>(c));

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("ingest: line " + std::to_string(lineno) +
                      ": invalid JSON: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("collection") ||
        !rec.contains("id") || !rec.contains("tokens") ||
        !rec["tokens"].is_array())
      throw DataError("ingest: line " + std::to_string(lineno) +
                      ": expected {collection, id, tokens[]}");
    const std::string cname = rec["collection"].get<std::string>();
    const auto it = name_to_id.find(cname);
    if (it == name_to_id.end())
      throw DataError("ingest: line " + std::to_string(lineno) +
                      ": unknown collection '" + cname + "'");
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.collection = it->second;
    for (const auto& t : rec["tokens"]) {
      if (!t.is_string())
        throw DataError("ingest: line " + std::to_string(lineno) +
                        ": tokens must be strings");
      doc.tokens.push_back(vocab.id_of(t.get<std::string>()));
    }
    corpus.collections[it->second].push_back(std::move(doc));
  }
  return corpus;
}

Corpus ingest_with_vocabulary_file(const std::string& path,
                                   const Vocabulary& vocab,
                                   const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return ingest_with_vocabulary(in, vocab, names);
}

std::pair<Corpus, Corpus> holdout_split(const Corpus& corpus, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw UsageError("holdout: fraction must be in (0, 1)");
  Corpus train, test;
  train.collection_names = corpus.collection_names;
  test.collection_names = corpus.collection_names;
  train.collections.resize(corpus.collections.size());
  test.collections.resize(corpus.collections.size());
  for (int c = 0; c < corpus.num_collections(); ++c) {
    const auto& docs = corpus.collections[c];
    if (docs.size() < 2)
      throw DataError("holdout: collection '" + corpus.collection_names[c] +
                      "' needs at least 2 documents");
    std::size_t n_test = static_cast<std::size_t>(
        fraction * static_cast<double>(docs.size()));
    n_test = std::min(n_test, docs.size() - 1);
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, Stream::Holdout, static_cast<std::uint64_t>(c));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto& dst = (i < n_test) ? test.collections[c] : train.collections[c];
      dst.push_back(docs[order[i]]);
    }
  }
  return {std::move(train), std::move(test)};
}

std::vector<double> compute_balance_units(
    const Corpus& corpus, const std::vector<int>& topics_per_collection) {
  const int C = corpus.num_collections();
  if (static_cast<int>(topics_per_collection.size()) != C)
    throw UsageError("balance: need one topic count per collection");
  std::vector<double> per_topic(C);
  for (int c = 0; c < C; ++c) {
    if (topics_per_collection[c] < 1)
      throw UsageError("balance: topic counts must be >= 1");
    if (corpus.collections[c].empty())
      throw DataError("balance: empty collection");
    per_topic[c] = static_cast<double>(corpus.collection_tokens(c)) /
                   static_cast<double>(topics_per_collection[c]);
  }
  double anchor = *std::max_element(per_topic.begin(), per_topic.end());
  std::vector<double> eta(C);
  for (int c = 0; c < C; ++c) eta[c] = anchor / per_topic[c];
  return eta;
}

void write_corpus(const Corpus& corpus, const Vocabulary& vocab,
                  std::ostream& out) {
  for (int c = 0; c < corpus.num_collections(); ++c) {
    for (const auto& doc : corpus.collections[c]) {
      json rec;
      rec["collection"] = corpus.collection_names[c];
      rec["id"] = doc.id;
      json toks = json::array();
      for (int t : doc.tokens) toks.push_back(vocab.word(t));
      rec["tokens"] = std::move(toks);
      out << rec.dump() << '\n';
    }
  }
}

}  // namespace xtopics
