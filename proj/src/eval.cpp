#include "xtopics/eval.hpp"

#include <algorithm>
#include <cmath>

#include "xtopics/errors.hpp"
#include "xtopics/rng.hpp"

namespace xtopics {

namespace {

// One document's left-to-right log likelihood. Particles resample the topic
// assignments of all preceding positions once per position, then the
// predictive probability of the next token is averaged across particles.
double doc_left_to_right(const TopicModelSnapshot& model, int c,
                         const std::vector<int>& tokens, int particles,
                         Rng& rng, std::size_t* oov) {
  const int K = model.topics_for(c);
  const auto& alpha = model.alpha[c];
  const double asum = model.alpha_sum(c);

  std::vector<int> kept;
  kept.reserve(tokens.size());
  for (int w : tokens) {
    if (w < 0 || w >= model.vocab_size) {
      ++*oov;
      continue;
    }
    kept.push_back(w);
  }
  if (kept.empty()) return 0.0;

  const int N = static_cast<int>(kept.size());
  // assignments and topic counts per particle
  std::vector<std::vector<int>> zs(particles, std::vector<int>(N, 0));
  std::vector<std::vector<double>> counts(particles,
                                          std::vector<double>(K, 0.0));
  std::vector<double> weights(K);

  double loglik = 0.0;
  for (int n = 0; n < N; ++n) {
    double p_n = 0.0;
    for (int r = 0; r < particles; ++r) {
      auto& zr = zs[r];
      auto& cnt = counts[r];
      for (int m = 0; m < n; ++m) {
        cnt[zr[m]] -= 1.0;
        double total = 0.0;
        for (int t = 0; t < K; ++t) {
          weights[t] = (cnt[t] + alpha[t]) * model.word_prob(c, t, kept[m]);
          total += weights[t];
        }
        double u = uniform01(rng) * total;
        int t = 0;
        for (; t < K - 1; ++t) {
          u -= weights[t];
          if (u <= 0.0) break;
        }
        zr[m] = t;
        cnt[t] += 1.0;
      }
      const double denom = n + asum;
      for (int t = 0; t < K; ++t)
        p_n += (counts[r][t] + alpha[t]) / denom * model.word_prob(c, t, kept[n]);
    }
    p_n /= particles;
    loglik += std::log(p_n);

    for (int r = 0; r < particles; ++r) {
      auto& cnt = counts[r];
      double total = 0.0;
      for (int t = 0; t < K; ++t) {
        weights[t] = (cnt[t] + alpha[t]) * model.word_prob(c, t, kept[n]);
        total += weights[t];
      }
      double u = uniform01(rng) * total;
      int t = 0;
      for (; t < K - 1; ++t) {
        u -= weights[t];
        if (u <= 0.0) break;
      }
      zs[r][n] = t;
      cnt[t] += 1.0;
    }
  }
  return loglik;
}

}  // namespace

PerplexityReport left_to_right_perplexity(const TopicModelSnapshot& model,
                                          const Corpus& heldout, int particles,
                                          std::uint64_t seed) {
  if (particles < 1) throw UsageError("perplexity: particles must be >= 1");
  PerplexityReport report;
  report.particles = particles;
  report.per_collection.assign(heldout.num_collections(), 0.0);

  Rng rng = make_rng(seed, Stream::Eval);
  for (int c = 0; c < heldout.num_collections(); ++c) {
    double ll_c = 0.0;
    std::size_t tok_c = 0;
    for (const auto& doc : heldout.collections[c]) {
      std::size_t oov_before = report.oov_skipped;
      ll_c += doc_left_to_right(model, c, doc.tokens, particles, rng,
                                &report.oov_skipped);
      tok_c += doc.tokens.size() - (report.oov_skipped - oov_before);
    }
    report.loglik += ll_c;
    report.tokens += tok_c;
    report.per_collection[c] =
        tok_c > 0 ? std::exp(-ll_c / static_cast<double>(tok_c)) : 0.0;
  }
  report.perplexity =
      report.tokens > 0
          ? std::exp(-report.loglik / static_cast<double>(report.tokens))
          : 0.0;
  return report;
}

double exact_doc_likelihood(const TopicModelSnapshot& model,
                            const Document& doc, int collection) {
  const int c = collection;
  const int K = model.topics_for(c);
  std::vector<int> kept;
  for (int w : doc.tokens)
    if (w >= 0 && w < model.vocab_size) kept.push_back(w);
  const int N = static_cast<int>(kept.size());
  if (N == 0) return 1.0;

  double states = 1.0;
  for (int n = 0; n < N; ++n) {
    states *= K;
    if (states > 1e7)
      throw UsageError("exact_doc_likelihood: enumeration too large");
  }

  const auto& alpha = model.alpha[c];
  const double asum = model.alpha_sum(c);

  double total = 0.0;
  std::vector<int> seq(N, 0);
  std::vector<double> cnt(K, 0.0);
  while (true) {
    double p = 1.0;
    std::fill(cnt.begin(), cnt.end(), 0.0);
    for (int n = 0; n < N; ++n) {
      const int t = seq[n];
      p *= (cnt[t] + alpha[t]) / (n + asum) * model.word_prob(c, t, kept[n]);
      cnt[t] += 1.0;
    }
    total += p;
    int pos = N - 1;
    while (pos >= 0 && seq[pos] == K - 1) seq[pos--] = 0;
    if (pos < 0) break;
    seq[pos] += 1;
  }
  return total;
}

CooccurrenceIndex CooccurrenceIndex::build(const Corpus& corpus,
                                           int vocab_size) {
  CooccurrenceIndex index;
  index.postings_.resize(vocab_size);
  std::int32_t doc_id = 0;
  for (const auto& coll : corpus.collections) {
    for (const auto& doc : coll) {
      std::vector<int> uniq = doc.tokens;
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (int w : uniq)
        if (w >= 0 && w < vocab_size) index.postings_[w].push_back(doc_id);
      ++doc_id;
    }
  }
  index.num_docs_ = static_cast<std::size_t>(doc_id);
  return index;
}

double CooccurrenceIndex::doc_freq(int w) const {
  if (w < 0 || w >= static_cast<int>(postings_.size())) return 0.0;
  return static_cast<double>(postings_[w].size());
}

double CooccurrenceIndex::co_doc_freq(int w1, int w2) const {
  if (w1 < 0 || w2 < 0 || w1 >= static_cast<int>(postings_.size()) ||
      w2 >= static_cast<int>(postings_.size()))
    return 0.0;
  const auto& a = postings_[w1];
  const auto& b = postings_[w2];
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j])
      ++i;
    else if (a[i] > b[j])
      ++j;
    else {
      ++n;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(n);
}

namespace {

// Filters out words with zero document frequency (their pair terms are
// undefined through the denominator), reporting them.
std::vector<int> usable_words(const std::vector<int>& words,
                              const CooccurrenceIndex& index,
                              std::vector<int>* excluded) {
  std::vector<int> out;
  for (int w : words) {
    if (index.doc_freq(w) > 0.0)
      out.push_back(w);
    else
      excluded->push_back(w);
  }
  return out;
}

double pair_term(int wi, int wj, const CooccurrenceIndex& index) {
  return std::log((index.co_doc_freq(wi, wj) + 1.0) /
                  (index.doc_freq(wi) * index.doc_freq(wj)));
}

}  // namespace

CoherenceResult coherence(const std::vector<int>& top_words,
                          const CooccurrenceIndex& index) {
  if (top_words.size() < 2) throw UsageError("coherence: need n >= 2 words");
  CoherenceResult res;
  std::vector<int> words = usable_words(top_words, index, &res.excluded);
  const std::size_t n = words.size();
  if (n < 2) return res;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      sum += pair_term(words[i], words[j], index);
      ++res.pairs;
    }
  res.value = 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1)) * sum;
  return res;
}

CoherenceResult mutual_coherence(const std::vector<int>& shared_top,
                                 const std::vector<int>& specific_top,
                                 const CooccurrenceIndex& index) {
  if (shared_top.empty() || specific_top.empty())
    throw UsageError("mutual_coherence: need n >= 1 words on both sides");
  CoherenceResult res;
  std::vector<int> a = usable_words(shared_top, index, &res.excluded);
  std::vector<int> b = usable_words(specific_top, index, &res.excluded);
  if (a.empty() || b.empty()) return res;
  double sum = 0.0;
  for (int wi : a)
    for (int wj : b) {
      sum += pair_term(wi, wj, index);
      ++res.pairs;
    }
  res.value = sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  return res;
}

Distinguishability distinguishability(std::vector<double> sigma,
                                      int k_common_true) {
  if (sigma.empty()) throw UsageError("distinguishability: empty sigma");
  const int K = static_cast<int>(sigma.size());
  if (k_common_true > K)
    throw UsageError("distinguishability: k_common_true > K");
  std::sort(sigma.begin(), sigma.end(), std::greater<double>());
  Distinguishability d;
  double s = 0.0;
  for (int i = 0; i < k_common_true; ++i) s += sigma[i];
  d.common_mean = k_common_true > 0 ? s / k_common_true : 0.0;
  if (K > k_common_true) {
    double t = 0.0;
    for (int i = k_common_true; i < K; ++i) t += sigma[i];
    d.non_common_mean = t / (K - k_common_true);
    d.has_non_common = true;
  }
  return d;
}

}  // namespace xtopics
