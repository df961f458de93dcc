#include "xtopics/clda.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "xtopics/eval.hpp"
#include "xtopics/log.hpp"
#include "xtopics/mathutil.hpp"

namespace xtopics {

namespace {

inline double nn(double x) { return x > 0.0 ? x : 0.0; }

inline void atomic_add(double& slot, double v) {
  std::atomic_ref<double>(slot).fetch_add(v, std::memory_order_relaxed);
}

}  // namespace

void CldaConfig::validate(const Corpus& corpus) const {
  const int C = corpus.num_collections();
  if (static_cast<int>(k_per_collection.size()) != C)
    throw UsageError("clda: need one K_c per collection");
  if (k_common < 0) throw UsageError("clda: k_common must be >= 0");
  bool anchored = false;
  for (int kc : k_per_collection) {
    if (kc < 1) throw UsageError("clda: K_c must be >= 1");
    if (kc < k_common) throw UsageError("clda: K_c must be >= k_common");
    if (kc == k_common) anchored = true;
  }
  if (!anchored) {
    if (!allow_no_anchor)
      throw UsageError(
          "clda: no collection has K_c == k_common; common topics may not "
          "stabilize (pass allow_no_anchor to override)");
    log::warn("clda: no collection has K_c == k_common");
  }
  if (!(beta > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0))
    throw UsageError("clda: beta, delta1, delta2 must be > 0");
  if (threads < 1) throw UsageError("clda: threads must be >= 1");
  if (mh_steps < 0) throw UsageError("clda: mh_steps must be >= 0");
}

bool CldaConfig::is_cclda() const {
  for (int kc : k_per_collection)
    if (kc != k_common) return false;
  return !k_per_collection.empty();
}

CldaState CldaState::init(std::shared_ptr<const Corpus> corpus, int vocab_size,
                          const CldaConfig& config) {
  config.validate(*corpus);
  if (corpus->num_docs() == 0) throw DataError("clda: empty corpus");

  CldaState st;
  st.config = config;
  st.corpus = corpus;
  st.vocab_size = vocab_size;
  const int C = corpus->num_collections();
  const int kc0 = config.k_common;

  st.eta = compute_balance_units(*corpus, config.k_per_collection);
  st.alpha.resize(C);
  for (int c = 0; c < C; ++c)
    st.alpha[c].assign(config.k_per_collection[c],
                       50.0 / config.k_per_collection[c]);

  st.branch.assign(2 * kc0, 0.0);
  st.shared_word.assign(static_cast<std::size_t>(kc0) * vocab_size, 0.0);
  st.shared_total.assign(kc0, 0.0);
  st.spec_word.resize(C);
  st.spec_total.resize(C);
  st.z.resize(C);
  st.y.resize(C);
  st.doc_topic.resize(C);

  Rng rng = make_rng(config.seed, Stream::Init);
  for (int c = 0; c < C; ++c) {
    const int kc = config.k_per_collection[c];
    st.spec_word[c].assign(static_cast<std::size_t>(kc) * vocab_size, 0.0);
    st.spec_total[c].assign(kc, 0.0);
    const auto& docs = corpus->collections[c];
    st.z[c].resize(docs.size());
    st.y[c].resize(docs.size());
    st.doc_topic[c].resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto& doc = docs[d];
      st.z[c][d].resize(doc.tokens.size());
      st.y[c][d].assign(doc.tokens.size(), -1);
      st.doc_topic[c][d].assign(kc, 0.0);
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        int topic = static_cast<int>(uniform01(rng) * kc) % kc;
        int yy = -1;
        if (topic < kc0) yy = uniform01(rng) < 0.5 ? 0 : 1;
        st.z[c][d][i] = topic;
        st.y[c][d][i] = static_cast<std::int8_t>(yy);
        st.increment(c, static_cast<int>(d), static_cast<int>(i), topic, yy);
      }
    }
  }
  st.ensure_slots();
  return st;
}

void CldaState::ensure_slots() {
  if (!word_slots_.empty()) return;
  word_slots_.resize(corpus->num_collections());
  for (auto& per_c : word_slots_)
    for (int w = 0; w < vocab_size; ++w)
      per_c.push_back(std::make_unique<WordSlot>());
}

double CldaState::q_word(int c, int w, int topic, int yy) const {
  const double vb = vocab_size * config.beta;
  if (topic < k_common()) {
    const double tot = nn(branch0(topic)) + nn(branch1(topic));
    const double dsum = config.delta1 + config.delta2;
    if (yy == 0) {
      const double mix = (nn(branch0(topic)) + config.delta1) / (tot + dsum);
      return mix *
             (nn(shared_word[static_cast<std::size_t>(topic) * vocab_size + w]) +
              config.beta) /
             (nn(shared_total[topic]) + vb);
    }
    const double mix = (nn(branch1(topic)) + config.delta2) / (tot + dsum);
    return mix *
           (nn(spec_word[c][static_cast<std::size_t>(topic) * vocab_size + w]) +
            config.beta) /
           (nn(spec_total[c][topic]) + vb);
  }
  return (nn(spec_word[c][static_cast<std::size_t>(topic) * vocab_size + w]) +
          config.beta) /
         (nn(spec_total[c][topic]) + vb);
}

double CldaState::q_word_marginal(int c, int w, int topic) const {
  if (topic < k_common())
    return q_word(c, w, topic, 0) + q_word(c, w, topic, 1);
  return q_word(c, w, topic, -1);
}

std::vector<double> CldaState::full_conditional(int c, int d, int w) const {
  std::vector<double> density(atom_count(c));
  const int kc0 = k_common();
  for (int t = 0; t < k(c); ++t) {
    const double qd = q_doc(c, d, t);
    if (t < kc0) {
      density[2 * t] = qd * q_word(c, w, t, 0);
      density[2 * t + 1] = qd * q_word(c, w, t, 1);
    } else {
      density[kc0 + t] = qd * q_word(c, w, t, -1);
    }
  }
  return density;
}

std::pair<int, int> CldaState::decode_atom(int atom) const {
  const int kc0 = k_common();
  if (atom < 2 * kc0) return {atom / 2, atom % 2};
  return {atom - kc0, -1};
}

void CldaState::decrement(int c, int d, int i) {
  const int topic = z[c][d][i];
  const int yy = y[c][d][i];
  const int w = corpus->collections[c][d].tokens[i];
  const double u = eta[c];
  doc_topic[c][d][topic] -= u;
  if (topic < k_common()) {
    atomic_add(branch[2 * topic + yy], -u);
    if (yy == 0) {
      atomic_add(shared_word[static_cast<std::size_t>(topic) * vocab_size + w], -u);
      atomic_add(shared_total[topic], -u);
      return;
    }
  }
  atomic_add(spec_word[c][static_cast<std::size_t>(topic) * vocab_size + w], -u);
  atomic_add(spec_total[c][topic], -u);
}

void CldaState::increment(int c, int d, int i, int topic, int yy) {
  const int w = corpus->collections[c][d].tokens[i];
  const double u = eta[c];
  doc_topic[c][d][topic] += u;
  if (topic < k_common()) {
    atomic_add(branch[2 * topic + yy], u);
    if (yy == 0) {
      atomic_add(shared_word[static_cast<std::size_t>(topic) * vocab_size + w], u);
      atomic_add(shared_total[topic], u);
      return;
    }
  }
  atomic_add(spec_word[c][static_cast<std::size_t>(topic) * vocab_size + w], u);
  atomic_add(spec_total[c][topic], u);
}

std::shared_ptr<const AliasTable> CldaState::build_doc_proposal(int c,
                                                                int d) const {
  std::vector<double> weights(k(c));
  for (int t = 0; t < k(c); ++t) weights[t] = nn(doc_topic[c][d][t]) + alpha[c][t];
  return std::make_shared<AliasTable>(weights);
}

std::shared_ptr<const AliasTable> CldaState::word_proposal(int c, int w) {
  WordSlot& slot = *word_slots_[c][w];
  while (slot.lock.test_and_set(std::memory_order_acquire)) {
  }
  std::shared_ptr<const AliasTable> table = slot.table;
  if (!table || table->exhausted()) {
    std::vector<double> weights(k(c));
    for (int t = 0; t < k(c); ++t) weights[t] = q_word_marginal(c, w, t);
    table = std::make_shared<AliasTable>(weights);
    slot.table = table;
  }
  slot.lock.clear(std::memory_order_release);
  return table;
}

void CldaState::reset_word_proposals() {
  ensure_slots();
  for (auto& per_c : word_slots_)
    for (auto& slot : per_c) {
      while (slot->lock.test_and_set(std::memory_order_acquire)) {
      }
      slot->table.reset();
      slot->lock.clear(std::memory_order_release);
    }
}

std::pair<int, int> CldaState::sample_token(int c, int d, int i,
                                            const AliasTable& doc_prop,
                                            Rng& rng, MhStats* stats) {
  const int w = corpus->collections[c][d].tokens[i];
  decrement(c, d, i);

  auto target = [&](int t) {
    double v = q_doc(c, d, t) * q_word_marginal(c, w, t);
    return v > 1e-300 ? v : 1e-300;
  };
  auto word_table = word_proposal(c, w);
  auto doc_density = [&](int t) { return doc_prop.density(t); };
  auto word_density = [&](int t) { return word_table->density(t); };

  int topic = mh_cycle(z[c][d][i], target, doc_prop, doc_density, *word_table,
                       word_density, config.mh_steps, rng, stats,
                       config.mh_word_first);

  int yy = -1;
  if (topic < k_common()) {
    const double p0 = q_word(c, w, topic, 0);
    const double p1 = q_word(c, w, topic, 1);
    yy = uniform01(rng) * (p0 + p1) < p0 ? 0 : 1;
  }
  increment(c, d, i, topic, yy);
  z[c][d][i] = topic;
  y[c][d][i] = static_cast<std::int8_t>(yy);
  return {topic, yy};
}

SweepStats CldaState::sweep() {
  ensure_slots();
  reset_word_proposals();
  const auto t0 = std::chrono::steady_clock::now();

  // flat list of documents, partitioned across threads
  std::vector<std::pair<int, int>> docs;
  for (int c = 0; c < corpus->num_collections(); ++c)
    for (std::size_t d = 0; d < corpus->collections[c].size(); ++d)
      docs.emplace_back(c, static_cast<int>(d));

  const int n_threads = std::max(1, config.threads);
  std::vector<MhStats> stats(n_threads);
  std::vector<std::size_t> tokens(n_threads, 0);

  auto worker = [&](int tid) {
    Rng rng = make_rng(config.seed, Stream::SweepThread,
                       static_cast<std::uint64_t>(sweeps_done) * n_threads + tid);
    for (std::size_t j = tid; j < docs.size(); j += n_threads) {
      const auto [c, d] = docs[j];
      auto doc_prop = build_doc_proposal(c, d);
      const auto& doc = corpus->collections[c][d];
      for (std::size_t i = 0; i < doc.tokens.size(); ++i)
        sample_token(c, d, static_cast<int>(i), *doc_prop, rng, &stats[tid]);
      tokens[tid] += doc.tokens.size();
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  sweeps_done += 1;

  SweepStats out;
  MhStats total;
  for (int t = 0; t < n_threads; ++t) {
    out.tokens += tokens[t];
    total.steps += stats[t].steps;
    total.accepts += stats[t].accepts;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  out.acceptance_rate = total.acceptance_rate();
  return out;
}

void CldaState::estimate_alpha() {
  const double a = config.alpha_prior_shape;
  const double b = config.alpha_prior_rate;
  for (int c = 0; c < corpus->num_collections(); ++c) {
    const int kc = k(c);
    std::vector<double> cur = alpha[c];
    bool ok = true;
    for (int round = 0; round < 100; ++round) {
      double asum = 0.0;
      for (double v : cur) asum += v;
      double denom = 0.0;
      for (const auto& row : doc_topic[c]) {
        double len = 0.0;
        for (double v : row) len += v;
        denom += digamma(len + asum) - digamma(asum);
      }
      double max_rel = 0.0;
      std::vector<double> next(kc);
      for (int t = 0; t < kc; ++t) {
        double num = 0.0;
        for (const auto& row : doc_topic[c])
          if (row[t] > 0.0) num += digamma(row[t] + cur[t]) - digamma(cur[t]);
        double v = (a - 1.0 + cur[t] * num) / (b + denom);
        if (!std::isfinite(v)) {
          ok = false;
          break;
        }
        v = std::max(v, 1e-8);
        max_rel = std::max(max_rel, std::fabs(v - cur[t]) / cur[t]);
        next[t] = v;
      }
      if (!ok) break;
      cur = std::move(next);
      if (max_rel < 1e-5) break;
    }
    if (ok) {
      alpha[c] = std::move(cur);
    } else {
      log::warn("estimate_alpha: non-finite update for collection " +
                std::to_string(c) + ", keeping previous alpha");
    }
  }
}

std::vector<double> CldaState::estimate_sigma() const {
  std::vector<double> sigma(k_common());
  for (int t = 0; t < k_common(); ++t) {
    const double b0 = nn(branch0(t));
    const double b1 = nn(branch1(t));
    sigma[t] = (b0 + config.delta1) / (b0 + b1 + config.delta1 + config.delta2);
  }
  return sigma;
}

TopicModelSnapshot CldaState::snapshot() const {
  TopicModelSnapshot m;
  m.kind = config.is_cclda() ? "cclda" : "clda";
  m.vocab_size = vocab_size;
  m.k_common = k_common();
  m.k_per_collection = config.k_per_collection;
  m.eta = eta;
  m.alpha = alpha;
  m.sigma = estimate_sigma();
  const double vb = vocab_size * config.beta;
  m.phi_shared.resize(k_common());
  for (int t = 0; t < k_common(); ++t) {
    m.phi_shared[t].resize(vocab_size);
    const double denom = nn(shared_total[t]) + vb;
    for (int w = 0; w < vocab_size; ++w)
      m.phi_shared[t][w] =
          (nn(shared_word[static_cast<std::size_t>(t) * vocab_size + w]) +
           config.beta) /
          denom;
  }
  const int C = static_cast<int>(spec_word.size());
  m.phi_spec.resize(C);
  for (int c = 0; c < C; ++c) {
    m.phi_spec[c].resize(k(c));
    for (int t = 0; t < k(c); ++t) {
      m.phi_spec[c][t].resize(vocab_size);
      const double denom = nn(spec_total[c][t]) + vb;
      for (int w = 0; w < vocab_size; ++w)
        m.phi_spec[c][t][w] =
            (nn(spec_word[c][static_cast<std::size_t>(t) * vocab_size + w]) +
             config.beta) /
            denom;
    }
  }
  return m;
}

namespace {

TopicWordList rank_words(const double* counts, int vocab_size, double beta,
                         int top_n) {
  TopicWordList out;
  const int n = std::min(top_n, vocab_size);
  if (n <= 0) return out;
  out.entries.reserve(vocab_size);
  for (int w = 0; w < vocab_size; ++w)
    out.entries.emplace_back(w, counts[w] + beta);
  std::partial_sort(out.entries.begin(), out.entries.begin() + n,
                    out.entries.end(), [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  out.entries.resize(n);
  return out;
}

}  // namespace

TopicExport CldaState::export_topics(int top_n) const {
  TopicExport out;
  const int C = static_cast<int>(spec_word.size());
  for (int t = 0; t < k_common(); ++t) {
    TopicExport::CommonTopic ct;
    ct.topic = t;
    ct.shared = rank_words(
        shared_word.data() + static_cast<std::size_t>(t) * vocab_size,
        vocab_size, config.beta, top_n);
    for (int c = 0; c < C; ++c)
      ct.per_collection.push_back(rank_words(
          spec_word[c].data() + static_cast<std::size_t>(t) * vocab_size,
          vocab_size, config.beta, top_n));
    out.common.push_back(std::move(ct));
  }
  out.non_common.resize(C);
  for (int c = 0; c < C; ++c)
    for (int t = k_common(); t < k(c); ++t)
      out.non_common[c].emplace_back(
          t, rank_words(
                 spec_word[c].data() + static_cast<std::size_t>(t) * vocab_size,
                 vocab_size, config.beta, top_n));
  return out;
}

void CldaState::check_invariants() const {
  auto close = [](double x, double y) {
    return std::fabs(x - y) <= 1e-6 * std::max({1.0, std::fabs(x), std::fabs(y)});
  };
  for (int c = 0; c < corpus->num_collections(); ++c) {
    for (std::size_t d = 0; d < doc_topic[c].size(); ++d) {
      double s = 0.0;
      for (double v : doc_topic[c][d]) s += v;
      const double want = eta[c] * corpus->collections[c][d].length();
      if (!close(s, want))
        throw NumericalError("clda invariant: doc topic sum mismatch");
    }
    for (int t = 0; t < k(c); ++t) {
      double s = 0.0;
      for (int w = 0; w < vocab_size; ++w)
        s += spec_word[c][static_cast<std::size_t>(t) * vocab_size + w];
      if (!close(s, spec_total[c][t]))
        throw NumericalError("clda invariant: spec word marginal mismatch");
    }
  }
  for (int t = 0; t < k_common(); ++t) {
    double s = 0.0;
    for (int w = 0; w < vocab_size; ++w)
      s += shared_word[static_cast<std::size_t>(t) * vocab_size + w];
    if (!close(s, shared_total[t]))
      throw NumericalError("clda invariant: shared word marginal mismatch");
    if (!close(branch0(t), shared_total[t]))
      throw NumericalError("clda invariant: branch0 != shared total");
  }
}

TrainResult train_clda(CldaState& state, const Corpus* heldout) {
  const CldaConfig& cfg = state.config;

  // Evaluation docs: the held-out set, or a fixed 10% slice of training docs.
  Corpus eval_docs;
  if (heldout) {
    eval_docs = *heldout;
  } else {
    eval_docs.collection_names = state.corpus->collection_names;
    eval_docs.collections.resize(state.corpus->num_collections());
    for (int c = 0; c < state.corpus->num_collections(); ++c) {
      const auto& docs = state.corpus->collections[c];
      for (std::size_t d = 0; d < docs.size(); d += 10)
        eval_docs.collections[c].push_back(docs[d]);
    }
  }

  TrainResult result;
  double elapsed = 0.0;
  double prev_ppx = -1.0;
  int stable_evals = 0;
  // `sweeps` is a total budget: a resumed state keeps its global sweep
  // numbering so the trace (and every derived rng stream) continues exactly
  // where the interrupted run left off.
  while (state.sweeps_done < cfg.sweeps) {
    SweepStats stats = state.sweep();
    const int s = state.sweeps_done;
    elapsed += stats.seconds;
    if (s > cfg.hyperopt_burnin &&
        (s - cfg.hyperopt_burnin) % cfg.hyperopt_interval == 0)
      state.estimate_alpha();

    TraceRow row;
    row.sweep = s;
    row.seconds = elapsed;
    row.acceptance = stats.acceptance_rate;
    row.tokens_per_sec = stats.tokens_per_sec();
    row.perplexity = std::numeric_limits<double>::quiet_NaN();
    row.live_topics = 0;
    for (int kc : cfg.k_per_collection) row.live_topics = std::max(row.live_topics, kc);

    if (cfg.eval_interval > 0 && s % cfg.eval_interval == 0) {
      auto report = left_to_right_perplexity(
          state.snapshot(), eval_docs, cfg.eval_particles,
          cfg.seed + static_cast<std::uint64_t>(s));
      row.perplexity = report.perplexity;
      if (prev_ppx > 0.0 &&
          std::fabs(report.perplexity - prev_ppx) / prev_ppx < 0.01)
        stable_evals += 1;
      else
        stable_evals = 0;
      prev_ppx = report.perplexity;
      log::info("sweep " + std::to_string(s) + " perplexity " +
                std::to_string(report.perplexity));
    }
    result.trace.push_back(row);
    result.sweeps_run = state.sweeps_done;
    if (stable_evals >= 10) {
      result.converged = true;
      break;
    }
  }
  result.model = state.snapshot();
  return result;
}

}  // namespace xtopics
