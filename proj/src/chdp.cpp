#include "xtopics/chdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "xtopics/eval.hpp"
#include "xtopics/log.hpp"

namespace xtopics {

namespace {

inline double nn(double x) { return x > 0.0 ? x : 0.0; }

inline void addd(double& slot, double v) {
  std::atomic_ref<double>(slot).fetch_add(v, std::memory_order_relaxed);
}
inline void addi(int& slot, int v) {
  std::atomic_ref<int>(slot).fetch_add(v, std::memory_order_relaxed);
}

// Registry guard shared by parallel sweeps. Null when single-threaded.
std::shared_mutex* g_registry = nullptr;
bool g_defer_removal = false;

}  // namespace

void ChdpConfig::validate(const Corpus& corpus) const {
  const int C = corpus.num_collections();
  if (!init_spec.empty() && static_cast<int>(init_spec.size()) != C)
    throw UsageError("chdp: init_spec must have one entry per collection");
  if (init_common < 0) throw UsageError("chdp: init_common must be >= 0");
  for (int s : init_spec)
    if (s < 0) throw UsageError("chdp: init_spec must be >= 0");
  for (int c = 0; c < C; ++c) {
    int total = init_common + (init_spec.empty() ? 0 : init_spec[c]);
    if (total < 1)
      throw UsageError("chdp: each collection needs >= 1 initial topic");
  }
  if (!(beta > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0))
    throw UsageError("chdp: beta/delta must be > 0");
  for (const auto& p : {gamma_prior, alpha0_prior, alpha1_prior})
    if (!(p.shape > 0.0) || !(p.rate > 0.0))
      throw UsageError("chdp: gamma prior parameters must be > 0");
  if (threads < 1) throw UsageError("chdp: threads must be >= 1");
}

int ChdpState::create_topic() {
  int id = -1;
  for (std::size_t t = 0; t < live.size(); ++t)
    if (!live[t]) {
      id = static_cast<int>(t);
      break;
    }
  if (id < 0) {
    id = static_cast<int>(live.size());
    live.push_back(0);
    n_root.push_back(0);
    t_root.push_back(0);
    branch.push_back(0.0);
    branch.push_back(0.0);
    shared_word.emplace_back();
    shared_total.push_back(0.0);
    for (int c = 0; c < corpus->num_collections(); ++c) {
      n_coll[c].push_back(0);
      t_coll[c].push_back(0);
      spec_word[c].emplace_back();
      spec_total[c].push_back(0.0);
    }
  }
  live[id] = 1;
  n_root[id] = t_root[id] = 0;
  branch[2 * id] = branch[2 * id + 1] = 0.0;
  shared_word[id].assign(vocab_size, 0.0);
  shared_total[id] = 0.0;
  for (int c = 0; c < corpus->num_collections(); ++c) {
    n_coll[c][id] = t_coll[c][id] = 0;
    spec_word[c][id].assign(vocab_size, 0.0);
    spec_total[c][id] = 0.0;
  }
  live_topics += 1;
  topic_version += 1;
  return id;
}

void ChdpState::remove_topic_if_empty(int topic) {
  if (!live[topic]) return;
  if (n_root[topic] != 0) return;
  for (int c = 0; c < corpus->num_collections(); ++c)
    if (n_coll[c][topic] != 0) return;
  live[topic] = 0;
  shared_word[topic].clear();
  shared_word[topic].shrink_to_fit();
  for (int c = 0; c < corpus->num_collections(); ++c) {
    spec_word[c][topic].clear();
    spec_word[c][topic].shrink_to_fit();
  }
  live_topics -= 1;
  topic_version += 1;
}

void ChdpState::collect_empty_topics() {
  for (std::size_t t = 0; t < live.size(); ++t)
    remove_topic_if_empty(static_cast<int>(t));
}

ChdpState ChdpState::init(std::shared_ptr<const Corpus> corpus, int vocab_size,
                          const ChdpConfig& config) {
  config.validate(*corpus);
  if (corpus->num_docs() == 0) throw DataError("chdp: empty corpus");

  ChdpState st;
  st.config = config;
  st.corpus = corpus;
  st.vocab_size = vocab_size;
  st.gamma_conc = config.gamma_prior.mean();
  st.alpha0 = config.alpha0_prior.mean();
  st.alpha1 = config.alpha1_prior.mean();

  const int C = corpus->num_collections();
  st.n_coll.resize(C);
  st.t_coll.resize(C);
  st.spec_word.resize(C);
  st.spec_total.resize(C);
  st.total_coll_customers.assign(C, 0);
  st.doc_crp.resize(C);
  st.z.resize(C);
  st.y.resize(C);
  st.u.resize(C);

  // initial candidate pool: common topics shared by all collections plus
  // per-collection extras
  std::vector<int> common_pool;
  for (int t = 0; t < config.init_common; ++t)
    common_pool.push_back(st.create_topic());
  std::vector<std::vector<int>> pool(C, common_pool);
  for (int c = 0; c < C; ++c) {
    const int extra = config.init_spec.empty() ? 0 : config.init_spec[c];
    for (int t = 0; t < extra; ++t) pool[c].push_back(st.create_topic());
  }

  Rng rng = make_rng(config.seed, Stream::Init);
  for (int c = 0; c < C; ++c) {
    const auto& docs = corpus->collections[c];
    st.doc_crp[c].resize(docs.size());
    st.z[c].resize(docs.size());
    st.y[c].resize(docs.size());
    st.u[c].resize(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
      const auto& doc = docs[d];
      st.z[c][d].resize(doc.tokens.size());
      st.y[c][d].resize(doc.tokens.size());
      st.u[c][d].resize(doc.tokens.size());
      for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        const int topic =
            pool[c][static_cast<int>(uniform01(rng) * pool[c].size()) %
                    pool[c].size()];
        const int yy = uniform01(rng) < 0.5 ? 0 : 1;
        // sequential CRP seating replay with minimal table creation
        std::int8_t uu;
        const auto it = st.doc_crp[c][d].find(topic);
        if (it != st.doc_crp[c][d].end() && it->second.n > 0) {
          uu = kTableNone;
        } else if (st.n_coll[c][topic] > 0) {
          uu = kTableDoc;
        } else if (st.n_root[topic] > 0) {
          uu = kTableCollection;
        } else {
          uu = kTableRoot;
        }
        st.increment(c, static_cast<int>(d), static_cast<int>(i), topic, uu, yy);
        st.z[c][d][i] = topic;
        st.y[c][d][i] = static_cast<std::int8_t>(yy);
        st.u[c][d][i] = uu;
      }
    }
  }
  st.collect_empty_topics();  // unused initial candidates
  st.reset_caches();
  return st;
}

void ChdpState::reset_caches() {
  const int C = static_cast<int>(n_coll.size());
  word_slots_.clear();
  word_slots_.resize(C);
  for (int c = 0; c < C; ++c) word_slots_[c].resize(vocab_size);
}

double ChdpState::word_term(int c, int w, int topic, int yy) const {
  const double vb = vocab_size * config.beta;
  const double dsum = config.delta1 + config.delta2;
  if (topic < 0) {
    const double dy = yy == 0 ? config.delta1 : config.delta2;
    return dy / dsum * (config.beta / vb);
  }
  const double b0 = nn(branch[2 * topic]);
  const double b1 = nn(branch[2 * topic + 1]);
  if (yy == 0) {
    return (b0 + config.delta1) / (b0 + b1 + dsum) *
           (nn(shared_word[topic][w]) + config.beta) /
           (nn(shared_total[topic]) + vb);
  }
  return (b1 + config.delta2) / (b0 + b1 + dsum) *
         (nn(spec_word[c][topic][w]) + config.beta) /
         (nn(spec_total[c][topic]) + vb);
}

double ChdpState::word_marginal(int c, int w, int topic) const {
  return word_term(c, w, topic, 0) + word_term(c, w, topic, 1);
}

double ChdpState::crp_weight(int c, int d, int topic, int uu) const {
  const double n0_total = static_cast<double>(total_root_customers);
  if (topic < 0)
    return uu == kTableRoot ? gamma_conc * alpha0 / (gamma_conc + n0_total)
                            : 0.0;
  if (!live[topic]) return 0.0;

  const int n0z = n_root[topic];
  const int ncz = n_coll[c][topic];
  const int tcz = t_coll[c][topic];
  int ndz = 0, tdz = 0;
  const auto it = doc_crp[c][d].find(topic);
  if (it != doc_crp[c][d].end()) {
    ndz = it->second.n;
    tdz = it->second.t;
  }

  switch (uu) {
    case kTableCollection: {  // new tables at doc+collection, proxy joins root
      if (n0z < 1) return 0.0;
      const double rc = stirling.ratio(ncz, tcz, StirlingCache::Ratio::IncrBoth);
      const double rd = stirling.ratio(ndz, tdz, StirlingCache::Ratio::IncrBoth);
      return alpha0 / (gamma_conc + n0_total) * rc * rd *
             (static_cast<double>(n0z) * n0z * (tcz + 1) * (tdz + 1)) /
             ((n0z + 1.0) * (ncz + 1.0) * (ndz + 1.0));
    }
    case kTableDoc: {  // new doc table, proxy joins collection mass
      if (ncz < 1) return 0.0;
      const double rc = stirling.ratio(ncz, tcz, StirlingCache::Ratio::IncrN);
      const double rd = stirling.ratio(ndz, tdz, StirlingCache::Ratio::IncrBoth);
      return rc * rd * ((tdz + 1.0) * (ncz - tcz + 1.0)) /
             ((ncz + 1.0) * (ndz + 1.0));
    }
    case kTableNone: {  // joins an existing doc table
      if (ndz < 1) return 0.0;
      const double rd = stirling.ratio(ndz, tdz, StirlingCache::Ratio::IncrN);
      return (alpha0 + static_cast<double>(total_coll_customers[c])) / alpha1 *
             rd * (ndz - tdz + 1.0) / (ndz + 1.0);
    }
    default:
      return 0.0;  // existing topics cannot open a root table (atomless base)
  }
}

std::vector<ChdpState::Atom> ChdpState::enumerate_atoms(int c, int d) const {
  std::vector<Atom> atoms;
  atoms.reserve(3 * live_topics + 1);
  for (std::size_t t = 0; t < live.size(); ++t) {
    if (!live[t]) continue;
    const int topic = static_cast<int>(t);
    const auto it = doc_crp[c][d].find(topic);
    if (it != doc_crp[c][d].end() && it->second.n > 0)
      atoms.push_back({topic, kTableNone});
    if (n_coll[c][topic] > 0) atoms.push_back({topic, kTableDoc});
    if (n_root[topic] > 0) atoms.push_back({topic, kTableCollection});
  }
  atoms.push_back({-1, kTableRoot});
  return atoms;
}

double ChdpState::block_density(int c, int d, int w, const Atom& atom,
                                int yy) const {
  const double cw = crp_weight(c, d, atom.topic, atom.uu);
  if (!(cw > 0.0)) return 0.0;
  return word_term(c, w, atom.topic, yy) * cw;
}

void ChdpState::decrement(int c, int d, int i) {
  const int topic = z[c][d][i];
  std::int8_t uu = u[c][d][i];
  const int yy = y[c][d][i];
  const int w = corpus->collections[c][d].tokens[i];

  // Table handover: when the removed token owns a level's only table while
  // other customers remain seated there, 1 <= t <= n would break. The seating
  // is exchangeable, so hand the whole table chain to another token of the
  // same topic (an equal-probability relabeling) and remove this token as a
  // non-owner instead.
  if (uu <= kTableDoc) {
    const auto& dcur = doc_crp[c][d][topic];
    if (dcur.t == 1 && dcur.n > 1) {
      auto& zu = u[c][d];
      const auto& zz = z[c][d];
      for (std::size_t j = 0; j < zz.size(); ++j)
        if (static_cast<int>(j) != i && zz[j] == topic &&
            zu[j] == kTableNone) {
          zu[j] = uu;
          uu = kTableNone;
          break;
        }
    }
  }
  if (uu <= kTableCollection && t_coll[c][topic] == 1 &&
      n_coll[c][topic] > 1) {
    // some other document's table proxy takes over the collection table
    bool done = false;
    for (std::size_t dd = 0; dd < z[c].size() && !done; ++dd) {
      const auto& zz = z[c][dd];
      auto& zu = u[c][dd];
      for (std::size_t j = 0; j < zz.size(); ++j)
        if (!(static_cast<int>(dd) == d && static_cast<int>(j) == i) &&
            zz[j] == topic && zu[j] == kTableDoc) {
          zu[j] = uu;
          uu = kTableDoc;
          done = true;
          break;
        }
    }
  }
  if (uu == kTableRoot && t_root[topic] == 1 && n_root[topic] > 1) {
    bool done = false;
    for (std::size_t cc = 0; cc < z.size() && !done; ++cc)
      for (std::size_t dd = 0; dd < z[cc].size() && !done; ++dd) {
        const auto& zz = z[cc][dd];
        auto& zu = u[cc][dd];
        for (std::size_t j = 0; j < zz.size(); ++j)
          if (!(static_cast<int>(cc) == c && static_cast<int>(dd) == d &&
                static_cast<int>(j) == i) &&
              zz[j] == topic && zu[j] == kTableCollection) {
            zu[j] = kTableRoot;
            uu = kTableCollection;
            done = true;
            break;
          }
      }
  }
  u[c][d][i] = uu;  // effective indicator actually removed

  auto& dc = doc_crp[c][d][topic];
  dc.n -= 1;
  if (uu <= kTableDoc) {
    dc.t -= 1;
    addi(n_coll[c][topic], -1);
    addi(total_coll_customers[c], -1);
  }
  if (uu <= kTableCollection) {
    addi(t_coll[c][topic], -1);
    addi(n_root[topic], -1);
    addi(total_root_customers, -1);
  }
  if (uu == kTableRoot) addi(t_root[topic], -1);
  if (dc.n == 0) doc_crp[c][d].erase(topic);

  addd(branch[2 * topic + yy], -1.0);
  if (yy == 0) {
    addd(shared_word[topic][w], -1.0);
    addd(shared_total[topic], -1.0);
  } else {
    addd(spec_word[c][topic][w], -1.0);
    addd(spec_total[c][topic], -1.0);
  }
  if (!g_defer_removal) remove_topic_if_empty(topic);
}

void ChdpState::increment(int c, int d, int i, int topic, std::int8_t uu,
                          int yy) {
  const int w = corpus->collections[c][d].tokens[i];
  auto& dc = doc_crp[c][d][topic];
  dc.n += 1;
  if (uu <= kTableDoc) {
    dc.t += 1;
    addi(n_coll[c][topic], 1);
    addi(total_coll_customers[c], 1);
  }
  if (uu <= kTableCollection) {
    addi(t_coll[c][topic], 1);
    addi(n_root[topic], 1);
    addi(total_root_customers, 1);
  }
  if (uu == kTableRoot) addi(t_root[topic], 1);

  addd(branch[2 * topic + yy], 1.0);
  if (yy == 0) {
    addd(shared_word[topic][w], 1.0);
    addd(shared_total[topic], 1.0);
  } else {
    addd(spec_word[c][topic][w], 1.0);
    addd(spec_total[c][topic], 1.0);
  }
}

std::shared_ptr<const ChdpState::WordProposal> ChdpState::word_proposal(int c,
                                                                        int w) {
  auto cur = std::atomic_load(&word_slots_[c][w]);
  if (cur && cur->version == topic_version && !cur->table.exhausted())
    return cur;
  std::vector<int> topics;
  std::vector<double> weights;
  for (std::size_t t = 0; t < live.size(); ++t) {
    if (!live[t]) continue;
    topics.push_back(static_cast<int>(t));
    weights.push_back(word_marginal(c, w, static_cast<int>(t)));
  }
  topics.push_back(-1);
  weights.push_back(word_marginal(c, w, -1));
  auto fresh = std::make_shared<const WordProposal>(weights, std::move(topics),
                                                    topic_version);
  std::atomic_store(&word_slots_[c][w], fresh);
  return fresh;
}

int ChdpState::exact_gibbs_atom(int c, int d, int w, Rng& rng,
                                std::vector<Atom>& atoms) const {
  atoms = enumerate_atoms(c, d);
  std::vector<double> weights(atoms.size());
  double total = 0.0;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    weights[a] = word_marginal(c, w, atoms[a].topic) *
                 crp_weight(c, d, atoms[a].topic, atoms[a].uu);
    total += weights[a];
  }
  if (!(total > 0.0))
    throw NumericalError("chdp: block conditional has no mass");
  double r = uniform01(rng) * total;
  std::size_t a = 0;
  for (; a + 1 < atoms.size(); ++a) {
    r -= weights[a];
    if (r <= 0.0) break;
  }
  return static_cast<int>(a);
}

void ChdpState::sample_token(int c, int d, int i, Rng& rng, MhStats* stats) {
  std::shared_lock<std::shared_mutex> slock;
  std::unique_lock<std::shared_mutex> xlock;
  if (g_registry) {
    slock = std::shared_lock<std::shared_mutex>(*g_registry);
    // A cross-document table handover mutates another thread's tokens;
    // take the registry exclusively when removal might need one.
    const int zt = z[c][d][i];
    const std::int8_t ut = u[c][d][i];
    const bool risky =
        (ut <= kTableCollection && t_coll[c][zt] <= 2 && n_coll[c][zt] > 1) ||
        (ut == kTableRoot && t_root[zt] <= 2 && n_root[zt] > 1);
    if (risky) {
      slock.unlock();
      xlock = std::unique_lock<std::shared_mutex>(*g_registry);
    }
  }

  const int w = corpus->collections[c][d].tokens[i];
  decrement(c, d, i);

  Atom cur{z[c][d][i], u[c][d][i]};
  // A token that was alone in its topic is, by exchangeability, sitting on
  // the new-topic atom once its contribution is removed; switching kernels
  // here instead (e.g. to an exact draw) would break invariance.
  if (cur.topic >= static_cast<int>(live.size()) || !live[cur.topic])
    cur = Atom{-1, kTableRoot};
  auto target = [&](const Atom& a) {
    // CRP weight first: it is 0 for removed topics, whose word tables are gone
    const double cw = crp_weight(c, d, a.topic, a.uu);
    if (!(cw > 0.0)) return 0.0;
    return word_marginal(c, w, a.topic) * cw;
  };

  Atom chosen;
  const double target_cur = target(cur);
  if (!(target_cur > 0.0) || config.mh_steps == 0) {
    // pre-decrement seating no longer reachable (or pure Gibbs requested):
    // draw exactly from the block conditional
    std::vector<Atom> atoms;
    const int a = exact_gibbs_atom(c, d, w, rng, atoms);
    chosen = atoms[a];
  } else {
    // doc-side proposal over (z, u) atoms; counts are frozen for the cycle
    std::vector<Atom> atoms = enumerate_atoms(c, d);
    std::vector<double> doc_weights(atoms.size());
    std::unordered_map<int, std::size_t> atom_index;
    double doc_total = 0.0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      doc_weights[a] = crp_weight(c, d, atoms[a].topic, atoms[a].uu);
      doc_total += doc_weights[a];
      atom_index.emplace(atoms[a].topic * 4 + atoms[a].uu, a);
    }
    AliasTable doc_table(doc_weights);
    auto doc_density = [&](const Atom& a) {
      const auto it = atom_index.find(a.topic * 4 + a.uu);
      return it == atom_index.end() ? 0.0 : doc_table.density(it->second);
    };

    const auto slot = word_proposal(c, w);
    std::unordered_map<int, int> word_index;
    for (std::size_t j = 0; j < slot->topics.size(); ++j)
      word_index.emplace(slot->topics[j], static_cast<int>(j));
    auto crp_u_conditional = [&](int topic, int uu) {
      if (topic < 0) return uu == kTableRoot ? 1.0 : 0.0;
      double tot = 0.0;
      for (int v : {kTableCollection, kTableDoc, kTableNone})
        tot += crp_weight(c, d, topic, v);
      if (!(tot > 0.0)) return 0.0;
      return crp_weight(c, d, topic, uu) / tot;
    };
    auto word_density = [&](const Atom& a) {
      const auto it = word_index.find(a.topic);
      if (it == word_index.end()) return 0.0;
      return slot->table.density(it->second) * crp_u_conditional(a.topic, a.uu);
    };

    chosen = cur;
    for (int step = 1; step <= config.mh_steps; ++step) {
      const bool use_word = ((step % 2 == 0) != config.mh_word_first);
      Atom prop;
      double q_prop, q_cur;
      if (use_word) {
        const int j = slot->table.draw(rng);
        prop.topic = slot->topics[j];
        if (prop.topic < 0) {
          prop.uu = kTableRoot;
        } else {
          double tot = 0.0;
          double ws[3];
          const int us[3] = {kTableCollection, kTableDoc, kTableNone};
          for (int v = 0; v < 3; ++v) {
            ws[v] = crp_weight(c, d, prop.topic, us[v]);
            tot += ws[v];
          }
          if (!(tot > 0.0)) continue;  // stale alias picked a dead topic
          double r = uniform01(rng) * tot;
          int v = 0;
          for (; v < 2; ++v) {
            r -= ws[v];
            if (r <= 0.0) break;
          }
          prop.uu = static_cast<std::int8_t>(us[v]);
        }
        q_prop = word_density(prop);
        q_cur = word_density(chosen);
      } else {
        const int a = doc_table.draw(rng);
        prop = atoms[a];
        q_prop = doc_density(prop);
        q_cur = doc_density(chosen);
      }
      if (stats) stats->steps += 1;
      if (!(q_cur > 0.0)) {
        // current seating unreachable under this proposal: forced move
        chosen = prop;
        if (stats) stats->accepts += 1;
        continue;
      }
      const double p_prop = target(prop);
      const double p_cur = target(chosen);
      const double ratio = (p_prop * q_cur) / (p_cur * q_prop);
      if (ratio >= 1.0 || uniform01(rng) < ratio) {
        chosen = prop;
        if (stats) stats->accepts += 1;
      }
    }
  }

  int topic = chosen.topic;
  if (topic < 0 && g_registry && !xlock.owns_lock()) {
    // creation mutates the registry: trade the shared lock for an exclusive
    // one (counts for this token stay removed, so the swap is safe)
    slock.unlock();
    xlock = std::unique_lock<std::shared_mutex>(*g_registry);
  }
  if (topic < 0) topic = create_topic();

  const double p0 = word_term(c, w, topic, 0);
  const double p1 = word_term(c, w, topic, 1);
  const int yy = uniform01(rng) * (p0 + p1) < p0 ? 0 : 1;

  increment(c, d, i, topic, chosen.uu, yy);
  z[c][d][i] = topic;
  u[c][d][i] = chosen.uu;
  y[c][d][i] = static_cast<std::int8_t>(yy);
}

SweepStats ChdpState::sweep() {
  // Dropping cached proposals at sweep boundaries keeps a resumed run on the
  // same trajectory as an uninterrupted one (the caches are not serialized).
  reset_caches();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<int, int>> docs;
  for (int c = 0; c < corpus->num_collections(); ++c)
    for (std::size_t d = 0; d < corpus->collections[c].size(); ++d)
      docs.emplace_back(c, static_cast<int>(d));

  const int n_threads = std::max(1, config.threads);
  std::vector<MhStats> stats(n_threads);
  SweepStats out;
  out.tokens = corpus->num_tokens();

  if (n_threads == 1) {
    Rng rng = make_rng(config.seed, Stream::SweepThread,
                       static_cast<std::uint64_t>(sweeps_done));
    for (const auto& [c, d] : docs) {
      const auto& doc = corpus->collections[c][d];
      for (std::size_t i = 0; i < doc.tokens.size(); ++i)
        sample_token(c, d, static_cast<int>(i), rng, &stats[0]);
    }
  } else {
    // serialized-creation parallel mode: samplers hold the registry shared,
    // topic creation takes it exclusively, removal is deferred to sweep end
    std::shared_mutex registry;
    g_registry = &registry;
    g_defer_removal = true;
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        Rng rng = make_rng(config.seed, Stream::SweepThread,
                           static_cast<std::uint64_t>(sweeps_done) * n_threads + t);
        for (std::size_t j = t; j < docs.size(); j += n_threads) {
          const auto [c, d] = docs[j];
          const auto& doc = corpus->collections[c][d];
          for (std::size_t i = 0; i < doc.tokens.size(); ++i)
            sample_token(c, d, static_cast<int>(i), rng, &stats[t]);
        }
      });
    }
    for (auto& th : pool) th.join();
    g_registry = nullptr;
    g_defer_removal = false;
    collect_empty_topics();
  }
  sweeps_done += 1;

  MhStats total;
  for (const auto& s : stats) {
    total.steps += s.steps;
    total.accepts += s.accepts;
  }
  out.acceptance_rate = total.acceptance_rate();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
  return out;
}

namespace {

double gamma_draw(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

// Teh-style auxiliary update for one concentration shared by a set of
// restaurants with (customers, tables) per restaurant.
double resample_concentration(double current, const GammaPrior& prior,
                              const std::vector<std::pair<int, int>>& rests,
                              Rng& rng) {
  double shape = prior.shape;
  double rate = prior.rate;
  int total_tables = 0;
  for (const auto& [n, t] : rests) total_tables += t;
  if (total_tables == 0) return gamma_draw(shape, rate, rng);
  for (const auto& [n, t] : rests) {
    if (n < 1) continue;
    // w_j ~ Beta(current+1, n) via two gammas
    std::gamma_distribution<double> ga(current + 1.0, 1.0), gb(n, 1.0);
    const double x = ga(rng), yv = gb(rng);
    const double w = x / (x + yv);
    rate -= std::log(w);
    // s_j ~ Bernoulli(n / (n + current))
    if (uniform01(rng) < static_cast<double>(n) / (n + current)) shape -= 1.0;
  }
  shape += total_tables;
  if (shape <= 0.0) shape = 1e-3;
  return gamma_draw(shape, rate, rng);
}

}  // namespace

void ChdpState::resample_concentrations(Rng& rng) {
  // root level: one restaurant
  {
    int tables = 0;
    for (std::size_t t = 0; t < live.size(); ++t)
      if (live[t]) tables += t_root[t];
    gamma_conc = resample_concentration(
        gamma_conc, config.gamma_prior,
        {{total_root_customers, tables}}, rng);
  }
  // collection level: one restaurant per collection
  {
    std::vector<std::pair<int, int>> rests;
    for (int c = 0; c < corpus->num_collections(); ++c) {
      int tables = 0;
      for (std::size_t t = 0; t < live.size(); ++t)
        if (live[t]) tables += t_coll[c][t];
      rests.emplace_back(total_coll_customers[c], tables);
    }
    alpha0 = resample_concentration(alpha0, config.alpha0_prior, rests, rng);
  }
  // document level: one restaurant per document
  {
    std::vector<std::pair<int, int>> rests;
    for (int c = 0; c < corpus->num_collections(); ++c)
      for (std::size_t d = 0; d < doc_crp[c].size(); ++d) {
        int n = 0, t = 0;
        for (const auto& [topic, dc] : doc_crp[c][d]) {
          n += dc.n;
          t += dc.t;
        }
        rests.emplace_back(n, t);
      }
    alpha1 = resample_concentration(alpha1, config.alpha1_prior, rests, rng);
  }
}

std::vector<int> ChdpState::live_topic_ids() const {
  std::vector<int> ids;
  for (std::size_t t = 0; t < live.size(); ++t)
    if (live[t]) ids.push_back(static_cast<int>(t));
  return ids;
}

TopicModelSnapshot ChdpState::snapshot() const {
  const auto ids = live_topic_ids();
  const int K = static_cast<int>(ids.size());
  const int C = static_cast<int>(n_coll.size());

  TopicModelSnapshot m;
  m.kind = "chdp";
  m.vocab_size = vocab_size;
  m.k_common = K;
  m.k_per_collection.assign(C, K);
  m.eta.assign(C, 1.0);
  m.sigma.resize(K);
  m.phi_shared.resize(K);
  m.alpha.assign(C, std::vector<double>(K, 0.0));
  m.phi_spec.assign(C, {});

  const double vb = vocab_size * config.beta;
  const double dsum = config.delta1 + config.delta2;
  std::vector<double> pi0(K);
  for (int j = 0; j < K; ++j) {
    const int t = ids[j];
    pi0[j] = n_root[t] / (gamma_conc + total_root_customers);
    const double b0 = nn(branch[2 * t]);
    const double b1 = nn(branch[2 * t + 1]);
    m.sigma[j] = (b0 + config.delta1) / (b0 + b1 + dsum);
    m.phi_shared[j].resize(vocab_size);
    for (int w = 0; w < vocab_size; ++w)
      m.phi_shared[j][w] =
          (nn(shared_word[t][w]) + config.beta) / (nn(shared_total[t]) + vb);
  }
  for (int c = 0; c < C; ++c) {
    m.phi_spec[c].resize(K);
    for (int j = 0; j < K; ++j) {
      const int t = ids[j];
      const double pi_c = (n_coll[c][t] + alpha0 * pi0[j]) /
                          (total_coll_customers[c] + alpha0);
      m.alpha[c][j] = alpha1 * pi_c;
      m.phi_spec[c][j].resize(vocab_size);
      for (int w = 0; w < vocab_size; ++w)
        m.phi_spec[c][j][w] =
            (nn(spec_word[c][t][w]) + config.beta) / (nn(spec_total[c][t]) + vb);
    }
  }
  return m;
}

void ChdpState::check_invariants() const {
  const int C = corpus->num_collections();
  const std::size_t T = live.size();
  std::vector<int> want_n0(T, 0), want_t0(T, 0);
  std::vector<std::vector<int>> want_nc(C, std::vector<int>(T, 0)),
      want_tc(C, std::vector<int>(T, 0));

  for (int c = 0; c < C; ++c) {
    for (std::size_t d = 0; d < doc_crp[c].size(); ++d) {
      std::unordered_map<int, DocCount> want_doc;
      for (std::size_t i = 0; i < z[c][d].size(); ++i) {
        const int topic = z[c][d][i];
        const std::int8_t uu = u[c][d][i];
        auto& dc = want_doc[topic];
        dc.n += 1;
        if (uu <= kTableDoc) {
          dc.t += 1;
          want_nc[c][topic] += 1;
        }
        if (uu <= kTableCollection) {
          want_tc[c][topic] += 1;
          want_n0[topic] += 1;
        }
        if (uu == kTableRoot) want_t0[topic] += 1;
      }
      for (const auto& [topic, dc] : want_doc) {
        const auto it = doc_crp[c][d].find(topic);
        if (it == doc_crp[c][d].end() || it->second.n != dc.n ||
            it->second.t != dc.t)
          throw NumericalError("chdp invariant: doc CRP counts mismatch");
        if (dc.t < 1 || dc.t > dc.n)
          throw NumericalError("chdp invariant: doc 1<=t<=n violated");
      }
      for (const auto& [topic, dc] : doc_crp[c][d])
        if (!want_doc.count(topic) && dc.n != 0)
          throw NumericalError("chdp invariant: stale doc CRP entry");
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (!live[t]) continue;
    if (n_root[t] != want_n0[t] || t_root[t] != want_t0[t])
      throw NumericalError("chdp invariant: root counts mismatch");
    if (n_root[t] > 0 && (t_root[t] < 1 || t_root[t] > n_root[t]))
      throw NumericalError("chdp invariant: root 1<=t<=n violated");
    int sum_tc = 0;
    for (int c = 0; c < C; ++c) {
      if (n_coll[c][t] != want_nc[c][t] || t_coll[c][t] != want_tc[c][t])
        throw NumericalError("chdp invariant: collection counts mismatch");
      if (n_coll[c][t] > 0 && (t_coll[c][t] < 1 || t_coll[c][t] > n_coll[c][t]))
        throw NumericalError("chdp invariant: collection 1<=t<=n violated");
      sum_tc += t_coll[c][t];
    }
    if (sum_tc != n_root[t])
      throw NumericalError("chdp invariant: n_0z != sum_c t_cz");
  }
}

TrainResult train_chdp(ChdpState& state, const Corpus* heldout) {
  const ChdpConfig& cfg = state.config;

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
  // `sweeps` is a total budget; see train_clda for the resume contract.
  while (state.sweeps_done < cfg.sweeps) {
    SweepStats stats = state.sweep();
    const int s = state.sweeps_done;
    {
      Rng conc_rng = make_rng(cfg.seed, Stream::Concentration,
                              static_cast<std::uint64_t>(s));
      state.resample_concentrations(conc_rng);
    }
    elapsed += stats.seconds;

    TraceRow row;
    row.sweep = s;
    row.seconds = elapsed;
    row.acceptance = stats.acceptance_rate;
    row.tokens_per_sec = stats.tokens_per_sec();
    row.live_topics = state.live_topics;
    row.perplexity = std::numeric_limits<double>::quiet_NaN();
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
      log::info("chdp sweep " + std::to_string(s) + " topics " +
                std::to_string(state.live_topics) + " perplexity " +
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
