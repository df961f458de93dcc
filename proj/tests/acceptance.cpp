// Acceptance gate: one criterion per invocation, one PASS/FAIL/SKIP line on
// stdout, exit 0 on PASS or SKIP and 1 on FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "stirling_oracle.hpp"
#include "xtopics/alias.hpp"
#include "xtopics/chdp.hpp"
#include "xtopics/clda.hpp"
#include "xtopics/eval.hpp"
#include "xtopics/mathutil.hpp"
#include "xtopics/stirling.hpp"
#include "xtopics/synth.hpp"

using namespace xtopics;

namespace {

struct Outcome {
  bool ok = true;
  bool skipped = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::shared_ptr<const Corpus> toy_corpus(
    const std::vector<std::vector<std::vector<int>>>& tokens) {
  auto corpus = std::make_shared<Corpus>();
  corpus->collections.resize(tokens.size());
  for (std::size_t c = 0; c < tokens.size(); ++c) {
    corpus->collection_names.push_back("c" + std::to_string(c));
    for (std::size_t d = 0; d < tokens[c].size(); ++d) {
      Document doc;
      doc.id = "c" + std::to_string(c) + "_d" + std::to_string(d);
      doc.collection = static_cast<int>(c);
      doc.tokens = tokens[c][d];
      corpus->collections[c].push_back(std::move(doc));
    }
  }
  return corpus;
}

double perplexity_of(const TopicModelSnapshot& model, const Corpus& heldout,
                     int particles, std::uint64_t seed) {
  return left_to_right_perplexity(model, heldout, particles, seed).perplexity;
}

// --- 1: single-token resampling vs exact enumeration -----------------------
Outcome criterion1() {
  auto corpus = toy_corpus(
      {{{0, 1, 2, 3, 4, 5, 0, 1}, {2, 3, 4}}, {{1, 0, 4, 5}, {5, 3, 2}}});
  CldaConfig cfg;
  cfg.k_common = 2;
  cfg.k_per_collection = {3, 2};
  cfg.mh_steps = 2;
  cfg.seed = 13;
  CldaState st = CldaState::init(corpus, 6, cfg);
  for (int s = 0; s < 3; ++s) st.sweep();

  const int w = corpus->collections[0][0].tokens[1];
  st.decrement(0, 0, 1);
  auto dens = st.full_conditional(0, 0, w);
  st.increment(0, 0, 1, st.z[0][0][1], st.y[0][0][1]);
  double total = 0.0;
  for (double v : dens) total += v;

  const int draws = 100000;
  std::vector<long> counts(dens.size(), 0);
  Rng rng = make_rng(99, Stream::Init);
  for (int rep = 0; rep < draws; ++rep) {
    auto prop = st.build_doc_proposal(0, 0);
    auto [zz, yy] = st.sample_token(0, 0, 1, *prop, rng);
    counts[zz < cfg.k_common ? 2 * zz + yy : cfg.k_common + zz]++;
  }
  double tv = 0.0;
  for (std::size_t a = 0; a < dens.size(); ++a)
    tv += std::abs(counts[a] / double(draws) - dens[a] / total);
  tv /= 2.0;

  Outcome out;
  out.ok = tv <= 0.02;
  out.detail = "total variation " + fmt(tv) + " vs exact enumeration over " +
               std::to_string(draws) + " draws (limit 0.02)";
  return out;
}

// --- 2: alias tables vs chi-square ------------------------------------------
Outcome criterion2() {
  Rng rng = make_rng(271, Stream::Init);
  const int n_draws = 1000000;
  double worst_p = 1.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int k = 2 + static_cast<int>(uniform01(rng) * 63) % 63;
    std::vector<double> weights(k);
    for (double& v : weights) v = 0.01 + uniform01(rng) * 10.0;
    AliasTable table(weights);
    std::vector<long> counts(k, 0);
    for (int i = 0; i < n_draws; ++i) counts[table.draw(rng)]++;
    double stat = 0.0;
    for (int i = 0; i < k; ++i) {
      const double expect = table.density(i) * n_draws;
      const double diff = counts[i] - expect;
      stat += diff * diff / expect;
    }
    worst_p = std::min(worst_p, chi_square_pvalue(stat, k - 1));
  }
  Outcome out;
  out.ok = worst_p > 1e-3;
  out.detail = "minimum chi-square p-value " + fmt(worst_p) +
               " over 100 weight vectors, 1e6 draws each (limit 1e-3)";
  return out;
}

// --- 3: Stirling ratio cache vs arbitrary-precision recurrence -------------
Outcome criterion3() {
  const auto table = exact_stirling_table(31);
  StirlingCache cache;
  double worst = 0.0;
  for (int n = 1; n <= 30; ++n) {
    for (int t = 1; t <= n; ++t) {
      const double both = cache.ratio(n, t, StirlingCache::Ratio::IncrBoth);
      const double incn = cache.ratio(n, t, StirlingCache::Ratio::IncrN);
      const double ex = table[n][t].convert_to<double>();
      const double exact_both = table[n + 1][t + 1].convert_to<double>() / ex;
      const double exact_incn = table[n + 1][t].convert_to<double>() / ex;
      worst = std::max(worst, std::abs(both - exact_both) / exact_both);
      worst = std::max(worst, std::abs(incn - exact_incn) / exact_incn);
    }
  }
  Outcome out;
  out.ok = worst < 1e-10;
  out.detail = "max relative error " + fmt(worst) +
               " over all ratios with 1 <= t <= n <= 30 (limit 1e-10)";
  return out;
}

// --- 4: seating conditional hand values + CRP invariants over 200 sweeps ---
Outcome criterion4() {
  Outcome out;
  {
    // one doc [0,1], both tokens on one topic; remove the second token and
    // hand-evaluate all four seating cases (concentrations 2, 3, 0.7)
    auto corpus = toy_corpus({{{0, 1}}});
    ChdpConfig cfg;
    cfg.init_common = 1;
    cfg.init_spec = {};
    cfg.beta = 0.5;
    cfg.seed = 3;
    ChdpState st = ChdpState::init(corpus, 2, cfg);
    st.gamma_conc = 2.0;
    st.alpha0 = 3.0;
    st.alpha1 = 0.7;
    st.decrement(0, 0, 1);
    const int topic = st.z[0][0][0];
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    if (!close(st.crp_weight(0, 0, topic, kTableNone), 4.0 / 0.7 * 0.5) ||
        !close(st.crp_weight(0, 0, topic, kTableDoc), 0.5) ||
        !close(st.crp_weight(0, 0, topic, kTableCollection), 0.5) ||
        st.crp_weight(0, 0, topic, kTableRoot) != 0.0 ||
        !close(st.crp_weight(0, 0, -1, kTableRoot), 2.0 * 3.0 / 3.0)) {
      out.ok = false;
      out.detail = "hand-evaluated seating weights disagree with the sampler";
      return out;
    }
    st.increment(0, 0, 1, topic, kTableNone, 1);
  }

  SynthSpec spec;
  spec.docs_per_collection = {25, 25};
  spec.tokens_per_doc = 25;
  spec.vocab_size = 80;
  spec.k_common = 3;
  spec.k_per_collection = {4, 4};
  auto r = generate(spec, 17);
  auto corpus = std::make_shared<Corpus>(r.corpus);
  ChdpConfig cfg;
  cfg.init_common = 3;
  cfg.init_spec = {1, 1};
  cfg.seed = 6;
  ChdpState st = ChdpState::init(corpus, r.vocab.size(), cfg);
  for (int s = 0; s < 200; ++s) {
    st.sweep();
    Rng rng = make_rng(cfg.seed, Stream::Concentration,
                       static_cast<std::uint64_t>(st.sweeps_done));
    st.resample_concentrations(rng);
    try {
      st.check_invariants();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = "invariant violated after sweep " +
                   std::to_string(st.sweeps_done) + ": " + e.what();
      return out;
    }
  }
  out.detail =
      "hand seating weights match to 1e-12; customer/table invariants held "
      "after each of 200 sweeps on a 50-doc corpus (final topics " +
      std::to_string(st.live_topics) + ")";
  return out;
}

CldaState train_fixed(std::shared_ptr<const Corpus> corpus, int vocab,
                      int k_common, std::vector<int> k_per, int sweeps,
                      std::uint64_t seed, bool hyperopt, int threads = 1,
                      double beta = 0.01) {
  CldaConfig cfg;
  cfg.beta = beta;
  cfg.k_common = k_common;
  cfg.k_per_collection = std::move(k_per);
  cfg.sweeps = sweeps;
  cfg.seed = seed;
  cfg.threads = threads;
  cfg.eval_interval = 0;
  if (hyperopt) {
    cfg.hyperopt_interval = 10;
    cfg.hyperopt_burnin = std::min(50, sweeps / 2);
  } else {
    cfg.hyperopt_interval = sweeps + 1;
  }
  CldaState st = CldaState::init(corpus, vocab, cfg);
  train_clda(st, nullptr);
  return st;
}

// --- 5: identical-structure fits land on the same perplexity ---------------
Outcome criterion5() {
  SynthSpec spec;
  spec.docs_per_collection = {200, 200};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 500;
  spec.k_common = 10;
  spec.k_per_collection = {10, 10};
  auto r = generate(spec, 51);
  auto [train, heldout] = holdout_split(r.corpus, 0.2, 51);
  auto corpus = std::make_shared<Corpus>(train);

  CldaState a =
      train_fixed(corpus, r.vocab.size(), 10, {10, 10}, 400, 100, true, 1, 0.05);
  CldaState b =
      train_fixed(corpus, r.vocab.size(), 10, {10, 10}, 400, 200, true, 1, 0.05);
  const double ppx_a = perplexity_of(a.snapshot(), heldout, 20, 1);
  const double ppx_b = perplexity_of(b.snapshot(), heldout, 20, 1);
  const double ppx_truth = perplexity_of(r.truth.as_snapshot(), heldout, 20, 1);

  const double rel_ab = std::abs(ppx_a - ppx_b) / std::min(ppx_a, ppx_b);
  const double rel_a = std::abs(ppx_a - ppx_truth) / ppx_truth;
  const double rel_b = std::abs(ppx_b - ppx_truth) / ppx_truth;
  Outcome out;
  out.ok = rel_ab <= 0.05 && rel_a <= 0.15 && rel_b <= 0.15;
  out.detail = "fit perplexities " + fmt(ppx_a) + " / " + fmt(ppx_b) +
               " (rel gap " + fmt(rel_ab) + ", limit 0.05); truth " +
               fmt(ppx_truth) + " (rel " + fmt(rel_a) + " / " + fmt(rel_b) +
               ", limit 0.15)";
  return out;
}

// --- 6: sigma separates common from non-common topics ----------------------
Outcome criterion6() {
  SynthSpec spec;
  spec.docs_per_collection = {500, 500};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 1000;
  spec.k_common = 5;
  spec.k_per_collection = {20, 20};
  spec.delta1 = spec.delta2 = 5.0;
  auto r = generate(spec, 62);
  auto corpus = std::make_shared<Corpus>(r.corpus);

  // both fits use 20 all-common topics on this partially-shared corpus; the
  // asymmetric-alpha fit should push sigma toward 0 for the 15 topics that
  // are not actually shared, the fixed symmetric-alpha fit should not
  CldaState tuned =
      train_fixed(corpus, r.vocab.size(), 20, {20, 20}, 200, 301, true);
  CldaState fixed =
      train_fixed(corpus, r.vocab.size(), 20, {20, 20}, 200, 302, false);
  Distinguishability dt = distinguishability(tuned.estimate_sigma(), 5);
  Distinguishability df = distinguishability(fixed.estimate_sigma(), 5);
  const double gap_t = dt.common_mean - dt.non_common_mean;
  const double gap_f = df.common_mean - df.non_common_mean;

  Outcome out;
  out.ok = dt.common_mean >= 0.35 && dt.common_mean <= 0.65 &&
           dt.non_common_mean < 0.15 && gap_f < gap_t;
  out.detail = "tuned fit sigma means " + fmt(dt.common_mean) + " (common, in"
               " [0.35, 0.65]) / " + fmt(dt.non_common_mean) +
               " (non-common, < 0.15); fixed-alpha gap " + fmt(gap_f) +
               " < tuned gap " + fmt(gap_t);
  return out;
}

// --- 7: left-to-right estimator vs exact enumeration -----------------------
Outcome criterion7() {
  Rng rng = make_rng(7, Stream::Init);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int k_common = 1 + rep % 3;
    TopicModelSnapshot m;
    m.kind = "clda";
    m.vocab_size = 6;
    m.k_common = k_common;
    m.k_per_collection = {k_common, k_common};
    m.eta = {1.0, 1.0};
    auto simplex = [&](int n) {
      std::vector<double> row(n);
      double sum = 0.0;
      for (double& v : row) {
        v = 0.05 + uniform01(rng);
        sum += v;
      }
      for (double& v : row) v /= sum;
      return row;
    };
    for (int t = 0; t < k_common; ++t) {
      m.sigma.push_back(0.1 + 0.8 * uniform01(rng));
      m.phi_shared.push_back(simplex(6));
    }
    m.alpha.resize(2);
    m.phi_spec.resize(2);
    for (int c = 0; c < 2; ++c)
      for (int t = 0; t < k_common; ++t) {
        m.alpha[c].push_back(0.1 + uniform01(rng));
        m.phi_spec[c].push_back(simplex(6));
      }

    Corpus heldout;
    heldout.collection_names = {"c0", "c1"};
    heldout.collections.resize(2);
    Document doc;
    doc.id = "d";
    doc.collection = 0;
    const int len = 4 + static_cast<int>(uniform01(rng) * 5) % 5;
    for (int i = 0; i < len; ++i)
      doc.tokens.push_back(static_cast<int>(uniform01(rng) * 6) % 6);
    heldout.collections[0].push_back(doc);

    const double exact =
        std::log(exact_doc_likelihood(m, heldout.collections[0][0], 0));
    const auto est = left_to_right_perplexity(m, heldout, 5000, 70 + rep);
    worst = std::max(worst, std::abs(est.loglik - exact) / std::abs(exact));
  }
  Outcome out;
  out.ok = worst < 0.01;
  out.detail = "max relative log-likelihood error " + fmt(worst) +
               " over 20 snapshots at 5000 particles (limit 0.01)";
  return out;
}

// --- 8: coherence decomposition identity ------------------------------------
Outcome criterion8() {
  SynthSpec spec;
  spec.docs_per_collection = {60, 60};
  spec.tokens_per_doc = 30;
  spec.vocab_size = 200;
  spec.k_common = 4;
  spec.k_per_collection = {4, 4};
  auto r = generate(spec, 81);
  auto index = CooccurrenceIndex::build(r.corpus, r.vocab.size());

  Rng rng = make_rng(82, Stream::Init);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 3 + static_cast<int>(uniform01(rng) * 4) % 4;
    std::vector<int> shared, specific;
    std::vector<char> used(r.vocab.size(), 0);
    while (int(shared.size()) < n || int(specific.size()) < n) {
      const int w =
          static_cast<int>(uniform01(rng) * r.vocab.size()) % r.vocab.size();
      if (used[w] || index.doc_freq(w) <= 0.0) continue;
      used[w] = 1;
      if (int(shared.size()) < n)
        shared.push_back(w);
      else
        specific.push_back(w);
    }
    std::vector<int> all = shared;
    all.insert(all.end(), specific.begin(), specific.end());

    // the union's pairs split exactly into shared, specific and cross pairs
    const double lhs =
        coherence(all, index).value * (2.0 * n) * (2.0 * n - 1.0) / 2.0;
    const double rhs = coherence(shared, index).value * n * (n - 1.0) / 2.0 +
                       coherence(specific, index).value * n * (n - 1.0) / 2.0 +
                       mutual_coherence(shared, specific, index).value * n * n;
    worst = std::max(worst,
                     std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  Outcome out;
  out.ok = worst <= 1e-9;
  out.detail = "max decomposition residual " + fmt(worst) +
               " over 50 random word lists (limit 1e-9)";
  return out;
}

// --- 9: parallel throughput and agreement -----------------------------------
Outcome criterion9() {
  const unsigned hw = std::thread::hardware_concurrency();

  SynthSpec spec;
  spec.docs_per_collection = {2500, 2500};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 2000;
  spec.k_common = 200;
  spec.k_per_collection = {200, 200};
  auto r = generate(spec, 91);
  auto [train, heldout] = holdout_split(r.corpus, 0.2, 91);
  auto corpus = std::make_shared<Corpus>(train);

  auto run = [&](int threads, double* seconds) {
    CldaConfig cfg;
    cfg.k_common = 200;
    cfg.k_per_collection = {200, 200};
    cfg.sweeps = 20;
    cfg.seed = 92;
    cfg.threads = threads;
    cfg.eval_interval = 0;
    cfg.hyperopt_interval = 10;
    cfg.hyperopt_burnin = 10;
    CldaState st = CldaState::init(corpus, r.vocab.size(), cfg);
    TrainResult res = train_clda(st, nullptr);
    *seconds = res.trace.empty() ? 0.0 : res.trace.back().seconds;
    return perplexity_of(st.snapshot(), heldout, 5, 1);
  };

  double sec1 = 0.0, sec4 = 0.0;
  const double ppx1 = run(1, &sec1);
  const double ppx4 = run(4, &sec4);
  const double rel = std::abs(ppx4 - ppx1) / ppx1;
  const double speedup = sec4 > 0.0 ? sec1 / sec4 : 0.0;

  Outcome out;
  if (rel > 0.03) {
    out.ok = false;
    out.detail = "4-thread perplexity " + fmt(ppx4) + " vs 1-thread " +
                 fmt(ppx1) + ": relative gap " + fmt(rel) + " exceeds 0.03";
    return out;
  }
  if (hw < 4) {
    out.skipped = true;
    out.detail = "throughput needs >= 4 cores, found " + std::to_string(hw) +
                 "; agreement half verified: 4-thread perplexity " +
                 fmt(ppx4) + " within " + fmt(rel) + " of 1-thread " +
                 fmt(ppx1) + " (limit 0.03)";
    return out;
  }
  out.ok = speedup >= 2.5;
  out.detail = "4-thread speedup " + fmt(speedup) +
               " (limit 2.5); perplexity gap " + fmt(rel) + " (limit 0.03)";
  return out;
}

// --- 10: true asymmetric topic counts beat both forced-symmetric fits ------
Outcome criterion10() {
  SynthSpec spec;
  spec.docs_per_collection = {300, 300};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 1000;
  spec.k_common = 20;
  spec.k_per_collection = {20, 40};
  auto r = generate(spec, 105);
  auto [train, heldout] = holdout_split(r.corpus, 0.2, 105);
  auto corpus = std::make_shared<Corpus>(train);
  const int V = r.vocab.size();

  CldaState truek =
      train_fixed(corpus, V, 20, {20, 40}, 300, 110, true, 1, 0.05);
  CldaState cc20 =
      train_fixed(corpus, V, 20, {20, 20}, 300, 111, true, 1, 0.05);
  CldaState cc40 =
      train_fixed(corpus, V, 40, {40, 40}, 300, 112, true, 1, 0.05);
  const double ppx = perplexity_of(truek.snapshot(), heldout, 20, 2);
  const double p20 = perplexity_of(cc20.snapshot(), heldout, 20, 2);
  const double p40 = perplexity_of(cc40.snapshot(), heldout, 20, 2);
  const double best = std::min(p20, p40);

  Outcome out;
  out.ok = ppx <= best * 1.05;
  out.detail = "true-count fit perplexity " + fmt(ppx) +
               " vs best symmetric fit " + fmt(best) + " (K=20: " + fmt(p20) +
               ", K=40: " + fmt(p40) + "; limit best * 1.05)";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1-10>" << std::endl;
    return 2;
  }
  const int n = std::atoi(argv[1]);
  Outcome out;
  try {
    switch (n) {
      case 1: out = criterion1(); break;
      case 2: out = criterion2(); break;
      case 3: out = criterion3(); break;
      case 4: out = criterion4(); break;
      case 5: out = criterion5(); break;
      case 6: out = criterion6(); break;
      case 7: out = criterion7(); break;
      case 8: out = criterion8(); break;
      case 9: out = criterion9(); break;
      case 10: out = criterion10(); break;
      default:
        std::cerr << "usage: acceptance <criterion 1-10>" << std::endl;
        return 2;
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  const char* verdict = out.skipped ? "SKIP" : out.ok ? "PASS" : "FAIL";
  std::cout << verdict << " criterion " << n << ": " << out.detail
            << std::endl;
  return out.ok || out.skipped ? 0 : 1;
}
