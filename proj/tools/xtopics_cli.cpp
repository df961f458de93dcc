#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xtopics/chdp.hpp"
#include "xtopics/checkpoint.hpp"
#include "xtopics/clda.hpp"
#include "xtopics/corpus.hpp"
#include "xtopics/eval.hpp"
#include "xtopics/log.hpp"
#include "xtopics/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xtopics;

namespace {

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config file must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config file: ") + e.what());
  }
}

// Flags beat the config file; the config file beats built-in defaults.
template <typename T>
void apply_config(const json& cfg, const CLI::App& app, const std::string& flag,
                  const std::string& key, T& var) {
  if (app.count(flag) > 0) return;
  if (!cfg.contains(key)) return;
  try {
    var = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory: " + dir);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const fs::path& path) {
  auto out = open_out(path);
  out << "sweep,seconds,perplexity,acceptance,tokens_per_sec,live_topics\n";
  out << std::setprecision(17);
  for (const auto& r : trace) {
    out << r.sweep << ',' << r.seconds << ',';
    if (std::isnan(r.perplexity))
      out << "";
    else
      out << r.perplexity;
    out << ',' << r.acceptance << ',' << r.tokens_per_sec << ','
        << r.live_topics << '\n';
  }
}

struct TrainArgs {
  std::string model = "clda";
  std::string corpus_path;
  std::string out_dir = ".";
  std::string resume_path;
  std::string config_path;
  int k_common = 10;
  std::vector<int> k;  // per collection (clda); extra initial topics (chdp)
  double beta = 0.01;
  double delta1 = 1.0;
  double delta2 = 1.0;
  std::vector<double> alpha_prior{1.0, 1.0};
  int sweeps = -1;  // model-dependent default
  int mh_steps = 2;
  int threads = 1;
  std::uint64_t seed = 1;
  double holdout = 0.0;
  int particles = 5;
  int eval_interval = 10;
  int hyperopt_interval = 20;
};

int cmd_train(const TrainArgs& a, const CLI::App& app) {
  if (a.model != "clda" && a.model != "cclda" && a.model != "chdp")
    throw UsageError("unknown model: " + a.model);
  if (a.corpus_path.empty()) throw UsageError("--corpus is required");
  if (a.alpha_prior.size() != 2)
    throw UsageError("--alpha-prior wants two values: shape,rate");
  ensure_dir(a.out_dir);
  const fs::path out(a.out_dir);

  auto [full, vocab] = ingest_corpus_file(a.corpus_path);
  auto corpus = std::make_shared<Corpus>();
  Corpus heldout;
  const Corpus* heldout_ptr = nullptr;
  if (a.holdout > 0.0) {
    auto [tr, te] = holdout_split(full, a.holdout, a.seed);
    *corpus = std::move(tr);
    heldout = std::move(te);
    heldout_ptr = &heldout;
    auto hf = open_out(out / "heldout.jsonl");
    write_corpus(heldout, vocab, hf);
  } else {
    *corpus = std::move(full);
  }

  {
    auto vf = open_out(out / "vocab.tsv");
    vocab.dump(vf);
  }

  TrainResult result;
  if (a.model == "chdp") {
    ChdpConfig cfg;
    cfg.init_common = a.k_common;
    cfg.init_spec = a.k;
    cfg.beta = a.beta;
    cfg.delta1 = a.delta1;
    cfg.delta2 = a.delta2;
    cfg.sweeps = a.sweeps < 0 ? 1500 : a.sweeps;
    cfg.mh_steps = a.mh_steps;
    cfg.threads = a.threads;
    cfg.seed = a.seed;
    cfg.eval_interval = a.eval_interval;
    cfg.eval_particles = a.particles;

    ChdpState state;
    if (!a.resume_path.empty()) {
      state = load_chdp_checkpoint_file(a.resume_path, corpus);
      if (state.vocab_hash != vocab.hash())
        throw DataError("resume: vocabulary hash mismatch");
      if (app.count("--sweeps") > 0) state.config.sweeps = cfg.sweeps;
    } else {
      state = ChdpState::init(corpus, vocab.size(), cfg);
      state.vocab_hash = vocab.hash();
    }
    result = train_chdp(state, heldout_ptr);
    auto cf = open_out(out / "checkpoint.bin");
    save_checkpoint(state, cf);
  } else {
    CldaConfig cfg;
    cfg.k_common = a.k_common;
    if (a.model == "cclda" || a.k.empty())
      cfg.k_per_collection.assign(corpus->num_collections(), a.k_common);
    else
      cfg.k_per_collection = a.k;
    cfg.beta = a.beta;
    cfg.delta1 = a.delta1;
    cfg.delta2 = a.delta2;
    cfg.alpha_prior_shape = a.alpha_prior[0];
    cfg.alpha_prior_rate = a.alpha_prior[1];
    cfg.sweeps = a.sweeps < 0 ? 1000 : a.sweeps;
    cfg.mh_steps = a.mh_steps;
    cfg.threads = a.threads;
    cfg.seed = a.seed;
    cfg.eval_interval = a.eval_interval;
    cfg.hyperopt_interval = a.hyperopt_interval;
    cfg.eval_particles = a.particles;

    CldaState state;
    if (!a.resume_path.empty()) {
      state = load_clda_checkpoint_file(a.resume_path, corpus);
      if (state.vocab_hash != vocab.hash())
        throw DataError("resume: vocabulary hash mismatch");
      if (app.count("--sweeps") > 0) state.config.sweeps = cfg.sweeps;
    } else {
      state = CldaState::init(corpus, vocab.size(), cfg);
      state.vocab_hash = vocab.hash();
    }
    result = train_clda(state, heldout_ptr);
    auto cf = open_out(out / "checkpoint.bin");
    save_checkpoint(state, cf);
  }

  write_trace_csv(result.trace, out / "trace.csv");
  json summary{{"model", a.model},
               {"sweeps_run", result.sweeps_run},
               {"converged", result.converged},
               {"live_topics", result.trace.empty()
                                   ? 0
                                   : result.trace.back().live_topics},
               {"seed", a.seed},
               {"threads", a.threads}};
  auto sf = open_out(out / "train_summary.json");
  sf << summary.dump(2) << '\n';
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

// Loads whichever model the checkpoint holds, without a corpus (snapshot-only
// uses); sigma_out receives the clda sigma estimate when applicable.
TopicModelSnapshot snapshot_from_checkpoint(const std::string& path,
                                            std::vector<double>* sigma_out) {
  const auto info = read_checkpoint_info_file(path);
  if (info.kind == "clda") {
    CldaState st = load_clda_checkpoint_file(path, nullptr);
    if (sigma_out) *sigma_out = st.estimate_sigma();
    return st.snapshot();
  }
  ChdpState st = load_chdp_checkpoint_file(path, nullptr);
  if (sigma_out) sigma_out->clear();
  return st.snapshot();
}

int cmd_eval(const std::string& checkpoint_path, const std::string& corpus_path,
             const std::string& heldout_path, double holdout_frac,
             std::uint64_t seed, bool want_perplexity, bool want_coherence,
             bool want_disting, int k_common_true, int particles, int top_n,
             const std::string& reference_path, const std::string& out_dir) {
  if (corpus_path.empty()) throw UsageError("--corpus is required");
  ensure_dir(out_dir);
  const fs::path out(out_dir);

  auto [corpus, vocab] = ingest_corpus_file(corpus_path);
  const auto info = read_checkpoint_info_file(checkpoint_path);
  if (info.vocab_hash != vocab.hash())
    throw DataError("eval: vocabulary hash mismatch between corpus and checkpoint");

  std::vector<double> sigma;
  const TopicModelSnapshot model =
      snapshot_from_checkpoint(checkpoint_path, &sigma);

  json report{{"model", model.kind}, {"checkpoint", checkpoint_path}};

  if (want_perplexity) {
    Corpus heldout;
    if (!heldout_path.empty()) {
      heldout = ingest_with_vocabulary_file(heldout_path, vocab,
                                            corpus.collection_names);
    } else if (holdout_frac > 0.0) {
      auto [tr, te] = holdout_split(corpus, holdout_frac, seed);
      heldout = std::move(te);
    } else {
      throw UsageError("--perplexity needs --heldout FILE or --holdout FRAC");
    }
    const auto ppx = left_to_right_perplexity(model, heldout, particles, seed);
    json p{{"perplexity", ppx.perplexity},
           {"per_collection", ppx.per_collection},
           {"tokens", ppx.tokens},
           {"loglik", ppx.loglik},
           {"particles", ppx.particles},
           {"oov_skipped", ppx.oov_skipped}};
    report["perplexity"] = std::move(p);
  }

  if (want_coherence) {
    Corpus reference;
    if (!reference_path.empty())
      reference = ingest_with_vocabulary_file(reference_path, vocab,
                                              corpus.collection_names);
    const Corpus& ref = reference_path.empty() ? corpus : reference;
    const auto index = CooccurrenceIndex::build(ref, vocab.size());

    auto top_words = [&](const std::vector<double>& phi) {
      std::vector<int> ids(phi.size());
      for (std::size_t w = 0; w < phi.size(); ++w) ids[w] = static_cast<int>(w);
      const int n = std::min<int>(top_n, static_cast<int>(phi.size()));
      std::partial_sort(ids.begin(), ids.begin() + n, ids.end(),
                        [&](int x, int y) {
                          if (phi[x] != phi[y]) return phi[x] > phi[y];
                          return x < y;
                        });
      ids.resize(n);
      return ids;
    };

    auto cf = open_out(out / "coherence.csv");
    cf << "topic,shared_coherence";
    for (const auto& name : corpus.collection_names)
      cf << ",specific_coherence_" << name << ",mutual_coherence_" << name;
    cf << '\n';
    cf << std::setprecision(17);

    double sum_shared = 0.0, sum_spec = 0.0, sum_mc = 0.0;
    int n_spec = 0;
    for (int t = 0; t < model.k_common; ++t) {
      const auto shared = top_words(model.phi_shared[t]);
      const auto cs = coherence(shared, index);
      sum_shared += cs.value;
      cf << t << ',' << cs.value;
      for (int c = 0; c < static_cast<int>(model.phi_spec.size()); ++c) {
        const auto spec = top_words(model.phi_spec[c][t]);
        const auto cc = coherence(spec, index);
        const auto mc = mutual_coherence(shared, spec, index);
        sum_spec += cc.value;
        sum_mc += mc.value;
        ++n_spec;
        cf << ',' << cc.value << ',' << mc.value;
      }
      cf << '\n';
    }
    json coh{{"top_n", top_n},
             {"avg_shared_coherence",
              model.k_common > 0 ? sum_shared / model.k_common : 0.0},
             {"avg_specific_coherence", n_spec > 0 ? sum_spec / n_spec : 0.0},
             {"avg_mutual_coherence", n_spec > 0 ? sum_mc / n_spec : 0.0}};
    report["coherence"] = std::move(coh);
  }

  if (want_disting) {
    if (sigma.empty())
      throw UsageError(
          "--distinguishability requires a clda/cclda checkpoint");
    const int k_true = k_common_true > 0 ? k_common_true : model.k_common;
    const auto d = distinguishability(sigma, k_true);
    json dj{{"k_common_true", k_true},
            {"sigma_common_mean", d.common_mean},
            {"sigma", sigma}};
    if (d.has_non_common) dj["sigma_non_common_mean"] = d.non_common_mean;
    report["distinguishability"] = std::move(dj);
  }

  auto rf = open_out(out / "eval.json");
  rf << report.dump(2) << '\n';
  std::cout << report.dump(2) << std::endl;
  return 0;
}

Vocabulary vocab_for(const std::string& vocab_path,
                     const std::string& corpus_path) {
  if (!vocab_path.empty()) {
    std::ifstream in(vocab_path);
    if (!in) throw DataError("cannot open vocabulary file: " + vocab_path);
    return Vocabulary::load(in);
  }
  if (!corpus_path.empty()) return ingest_corpus_file(corpus_path).second;
  throw UsageError("need --vocab or --corpus to name the words");
}

void print_word_columns(std::ostream& os,
                        const std::vector<std::vector<std::string>>& columns,
                        const std::vector<std::string>& headers) {
  std::vector<std::size_t> widths(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& w : columns[c]) widths[c] = std::max(widths[c], w.size());
  }
  auto row = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c)
      os << "  " << std::left << std::setw(static_cast<int>(widths[c]))
         << cells[c];
    os << '\n';
  };
  row(headers);
  std::size_t depth = 0;
  for (const auto& col : columns) depth = std::max(depth, col.size());
  for (std::size_t r = 0; r < depth; ++r) {
    std::vector<std::string> cells;
    for (const auto& col : columns)
      cells.push_back(r < col.size() ? col[r] : "");
    row(cells);
  }
}

int cmd_topics(const std::string& checkpoint_path, const std::string& vocab_path,
               const std::string& corpus_path, int top_n, bool as_json) {
  const Vocabulary vocab = vocab_for(vocab_path, corpus_path);
  const auto info = read_checkpoint_info_file(checkpoint_path);
  if (info.vocab_hash != vocab.hash())
    throw DataError("topics: vocabulary hash mismatch");

  const TopicModelSnapshot model = snapshot_from_checkpoint(checkpoint_path, nullptr);
  const int C = static_cast<int>(model.phi_spec.size());
  std::vector<std::string> coll_names;
  for (int c = 0; c < C; ++c) coll_names.push_back("c" + std::to_string(c));

  auto top_words = [&](const std::vector<double>& phi) {
    std::vector<int> ids(phi.size());
    for (std::size_t w = 0; w < phi.size(); ++w) ids[w] = static_cast<int>(w);
    const int n = std::min<int>(top_n, static_cast<int>(phi.size()));
    std::partial_sort(ids.begin(), ids.begin() + n, ids.end(), [&](int x, int y) {
      if (phi[x] != phi[y]) return phi[x] > phi[y];
      return x < y;
    });
    std::vector<std::string> words;
    for (int i = 0; i < n; ++i) words.push_back(vocab.word(ids[i]));
    return words;
  };

  json out = json::array();
  for (int t = 0; t < model.k_common; ++t) {
    std::vector<std::vector<std::string>> columns{top_words(model.phi_shared[t])};
    std::vector<std::string> headers{"shared"};
    for (int c = 0; c < C; ++c) {
      columns.push_back(top_words(model.phi_spec[c][t]));
      headers.push_back(coll_names[c]);
    }
    if (as_json) {
      json jt{{"topic", t}, {"shared", columns[0]}};
      for (int c = 0; c < C; ++c) jt[coll_names[c]] = columns[c + 1];
      if (t < static_cast<int>(model.sigma.size()))
        jt["sigma"] = model.sigma[t];
      out.push_back(std::move(jt));
    } else {
      std::cout << "topic " << t;
      if (t < static_cast<int>(model.sigma.size()))
        std::cout << "  (sigma " << std::setprecision(3) << model.sigma[t]
                  << ")";
      std::cout << '\n';
      print_word_columns(std::cout, columns, headers);
      std::cout << '\n';
    }
  }
  for (int c = 0; c < C; ++c) {
    for (int t = model.k_common; t < model.topics_for(c); ++t) {
      const auto words = top_words(model.phi_spec[c][t]);
      if (as_json) {
        out.push_back(json{{"topic", t}, {"collection", coll_names[c]},
                           {"words", words}});
      } else {
        std::cout << "topic " << t << "  (" << coll_names[c] << " only)\n";
        print_word_columns(std::cout, {words}, {coll_names[c]});
        std::cout << '\n';
      }
    }
  }
  if (as_json) std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_synth(const std::string& preset, int k, int k_common, int docs,
              int tokens_per_doc, int vocab_size, std::uint64_t seed,
              const std::string& out_dir, const CLI::App& sub) {
  SynthSpec spec = scenario_preset(preset, k, k_common);
  if (sub.count("--docs") > 0)
    spec.docs_per_collection.assign(spec.docs_per_collection.size(), docs);
  if (sub.count("--tokens-per-doc") > 0) spec.tokens_per_doc = tokens_per_doc;
  if (sub.count("--vocab-size") > 0) spec.vocab_size = vocab_size;
  spec.validate();

  ensure_dir(out_dir);
  const fs::path out(out_dir);
  const SynthResult result = generate(spec, seed);
  {
    auto f = open_out(out / "corpus.jsonl");
    write_corpus(result.corpus, result.vocab, f);
  }
  {
    auto f = open_out(out / "vocab.tsv");
    result.vocab.dump(f);
  }
  {
    auto f = open_out(out / "truth.json");
    write_ground_truth(result.truth, f);
  }
  std::cout << "wrote " << result.corpus.num_docs() << " documents, "
            << result.corpus.num_tokens() << " tokens to " << out_dir
            << std::endl;
  return 0;
}

int cmd_ingest(const std::string& input, const std::string& out_dir,
               int min_doc_freq, double max_doc_fraction) {
  PruneOptions prune;
  prune.min_doc_freq = min_doc_freq;
  prune.max_doc_fraction = max_doc_fraction;
  auto [corpus, vocab] = ingest_corpus_file(input, prune);
  ensure_dir(out_dir);
  const fs::path out(out_dir);
  {
    auto f = open_out(out / "corpus.jsonl");
    write_corpus(corpus, vocab, f);
  }
  {
    auto f = open_out(out / "vocab.tsv");
    vocab.dump(f);
  }
  std::cout << "ingested " << corpus.num_docs() << " documents, vocabulary "
            << vocab.size() << " words" << std::endl;
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"cross-collection topic models (C-LDA / C-HDP)"};
  app.require_subcommand(1);

  // --- ingest ---------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "normalize a JSONL corpus");
  std::string in_path, ingest_out = ".";
  int min_df = 1;
  double max_frac = 1.0;
  ingest->add_option("--input", in_path, "JSONL corpus")->required();
  ingest->add_option("--out", ingest_out, "output directory");
  ingest->add_option("--min-doc-freq", min_df,
                     "drop words in fewer documents than this");
  ingest->add_option("--max-doc-fraction", max_frac,
                     "drop words in more than this fraction of documents");

  // --- synth ----------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string preset, synth_out = ".";
  int synth_k = 50, synth_kc = 25, synth_docs = 1000, synth_tpd = 50,
      synth_v = 3000;
  std::uint64_t synth_seed = 1;
  synth->add_option("--preset", preset, "shared | asymmetric | partial")
      ->required();
  synth->add_option("--k", synth_k, "K (shared: K_common=K1=K2; asymmetric: K1)");
  synth->add_option("--k-common", synth_kc, "K_common (partial preset)");
  synth->add_option("--docs", synth_docs, "documents per collection");
  synth->add_option("--tokens-per-doc", synth_tpd, "tokens per document");
  synth->add_option("--vocab-size", synth_v, "vocabulary size");
  synth->add_option("--seed", synth_seed, "master seed");
  synth->add_option("--out", synth_out, "output directory");

  // --- train ----------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a model");
  TrainArgs ta;
  train->add_option("--model", ta.model, "clda | cclda | chdp");
  train->add_option("--corpus", ta.corpus_path, "JSONL corpus");
  train->add_option("--config", ta.config_path,
                    "JSON config file (flags override)");
  train->add_option("--k-common", ta.k_common,
                    "common topics (chdp: initial common topics)");
  train->add_option("--k", ta.k,
                    "topics per collection, repeatable "
                    "(chdp: initial extra topics per collection)");
  train->add_option("--beta", ta.beta, "word smoothing");
  train->add_option("--delta1", ta.delta1, "shared-branch prior weight");
  train->add_option("--delta2", ta.delta2, "specific-branch prior weight");
  train->add_option("--alpha-prior", ta.alpha_prior,
                    "gamma hyper-prior for alpha: shape,rate")
      ->delimiter(',')
      ->expected(2);
  train->add_option("--sweeps", ta.sweeps, "max sweeps (clda 1000, chdp 1500)");
  train->add_option("--mh-steps", ta.mh_steps, "MH steps per token");
  train->add_option("--threads", ta.threads, "sampler threads");
  train->add_option("--seed", ta.seed, "master seed");
  train->add_option("--holdout", ta.holdout,
                    "held-out document fraction (0 = none)");
  train->add_option("--particles", ta.particles,
                    "particles for in-training evaluation");
  train->add_option("--eval-interval", ta.eval_interval,
                    "sweeps between perplexity evaluations");
  train->add_option("--hyperopt-interval", ta.hyperopt_interval,
                    "sweeps between alpha re-estimations (clda)");
  train->add_option("--resume", ta.resume_path, "checkpoint to resume from");
  train->add_option("--out", ta.out_dir, "output directory");

  // --- eval -----------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string ev_ckpt, ev_corpus, ev_heldout, ev_reference, ev_out = ".",
                                                            ev_config;
  double ev_holdout = 0.0;
  std::uint64_t ev_seed = 1;
  bool ev_ppx = false, ev_coh = false, ev_dist = false;
  int ev_ktrue = 0, ev_particles = 20, ev_topn = 10;
  eval->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  eval->add_option("--corpus", ev_corpus, "training corpus (vocabulary source)");
  eval->add_option("--config", ev_config, "JSON config file (flags override)");
  eval->add_option("--heldout", ev_heldout, "held-out JSONL file");
  eval->add_option("--holdout", ev_holdout,
                   "held-out fraction split off --corpus (with --seed)");
  eval->add_option("--seed", ev_seed, "seed for split and particles");
  eval->add_flag("--perplexity", ev_ppx, "left-to-right held-out perplexity");
  eval->add_flag("--coherence", ev_coh, "topic coherence report");
  eval->add_flag("--distinguishability", ev_dist,
                 "sigma partition means (clda)");
  eval->add_option("--k-common-true", ev_ktrue,
                   "true common-topic count for distinguishability");
  eval->add_option("--particles", ev_particles, "left-to-right particles");
  eval->add_option("--top-n", ev_topn, "top words per topic for coherence");
  eval->add_option("--reference", ev_reference,
                   "external co-occurrence reference corpus");
  eval->add_option("--out", ev_out, "output directory");

  // --- topics ---------------------------------------------------------------
  auto* topics = app.add_subcommand("topics", "print top words per topic");
  std::string tp_ckpt, tp_vocab, tp_corpus;
  int tp_topn = 10;
  bool tp_json = false;
  topics->add_option("--checkpoint", tp_ckpt, "model checkpoint")->required();
  topics->add_option("--vocab", tp_vocab, "vocab.tsv written by train");
  topics->add_option("--corpus", tp_corpus, "corpus to rebuild the vocabulary");
  topics->add_option("--top-n", tp_topn, "words per component");
  topics->add_flag("--json", tp_json, "JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (ingest->parsed()) return cmd_ingest(in_path, ingest_out, min_df, max_frac);
  if (synth->parsed())
    return cmd_synth(preset, synth_k, synth_kc, synth_docs, synth_tpd, synth_v,
                     synth_seed, synth_out, *synth);
  if (train->parsed()) {
    const json cfg = load_config_file(ta.config_path);
    apply_config(cfg, *train, "--model", "model", ta.model);
    apply_config(cfg, *train, "--corpus", "corpus", ta.corpus_path);
    apply_config(cfg, *train, "--k-common", "k_common", ta.k_common);
    apply_config(cfg, *train, "--k", "k", ta.k);
    apply_config(cfg, *train, "--beta", "beta", ta.beta);
    apply_config(cfg, *train, "--delta1", "delta1", ta.delta1);
    apply_config(cfg, *train, "--delta2", "delta2", ta.delta2);
    apply_config(cfg, *train, "--alpha-prior", "alpha_prior", ta.alpha_prior);
    apply_config(cfg, *train, "--sweeps", "sweeps", ta.sweeps);
    apply_config(cfg, *train, "--mh-steps", "mh_steps", ta.mh_steps);
    apply_config(cfg, *train, "--threads", "threads", ta.threads);
    apply_config(cfg, *train, "--seed", "seed", ta.seed);
    apply_config(cfg, *train, "--holdout", "holdout", ta.holdout);
    apply_config(cfg, *train, "--particles", "particles", ta.particles);
    apply_config(cfg, *train, "--eval-interval", "eval_interval",
                 ta.eval_interval);
    apply_config(cfg, *train, "--hyperopt-interval", "hyperopt_interval",
                 ta.hyperopt_interval);
    apply_config(cfg, *train, "--out", "out", ta.out_dir);
    return cmd_train(ta, *train);
  }
  if (eval->parsed()) {
    const json cfg = load_config_file(ev_config);
    apply_config(cfg, *eval, "--corpus", "corpus", ev_corpus);
    apply_config(cfg, *eval, "--heldout", "heldout", ev_heldout);
    apply_config(cfg, *eval, "--holdout", "holdout", ev_holdout);
    apply_config(cfg, *eval, "--seed", "seed", ev_seed);
    apply_config(cfg, *eval, "--particles", "particles", ev_particles);
    apply_config(cfg, *eval, "--top-n", "top_n", ev_topn);
    apply_config(cfg, *eval, "--out", "out", ev_out);
    return cmd_eval(ev_ckpt, ev_corpus, ev_heldout, ev_holdout, ev_seed, ev_ppx,
                    ev_coh, ev_dist, ev_ktrue, ev_particles, ev_topn,
                    ev_reference, ev_out);
  }
  if (topics->parsed())
    return cmd_topics(tp_ckpt, tp_vocab, tp_corpus, tp_topn, tp_json);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << std::endl;
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
}
