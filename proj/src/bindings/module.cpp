#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "xtopics/chdp.hpp"
#include "xtopics/checkpoint.hpp"
#include "xtopics/clda.hpp"
#include "xtopics/corpus.hpp"
#include "xtopics/eval.hpp"
#include "xtopics/synth.hpp"

namespace py = pybind11;
using namespace xtopics;

namespace {

std::shared_ptr<Corpus> as_shared(const Corpus& corpus) {
  return std::make_shared<Corpus>(corpus);
}

}  // namespace

PYBIND11_MODULE(_xtopics, m) {
  m.doc() = "cross-collection topic models (C-LDA / C-HDP)";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_ArithmeticError);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("id", &Document::id)
      .def_readwrite("collection", &Document::collection)
      .def_readwrite("tokens", &Document::tokens)
      .def("__len__", &Document::length);

  py::class_<Corpus, std::shared_ptr<Corpus>>(m, "Corpus")
      .def(py::init<>())
      .def_readwrite("collection_names", &Corpus::collection_names)
      .def_readwrite("collections", &Corpus::collections)
      .def_property_readonly("num_collections", &Corpus::num_collections)
      .def_property_readonly("num_docs", &Corpus::num_docs)
      .def_property_readonly("num_tokens", &Corpus::num_tokens);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("word", &Vocabulary::word, py::return_value_policy::copy)
      .def("__len__", &Vocabulary::size)
      .def_property_readonly("hash", &Vocabulary::hash);

  m.def(
      "load_corpus",
      [](const std::string& path, int min_doc_freq, double max_doc_fraction) {
        PruneOptions prune;
        prune.min_doc_freq = min_doc_freq;
        prune.max_doc_fraction = max_doc_fraction;
        auto [corpus, vocab] = ingest_corpus_file(path, prune);
        return py::make_tuple(as_shared(corpus), vocab);
      },
      py::arg("path"), py::arg("min_doc_freq") = 1,
      py::arg("max_doc_fraction") = 1.0,
      "Ingest a JSONL corpus; returns (corpus, vocabulary).");

  m.def(
      "holdout_split",
      [](const Corpus& corpus, double fraction, std::uint64_t seed) {
        auto [train, test] = holdout_split(corpus, fraction, seed);
        return py::make_tuple(as_shared(train), as_shared(test));
      },
      py::arg("corpus"), py::arg("fraction"), py::arg("seed"),
      "Stratified document split; returns (train, heldout).");

  // --- synthetic data -------------------------------------------------------
  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("docs_per_collection", &SynthSpec::docs_per_collection)
      .def_readwrite("tokens_per_doc", &SynthSpec::tokens_per_doc)
      .def_readwrite("vocab_size", &SynthSpec::vocab_size)
      .def_readwrite("k_common", &SynthSpec::k_common)
      .def_readwrite("k_per_collection", &SynthSpec::k_per_collection)
      .def_readwrite("beta", &SynthSpec::beta)
      .def_readwrite("delta1", &SynthSpec::delta1)
      .def_readwrite("delta2", &SynthSpec::delta2);

  m.def("scenario_preset", &scenario_preset, py::arg("name"),
        py::arg("k") = 50, py::arg("k_common") = 25);

  m.def(
      "generate",
      [](const SynthSpec& spec, std::uint64_t seed) {
        SynthResult r = generate(spec, seed);
        return py::make_tuple(as_shared(r.corpus), r.vocab,
                              r.truth.as_snapshot(), r.truth.sigma);
      },
      py::arg("spec"), py::arg("seed"),
      "Forward-simulate a corpus; returns (corpus, vocabulary, "
      "truth_snapshot, truth_sigma).");

  // --- model snapshot and evaluation ---------------------------------------
  py::class_<TopicModelSnapshot>(m, "TopicModelSnapshot")
      .def_readonly("kind", &TopicModelSnapshot::kind)
      .def_readonly("vocab_size", &TopicModelSnapshot::vocab_size)
      .def_readonly("k_common", &TopicModelSnapshot::k_common)
      .def_readonly("k_per_collection", &TopicModelSnapshot::k_per_collection)
      .def_readonly("eta", &TopicModelSnapshot::eta)
      .def_readonly("alpha", &TopicModelSnapshot::alpha)
      .def_readonly("sigma", &TopicModelSnapshot::sigma)
      .def_readonly("phi_shared", &TopicModelSnapshot::phi_shared)
      .def_readonly("phi_spec", &TopicModelSnapshot::phi_spec)
      .def("word_prob", &TopicModelSnapshot::word_prob, py::arg("collection"),
           py::arg("topic"), py::arg("word"));

  py::class_<PerplexityReport>(m, "PerplexityReport")
      .def_readonly("perplexity", &PerplexityReport::perplexity)
      .def_readonly("per_collection", &PerplexityReport::per_collection)
      .def_readonly("loglik", &PerplexityReport::loglik)
      .def_readonly("tokens", &PerplexityReport::tokens)
      .def_readonly("oov_skipped", &PerplexityReport::oov_skipped);

  m.def("left_to_right_perplexity", &left_to_right_perplexity,
        py::arg("model"), py::arg("heldout"), py::arg("particles") = 20,
        py::arg("seed") = 1,
        py::call_guard<py::gil_scoped_release>());

  py::class_<CooccurrenceIndex>(m, "CooccurrenceIndex")
      .def_static("build", &CooccurrenceIndex::build, py::arg("corpus"),
                  py::arg("vocab_size"))
      .def_property_readonly("num_docs", &CooccurrenceIndex::num_docs)
      .def("doc_freq", &CooccurrenceIndex::doc_freq)
      .def("co_doc_freq", &CooccurrenceIndex::co_doc_freq);

  m.def(
      "coherence",
      [](const std::vector<int>& words, const CooccurrenceIndex& index) {
        return coherence(words, index).value;
      },
      py::arg("top_words"), py::arg("index"));
  m.def(
      "mutual_coherence",
      [](const std::vector<int>& shared, const std::vector<int>& specific,
         const CooccurrenceIndex& index) {
        return mutual_coherence(shared, specific, index).value;
      },
      py::arg("shared_top"), py::arg("specific_top"), py::arg("index"));

  m.def(
      "distinguishability",
      [](std::vector<double> sigma, int k_common_true) {
        Distinguishability d =
            distinguishability(std::move(sigma), k_common_true);
        return py::make_tuple(d.common_mean,
                              d.has_non_common
                                  ? py::object(py::float_(d.non_common_mean))
                                  : py::object(py::none()));
      },
      py::arg("sigma"), py::arg("k_common_true"),
      "Means of the top-k sigma values and of the remainder.");

  py::class_<SweepStats>(m, "SweepStats")
      .def_readonly("tokens", &SweepStats::tokens)
      .def_readonly("seconds", &SweepStats::seconds)
      .def_readonly("acceptance_rate", &SweepStats::acceptance_rate)
      .def("tokens_per_sec", &SweepStats::tokens_per_sec);

  // --- C-LDA -----------------------------------------------------------------
  py::class_<CldaConfig>(m, "CldaConfig")
      .def(py::init<>())
      .def_readwrite("k_common", &CldaConfig::k_common)
      .def_readwrite("k_per_collection", &CldaConfig::k_per_collection)
      .def_readwrite("beta", &CldaConfig::beta)
      .def_readwrite("delta1", &CldaConfig::delta1)
      .def_readwrite("delta2", &CldaConfig::delta2)
      .def_readwrite("sweeps", &CldaConfig::sweeps)
      .def_readwrite("mh_steps", &CldaConfig::mh_steps)
      .def_readwrite("hyperopt_interval", &CldaConfig::hyperopt_interval)
      .def_readwrite("hyperopt_burnin", &CldaConfig::hyperopt_burnin)
      .def_readwrite("eval_interval", &CldaConfig::eval_interval)
      .def_readwrite("eval_particles", &CldaConfig::eval_particles)
      .def_readwrite("seed", &CldaConfig::seed)
      .def_readwrite("threads", &CldaConfig::threads)
      .def("is_cclda", &CldaConfig::is_cclda);

  py::class_<CldaState>(m, "CldaState")
      .def_static(
          "init",
          [](std::shared_ptr<Corpus> corpus, int vocab_size,
             const CldaConfig& config) {
            return std::make_unique<CldaState>(
                CldaState::init(corpus, vocab_size, config));
          },
          py::arg("corpus"), py::arg("vocab_size"), py::arg("config"))
      .def_readonly("sweeps_done", &CldaState::sweeps_done)
      .def_readonly("eta", &CldaState::eta)
      .def_readonly("alpha", &CldaState::alpha)
      .def_readwrite("vocab_hash", &CldaState::vocab_hash)
      .def("sweep", &CldaState::sweep,
           py::call_guard<py::gil_scoped_release>())
      .def("estimate_sigma", &CldaState::estimate_sigma)
      .def("snapshot", &CldaState::snapshot)
      .def("check_invariants", &CldaState::check_invariants);

  // --- C-HDP -----------------------------------------------------------------
  py::class_<ChdpConfig>(m, "ChdpConfig")
      .def(py::init<>())
      .def_readwrite("init_common", &ChdpConfig::init_common)
      .def_readwrite("init_spec", &ChdpConfig::init_spec)
      .def_readwrite("beta", &ChdpConfig::beta)
      .def_readwrite("delta1", &ChdpConfig::delta1)
      .def_readwrite("delta2", &ChdpConfig::delta2)
      .def_readwrite("sweeps", &ChdpConfig::sweeps)
      .def_readwrite("mh_steps", &ChdpConfig::mh_steps)
      .def_readwrite("eval_interval", &ChdpConfig::eval_interval)
      .def_readwrite("eval_particles", &ChdpConfig::eval_particles)
      .def_readwrite("seed", &ChdpConfig::seed)
      .def_readwrite("threads", &ChdpConfig::threads);

  py::class_<ChdpState>(m, "ChdpState")
      .def_static(
          "init",
          [](std::shared_ptr<Corpus> corpus, int vocab_size,
             const ChdpConfig& config) {
            return std::make_unique<ChdpState>(
                ChdpState::init(corpus, vocab_size, config));
          },
          py::arg("corpus"), py::arg("vocab_size"), py::arg("config"))
      .def_readonly("sweeps_done", &ChdpState::sweeps_done)
      .def_readonly("live_topics", &ChdpState::live_topics)
      .def_readonly("gamma_conc", &ChdpState::gamma_conc)
      .def_readonly("alpha0", &ChdpState::alpha0)
      .def_readonly("alpha1", &ChdpState::alpha1)
      .def_readwrite("vocab_hash", &ChdpState::vocab_hash)
      .def("sweep", &ChdpState::sweep,
           py::call_guard<py::gil_scoped_release>())
      .def("snapshot", &ChdpState::snapshot)
      .def("check_invariants", &ChdpState::check_invariants);

  // --- training drivers -------------------------------------------------------
  py::class_<TraceRow>(m, "TraceRow")
      .def_readonly("sweep", &TraceRow::sweep)
      .def_readonly("seconds", &TraceRow::seconds)
      .def_readonly("perplexity", &TraceRow::perplexity)
      .def_readonly("acceptance", &TraceRow::acceptance)
      .def_readonly("tokens_per_sec", &TraceRow::tokens_per_sec)
      .def_readonly("live_topics", &TraceRow::live_topics);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("model", &TrainResult::model)
      .def_readonly("trace", &TrainResult::trace)
      .def_readonly("sweeps_run", &TrainResult::sweeps_run)
      .def_readonly("converged", &TrainResult::converged);

  m.def(
      "train_clda",
      [](CldaState& state, const Corpus* heldout) {
        return train_clda(state, heldout);
      },
      py::arg("state"), py::arg("heldout") = nullptr,
      py::call_guard<py::gil_scoped_release>());
  m.def(
      "train_chdp",
      [](ChdpState& state, const Corpus* heldout) {
        return train_chdp(state, heldout);
      },
      py::arg("state"), py::arg("heldout") = nullptr,
      py::call_guard<py::gil_scoped_release>());

  // --- checkpoints -------------------------------------------------------------
  py::class_<CheckpointInfo>(m, "CheckpointInfo")
      .def_readonly("kind", &CheckpointInfo::kind)
      .def_readonly("vocab_size", &CheckpointInfo::vocab_size)
      .def_readonly("vocab_hash", &CheckpointInfo::vocab_hash)
      .def_readonly("sweeps_done", &CheckpointInfo::sweeps_done);

  m.def("read_checkpoint_info", &read_checkpoint_info_file, py::arg("path"));
  m.def(
      "save_checkpoint",
      [](const CldaState& state, const std::string& path) {
        save_checkpoint_file(state, path);
      },
      py::arg("state"), py::arg("path"));
  m.def(
      "save_checkpoint",
      [](const ChdpState& state, const std::string& path) {
        save_checkpoint_file(state, path);
      },
      py::arg("state"), py::arg("path"));
  m.def(
      "load_clda_checkpoint",
      [](const std::string& path, std::shared_ptr<Corpus> corpus) {
        return std::make_unique<CldaState>(
            load_clda_checkpoint_file(path, corpus));
      },
      py::arg("path"), py::arg("corpus") = nullptr);
  m.def(
      "load_chdp_checkpoint",
      [](const std::string& path, std::shared_ptr<Corpus> corpus) {
        return std::make_unique<ChdpState>(
            load_chdp_checkpoint_file(path, corpus));
      },
      py::arg("path"), py::arg("corpus") = nullptr);
}
