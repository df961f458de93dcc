#include "xtopics/synth.hpp"

#include <cmath>
#include <memory>
#include <ostream>

#include "json.hpp"
#include "xtopics/alias.hpp"
#include "xtopics/rng.hpp"

namespace xtopics {

using nlohmann::json;

void SynthSpec::validate() const {
  if (docs_per_collection.empty())
    throw UsageError("synth: need at least one collection");
  if (docs_per_collection.size() != k_per_collection.size())
    throw UsageError("synth: docs_per_collection / k_per_collection mismatch");
  for (int d : docs_per_collection)
    if (d < 1) throw UsageError("synth: docs_per_collection must be >= 1");
  for (int kc : k_per_collection)
    if (kc < 1 || kc < k_common)
      throw UsageError("synth: K_c must satisfy 1 <= K_common <= K_c");
  if (vocab_size < 1) throw UsageError("synth: vocab_size must be >= 1");
  if (tokens_per_doc < 1) throw UsageError("synth: tokens_per_doc must be >= 1");
  if (!(beta > 0.0) || !(delta1 > 0.0) || !(delta2 > 0.0))
    throw UsageError("synth: beta/delta must be > 0");
}

std::vector<double> SynthSpec::alpha_for(int c) const {
  const int kc = k_per_collection.at(c);
  std::vector<double> alpha(kc);
  if (alpha_rule == AlphaRule::Asymmetric) {
    const double root = std::sqrt(static_cast<double>(kc));
    for (int i = 0; i < kc; ++i) alpha[i] = 1.0 / (i + root);
  } else {
    for (int i = 0; i < kc; ++i) alpha[i] = alpha_symmetric;
  }
  return alpha;
}

namespace {

std::vector<double> dirichlet_symmetric(int dim, double conc, Rng& rng) {
  std::gamma_distribution<double> gamma(conc, 1.0);
  std::vector<double> out(dim);
  double sum = 0.0;
  for (int i = 0; i < dim; ++i) {
    out[i] = gamma(rng);
    sum += out[i];
  }
  if (sum <= 0.0) {
    // pathological underflow for tiny concentrations: fall back to one-hot
    out.assign(dim, 0.0);
    out[static_cast<int>(uniform01(rng) * dim) % dim] = 1.0;
    return out;
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> dirichlet(const std::vector<double>& conc, Rng& rng) {
  std::vector<double> out(conc.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < conc.size(); ++i) {
    std::gamma_distribution<double> gamma(conc[i], 1.0);
    out[i] = gamma(rng);
    sum += out[i];
  }
  if (sum <= 0.0) {
    out.assign(conc.size(), 0.0);
    out[static_cast<int>(uniform01(rng) * conc.size()) % conc.size()] = 1.0;
    return out;
  }
  for (double& v : out) v /= sum;
  return out;
}

double beta_draw(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return (x + y) > 0.0 ? x / (x + y) : 0.5;
}

}  // namespace

SynthResult generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int C = static_cast<int>(spec.docs_per_collection.size());
  const int V = spec.vocab_size;
  Rng rng = make_rng(seed, Stream::Synth);

  SynthResult result;
  result.truth.spec = spec;
  for (int w = 0; w < V; ++w) result.vocab.add("w" + std::to_string(w));

  auto& truth = result.truth;
  truth.phi_shared.resize(spec.k_common);
  truth.sigma.resize(spec.k_common);
  std::vector<std::unique_ptr<AliasTable>> shared_alias(spec.k_common);
  for (int t = 0; t < spec.k_common; ++t) {
    truth.phi_shared[t] = dirichlet_symmetric(V, spec.beta, rng);
    truth.sigma[t] = beta_draw(spec.delta1, spec.delta2, rng);
    shared_alias[t] = std::make_unique<AliasTable>(truth.phi_shared[t]);
  }

  truth.phi_spec.resize(C);
  std::vector<std::vector<std::unique_ptr<AliasTable>>> spec_alias(C);
  truth.alpha.resize(C);
  for (int c = 0; c < C; ++c) {
    const int kc = spec.k_per_collection[c];
    truth.alpha[c] = spec.alpha_for(c);
    truth.phi_spec[c].resize(kc);
    spec_alias[c].resize(kc);
    for (int t = 0; t < kc; ++t) {
      truth.phi_spec[c][t] = dirichlet_symmetric(V, spec.beta, rng);
      spec_alias[c][t] = std::make_unique<AliasTable>(truth.phi_spec[c][t]);
    }
  }

  result.corpus.collections.resize(C);
  truth.theta.resize(C);
  truth.z.resize(C);
  truth.y.resize(C);
  for (int c = 0; c < C; ++c) {
    result.corpus.collection_names.push_back("c" + std::to_string(c));
    const int D = spec.docs_per_collection[c];
    truth.theta[c].resize(D);
    truth.z[c].resize(D);
    truth.y[c].resize(D);
    for (int d = 0; d < D; ++d) {
      auto theta = dirichlet(truth.alpha[c], rng);
      AliasTable theta_alias(theta);
      Document doc;
      doc.id = "c" + std::to_string(c) + "_d" + std::to_string(d);
      doc.collection = c;
      doc.tokens.resize(spec.tokens_per_doc);
      auto& zd = truth.z[c][d];
      auto& yd = truth.y[c][d];
      zd.resize(spec.tokens_per_doc);
      yd.resize(spec.tokens_per_doc);
      for (int i = 0; i < spec.tokens_per_doc; ++i) {
        const int topic = theta_alias.draw(rng);
        int yy = -1;
        int w;
        if (topic < spec.k_common) {
          yy = uniform01(rng) < truth.sigma[topic] ? 0 : 1;
          w = (yy == 0) ? shared_alias[topic]->draw(rng)
                        : spec_alias[c][topic]->draw(rng);
        } else {
          w = spec_alias[c][topic]->draw(rng);
        }
        doc.tokens[i] = w;
        zd[i] = topic;
        yd[i] = yy;
      }
      truth.theta[c][d] = std::move(theta);
      result.corpus.collections[c].push_back(std::move(doc));
    }
  }
  return result;
}

SynthSpec scenario_preset(const std::string& name, int k, int k_common) {
  SynthSpec spec;
  spec.docs_per_collection = {1000, 1000};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 3000;
  spec.beta = 0.01;
  spec.delta1 = spec.delta2 = 1.0;
  spec.scenario = name;
  if (name == "shared") {
    spec.k_common = k;
    spec.k_per_collection = {k, k};
  } else if (name == "asymmetric") {
    spec.k_common = 20;
    spec.k_per_collection = {k, 40};
  } else if (name == "partial") {
    spec.k_common = k_common;
    spec.k_per_collection = {50, 50};
    spec.delta1 = spec.delta2 = 5.0;
  } else {
    throw UsageError("synth: unknown preset '" + name + "'");
  }
  spec.validate();
  return spec;
}

TopicModelSnapshot GroundTruth::as_snapshot() const {
  TopicModelSnapshot m;
  m.kind = "truth";
  m.vocab_size = spec.vocab_size;
  m.k_common = spec.k_common;
  m.k_per_collection = spec.k_per_collection;
  m.eta.assign(spec.k_per_collection.size(), 1.0);
  m.alpha = alpha;
  m.sigma = sigma;
  m.phi_shared = phi_shared;
  m.phi_spec = phi_spec;
  return m;
}

namespace {

json spec_to_json(const SynthSpec& s) {
  return json{{"docs_per_collection", s.docs_per_collection},
              {"tokens_per_doc", s.tokens_per_doc},
              {"vocab_size", s.vocab_size},
              {"k_common", s.k_common},
              {"k_per_collection", s.k_per_collection},
              {"beta", s.beta},
              {"delta1", s.delta1},
              {"delta2", s.delta2},
              {"alpha_rule",
               s.alpha_rule == SynthSpec::AlphaRule::Asymmetric ? "asymmetric"
                                                                : "symmetric"},
              {"alpha_symmetric", s.alpha_symmetric},
              {"scenario", s.scenario}};
}

SynthSpec spec_from_json(const json& j) {
  SynthSpec s;
  s.docs_per_collection = j.at("docs_per_collection").get<std::vector<int>>();
  s.tokens_per_doc = j.at("tokens_per_doc").get<int>();
  s.vocab_size = j.at("vocab_size").get<int>();
  s.k_common = j.at("k_common").get<int>();
  s.k_per_collection = j.at("k_per_collection").get<std::vector<int>>();
  s.beta = j.at("beta").get<double>();
  s.delta1 = j.at("delta1").get<double>();
  s.delta2 = j.at("delta2").get<double>();
  s.alpha_rule = j.at("alpha_rule").get<std::string>() == "symmetric"
                     ? SynthSpec::AlphaRule::Symmetric
                     : SynthSpec::AlphaRule::Asymmetric;
  s.alpha_symmetric = j.at("alpha_symmetric").get<double>();
  s.scenario = j.at("scenario").get<std::string>();
  return s;
}

}  // namespace

void write_ground_truth(const GroundTruth& truth, std::ostream& out) {
  json j;
  j["spec"] = spec_to_json(truth.spec);
  j["alpha"] = truth.alpha;
  j["sigma"] = truth.sigma;
  j["phi_shared"] = truth.phi_shared;
  j["phi_spec"] = truth.phi_spec;
  j["theta"] = truth.theta;
  j["z"] = truth.z;
  j["y"] = truth.y;
  out << j.dump() << '\n';
}

GroundTruth read_ground_truth(std::istream& in) {
  json j = json::parse(in);
  GroundTruth t;
  t.spec = spec_from_json(j.at("spec"));
  t.alpha = j.at("alpha").get<decltype(t.alpha)>();
  t.sigma = j.at("sigma").get<decltype(t.sigma)>();
  t.phi_shared = j.at("phi_shared").get<decltype(t.phi_shared)>();
  t.phi_spec = j.at("phi_spec").get<decltype(t.phi_spec)>();
  t.theta = j.at("theta").get<decltype(t.theta)>();
  t.z = j.at("z").get<decltype(t.z)>();
  t.y = j.at("y").get<decltype(t.y)>();
  return t;
}

}  // namespace xtopics
