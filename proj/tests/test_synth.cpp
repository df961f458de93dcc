#include <cmath>
#include <sstream>

#include "doctest.h"
#include "xtopics/synth.hpp"

using namespace xtopics;

namespace {

SynthSpec small_spec() {
  SynthSpec spec;
  spec.docs_per_collection = {20, 30};
  spec.tokens_per_doc = 25;
  spec.vocab_size = 60;
  spec.k_common = 3;
  spec.k_per_collection = {5, 3};
  return spec;
}

}  // namespace

TEST_CASE("generation is deterministic under the seed") {
  auto a = generate(small_spec(), 42);
  auto b = generate(small_spec(), 42);
  REQUIRE(a.corpus.num_docs() == b.corpus.num_docs());
  for (int c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < a.corpus.collections[c].size(); ++d)
      CHECK(a.corpus.collections[c][d].tokens ==
            b.corpus.collections[c][d].tokens);
  CHECK(a.truth.sigma == b.truth.sigma);

  auto other = generate(small_spec(), 43);
  CHECK(other.corpus.collections[0][0].tokens !=
        a.corpus.collections[0][0].tokens);
}

TEST_CASE("shapes follow the spec exactly") {
  auto r = generate(small_spec(), 1);
  CHECK(r.corpus.num_collections() == 2);
  CHECK(r.corpus.collections[0].size() == 20);
  CHECK(r.corpus.collections[1].size() == 30);
  for (int c = 0; c < 2; ++c)
    for (const auto& doc : r.corpus.collections[c]) CHECK(doc.length() == 25);
  CHECK(r.vocab.size() == 60);
  CHECK(r.truth.sigma.size() == 3);
  CHECK(r.truth.phi_shared.size() == 3);
  CHECK(r.truth.phi_spec[0].size() == 5);
  CHECK(r.truth.phi_spec[1].size() == 3);
  // phi rows are distributions
  for (const auto& row : r.truth.phi_shared) {
    double s = 0.0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
  // assignments respect the topic layout
  for (int c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < r.truth.z[c].size(); ++d)
      for (std::size_t i = 0; i < r.truth.z[c][d].size(); ++i) {
        const int zz = r.truth.z[c][d][i];
        CHECK(zz >= 0);
        CHECK(zz < r.truth.spec.k_per_collection[c]);
        if (zz < 3)
          CHECK((r.truth.y[c][d][i] == 0 || r.truth.y[c][d][i] == 1));
        else
          CHECK(r.truth.y[c][d][i] == -1);
      }
}

TEST_CASE("asymmetric alpha rule") {
  SynthSpec spec = small_spec();
  auto alpha = spec.alpha_for(0);  // K_0 = 5
  REQUIRE(alpha.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(alpha[i] ==
          doctest::Approx(1.0 / (i + std::sqrt(5.0))).epsilon(1e-12));
}

TEST_CASE("degenerate single-topic single-word spec") {
  SynthSpec spec;
  spec.docs_per_collection = {3};
  spec.tokens_per_doc = 4;
  spec.vocab_size = 1;
  spec.k_common = 1;
  spec.k_per_collection = {1};
  auto r = generate(spec, 9);
  for (const auto& doc : r.corpus.collections[0])
    for (int w : doc.tokens) CHECK(w == 0);
  for (const auto& zd : r.truth.z[0])
    for (int zz : zd) CHECK(zz == 0);
}

TEST_CASE("presets") {
  SynthSpec shared = scenario_preset("shared", 10);
  CHECK(shared.k_common == 10);
  CHECK(shared.k_per_collection == std::vector<int>{10, 10});
  CHECK(shared.vocab_size == 3000);
  CHECK(shared.tokens_per_doc == 50);
  CHECK(shared.beta == doctest::Approx(0.01));
  CHECK(shared.delta1 == doctest::Approx(1.0));

  SynthSpec asym = scenario_preset("asymmetric", 20);
  CHECK(asym.k_common == 20);
  CHECK(asym.k_per_collection == std::vector<int>{20, 40});

  SynthSpec partial = scenario_preset("partial", 50, 25);
  CHECK(partial.k_common == 25);
  CHECK(partial.k_per_collection == std::vector<int>{50, 50});
  CHECK(partial.delta1 == doctest::Approx(5.0));
  CHECK(partial.delta2 == doctest::Approx(5.0));

  CHECK_THROWS_AS(scenario_preset("nope"), UsageError);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec = small_spec();
  spec.k_per_collection = {2, 3};  // K_0 < k_common
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
  spec = small_spec();
  spec.vocab_size = 0;
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
  spec = small_spec();
  spec.docs_per_collection = {};
  CHECK_THROWS_AS(generate(spec, 1), UsageError);
}

TEST_CASE("empirical shared fractions track the drawn sigma") {
  SynthSpec spec;
  spec.docs_per_collection = {200, 200};
  spec.tokens_per_doc = 50;
  spec.vocab_size = 200;
  spec.k_common = 8;
  spec.k_per_collection = {8, 8};
  spec.delta1 = spec.delta2 = 5.0;
  auto r = generate(spec, 17);

  std::vector<double> shared(8, 0.0), total(8, 0.0);
  for (int c = 0; c < 2; ++c)
    for (std::size_t d = 0; d < r.truth.z[c].size(); ++d)
      for (std::size_t i = 0; i < r.truth.z[c][d].size(); ++i) {
        const int zz = r.truth.z[c][d][i];
        total[zz] += 1.0;
        if (r.truth.y[c][d][i] == 0) shared[zz] += 1.0;
      }
  double mean_frac = 0.0;
  for (int k = 0; k < 8; ++k) {
    REQUIRE(total[k] > 100);
    const double frac = shared[k] / total[k];
    const double se =
        std::sqrt(r.truth.sigma[k] * (1.0 - r.truth.sigma[k]) / total[k]);
    CHECK(std::abs(frac - r.truth.sigma[k]) < 5.0 * se + 1e-9);
    mean_frac += frac / 8.0;
  }
  // delta1 == delta2 pulls the average shared fraction toward one half
  CHECK(mean_frac > 0.3);
  CHECK(mean_frac < 0.7);
}

TEST_CASE("ground truth round trips through JSON") {
  auto r = generate(small_spec(), 5);
  std::stringstream buf;
  write_ground_truth(r.truth, buf);
  GroundTruth back = read_ground_truth(buf);
  CHECK(back.sigma == r.truth.sigma);
  CHECK(back.z == r.truth.z);
  CHECK(back.y == r.truth.y);
  CHECK(back.phi_shared == r.truth.phi_shared);
  CHECK(back.spec.k_per_collection == r.truth.spec.k_per_collection);
  CHECK(back.spec.scenario == r.truth.spec.scenario);
}

TEST_CASE("truth snapshot is usable for evaluation") {
  auto r = generate(small_spec(), 6);
  TopicModelSnapshot m = r.truth.as_snapshot();
  CHECK(m.kind == "truth");
  CHECK(m.k_common == 3);
  CHECK(m.vocab_size == 60);
  CHECK(m.topics_for(0) == 5);
  double p = m.word_prob(0, 1, 7);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}
