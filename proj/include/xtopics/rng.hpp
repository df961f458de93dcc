#pragma once

#include <cstdint>
#include <random>

namespace xtopics {

using Rng = std::mt19937_64;

// Named substreams derived from one master seed so that parallel runs stay
// reproducible: substream(seed, kind, index) for kind in {init, sweep-thread,
// eval, synth, ...}.
enum class Stream : std::uint64_t {
  Init = 1,
  SweepThread = 2,
  Eval = 3,
  Synth = 4,
  Holdout = 5,
  Concentration = 6,
};

inline Rng make_rng(std::uint64_t master_seed, Stream stream,
                    std::uint64_t index = 0) {
  std::seed_seq seq{master_seed, static_cast<std::uint64_t>(stream), index};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace xtopics
