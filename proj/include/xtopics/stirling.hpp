#pragma once

#include <vector>

#include "xtopics/errors.hpp"

namespace xtopics {

// Log-space cache of unsigned Stirling numbers of the first kind (the
// generalized Stirling numbers at discount 0 used by DP table counts):
//   S^{n+1}_t = S^n_{t-1} + n * S^n_t,  S^0_0 = 1,  S^n_t = 0 for t > n or
//   t = 0 < n.
// Grows geometrically on demand; ratio queries are exp of log differences.
class StirlingCache {
 public:
  enum class Ratio {
    IncrBoth,  // S^{n+1}_{t+1} / S^n_t
    IncrN,     // S^{n+1}_t   / S^n_t
  };

  // log S^n_t; -inf where the number is zero.
  double log_value(int n, int t);

  double ratio(int n, int t, Ratio kind);

 private:
  void grow(int n);
  std::vector<std::vector<double>> logs_;  // logs_[n][t], t in [0, n]
};

}  // namespace xtopics
