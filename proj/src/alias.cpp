#include "xtopics/alias.hpp"

#include <cmath>

namespace xtopics {

AliasTable::AliasTable(const std::vector<double>& weights) {
  const int k = static_cast<int>(weights.size());
  if (k < 1) throw NumericalError("alias: empty weight vector");
  total_ = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw NumericalError("alias: weights must be finite and >= 0");
    total_ += w;
  }
  if (total_ <= 0.0) throw NumericalError("alias: all weights are zero");

  prob_.assign(k, 1.0);
  alias_.resize(k);
  density_.resize(k);

  std::vector<double> scaled(k);
  for (int i = 0; i < k; ++i) {
    density_[i] = weights[i] / total_;
    scaled[i] = density_[i] * k;
    alias_[i] = i;
  }

  std::vector<int> small, large;
  small.reserve(k);
  large.reserve(k);
  for (int i = 0; i < k; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(i);

  while (!small.empty() && !large.empty()) {
    int s = small.back();
    small.pop_back();
    int l = large.back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // leftovers are 1 up to rounding
  remaining_.store(k, std::memory_order_relaxed);
}

AliasTable::AliasTable(const AliasTable& other)
    : prob_(other.prob_),
      alias_(other.alias_),
      density_(other.density_),
      total_(other.total_) {
  remaining_.store(other.remaining_uses(), std::memory_order_relaxed);
}

int AliasTable::draw(Rng& rng) const {
  const int k = size();
  const int slot = static_cast<int>(uniform01(rng) * k) % k;
  remaining_.fetch_sub(1, std::memory_order_relaxed);
  if (uniform01(rng) < prob_[slot]) return slot;
  return alias_[slot];
}

}  // namespace xtopics
