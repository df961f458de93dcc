#include "xtopics/stirling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xtopics {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}
}  // namespace

void StirlingCache::grow(int n) {
  if (logs_.empty()) logs_.push_back({0.0});  // S^0_0 = 1
  if (n < static_cast<int>(logs_.size())) return;
  int target = std::max(n + 1, static_cast<int>(logs_.size()) * 2);
  logs_.reserve(target);
  while (static_cast<int>(logs_.size()) < target) {
    const int m = static_cast<int>(logs_.size()) - 1;  // extend from row m
    const auto& prev = logs_.back();
    std::vector<double> row(m + 2, kNegInf);
    const double log_m = m > 0 ? std::log(static_cast<double>(m)) : kNegInf;
    for (int t = 1; t <= m + 1; ++t) {
      double from_left = (t - 1 <= m) ? prev[t - 1] : kNegInf;
      double from_same = (t <= m && m > 0) ? log_m + prev[t] : kNegInf;
      row[t] = log_add(from_left, from_same);
    }
    logs_.push_back(std::move(row));
  }
}

double StirlingCache::log_value(int n, int t) {
  if (n < 0 || t < 0) throw NumericalError("stirling: negative argument");
  if (t > n) return kNegInf;
  if (t == 0) return n == 0 ? 0.0 : kNegInf;
  grow(n);
  return logs_[n][t];
}

double StirlingCache::ratio(int n, int t, Ratio kind) {
  if (t > n)
    throw NumericalError("stirling ratio: t > n");
  const double denom = log_value(n, t);
  if (denom == kNegInf)
    throw NumericalError("stirling ratio: zero denominator S^n_t");
  const double numer = (kind == Ratio::IncrBoth) ? log_value(n + 1, t + 1)
                                                 : log_value(n + 1, t);
  return std::exp(numer - denom);
}

}  // namespace xtopics
