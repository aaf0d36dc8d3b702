#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cohortnet {

// Zero-based index of the nearest-rank percentile in a sorted sample of size n:
// the ceil(p*n)-th smallest value, clamped to [1, n].
[[nodiscard]] inline std::size_t nearest_rank_index(std::size_t n, double p) {
  if (n == 0) throw std::invalid_argument("percentile of an empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile must lie in (0, 1]");
  // Absorb representation error such as 0.9 * 10 = 9.000000000000002.
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return rank - 1;
}

template <typename T>
[[nodiscard]] T nearest_rank(std::vector<T> values, double p) {
  const std::size_t k = nearest_rank_index(values.size(), p);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

// Correctly rounded floating-point sum (Shewchuk's partials, as in Python's math.fsum).
// The result is independent of insertion order.
class ExactSum {
 public:
  void add(double x) {
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  [[nodiscard]] double value() const {
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // Round half-even across the remaining partials.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
    return hi;
  }

  // sum / n with one exact residual correction, so k-fold replicated inputs give the same mean.
  [[nodiscard]] double mean(std::size_t n) const {
    const double d = static_cast<double>(n);
    const double q = value() / d;
    ExactSum residual = *this;
    const double p = q * d;
    residual.add(-p);
    residual.add(-std::fma(q, d, -p));
    return q + residual.value() / d;
  }

 private:
  std::vector<double> partials_;
};

}  // namespace cohortnet
