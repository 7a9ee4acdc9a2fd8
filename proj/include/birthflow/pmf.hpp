#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace birthflow {

// Probability mass function over occupancy counts 0..kmax.
//
// `tail_bound` is the mass known (or estimated) to lie beyond kmax, and
// `clipped_mass` the total of tiny negative round-off entries that were set to
// zero when the pmf was produced.
struct Pmf {
  std::vector<double> probs;
  double tail_bound = 0.0;
  double clipped_mass = 0.0;

  std::size_t kmax() const { return probs.empty() ? 0 : probs.size() - 1; }

  double operator[](std::size_t i) const {
    return i < probs.size() ? probs[i] : 0.0;
  }

  double total() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) m += static_cast<double>(i) * probs[i];
    return m;
  }

  static Pmf point_mass(std::size_t at, std::size_t kmax) {
    Pmf p;
    p.probs.assign(std::max(at, kmax) + 1, 0.0);
    p.probs[at] = 1.0;
    return p;
  }
};

// Largest entrywise absolute difference; the shorter pmf is zero-padded.
inline double max_abs_difference(const Pmf& a, const Pmf& b) {
  const std::size_t n = std::max(a.probs.size(), b.probs.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace birthflow
