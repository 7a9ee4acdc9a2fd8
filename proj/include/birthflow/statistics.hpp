#pragma once

// Pearson chi-squared goodness of fit of a simulated histogram against a
// model pmf.

#include <cstdint>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "birthflow/errors.hpp"
#include "birthflow/pmf.hpp"
#include "birthflow/simulator.hpp"

namespace birthflow {

struct ChiSquaredResult {
  double statistic = 0.0;
  std::size_t bins = 0;  // after pooling
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;

  bool passes(double alpha) const { return p_value >= alpha; }
};

// Adjacent bins are pooled left to right until each expected count reaches
// `min_expected`; a short final run is merged into its predecessor.  The last
// bin also absorbs everything beyond the model's support, so observed and
// expected totals both equal the replication count.
inline ChiSquaredResult chi_squared_test(const SimResult& observed, const Pmf& model,
                                         double min_expected = 5.0) {
  const double n = static_cast<double>(observed.replications);
  const std::size_t len = std::max(observed.counts.size(), model.probs.size());

  std::vector<double> expected_bins, observed_bins;
  double exp_acc = 0.0, obs_acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    exp_acc += n * model[i];
    obs_acc += i < observed.counts.size() ? static_cast<double>(observed.counts[i]) : 0.0;
    if (exp_acc >= min_expected) {
      expected_bins.push_back(exp_acc);
      observed_bins.push_back(obs_acc);
      exp_acc = obs_acc = 0.0;
    }
  }
  // Residual model mass (tail beyond support, truncation deficit).
  double assigned = exp_acc;
  for (double e : expected_bins) assigned += e;
  exp_acc += std::max(0.0, n - assigned);
  if (!expected_bins.empty()) {
    expected_bins.back() += exp_acc;
    observed_bins.back() += obs_acc;
  } else {
    expected_bins.push_back(exp_acc);
    observed_bins.push_back(obs_acc);
  }

  ChiSquaredResult r;
  r.bins = expected_bins.size();
  for (std::size_t k = 0; k < r.bins; ++k) {
    const double d = observed_bins[k] - expected_bins[k];
    r.statistic += d * d / expected_bins[k];
  }
  r.degrees_of_freedom = static_cast<double>(r.bins) - 1.0;
  r.p_value = r.degrees_of_freedom > 0.0
                  ? boost::math::gamma_q(0.5 * r.degrees_of_freedom, 0.5 * r.statistic)
                  : 1.0;
  return r;
}

}  // namespace birthflow
