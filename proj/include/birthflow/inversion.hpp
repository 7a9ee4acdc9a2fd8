#pragma once

// Lattice pmf recovery from a characteristic function.
//
// For an integer variable X, sampling the CF at M equispaced phases
// u_k = 2 pi k / M and applying the inverse DFT returns
//
//     (1/M) sum_k e^{-j u_k i} cf(u_k) = sum_{m >= 0} P(X = i + m M),
//
// i.e. the trapezoid rule for (1/2pi) int_{-pi}^{pi} e^{-jui} cf(u) du is
// exact up to aliased mass from beyond M.  The error is controlled purely by
// choosing M past the tail of X, which choose_truncation does with a Chernoff
// bound.

#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "birthflow/errors.hpp"
#include "birthflow/model.hpp"
#include "birthflow/pmf.hpp"

namespace birthflow {

struct InversionConfig {
  std::size_t grid_size = 256;  // M, a power of two
  std::size_t kmax = 120;
  double tail_tol = kDefaultTailTolerance;

  void validate() const {
    if (!std::has_single_bit(grid_size)) throw InvalidArgument("grid_size must be a power of two");
    if (grid_size < 2 * kmax) throw InvalidArgument("grid_size must be >= 2*kmax");
    if (!(tail_tol > 0.0)) throw InvalidArgument("tail_tol must be > 0");
  }
};

inline constexpr double kImaginaryResidueTolerance = 1e-10;
inline constexpr double kNegativeFloor = 1e-12;

inline Pmf invert_cf(const CfEvaluator& cf, double t, const InversionConfig& config) {
  config.validate();
  const std::size_t m = config.grid_size;
  const double step = 2.0 * std::numbers::pi / static_cast<double>(m);

  std::vector<double> cos_table(m), sin_table(m);
  for (std::size_t r = 0; r < m; ++r) {
    cos_table[r] = std::cos(step * static_cast<double>(r));
    sin_table[r] = std::sin(step * static_cast<double>(r));
  }

  // Phases folded into (-pi, pi].
  std::vector<Complex> samples(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double u = k <= m / 2 ? step * static_cast<double>(k)
                                : -step * static_cast<double>(m - k);
    samples[k] = cf(u, t);
  }

  Pmf out;
  out.probs.assign(config.kmax + 1, 0.0);
  for (std::size_t i = 0; i <= config.kmax; ++i) {
    double re = 0.0, im = 0.0;
    std::size_t r = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const Complex c = samples[k];
      re += c.real() * cos_table[r] + c.imag() * sin_table[r];
      im += c.imag() * cos_table[r] - c.real() * sin_table[r];
      r += i;
      if (r >= m) r %= m;
    }
    re /= static_cast<double>(m);
    im /= static_cast<double>(m);

    if (std::abs(im) > kImaginaryResidueTolerance) {
      throw NonRealProbability("imaginary residue " + std::to_string(im) + " at i=" + std::to_string(i));
    }
    if (re < 0.0) {
      if (re < -kNegativeFloor) {
        throw NegativeProbability("probability " + std::to_string(re) + " at i=" + std::to_string(i));
      }
      out.clipped_mass += -re;
      re = 0.0;
    }
    out.probs[i] = re;
  }

  out.tail_bound = std::max(0.0, 1.0 - out.total());
  if (out.tail_bound >= config.tail_tol) {
    throw AliasingViolation("mass " + std::to_string(out.tail_bound) + " beyond kmax=" +
                            std::to_string(config.kmax) + " exceeds tail_tol; enlarge kmax/grid_size");
  }
  return out;
}

namespace detail {

// min over theta in [0, hi] of a convex function, by golden-section search.
template <class F>
double golden_min(const F& f, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({f(0.0), f1, f2});
}

// log of the Chernoff bound on P(X >= k) for the autonomous occupancy, using
// its generating function E[z^X] = ((z - mu s (z-1)) / (1 - b s (z-1)))^n0.
inline double log_tail_bound_autonomous(const ModelParams& p, double t, double k) {
  const double s = t * expm1_ratio((p.b - p.mu) * t);
  const double hi = p.b * s > 0.0 ? std::log1p(1.0 / (p.b * s)) * (1.0 - 1e-9) : 50.0;
  auto f = [&](double theta) {
    const double zm1 = std::expm1(theta);
    const double ratio = (1.0 + zm1 - p.mu * s * zm1) / (1.0 - p.b * s * zm1);
    return p.n0 * std::log(ratio) - theta * k;
  };
  return golden_min(f, std::min(hi, 50.0));
}

inline double log_tail_bound_poisson(const ModelParams& p, double t, double k) {
  const double q = std::exp(-p.mu * t);
  const double a = matched_poisson_parameter(p, t);
  auto f = [&](double theta) {
    const double zm1 = std::expm1(theta);
    return p.n0 * std::log1p(q * zm1) + a * zm1 - theta * k;
  };
  return golden_min(f, 50.0);
}

}  // namespace detail

// Smallest config (in steps of half a standard deviation) whose Chernoff tail
// bounds for both systems fall below tail_tol / 10.
inline InversionConfig choose_truncation(const ModelParams& p, double t, double tail_tol) {
  p.validate();
  detail::require_time(t);
  if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw InvalidArgument("tail_tol must lie in (0, 1)");

  InversionConfig cfg;
  cfg.tail_tol = tail_tol;
  if (p.n0 == 0) {
    cfg.kmax = 1;
    cfg.grid_size = 4;
    return cfg;
  }
  // Both systems share this mean by construction of the matched intensity.
  const double mean = mean_occupancy(p, t);
  const double sd_scale = std::sqrt(std::max(mean, 1.0));
  const double log_target = std::log(tail_tol / 10.0);
  for (double c = 2.0; c < 1e4; c += 0.5) {
    const auto kmax = static_cast<std::size_t>(std::ceil(mean + c * sd_scale));
    const double k_next = static_cast<double>(kmax + 1);
    if (detail::log_tail_bound_autonomous(p, t, k_next) < log_target &&
        detail::log_tail_bound_poisson(p, t, k_next) < log_target) {
      cfg.kmax = std::max<std::size_t>(kmax, 1);
      cfg.grid_size = std::bit_ceil(2 * (cfg.kmax + 1));
      return cfg;
    }
  }
  throw NumericalInstability("no truncation satisfies the tail bound");
}

}  // namespace birthflow
