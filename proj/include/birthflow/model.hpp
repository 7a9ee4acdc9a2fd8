#pragma once

// Closed-form quantities of the two infinite-server systems:
//
//  * the autonomous system, where every busy device spawns new customers at
//    rate b and finishes service at rate mu (a linear birth-death chain with
//    absorbing state 0), and
//  * the M(t)|M|inf system fed by a nonstationary Poisson flow whose intensity
//    is chosen so both systems share the mean occupancy n0 * exp((b - mu) t).
//
// Characteristic functions are E[exp(j u i(t))] with i(t) the number of busy
// devices, started from n0 busy devices at t = 0.
//
// Autonomous CF, b != mu.  With z = e^{ju} and E = e^{(b-mu)t} the textbook
// form is
//
//     H = [ (z - mu/b - (mu/b)(z-1)E) / (z - mu/b - (z-1)E) ]^n0 .
//
// Multiplying through by b and writing E = 1 + expm1((b-mu)t) gives the
// equivalent ratio
//
//     H = [ (z - mu (z-1) s) / (1 - b (z-1) s) ]^n0,   s = expm1((b-mu)t)/(b-mu),
//
// which is what we evaluate.  It is also defined at b = 0.  Since s > 0,
// Re(1 - b(z-1)s) = 1 + b s (1 - cos u) >= 1, so the denominator never falls
// below 1 in magnitude for valid inputs.  The textbook form loses about
// -log10(|b-mu| t) digits to cancellation near u = 0 and u = pi when b ~ mu:
// numerator and denominator are both O(b - mu) there.  The expm1 form has no
// such cancellation, but s itself is only as accurate as expm1(x)/x, which
// is why the b = mu limit
//
//     H = [ ((z-1) b t - z) / ((z-1) b t - 1) ]^n0
//
// is used once |b - mu| t < kBranchThreshold.  At the threshold the two
// branches differ by O(|b - mu| t * b t) = O(1e-8), the size of the
// neglected term in s = t (1 + (b-mu)t/2 + ...).
//
// The integer power n0 is taken by repeated squaring on the complex ratio;
// no complex logarithm and hence no branch cut is involved.
//
// Overflow envelope: s and the Poisson parameter n0 e^{-mu t} expm1(b t)
// must be finite, i.e. roughly (b - mu) t < 700 and b t < 700 + log(1/n0).
// Evaluations outside it raise NumericalInstability.  Every cell of the
// reference grid (b <= 1.9, t <= 1, n0 = 15) is many orders of magnitude
// inside.

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "birthflow/errors.hpp"
#include "birthflow/pmf.hpp"

namespace birthflow {

using Complex = std::complex<double>;

// (u, t) -> E[exp(j u i(t))]
using CfEvaluator = std::function<Complex(double u, double t)>;

struct ModelParams {
  double b = 0.0;      // birth intensity per busy device
  double mu = 1.0;     // service rate
  std::uint32_t n0 = 0;  // busy devices at t = 0

  void validate() const {
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("b must be finite and >= 0");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("mu must be finite and > 0");
  }
};

inline constexpr double kBranchThreshold = 1e-8;
inline constexpr double kDenominatorFloor = 1e-12;

namespace detail {

inline void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("t must be finite and >= 0");
}

inline Complex ipow(Complex base, std::uint32_t n) {
  Complex result{1.0, 0.0};
  while (n != 0) {
    if (n & 1u) result *= base;
    base *= base;
    n >>= 1u;
  }
  return result;
}

inline bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// z - 1 = e^{ju} - 1 without cancellation near u = 0.
inline Complex expju_minus_one(double u) {
  const double s = std::sin(0.5 * u);
  return {-2.0 * s * s, std::sin(u)};
}

// expm1(x) / x, continuous at x = 0.
inline double expm1_ratio(double x) {
  return std::abs(x) < 1e-300 ? 1.0 : std::expm1(x) / x;
}

}  // namespace detail

// Mean occupancy shared by both systems: n0 exp((b - mu) t).
inline double mean_occupancy(const ModelParams& p, double t) {
  detail::require_time(t);
  return static_cast<double>(p.n0) * std::exp((p.b - p.mu) * t);
}

// Arrival intensity of the Poisson-fed system that reproduces the autonomous
// mean: b * n0 * exp((b - mu) t).
inline double matched_intensity(const ModelParams& p, double t) {
  return p.b * mean_occupancy(p, t);
}

// Parameter of the Poisson component of the matched system,
// n0 e^{-mu t} (e^{b t} - 1), evaluated in log space when e^{bt} is large.
inline double matched_poisson_parameter(const ModelParams& p, double t) {
  detail::require_time(t);
  if (p.n0 == 0 || p.b == 0.0 || t == 0.0) return 0.0;
  const double bt = p.b * t;
  double a;
  if (bt < 30.0) {
    a = static_cast<double>(p.n0) * std::exp(-p.mu * t) * std::expm1(bt);
  } else {
    const double log_a = std::log(static_cast<double>(p.n0)) - p.mu * t + bt +
                         std::log1p(-std::exp(-bt));
    a = std::exp(log_a);
  }
  if (!std::isfinite(a)) throw NumericalInstability("Poisson parameter overflows at b*t = " + std::to_string(bt));
  return a;
}

inline Complex cf_autonomous(const ModelParams& p, double u, double t) {
  detail::require_time(t);
  if (p.n0 == 0) return {1.0, 0.0};
  const Complex zm1 = detail::expju_minus_one(u);
  const Complex z = zm1 + 1.0;
  const double d = p.b - p.mu;

  Complex num, den;
  if (std::abs(d) * t < kBranchThreshold) {
    const double bt = p.b * t;
    num = zm1 * bt - z;
    den = zm1 * bt - 1.0;
  } else {
    const double s = t * detail::expm1_ratio(d * t);
    num = z - p.mu * s * zm1;
    den = 1.0 - p.b * s * zm1;
  }
  if (!detail::finite(num) || !detail::finite(den) || std::abs(den) < kDenominatorFloor) {
    throw NumericalInstability("autonomous CF denominator degenerate at u=" + std::to_string(u) +
                               ", t=" + std::to_string(t));
  }
  return detail::ipow(num / den, p.n0);
}

// (1 - p + p z)^n
inline Complex cf_binomial(double u, std::uint32_t n, double success) {
  return detail::ipow(1.0 + success * detail::expju_minus_one(u), n);
}

// exp((z - 1) a)
inline Complex cf_poisson(double u, double a) {
  return std::exp(a * detail::expju_minus_one(u));
}

// CF of the matched M(t)|M|inf system: Binomial(n0, e^{-mu t}) survivors of
// the initial load plus an independent Poisson number of in-service arrivals.
inline Complex cf_poisson_matched(const ModelParams& p, double u, double t) {
  detail::require_time(t);
  return cf_binomial(u, p.n0, std::exp(-p.mu * t)) * cf_poisson(u, matched_poisson_parameter(p, t));
}

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Below a few ulps of the running value no further refinement can help.
  const double floor = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (std::abs(delta) <= 15.0 * std::max(tol, floor)) return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureNonConvergence("adaptive Simpson exceeded its refinement cap");
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

inline constexpr double kQuadratureTolerance = 1e-12;
inline constexpr int kQuadratureMaxDepth = 30;

// Adaptive Simpson on [a, b].
template <std::invocable<double> F>
double adaptive_simpson(const F& f, double a, double b, double tol = kQuadratureTolerance,
                        int max_depth = kQuadratureMaxDepth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double r = detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
  if (!std::isfinite(r)) throw QuadratureNonConvergence("integrand is not finite");
  return r;
}

// CF of M(t)|M|inf for an arbitrary nonnegative intensity:
//   (1 - e^{-mu t} + z e^{-mu t})^n0 * exp((z - 1) e^{-mu t} int_0^t lambda(s) e^{mu s} ds)
template <std::invocable<double> Intensity>
Complex cf_poisson_general(const ModelParams& p, const Intensity& intensity, double u, double t) {
  detail::require_time(t);
  const double integral =
      adaptive_simpson([&](double s) { return intensity(s) * std::exp(p.mu * s); }, 0.0, t);
  const double decay = std::exp(-p.mu * t);
  return cf_binomial(u, p.n0, decay) * cf_poisson(u, decay * integral);
}

inline CfEvaluator autonomous_cf(const ModelParams& p) {
  return [p](double u, double t) { return cf_autonomous(p, u, t); };
}

inline CfEvaluator poisson_matched_cf(const ModelParams& p) {
  return [p](double u, double t) { return cf_poisson_matched(p, u, t); };
}

// Binomial(n, success) pmf on 0..n.
inline std::vector<double> binomial_pmf(std::uint32_t n, double success) {
  std::vector<double> out(n + 1, 0.0);
  if (success <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (success >= 1.0) {
    out[n] = 1.0;
    return out;
  }
  const double log_p = std::log(success), log_q = std::log1p(-success);
  const double lg_n = std::lgamma(n + 1.0);
  for (std::uint32_t k = 0; k <= n; ++k) {
    out[k] = std::exp(lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * log_p +
                      (n - k) * log_q);
  }
  return out;
}

// Poisson(a) pmf on 0..kmax.
inline std::vector<double> poisson_pmf(double a, std::size_t kmax) {
  std::vector<double> out(kmax + 1, 0.0);
  if (a <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double log_a = std::log(a);
  for (std::size_t k = 0; k <= kmax; ++k) {
    out[k] = std::exp(static_cast<double>(k) * log_a - a - std::lgamma(k + 1.0));
  }
  return out;
}

inline constexpr double kDefaultTailTolerance = 1e-9;

// Occupancy pmf of the matched M(t)|M|inf system by direct convolution of its
// binomial and Poisson components, truncated to 0..kmax.
inline Pmf analytic_pmf_poisson(const ModelParams& p, double t, std::size_t kmax,
                                double tail_tol = kDefaultTailTolerance) {
  p.validate();
  detail::require_time(t);
  const auto binom = binomial_pmf(p.n0, std::exp(-p.mu * t));
  const auto pois = poisson_pmf(matched_poisson_parameter(p, t), kmax);

  Pmf out;
  out.probs.assign(kmax + 1, 0.0);
  for (std::size_t i = 0; i < binom.size() && i <= kmax; ++i) {
    if (binom[i] == 0.0) continue;
    for (std::size_t k = 0; i + k <= kmax; ++k) out.probs[i + k] += binom[i] * pois[k];
  }
  out.tail_bound = std::max(0.0, 1.0 - out.total());
  if (out.tail_bound >= tail_tol) {
    throw TailMassViolation("kmax=" + std::to_string(kmax) + " leaves tail mass " +
                            std::to_string(out.tail_bound));
  }
  return out;
}

}  // namespace birthflow
