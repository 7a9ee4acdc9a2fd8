#pragma once

// Forward Kolmogorov equations of both systems on the truncated state space
// 0..k_trunc, integrated with classical fixed-step RK4.
//
// Transitions out of k_trunc into k_trunc + 1 leave the truncated space and
// are not returned, so truncation shows up as a deficit 1 - sum(P) that is
// reported as the tail bound rather than being folded back in.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <vector>

#include "birthflow/errors.hpp"
#include "birthflow/model.hpp"
#include "birthflow/pmf.hpp"

namespace birthflow {

enum class OdeMethod { kRk4 };

struct OdeConfig {
  std::size_t k_trunc = 200;
  double dt = 1e-3;
  OdeMethod method = OdeMethod::kRk4;
  // Truncation losses above 10x this are an error.
  double tail_tol = kDefaultTailTolerance;
};

inline constexpr double kStabilityLimit = 0.5;
inline constexpr double kOdeNegativeFloor = 1e-12;

inline constexpr double kMaxDefaultStep = 1e-3;

// Step of `safety` times the stability bound, capped at kMaxDefaultStep so
// small state spaces still get an accurate solve.
inline OdeConfig stable_ode_config(const ModelParams& p, std::size_t k_trunc, double safety = 0.5,
                                   double tail_tol = kDefaultTailTolerance) {
  OdeConfig cfg;
  cfg.k_trunc = k_trunc;
  const double rate = static_cast<double>(std::max<std::size_t>(k_trunc, 1)) * (p.b + p.mu);
  cfg.dt = std::min(safety * kStabilityLimit / rate, kMaxDefaultStep);
  cfg.tail_tol = tail_tol;
  return cfg;
}

namespace detail {

inline void check_ode_inputs(const ModelParams& p, double t, const OdeConfig& cfg) {
  p.validate();
  require_time(t);
  if (!(cfg.dt > 0.0)) throw InvalidArgument("dt must be > 0");
  if (p.n0 > cfg.k_trunc) throw InvalidArgument("n0 exceeds k_trunc");
  if (cfg.dt * static_cast<double>(cfg.k_trunc) * (p.b + p.mu) > kStabilityLimit) {
    throw StabilityViolation("dt*k_trunc*(b+mu) = " +
                             std::to_string(cfg.dt * cfg.k_trunc * (p.b + p.mu)) + " exceeds 0.5");
  }
}

// Integrates dP/dt = rhs(s, P, dP) from the point mass at n0 up to time t.
template <class Rhs>
Pmf integrate_rk4(const ModelParams& p, double t, const OdeConfig& cfg, const Rhs& rhs) {
  const std::size_t n = cfg.k_trunc + 1;
  std::vector<double> y(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
  y[p.n0] = 1.0;

  const auto steps = static_cast<std::size_t>(std::ceil(t / cfg.dt - 1e-12));
  const double h = steps == 0 ? 0.0 : t / static_cast<double>(steps);
  double s = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    rhs(s, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    rhs(s + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    rhs(s + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    rhs(s + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (y[i] < -kOdeNegativeFloor) {
        throw NegativeProbability("P(" + std::to_string(i) + ") = " + std::to_string(y[i]) +
                                  " at step " + std::to_string(step));
      }
    }
    s = static_cast<double>(step + 1) * h;
  }

  Pmf out;
  out.probs = std::move(y);
  for (double& v : out.probs) {
    if (v < 0.0) {
      out.clipped_mass += -v;
      v = 0.0;
    }
  }
  out.tail_bound = std::max(0.0, 1.0 - out.total());
  if (out.tail_bound > 10.0 * cfg.tail_tol) {
    throw MassLossViolation("truncation at k=" + std::to_string(cfg.k_trunc) + " lost mass " +
                            std::to_string(out.tail_bound));
  }
  return out;
}

}  // namespace detail

// dP_i/dt = -i(mu+b) P_i + (i-1) b P_{i-1} + (i+1) mu P_{i+1}
inline Pmf solve_autonomous(const ModelParams& p, double t, const OdeConfig& cfg) {
  detail::check_ode_inputs(p, t, cfg);
  const std::size_t top = cfg.k_trunc;
  auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
    for (std::size_t i = 0; i <= top; ++i) {
      const double fi = static_cast<double>(i);
      double v = -fi * (p.mu + p.b) * y[i];
      if (i > 0) v += (fi - 1.0) * p.b * y[i - 1];
      if (i < top) v += (fi + 1.0) * p.mu * y[i + 1];
      dy[i] = v;
    }
  };
  return detail::integrate_rk4(p, t, cfg, rhs);
}

// dP_i/dt = -(lambda(t) + i mu) P_i + lambda(t) P_{i-1} + (i+1) mu P_{i+1}
template <std::invocable<double> Intensity>
Pmf solve_mtminf(const ModelParams& p, const Intensity& intensity, double t, const OdeConfig& cfg) {
  detail::check_ode_inputs(p, t, cfg);
  const std::size_t top = cfg.k_trunc;
  auto rhs = [&](double s, const std::vector<double>& y, std::vector<double>& dy) {
    const double lam = intensity(s);
    if (!(lam >= 0.0)) throw InvalidArgument("intensity must be nonnegative");
    if (cfg.dt * (lam + static_cast<double>(top) * p.mu) > kStabilityLimit) {
      throw StabilityViolation("dt*(lambda + k_trunc*mu) exceeds 0.5 at s=" + std::to_string(s));
    }
    for (std::size_t i = 0; i <= top; ++i) {
      const double fi = static_cast<double>(i);
      double v = -(lam + fi * p.mu) * y[i];
      if (i > 0) v += lam * y[i - 1];
      if (i < top) v += (fi + 1.0) * p.mu * y[i + 1];
      dy[i] = v;
    }
  };
  return detail::integrate_rk4(p, t, cfg, rhs);
}

// The matched-intensity case.
inline Pmf solve_mtminf(const ModelParams& p, double t, const OdeConfig& cfg) {
  return solve_mtminf(p, [&p](double s) { return matched_intensity(p, s); }, t, cfg);
}

}  // namespace birthflow
