#pragma once

// Event-driven Monte Carlo for both systems.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "birthflow/errors.hpp"
#include "birthflow/model.hpp"
#include "birthflow/pmf.hpp"
#include "birthflow/random.hpp"

namespace birthflow {

struct SimConfig {
  std::uint64_t replications = 100000;
  std::uint64_t seed = 20240601;
  // Per-replication event budget; exceeding it raises SimulationCapExceeded.
  std::uint64_t max_events = 10'000'000;
  unsigned workers = 1;

  void validate() const {
    if (replications < 1) throw InvalidArgument("replications must be >= 1");
    if (workers < 1) throw InvalidArgument("workers must be >= 1");
  }
};

struct SimResult {
  std::vector<std::uint64_t> counts;  // counts[i]: replications ending with occupancy i
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  std::chrono::duration<double> elapsed{};

  void add(std::size_t state) {
    if (state >= counts.size()) counts.resize(state + 1, 0);
    ++counts[state];
  }

  void merge(const SimResult& other) {
    if (other.counts.size() > counts.size()) counts.resize(other.counts.size(), 0);
    for (std::size_t i = 0; i < other.counts.size(); ++i) counts[i] += other.counts[i];
  }

  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += static_cast<double>(i) * counts[i];
    return s / static_cast<double>(replications);
  }

  double variance() const {
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double d = static_cast<double>(i) - m;
      s += d * d * counts[i];
    }
    return s / static_cast<double>(replications - (replications > 1 ? 1 : 0));
  }

  double standard_error() const { return std::sqrt(variance() / static_cast<double>(replications)); }

  Pmf empirical_pmf() const {
    Pmf p;
    p.probs.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      p.probs[i] = static_cast<double>(counts[i]) / static_cast<double>(replications);
    }
    return p;
  }
};

// Lambda(s) = int_0^s b n0 e^{(b-mu)r} dr for the matched intensity.
inline double cumulative_matched_intensity(const ModelParams& p, double s) {
  const double scale = p.b * static_cast<double>(p.n0);
  return scale * s * detail::expm1_ratio((p.b - p.mu) * s);
}

// Inverse of Lambda; +inf when the cumulative intensity never reaches `level`.
inline double inverse_cumulative_matched_intensity(const ModelParams& p, double level) {
  const double scale = p.b * static_cast<double>(p.n0);
  if (scale <= 0.0) return std::numeric_limits<double>::infinity();
  const double x = level * (p.b - p.mu) / scale;
  if (x <= -1.0) return std::numeric_limits<double>::infinity();
  const double log_ratio = std::abs(x) < 1e-300 ? 1.0 : std::log1p(x) / x;
  return level / scale * log_ratio;
}

namespace detail {

inline std::size_t autonomous_replication(const ModelParams& p, double t, Xoshiro256& rng,
                                          std::uint64_t max_events) {
  std::uint64_t i = p.n0;
  const double total_rate = p.b + p.mu;
  const double birth_prob = p.b / total_rate;
  double clock = 0.0;
  std::uint64_t events = 0;
  while (i > 0) {
    clock += rng.exponential(static_cast<double>(i) * total_rate);
    if (clock > t) break;
    if (rng.uniform_open() < birth_prob) {
      ++i;
    } else {
      --i;
    }
    if (++events > max_events) {
      throw SimulationCapExceeded("autonomous replication exceeded " + std::to_string(max_events) +
                                  " events (state " + std::to_string(i) + ")");
    }
  }
  return static_cast<std::size_t>(i);
}

struct MtminfOutcome {
  std::size_t occupancy = 0;
  std::size_t arrivals = 0;
};

inline MtminfOutcome mtminf_replication(const ModelParams& p, double t, Xoshiro256& rng,
                                        std::uint64_t max_events) {
  MtminfOutcome out;
  for (std::uint32_t k = 0; k < p.n0; ++k) {
    if (rng.exponential(p.mu) > t) ++out.occupancy;
  }
  // Unit-rate Poisson epochs mapped through the inverse cumulative intensity.
  const double horizon = cumulative_matched_intensity(p, t);
  double level = 0.0;
  while (true) {
    level += rng.exponential(1.0);
    if (level > horizon) break;
    const double arrival = inverse_cumulative_matched_intensity(p, level);
    ++out.arrivals;
    if (arrival + rng.exponential(p.mu) > t) ++out.occupancy;
    if (out.arrivals > max_events) {
      throw SimulationCapExceeded("M(t)|M|inf replication exceeded " + std::to_string(max_events) +
                                  " arrivals");
    }
  }
  return out;
}

// Runs `one(rng)` for every replication, split over config.workers threads.
// Histograms are merged in worker order; the merge is a commutative sum, so
// the result does not depend on the split.
template <class One>
SimResult run_replications(const SimConfig& config, const One& one) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(config.workers, config.replications));
  std::vector<SimResult> partial(workers);
  std::vector<std::exception_ptr> failures(workers);

  auto work = [&](unsigned w) {
    try {
      for (std::uint64_t r = w; r < config.replications; r += workers) {
        auto rng = replication_stream(config.seed, r);
        partial[w].add(one(rng));
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  SimResult result;
  for (const auto& part : partial) result.merge(part);
  result.replications = config.replications;
  result.seed = config.seed;
  result.elapsed = std::chrono::steady_clock::now() - start;
  return result;
}

}  // namespace detail

// Linear birth-death chain: in state i wait Exp(i (b + mu)), then move up with
// probability b / (b + mu), otherwise down.  State 0 is absorbing.
inline SimResult simulate_autonomous(const ModelParams& p, double t, const SimConfig& config) {
  p.validate();
  detail::require_time(t);
  return detail::run_replications(config, [&](Xoshiro256& rng) {
    return detail::autonomous_replication(p, t, rng, config.max_events);
  });
}

// Occupancy at t of the M(t)|M|inf system under the matched intensity.
inline SimResult simulate_mtminf(const ModelParams& p, double t, const SimConfig& config) {
  p.validate();
  detail::require_time(t);
  return detail::run_replications(config, [&](Xoshiro256& rng) {
    return detail::mtminf_replication(p, t, rng, config.max_events).occupancy;
  });
}

// Histogram of the number of arrivals on [0, t]; Poisson(Lambda(t)) in law.
inline SimResult simulate_arrival_counts(const ModelParams& p, double t, const SimConfig& config) {
  p.validate();
  detail::require_time(t);
  return detail::run_replications(config, [&](Xoshiro256& rng) {
    return detail::mtminf_replication(p, t, rng, config.max_events).arrivals;
  });
}

}  // namespace birthflow
