#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "birthflow/errors.hpp"
#include "birthflow/inversion.hpp"
#include "birthflow/model.hpp"
#include "birthflow/pmf.hpp"

namespace birthflow {

// max_i |sum_{n<=i} (p_n - q_n)|, the largest gap between the two CDFs.
// Supports are aligned by zero padding; the scan runs one index past the
// longer support so the final partial sum (the total-mass discrepancy) is
// always included.
inline double kolmogorov_distance(const Pmf& p, const Pmf& q) {
  const std::size_t len = std::max(p.probs.size(), q.probs.size()) + 1;
  double partial = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    partial += p[i] - q[i];
    worst = std::max(worst, std::abs(partial));
  }
  return worst;
}

enum class Verdict { kAdmissible, kInexpedient };

inline constexpr double kDefaultVerdictThreshold = 0.03;

// Admissible iff the distance does not exceed the threshold.
inline Verdict approximation_verdict(double rho, double threshold = kDefaultVerdictThreshold) {
  return rho <= threshold ? Verdict::kAdmissible : Verdict::kInexpedient;
}

inline const char* to_string(Verdict v) {
  return v == Verdict::kAdmissible ? "admissible" : "inexpedient";
}

struct DistanceCell {
  double b = 0.0;
  double t = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t kmax = 0;
  std::size_t grid_size = 0;
  // Larger of the two inverted pmfs' tail bounds.
  double tail_bound = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct TablePolicy {
  double tail_tol = kDefaultTailTolerance;
  unsigned workers = 1;
};

struct DistanceTable {
  std::vector<double> b_values;
  std::vector<double> t_values;
  std::vector<DistanceCell> cells;  // row-major by b
  double mu = 1.0;
  std::uint32_t n0 = 0;
  TablePolicy policy;

  const DistanceCell& at(std::size_t bi, std::size_t ti) const {
    return cells.at(bi * t_values.size() + ti);
  }
  double rho(std::size_t bi, std::size_t ti) const { return at(bi, ti).rho; }

  bool all_ok() const {
    for (const auto& c : cells) {
      if (!c.ok()) return false;
    }
    return true;
  }
};

// One cell: both CFs inverted under a shared truncation.
inline DistanceCell compute_distance_cell(const ModelParams& params, double t, double tail_tol) {
  DistanceCell cell;
  cell.b = params.b;
  cell.t = t;
  try {
    const InversionConfig cfg = choose_truncation(params, t, tail_tol);
    const Pmf poisson = invert_cf(poisson_matched_cf(params), t, cfg);
    const Pmf autonomous = invert_cf(autonomous_cf(params), t, cfg);
    cell.rho = kolmogorov_distance(poisson, autonomous);
    cell.kmax = cfg.kmax;
    cell.grid_size = cfg.grid_size;
    cell.tail_bound = std::max(poisson.tail_bound, autonomous.tail_bound);
  } catch (const std::exception& e) {
    cell.error = "cell (b=" + std::to_string(params.b) + ", t=" + std::to_string(t) + "): " + e.what();
  }
  return cell;
}

// Cells are independent; with policy.workers > 1 they are spread over threads
// but always stored at their grid index.  Failed cells carry their error
// message instead of aborting the table.
inline DistanceTable build_distance_table(double mu, std::uint32_t n0, const std::vector<double>& b_values,
                                          const std::vector<double>& t_values,
                                          const TablePolicy& policy = {}) {
  if (b_values.empty() || t_values.empty()) throw InvalidArgument("b and t grids must be non-empty");
  for (double b : b_values) {
    if (!(b >= 0.0)) throw InvalidArgument("b grid values must be >= 0");
  }
  for (double t : t_values) {
    if (!(t >= 0.0)) throw InvalidArgument("t grid values must be >= 0");
  }

  DistanceTable table;
  table.b_values = b_values;
  table.t_values = t_values;
  table.mu = mu;
  table.n0 = n0;
  table.policy = policy;
  table.cells.resize(b_values.size() * t_values.size());

  const std::size_t total = table.cells.size();
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < total; k += stride) {
      const ModelParams params{b_values[k / t_values.size()], mu, n0};
      table.cells[k] = compute_distance_cell(params, t_values[k % t_values.size()], policy.tail_tol);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(policy.workers, 1, total);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  return table;
}

}  // namespace birthflow
