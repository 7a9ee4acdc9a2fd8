// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.  Supporting numbers are printed indented under each line.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "birthflow/inversion.hpp"
#include "birthflow/kolmogorov.hpp"
#include "birthflow/metrics.hpp"
#include "birthflow/model.hpp"
#include "birthflow/random.hpp"
#include "birthflow/report.hpp"
#include "birthflow/simulator.hpp"
#include "birthflow/statistics.hpp"
#include "oracles.hpp"

namespace {

using namespace birthflow;

constexpr double kMu = 1.0;
constexpr std::uint32_t kN0 = 15;
constexpr double kTailTol = 1e-9;

// Criterion tolerances.
constexpr double kTableTol = 0.002;
constexpr double kTableSeconds = 5.0;
constexpr double kIsolationTol = 1e-9;
constexpr double kVerdictThreshold = 0.03;
constexpr double kInversionVsConvolutionTol = 1e-9;
constexpr double kInversionVsOdeTol = 1e-6;
constexpr double kOdeVsConvolutionTol = 1e-6;
constexpr double kMeanRelTol = 1e-5;
constexpr double kContinuityTol = 1e-4;
constexpr double kBranchPmfTol = 1e-6;
constexpr double kPdeOrder = 2.0;
constexpr double kPdeOrderTol = 0.3;
constexpr std::uint64_t kReplications = 100000;
constexpr std::uint64_t kSeed = 20240601;
constexpr double kAlpha = 0.01;
constexpr double kRoundTripTol = 1e-12;
constexpr int kRoundTrips = 100;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, std::string note) {
    pass = pass && ok;
    notes.push_back((ok ? "ok    " : "FAIL  ") + std::move(note));
  }
  void note(std::string s) { notes.push_back("      " + std::move(s)); }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ReferenceTable& reference() {
  static const ReferenceTable r;
  return r;
}

ModelParams cell(double b) { return {b, kMu, kN0}; }

Outcome table_reproduction() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const DistanceTable table = build_distance_table(kMu, kN0, reference().b_values, reference().t_values,
                                                   {.tail_tol = kTailTol, .workers = 1});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  int outside = 0;
  double worst = 0.0;
  std::string cells;
  for (std::size_t i = 0; i < table.b_values.size(); ++i) {
    for (std::size_t j = 0; j < table.t_values.size(); ++j) {
      const double ref = reference().rho[i][j];
      const double diff = std::abs(table.rho(i, j) - ref);
      worst = std::max(worst, diff);
      if (!(diff <= kTableTol)) {
        ++outside;
        cells += fmt(" (%.1f,%.1f):%.4f/%.3f", table.b_values[i], table.t_values[j], table.rho(i, j), ref);
      }
    }
  }
  o.require(table.all_ok() && outside == 0,
            fmt("%d of %zu cells outside +-%.3g of the reference table (worst %.4f)", outside,
                table.cells.size(), kTableTol, worst));
  if (outside > 0) o.note("computed/reference:" + cells);
  for (const auto& [b, t, want] : {std::tuple{0.8, 0.1, 0.009}, {1.2, 1.0, 0.136}, {1.9, 1.0, 0.039}}) {
    const auto bi = std::find(table.b_values.begin(), table.b_values.end(), b) - table.b_values.begin();
    const auto tj = std::find(table.t_values.begin(), table.t_values.end(), t) - table.t_values.begin();
    const double got = table.rho(bi, tj);
    o.require(std::abs(got - want) <= kTableTol, fmt("anchor (%.1f, %.1f): %.4f vs %.3f", b, t, got, want));
  }
  o.require(seconds <= kTableSeconds, fmt("runtime %.3f s single-threaded (limit %.0f s)", seconds, kTableSeconds));

  // Isolation: the two independent routes to the Poisson-side pmf agree.
  double isolation = 0.0;
  for (double b : reference().b_values) {
    for (double t : reference().t_values) {
      const auto cfg = choose_truncation(cell(b), t, kTailTol);
      isolation = std::max(isolation, max_abs_difference(invert_cf(poisson_matched_cf(cell(b)), t, cfg),
                                                         analytic_pmf_poisson(cell(b), t, cfg.kmax, kTailTol)));
    }
  }
  o.note(fmt("isolation: inversion vs convolution agree to %.2e on all cells (limit %.0e): %s", isolation,
             kIsolationTol, isolation <= kIsolationTol ? "holds" : "VIOLATED"));
  return o;
}

Outcome threshold_verdict() {
  Outcome o;
  const DistanceTable table = build_distance_table(kMu, kN0, reference().b_values, reference().t_values);
  int wrong = 0, checked = 0;
  for (std::size_t i = 0; i < table.b_values.size(); ++i) {
    for (std::size_t j = 0; j < table.t_values.size(); ++j) {
      const double b = table.b_values[i], t = table.t_values[j];
      const Verdict v = approximation_verdict(table.rho(i, j), kVerdictThreshold);
      if (t == 0.1) {
        ++checked;
        wrong += v != Verdict::kAdmissible;
      } else if (t >= 0.4 && b >= 1.2) {
        ++checked;
        wrong += v != Verdict::kInexpedient;
      }
    }
  }
  o.require(wrong == 0, fmt("%d of %d constrained cells carry the wrong verdict at threshold %.2f", wrong, checked,
                            kVerdictThreshold));
  return o;
}

Outcome oracle_triangle_and_means(Outcome& means) {
  Outcome o;
  double a = 0.0, b_err = 0.0, c = 0.0, mean_err = 0.0, lambda_gap = 0.0;
  for (double b : reference().b_values) {
    for (double t : reference().t_values) {
      const ModelParams p = cell(b);
      const auto cfg = choose_truncation(p, t, kTailTol);
      const auto ode = stable_ode_config(p, cfg.kmax, 0.5, kTailTol);
      const Pmf inv_g = invert_cf(poisson_matched_cf(p), t, cfg);
      const Pmf inv_h = invert_cf(autonomous_cf(p), t, cfg);
      const Pmf conv = analytic_pmf_poisson(p, t, cfg.kmax, kTailTol);
      const Pmf ode_h = solve_autonomous(p, t, ode);
      const Pmf ode_g = solve_mtminf(p, t, ode);
      a = std::max(a, max_abs_difference(inv_g, conv));
      b_err = std::max(b_err, max_abs_difference(inv_h, ode_h));
      c = std::max(c, max_abs_difference(ode_g, conv));
      const double m = mean_occupancy(p, t);
      for (const Pmf* pmf : {&inv_g, &inv_h, &ode_h, &ode_g}) mean_err = std::max(mean_err, std::abs(pmf->mean() / m - 1.0));
      lambda_gap = std::max(lambda_gap, std::abs(matched_intensity(p, t) - b * m));
    }
  }
  o.require(a <= kInversionVsConvolutionTol, fmt("(a) Poisson inversion vs convolution: %.2e (limit %.0e)", a,
                                                 kInversionVsConvolutionTol));
  o.require(b_err <= kInversionVsOdeTol,
            fmt("(b) autonomous inversion vs ODE: %.2e (limit %.0e)", b_err, kInversionVsOdeTol));
  o.require(c <= kOdeVsConvolutionTol,
            fmt("(c) Poisson-input ODE vs convolution: %.2e (limit %.0e)", c, kOdeVsConvolutionTol));
  means.require(mean_err <= kMeanRelTol,
                fmt("worst relative mean error over 4 routes x 42 cells: %.2e (limit %.0e)", mean_err, kMeanRelTol));
  means.require(lambda_gap == 0.0, fmt("max |lambda(t) - b m(t)| = %.3g (must be exactly 0)", lambda_gap));
  return o;
}

Outcome degenerate_branch() {
  Outcome o;
  double worst = 0.0;
  for (double t : {0.1, 0.5, 1.0}) {
    for (int k = 0; k <= 400; ++k) {
      const double u = -std::numbers::pi + 2.0 * std::numbers::pi * k / 400.0;
      const Complex limit = cf_autonomous({kMu, kMu, kN0}, u, t);
      for (double b : {kMu * (1 + 1e-6), kMu * (1 - 1e-6)}) {
        worst = std::max(worst, std::abs(cf_autonomous({b, kMu, kN0}, u, t) - limit));
      }
    }
  }
  o.require(worst <= kContinuityTol, fmt("CF gap across b = mu(1 +- 1e-6): %.2e (limit %.0e)", worst, kContinuityTol));

  const ModelParams p{1.0, 1.0, 15};
  const auto cfg = choose_truncation(p, 0.5, kTailTol);
  const double gap = max_abs_difference(invert_cf(autonomous_cf(p), 0.5, cfg),
                                        solve_autonomous(p, 0.5, stable_ode_config(p, cfg.kmax, 0.5, kTailTol)));
  o.require(gap <= kBranchPmfTol, fmt("b = mu = 1, N = 15, t = 0.5 pmf vs ODE: %.2e (limit %.0e)", gap, kBranchPmfTol));
  return o;
}

Outcome pde_residual() {
  Outcome o;
  for (double b : {0.8, 1.0, 1.9}) {
    std::vector<double> residuals;
    for (double h : {4e-3, 2e-3, 1e-3}) {
      double worst = 0.0;
      for (double u : {-2.5, -1.0, 0.3, 1.7, 2.9}) {
        for (double t : {0.2, 0.5, 1.0}) worst = std::max(worst, testing::autonomous_pde_residual(cell(b), u, t, h));
      }
      residuals.push_back(worst);
    }
    for (std::size_t k = 1; k < residuals.size(); ++k) {
      const double order = std::log2(residuals[k - 1] / residuals[k]);
      o.require(std::abs(order - kPdeOrder) <= kPdeOrderTol,
                fmt("b=%.1f halving to h=%.0e: observed order %.3f (nominal %.0f +- %.1f)", b, 4e-3 / (1 << k),
                    order, kPdeOrder, kPdeOrderTol));
    }
  }
  return o;
}

Outcome simulation_statistics() {
  Outcome o;
  const SimConfig sim{.replications = kReplications, .seed = kSeed};
  for (const auto& [b, t] : simulation_cells()) {
    const ModelParams p = cell(b);
    const auto cfg = choose_truncation(p, t, kTailTol);
    const Pmf model_h = invert_cf(autonomous_cf(p), t, cfg);
    const Pmf model_g = analytic_pmf_poisson(p, t, cfg.kmax, kTailTol);
    const SimResult h = simulate_autonomous(p, t, sim), g = simulate_mtminf(p, t, sim);
    const auto chi_h = chi_squared_test(h, model_h), chi_g = chi_squared_test(g, model_g);
    o.require(chi_h.passes(kAlpha), fmt("(%.1f, %.1f) autonomous: chi2 %.2f on %.0f df, p = %.4f", b, t,
                                        chi_h.statistic, chi_h.degrees_of_freedom, chi_h.p_value));
    o.require(chi_g.passes(kAlpha), fmt("(%.1f, %.1f) Poisson input: chi2 %.2f on %.0f df, p = %.4f", b, t,
                                        chi_g.statistic, chi_g.degrees_of_freedom, chi_g.p_value));
    const bool same = h.counts == simulate_autonomous(p, t, sim).counts && g.counts == simulate_mtminf(p, t, sim).counts;
    o.require(same, fmt("(%.1f, %.1f) rerun with seed %llu is bit-identical", b, t,
                        static_cast<unsigned long long>(kSeed)));
  }
  return o;
}

Outcome inversion_round_trip() {
  Outcome o;
  Xoshiro256 rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < kRoundTrips; ++trial) {
    const std::size_t len = 1 + static_cast<std::size_t>(rng.uniform_open() * 60);
    std::vector<double> probs(len);
    double total = 0.0;
    for (auto& x : probs) total += (x = rng.uniform_open() < 0.25 ? 0.0 : rng.exponential(1.0));
    if (total == 0.0) probs[0] = total = 1.0;
    for (auto& x : probs) x /= total;
    const CfEvaluator cf = [&probs](double u, double) {
      Complex acc{0.0, 0.0};
      for (std::size_t k = 0; k < probs.size(); ++k) acc += probs[k] * std::polar(1.0, u * static_cast<double>(k));
      return acc;
    };
    const std::size_t kmax = len - 1;
    const Pmf back = invert_cf(cf, 0.0, {.grid_size = std::bit_ceil(std::max<std::size_t>(2 * kmax, 2)), .kmax = kmax});
    for (std::size_t i = 0; i <= kmax; ++i) worst = std::max(worst, std::abs(back[i] - probs[i]));
  }
  o.require(worst <= kRoundTripTol,
            fmt("%d random pmfs, worst entrywise error %.2e (limit %.0e)", kRoundTrips, worst, kRoundTripTol));
  return o;
}

}  // namespace

int main() {
  struct Row {
    int id;
    const char* name;
    Outcome outcome;
  };
  std::vector<Row> rows;
  auto guarded = [](auto fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      Outcome o;
      o.require(false, std::string("exception: ") + e.what());
      return o;
    }
  };

  rows.push_back({1, "table reproduction", guarded(table_reproduction)});
  rows.push_back({2, "threshold verdict", guarded(threshold_verdict)});
  Outcome means;
  rows.push_back({3, "oracle triangle", guarded([&] { return oracle_triangle_and_means(means); })});
  rows.push_back({4, "mean laws", means});
  rows.push_back({5, "degenerate branch", guarded(degenerate_branch)});
  rows.push_back({6, "PDE residual order", guarded(pde_residual)});
  rows.push_back({7, "simulation statistics", guarded(simulation_statistics)});
  rows.push_back({8, "inversion round-trip", guarded(inversion_round_trip)});

  bool all = true;
  for (const auto& r : rows) {
    if (r.id == 4 && r.outcome.notes.empty()) {
      // Criterion 3 threw before the means were measured.
      std::printf("FAIL  criterion %d: %s\n      not evaluated\n", r.id, r.name);
      all = false;
      continue;
    }
    std::printf("%s  criterion %d: %s\n", r.outcome.pass ? "PASS" : "FAIL", r.id, r.name);
    for (const auto& n : r.outcome.notes) std::printf("      %s\n", n.c_str());
    all = all && r.outcome.pass;
  }
  std::printf("%s\n", all ? "all criteria pass" : "one or more criteria fail");
  return all ? 0 : 1;
}
