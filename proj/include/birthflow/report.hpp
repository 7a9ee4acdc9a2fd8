#pragma once

// Orchestration behind the command-line tool: run configuration, table and
// pmf emission in CSV / markdown / JSON-lines, and the validation suite.
//
// Every cmd_* function writes its primary output to `out`, diagnostics to
// `err`, and returns the process exit status (0 iff no cell or check failed).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "birthflow/errors.hpp"
#include "birthflow/inversion.hpp"
#include "birthflow/kolmogorov.hpp"
#include "birthflow/metrics.hpp"
#include "birthflow/model.hpp"
#include "birthflow/simulator.hpp"
#include "birthflow/statistics.hpp"

namespace birthflow {

enum class Mode { kTable, kPmf, kMean, kSimulate, kValidate };
enum class OutputFormat { kCsv, kMarkdown, kJsonLines };

// Reference distances for mu = 1, n0 = 15, three decimals.
struct ReferenceTable {
  std::vector<double> b_values{0.8, 1.2, 1.5, 1.6, 1.7, 1.8, 1.9};
  std::vector<double> t_values{0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<std::vector<double>> rho{
      {0.009, 0.019, 0.039, 0.057, 0.075, 0.090},
      {0.014, 0.030, 0.059, 0.086, 0.112, 0.136},
      {0.019, 0.038, 0.073, 0.107, 0.125, 0.126},
      {0.020, 0.040, 0.079, 0.105, 0.108, 0.096},
      {0.021, 0.042, 0.082, 0.096, 0.086, 0.068},
      {0.023, 0.045, 0.080, 0.082, 0.065, 0.045},
      {0.024, 0.048, 0.076, 0.067, 0.046, 0.039},
  };
  double mu = 1.0;
  std::uint32_t n0 = 15;

  std::optional<double> lookup(double b, double t) const {
    for (std::size_t i = 0; i < b_values.size(); ++i) {
      for (std::size_t j = 0; j < t_values.size(); ++j) {
        if (std::abs(b_values[i] - b) < 1e-12 && std::abs(t_values[j] - t) < 1e-12) return rho[i][j];
      }
    }
    return std::nullopt;
  }
};

inline constexpr double kReferenceTolerance = 0.002;

// Cells used by the statistical checks.
inline const std::vector<std::pair<double, double>>& simulation_cells() {
  static const std::vector<std::pair<double, double>> cells{{0.8, 0.4}, {1.5, 0.6}, {1.9, 1.0}};
  return cells;
}

struct RunConfig {
  Mode mode = Mode::kTable;
  ModelParams params{0.8, 1.0, 15};
  double t = 0.1;
  std::vector<double> b_grid = ReferenceTable{}.b_values;
  std::vector<double> t_grid = ReferenceTable{}.t_values;
  double tail_tol = kDefaultTailTolerance;
  double ode_safety = 0.5;
  SimConfig sim{};
  double threshold = kDefaultVerdictThreshold;
  unsigned workers = 1;
  std::string out_path;  // empty: standard output
  std::optional<OutputFormat> format;  // unset: per-mode default
  // Testing hook: multiplies the Poisson-side CF before inversion.
  double cf_perturbation = 1.0;

  OutputFormat effective_format() const {
    if (format) return *format;
    switch (mode) {
      case Mode::kTable:
        return OutputFormat::kMarkdown;
      case Mode::kValidate:
        return OutputFormat::kJsonLines;
      default:
        return OutputFormat::kCsv;
    }
  }

  void validate() const {
    params.validate();
    if (mode == Mode::kTable && (b_grid.empty() || t_grid.empty())) {
      throw InvalidArgument("table mode needs non-empty b and t grids");
    }
    if (!(t >= 0.0)) throw InvalidArgument("t must be >= 0");
    if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw InvalidArgument("tail_tol must lie in (0, 1)");
    if (!(ode_safety > 0.0 && ode_safety <= 1.0)) throw InvalidArgument("ode safety must lie in (0, 1]");
    sim.validate();
  }
};

// --- parsing helpers ------------------------------------------------------

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "markdown" || s == "md") return OutputFormat::kMarkdown;
  if (s == "json-lines" || s == "jsonl") return OutputFormat::kJsonLines;
  throw InvalidArgument("unknown output format '" + std::string(s) + "' (csv|markdown|json-lines)");
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InvalidArgument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

// "0.8, 1.2,1.5" -> {0.8, 1.2, 1.5}
inline std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_double(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

// Overlays an INI-style file onto `cfg`.  Recognized keys:
//
//   [model]      b, mu, n0, t
//   [grid]       b, t                  (comma-separated lists)
//   [inversion]  tail_tol
//   [ode]        safety
//   [sim]        replications, seed, max_events
//   [run]        workers, threshold
//   [output]     format, path
//
// Unknown sections or keys are rejected.
inline void apply_config_file(RunConfig& cfg, std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  static const std::map<std::string, std::vector<std::string>> known{
      {"model", {"b", "mu", "n0", "t"}},
      {"grid", {"b", "t"}},
      {"inversion", {"tail_tol"}},
      {"ode", {"safety"}},
      {"sim", {"replications", "seed", "max_events"}},
      {"run", {"workers", "threshold"}},
      {"output", {"format", "path"}},
  };
  for (const auto& [section, keys] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) throw InvalidArgument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : keys) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw InvalidArgument("config: unknown key '" + key + "' in [" + section + "]");
      }
      const std::string v = value.get_value<std::string>();
      const std::string id = section + "." + key;
      if (id == "model.b") cfg.params.b = parse_double(v);
      else if (id == "model.mu") cfg.params.mu = parse_double(v);
      else if (id == "model.n0") cfg.params.n0 = static_cast<std::uint32_t>(parse_double(v));
      else if (id == "model.t") cfg.t = parse_double(v);
      else if (id == "grid.b") cfg.b_grid = parse_list(v);
      else if (id == "grid.t") cfg.t_grid = parse_list(v);
      else if (id == "inversion.tail_tol") cfg.tail_tol = parse_double(v);
      else if (id == "ode.safety") cfg.ode_safety = parse_double(v);
      else if (id == "sim.replications") cfg.sim.replications = static_cast<std::uint64_t>(parse_double(v));
      else if (id == "sim.seed") cfg.sim.seed = std::stoull(v);
      else if (id == "sim.max_events") cfg.sim.max_events = static_cast<std::uint64_t>(parse_double(v));
      else if (id == "run.workers") cfg.workers = static_cast<unsigned>(parse_double(v));
      else if (id == "run.threshold") cfg.threshold = parse_double(v);
      else if (id == "output.format") cfg.format = parse_format(v);
      else if (id == "output.path") cfg.out_path = v;
    }
  }
}

// --- formatting -------------------------------------------------------------

// Shortest representation that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline constexpr std::string_view kTableCsvHeader = "b,t,rho,kmax,grid_size,tail_bound";

inline void write_table_csv(const DistanceTable& table, std::ostream& os) {
  os << kTableCsvHeader << '\n';
  for (const auto& c : table.cells) {
    os << format_double(c.b) << ',' << format_double(c.t) << ',' << format_double(c.rho) << ',' << c.kmax
       << ',' << c.grid_size << ',' << format_double(c.tail_bound) << '\n';
  }
}

// Rows b, columns t, three decimals.
inline void write_table_markdown(const DistanceTable& table, std::ostream& os) {
  os << "| b \\ t |";
  for (double t : table.t_values) os << ' ' << format_double(t) << " |";
  os << "\n|---|";
  for (std::size_t j = 0; j < table.t_values.size(); ++j) os << "---|";
  os << '\n';
  for (std::size_t i = 0; i < table.b_values.size(); ++i) {
    os << "| " << format_double(table.b_values[i]) << " |";
    for (std::size_t j = 0; j < table.t_values.size(); ++j) os << ' ' << format_fixed(table.rho(i, j), 3) << " |";
    os << '\n';
  }
}

inline void write_table_jsonl(const DistanceTable& table, double threshold, std::ostream& os) {
  for (const auto& c : table.cells) {
    nlohmann::json row{{"b", c.b},
                       {"t", c.t},
                       {"rho", json_number(c.rho)},
                       {"kmax", c.kmax},
                       {"grid_size", c.grid_size},
                       {"tail_bound", json_number(c.tail_bound)}};
    if (c.ok()) {
      row["verdict"] = to_string(approximation_verdict(c.rho, threshold));
    } else {
      row["error"] = c.error;
    }
    os << row.dump() << '\n';
  }
}

// Reads back write_table_csv output.  Grids are recovered in first-seen order.
inline DistanceTable read_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTableCsvHeader) throw InvalidArgument("unexpected CSV header");
  DistanceTable table;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 6) throw InvalidArgument("CSV row with " + std::to_string(f.size()) + " fields");
    DistanceCell c;
    c.b = parse_double(f[0]);
    c.t = parse_double(f[1]);
    c.rho = f[2] == "nan" ? std::nan("") : parse_double(f[2]);
    c.kmax = static_cast<std::size_t>(parse_double(f[3]));
    c.grid_size = static_cast<std::size_t>(parse_double(f[4]));
    c.tail_bound = parse_double(f[5]);
    if (std::find(table.b_values.begin(), table.b_values.end(), c.b) == table.b_values.end()) {
      table.b_values.push_back(c.b);
    }
    if (std::find(table.t_values.begin(), table.t_values.end(), c.t) == table.t_values.end()) {
      table.t_values.push_back(c.t);
    }
    table.cells.push_back(c);
  }
  if (table.cells.size() != table.b_values.size() * table.t_values.size()) {
    throw InvalidArgument("CSV rows do not form a full b x t grid");
  }
  return table;
}

// --- commands -----------------------------------------------------------------

inline int cmd_table(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  const DistanceTable table = build_distance_table(cfg.params.mu, cfg.params.n0, cfg.b_grid, cfg.t_grid,
                                                   {.tail_tol = cfg.tail_tol, .workers = cfg.workers});
  switch (cfg.effective_format()) {
    case OutputFormat::kCsv:
      write_table_csv(table, out);
      break;
    case OutputFormat::kMarkdown:
      write_table_markdown(table, out);
      break;
    case OutputFormat::kJsonLines:
      write_table_jsonl(table, cfg.threshold, out);
      break;
  }
  int status = 0;
  for (const auto& c : table.cells) {
    if (!c.ok()) {
      err << "error: " << c.error << '\n';
      status = 1;
    }
  }
  return status;
}

struct PmfPair {
  Pmf poisson;     // M(t)|M|inf input
  Pmf autonomous;
  InversionConfig config;
  double rho = 0.0;
};

inline PmfPair invert_pair(const ModelParams& p, double t, double tail_tol, double perturbation = 1.0) {
  PmfPair pair;
  pair.config = choose_truncation(p, t, tail_tol);
  CfEvaluator g = poisson_matched_cf(p);
  if (perturbation != 1.0) g = [g, perturbation](double u, double s) { return perturbation * g(u, s); };
  pair.poisson = invert_cf(g, t, pair.config);
  pair.autonomous = invert_cf(autonomous_cf(p), t, pair.config);
  pair.rho = kolmogorov_distance(pair.poisson, pair.autonomous);
  return pair;
}

inline int cmd_pmf(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  cfg.validate();
  const PmfPair pair = invert_pair(cfg.params, cfg.t, cfg.tail_tol, cfg.cf_perturbation);
  const Verdict verdict = approximation_verdict(pair.rho, cfg.threshold);
  const std::size_t n = pair.config.kmax + 1;

  switch (cfg.effective_format()) {
    case OutputFormat::kCsv:
      out << "i,p_poisson,p_autonomous\n";
      for (std::size_t i = 0; i < n; ++i) {
        out << i << ',' << format_double(pair.poisson[i]) << ',' << format_double(pair.autonomous[i]) << '\n';
      }
      out << "# rho=" << format_double(pair.rho) << ",threshold=" << format_double(cfg.threshold)
          << ",verdict=" << to_string(verdict) << '\n';
      break;
    case OutputFormat::kMarkdown:
      out << "| i | P(i,t) | PA(i,t) |\n|---|---|---|\n";
      for (std::size_t i = 0; i < n; ++i) {
        out << "| " << i << " | " << format_fixed(pair.poisson[i], 6) << " | " << format_fixed(pair.autonomous[i], 6)
            << " |\n";
      }
      out << "\nrho = " << format_fixed(pair.rho, 3) << " (threshold " << format_double(cfg.threshold)
          << "): " << to_string(verdict) << '\n';
      break;
    case OutputFormat::kJsonLines:
      for (std::size_t i = 0; i < n; ++i) {
        out << nlohmann::json{{"i", i}, {"p_poisson", pair.poisson[i]}, {"p_autonomous", pair.autonomous[i]}}.dump()
            << '\n';
      }
      out << nlohmann::json{{"b", cfg.params.b},
                            {"t", cfg.t},
                            {"rho", pair.rho},
                            {"threshold", cfg.threshold},
                            {"verdict", to_string(verdict)}}
                 .dump()
          << '\n';
      break;
  }
  return 0;
}

inline int cmd_mean(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  cfg.validate();
  const PmfPair pair = invert_pair(cfg.params, cfg.t, cfg.tail_tol, cfg.cf_perturbation);
  const double m = mean_occupancy(cfg.params, cfg.t);
  const double lam = matched_intensity(cfg.params, cfg.t);
  switch (cfg.effective_format()) {
    case OutputFormat::kCsv:
      out << "b,t,mean,intensity,mean_autonomous_inverted,mean_poisson_inverted\n"
          << format_double(cfg.params.b) << ',' << format_double(cfg.t) << ',' << format_double(m) << ','
          << format_double(lam) << ',' << format_double(pair.autonomous.mean()) << ','
          << format_double(pair.poisson.mean()) << '\n';
      break;
    case OutputFormat::kMarkdown:
      out << "| b | t | m(t) | lambda(t) | mean (autonomous, inverted) | mean (Poisson, inverted) |\n"
          << "|---|---|---|---|---|---|\n"
          << "| " << format_double(cfg.params.b) << " | " << format_double(cfg.t) << " | " << format_fixed(m, 6)
          << " | " << format_fixed(lam, 6) << " | " << format_fixed(pair.autonomous.mean(), 6) << " | "
          << format_fixed(pair.poisson.mean(), 6) << " |\n";
      break;
    case OutputFormat::kJsonLines:
      out << nlohmann::json{{"b", cfg.params.b},
                            {"t", cfg.t},
                            {"mean", m},
                            {"intensity", lam},
                            {"mean_autonomous_inverted", pair.autonomous.mean()},
                            {"mean_poisson_inverted", pair.poisson.mean()}}
                 .dump()
          << '\n';
      break;
  }
  return 0;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.validate();
  SimConfig sim = cfg.sim;
  sim.workers = cfg.workers;
  const SimResult autonomous = simulate_autonomous(cfg.params, cfg.t, sim);
  const SimResult mtminf = simulate_mtminf(cfg.params, cfg.t, sim);
  const PmfPair pair = invert_pair(cfg.params, cfg.t, cfg.tail_tol);
  const auto chi_a = chi_squared_test(autonomous, pair.autonomous);
  const auto chi_p = chi_squared_test(mtminf, pair.poisson);
  const std::size_t n = std::max(autonomous.counts.size(), mtminf.counts.size());
  auto count = [](const SimResult& r, std::size_t i) { return i < r.counts.size() ? r.counts[i] : 0; };

  switch (cfg.effective_format()) {
    case OutputFormat::kCsv:
      out << "i,count_autonomous,count_poisson\n";
      for (std::size_t i = 0; i < n; ++i) out << i << ',' << count(autonomous, i) << ',' << count(mtminf, i) << '\n';
      out << "# replications=" << sim.replications << ",seed=" << sim.seed
          << ",mean_autonomous=" << format_double(autonomous.mean())
          << ",mean_poisson=" << format_double(mtminf.mean())
          << ",mean_exact=" << format_double(mean_occupancy(cfg.params, cfg.t))
          << ",chi2_p_autonomous=" << format_double(chi_a.p_value)
          << ",chi2_p_poisson=" << format_double(chi_p.p_value) << '\n';
      break;
    case OutputFormat::kMarkdown:
      out << "| i | autonomous | Poisson input |\n|---|---|---|\n";
      for (std::size_t i = 0; i < n; ++i) {
        out << "| " << i << " | " << count(autonomous, i) << " | " << count(mtminf, i) << " |\n";
      }
      out << "\nreplications " << sim.replications << ", seed " << sim.seed << "; means "
          << format_fixed(autonomous.mean(), 4) << " / " << format_fixed(mtminf.mean(), 4) << " (exact "
          << format_fixed(mean_occupancy(cfg.params, cfg.t), 4) << "); chi-squared p "
          << format_fixed(chi_a.p_value, 4) << " / " << format_fixed(chi_p.p_value, 4) << '\n';
      break;
    case OutputFormat::kJsonLines:
      for (std::size_t i = 0; i < n; ++i) {
        out << nlohmann::json{{"i", i}, {"count_autonomous", count(autonomous, i)}, {"count_poisson", count(mtminf, i)}}
                   .dump()
            << '\n';
      }
      out << nlohmann::json{{"replications", sim.replications},
                            {"seed", sim.seed},
                            {"mean_autonomous", autonomous.mean()},
                            {"mean_poisson", mtminf.mean()},
                            {"mean_exact", mean_occupancy(cfg.params, cfg.t)},
                            {"chi2_p_autonomous", chi_a.p_value},
                            {"chi2_p_poisson", chi_p.p_value}}
                 .dump()
          << '\n';
      break;
  }
  err << "elapsed: autonomous " << autonomous.elapsed.count() << " s, poisson " << mtminf.elapsed.count()
      << " s\n";
  return 0;
}

// --- validation suite ---------------------------------------------------------

struct CheckResult {
  std::string check;
  double b = std::nan("");
  double t = std::nan("");
  std::string quantity;
  double tolerance = 0.0;
  double observed = 0.0;
  bool passed = false;
  // Informational rows (comparison with the reference table) do not affect the
  // exit status.
  bool gating = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.gating || c.passed; });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.gating && !c.passed; }));
  }
};

namespace detail {

inline CheckResult make_check(std::string name, double b, double t, std::string quantity, double tol,
                              double observed, bool gating = true) {
  CheckResult c{std::move(name), b, t, std::move(quantity), tol, observed, false, gating, {}};
  c.passed = std::isfinite(observed) && observed <= tol;
  return c;
}

inline CheckResult failed_check(std::string name, double b, double t, std::string quantity, double tol,
                                const std::exception& e) {
  CheckResult c{std::move(name), b, t, std::move(quantity), tol, std::nan(""), false, true, e.what()};
  return c;
}

inline void validate_cell(const RunConfig& cfg, double b, double t, ValidationReport& report) {
  const ModelParams p{b, cfg.params.mu, cfg.params.n0};
  const ReferenceTable reference;
  try {
    const PmfPair pair = invert_pair(p, t, cfg.tail_tol, cfg.cf_perturbation);
    const Pmf convolution = analytic_pmf_poisson(p, t, pair.config.kmax, cfg.tail_tol);
    const OdeConfig ode = stable_ode_config(p, pair.config.kmax, cfg.ode_safety, cfg.tail_tol);
    const Pmf ode_autonomous = solve_autonomous(p, t, ode);
    const Pmf ode_mtminf = solve_mtminf(p, t, ode);

    report.checks.push_back(make_check("inversion_vs_convolution", b, t, "max |P_inv - P_conv|", 1e-9,
                                       max_abs_difference(pair.poisson, convolution)));
    report.checks.push_back(make_check("inversion_vs_ode_autonomous", b, t, "max |PA_inv - PA_ode|", 1e-6,
                                       max_abs_difference(pair.autonomous, ode_autonomous)));
    report.checks.push_back(make_check("ode_mtminf_vs_convolution", b, t, "max |P_ode - P_conv|", 1e-6,
                                       max_abs_difference(ode_mtminf, convolution)));

    const double m = mean_occupancy(p, t);
    double worst = 0.0;
    for (const Pmf* pmf : {&pair.poisson, &pair.autonomous, &ode_autonomous, &ode_mtminf}) {
      worst = std::max(worst, std::abs(pmf->mean() / m - 1.0));
    }
    report.checks.push_back(make_check("mean_law", b, t, "max relative mean error over 4 routes", 1e-5, worst));
    report.checks.push_back(make_check("intensity_identity", b, t, "|lambda(t) - b m(t)|", 0.0,
                                       std::abs(matched_intensity(p, t) - b * m)));

    if (p.mu == reference.mu && p.n0 == reference.n0) {
      if (const auto ref = reference.lookup(b, t)) {
        report.checks.push_back(make_check("reference_table", b, t, "|rho - reference|", kReferenceTolerance,
                                           std::abs(pair.rho - *ref), false));
        report.checks.back().detail = "rho=" + format_double(pair.rho) + " reference=" + format_fixed(*ref, 3);
      }
    }
  } catch (const std::exception& e) {
    report.checks.push_back(failed_check("cell", b, t, "oracle routes", 0.0, e));
  }
}

inline void validate_simulation(const RunConfig& cfg, double b, double t, ValidationReport& report) {
  const ModelParams p{b, cfg.params.mu, cfg.params.n0};
  SimConfig sim = cfg.sim;
  sim.workers = cfg.workers;
  try {
    const PmfPair pair = invert_pair(p, t, cfg.tail_tol, cfg.cf_perturbation);
    const double m = mean_occupancy(p, t);
    struct Route {
      const char* name;
      SimResult (*run)(const ModelParams&, double, const SimConfig&);
      const Pmf* model;
    };
    for (const Route& r : {Route{"autonomous", &simulate_autonomous, &pair.autonomous},
                           Route{"poisson", &simulate_mtminf, &pair.poisson}}) {
      const SimResult res = r.run(p, t, sim);
      const auto chi = chi_squared_test(res, *r.model);
      // Reported as 1 - p so that "observed <= tolerance" reads as p >= alpha.
      auto c = make_check(std::string("chi_squared_") + r.name, b, t, "1 - p_value", 0.99, 1.0 - chi.p_value);
      c.detail = "chi2=" + format_double(chi.statistic) + " bins=" + std::to_string(chi.bins) +
                 " p=" + format_double(chi.p_value);
      report.checks.push_back(c);
      report.checks.push_back(make_check(std::string("sim_mean_") + r.name, b, t, "|mean - m(t)| / SE", 3.0,
                                         std::abs(res.mean() - m) / res.standard_error()));
    }
  } catch (const std::exception& e) {
    report.checks.push_back(failed_check("simulation", b, t, "simulation routes", 0.0, e));
  }
}

}  // namespace detail

inline ValidationReport run_validation(const RunConfig& cfg) {
  cfg.validate();
  ValidationReport report;
  for (double b : cfg.b_grid) {
    for (double t : cfg.t_grid) detail::validate_cell(cfg, b, t, report);
  }
  for (const auto& [b, t] : simulation_cells()) detail::validate_simulation(cfg, b, t, report);

  // Same seed, same histogram.
  const auto& [b, t] = simulation_cells().front();
  const ModelParams p{b, cfg.params.mu, cfg.params.n0};
  SimConfig small = cfg.sim;
  small.replications = std::min<std::uint64_t>(cfg.sim.replications, 10000);
  const bool same = simulate_autonomous(p, t, small).counts == simulate_autonomous(p, t, small).counts &&
                    simulate_mtminf(p, t, small).counts == simulate_mtminf(p, t, small).counts;
  report.checks.push_back(detail::make_check("seed_determinism", b, t, "histogram mismatches", 0.0, same ? 0.0 : 1.0));
  return report;
}

inline void write_validation(const ValidationReport& report, OutputFormat format, std::ostream& os) {
  auto status = [](const CheckResult& c) { return c.passed ? "pass" : (c.gating ? "fail" : "info"); };
  switch (format) {
    case OutputFormat::kCsv:
      os << "check,b,t,quantity,tolerance,observed,status,detail\n";
      for (const auto& c : report.checks) {
        os << c.check << ',' << format_double(c.b) << ',' << format_double(c.t) << ",\"" << c.quantity << "\","
           << format_double(c.tolerance) << ',' << format_double(c.observed) << ',' << status(c) << ",\""
           << c.detail << "\"\n";
      }
      break;
    case OutputFormat::kMarkdown:
      os << "| check | b | t | quantity | tolerance | observed | status |\n|---|---|---|---|---|---|---|\n";
      for (const auto& c : report.checks) {
        os << "| " << c.check << " | " << format_double(c.b) << " | " << format_double(c.t) << " | " << c.quantity
           << " | " << format_double(c.tolerance) << " | " << format_double(c.observed) << " | " << status(c)
           << " |\n";
      }
      break;
    case OutputFormat::kJsonLines:
      for (const auto& c : report.checks) {
        nlohmann::json row{{"check", c.check},
                           {"b", json_number(c.b)},
                           {"t", json_number(c.t)},
                           {"quantity", c.quantity},
                           {"tolerance", c.tolerance},
                           {"observed", json_number(c.observed)},
                           {"status", status(c)},
                           {"gating", c.gating}};
        if (!c.detail.empty()) row["detail"] = c.detail;
        os << row.dump() << '\n';
      }
      os << nlohmann::json{{"summary", report.passed() ? "pass" : "fail"},
                           {"checks", report.checks.size()},
                           {"failures", report.failures()}}
                .dump()
         << '\n';
      break;
  }
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ValidationReport report = run_validation(cfg);
  write_validation(report, cfg.effective_format(), out);
  for (const auto& c : report.checks) {
    if (c.gating && !c.passed) {
      err << "FAIL " << c.check << " (b=" << format_double(c.b) << ", t=" << format_double(c.t) << "): " << c.quantity
          << " = " << format_double(c.observed) << " > " << format_double(c.tolerance);
      if (!c.detail.empty()) err << " [" << c.detail << ']';
      err << '\n';
    }
  }
  return report.passed() ? 0 : 1;
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  switch (cfg.mode) {
    case Mode::kTable:
      return cmd_table(cfg, out, err);
    case Mode::kPmf:
      return cmd_pmf(cfg, out, err);
    case Mode::kMean:
      return cmd_mean(cfg, out, err);
    case Mode::kSimulate:
      return cmd_simulate(cfg, out, err);
    case Mode::kValidate:
      return cmd_validate(cfg, out, err);
  }
  return 2;
}

}  // namespace birthflow
