// Command-line driver: certification runs, orbits, bifurcation scans, cobweb
// export, threshold tables and periodic-orbit searches.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "revdyn/revdyn.hpp"

namespace {

using revdyn::json;

enum Exit : int { kOk = 0, kUsage = 2, kNoCertificate = 3, kInvalidConfig = 4, kRangeFailure = 5 };

struct RangeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::string out_path;
  std::string format;
  std::size_t grid = 100001;
  double tolerance = revdyn::kRangeTolerance;
};

json load_config(const Globals& g) {
  if (g.config_path.empty()) return json::object();
  std::ifstream in(g.config_path);
  if (!in) throw revdyn::InvalidArgument("cannot open config file " + g.config_path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw revdyn::InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
}

/// Writes to --out when given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw revdyn::InvalidArgument("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string resolve_format(const Globals& g, const char* fallback) { return g.format.empty() ? fallback : g.format; }

/// Builds the configured map and range-checks it with the global grid and tolerance.
revdyn::UpdateMap checked_map(const json& cfg, const Globals& g, std::optional<double> delta) {
  auto f = revdyn::map_from_config(cfg, delta);
  const auto rep = revdyn::range_check(f, g.grid, g.tolerance);
  if (!rep.ok) {
    std::ostringstream os;
    os << "not an interval self-map: excursion " << rep.max_excursion << " at x=" << rep.worst_x
       << " (range [" << rep.min_value << ", " << rep.max_value << "])";
    throw RangeFailure(os.str());
  }
  return f;
}

template <class T>
T cfg_value(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw revdyn::InvalidArgument(std::string("config field \"") + key + "\" has the wrong type");
  }
}

// ---------------------------------------------------------------------------
// subcommands

struct CertifyOpts {
  std::vector<double> probes;
  std::optional<double> delta;
};

int run_certify(const Globals& g, const CertifyOpts& o) {
  const json cfg = load_config(g);
  auto f = revdyn::map_from_config(cfg, o.delta);
  auto probes = o.probes.empty() ? cfg_value<std::vector<double>>(cfg, "probes", {}) : o.probes;
  const auto rep = revdyn::certify(f, probes, g.grid, {}, g.tolerance);
  Output out(g.out_path);
  if (resolve_format(g, "json") == "json") {
    out.stream() << revdyn::to_json(rep).dump(2) << '\n';
  } else {
    auto& os = out.stream();
    os << "field,value\n";
    os << "range_ok," << (rep.range.ok ? 1 : 0) << '\n';
    os << "max_excursion," << revdyn::format_double(rep.range.max_excursion) << '\n';
    if (rep.stability) {
      os << "left_derivative," << revdyn::format_double(rep.stability->left_derivative) << '\n';
      os << "right_derivative," << revdyn::format_double(rep.stability->right_derivative) << '\n';
      os << "stability," << revdyn::to_string(rep.stability->classification) << '\n';
    }
    os << "certified," << (rep.certified() ? 1 : 0) << '\n';
    if (rep.certified()) {
      const auto& c = rep.certificate();
      os << "branch," << revdyn::to_string(c.branch) << '\n';
      os << "z_l," << revdyn::format_double(c.z_l) << '\n';
      os << "z_r," << revdyn::format_double(c.z_r) << '\n';
      os << "witness," << revdyn::format_double(c.witness) << '\n';
    }
  }
  if (!rep.range.ok) {
    std::cerr << "range check failed: excursion " << rep.range.max_excursion << " at x=" << rep.range.worst_x << '\n';
    return kRangeFailure;
  }
  return rep.certified() ? kOk : kNoCertificate;
}

struct SimulateOpts {
  std::optional<double> x0, delta;
  std::optional<std::size_t> steps;
};

int run_simulate(const Globals& g, const SimulateOpts& o) {
  const json cfg = load_config(g);
  const auto f = checked_map(cfg, g, o.delta);
  const double x0 = o.x0 ? *o.x0 : cfg_value<double>(cfg, "x0", 0.3);
  const std::size_t n = o.steps ? *o.steps : cfg_value<std::size_t>(cfg, "steps", 100);
  const auto orbit = revdyn::iterate(f, x0, n);
  Output out(g.out_path);
  if (resolve_format(g, "csv") == "csv")
    revdyn::write_orbit_csv(out.stream(), orbit);
  else
    out.stream() << json{{"x0", orbit.x0}, {"delta", orbit.delta}, {"samples", orbit.samples}}.dump(2) << '\n';
  return kOk;
}

struct BifurcateOpts {
  std::optional<double> delta_min, delta_max;
  std::optional<std::size_t> steps, transient, keep;
  std::optional<unsigned> threads;
  std::vector<double> seeds;
};

int run_bifurcate(const Globals& g, const BifurcateOpts& o) {
  const json cfg = load_config(g);
  const auto proto = revdyn::protocol_from_config(cfg);
  const json sc = cfg.contains("scan") ? cfg.at("scan") : json::object();
  revdyn::BifurcationScanConfig c;
  c.delta_min = o.delta_min ? *o.delta_min : cfg_value<double>(sc, "delta_min", 0.002);
  c.delta_max = o.delta_max ? *o.delta_max : cfg_value<double>(sc, "delta_max", 1.0);
  c.delta_steps = o.steps ? *o.steps : cfg_value<std::size_t>(sc, "delta_steps", c.delta_steps);
  c.transient = o.transient ? *o.transient : cfg_value<std::size_t>(sc, "transient", c.transient);
  c.keep = o.keep ? *o.keep : cfg_value<std::size_t>(sc, "keep", c.keep);
  c.threads = o.threads ? *o.threads : cfg_value<unsigned>(sc, "threads", 0u);
  c.seeds = o.seeds.empty() ? cfg_value<std::vector<double>>(sc, "seeds", {}) : o.seeds;
  c.seed_order = cfg_value<std::vector<std::size_t>>(sc, "seed_order", {});
  const auto res = revdyn::bifurcation_scan(proto, c);
  for (const auto& line : res.log) std::cerr << line << '\n';
  Output out(g.out_path);
  if (resolve_format(g, "csv") == "csv")
    revdyn::write_scan_csv(out.stream(), res);
  else
    out.stream() << revdyn::scan_to_json(res).dump(2) << '\n';
  return kOk;
}

struct CobwebOpts {
  std::optional<double> x0, delta;
  std::optional<std::size_t> steps;
  std::size_t graph_points = 1001;
};

int run_cobweb(const Globals& g, const CobwebOpts& o) {
  const json cfg = load_config(g);
  const auto f = checked_map(cfg, g, o.delta);
  const double x0 = o.x0 ? *o.x0 : cfg_value<double>(cfg, "x0", 0.3);
  const std::size_t n = o.steps ? *o.steps : cfg_value<std::size_t>(cfg, "steps", 50);
  const auto c = revdyn::cobweb_export(f, x0, n, o.graph_points);
  Output out(g.out_path);
  if (resolve_format(g, "csv") == "csv") {
    revdyn::write_cobweb_csv(out.stream(), c);
  } else {
    json st = json::array(), gr = json::array();
    for (const auto& [x, y] : c.staircase) st.push_back({x, y});
    for (const auto& [x, y] : c.graph) gr.push_back({x, y});
    out.stream() << json{{"orbit", c.orbit}, {"staircase", st}, {"graph", gr}}.dump(2) << '\n';
  }
  return kOk;
}

struct ThresholdsOpts {
  std::vector<double> ps;
};

int run_thresholds(const Globals& g, const ThresholdsOpts& o) {
  const json cfg = load_config(g);
  auto ps = o.ps.empty() ? cfg_value<std::vector<double>>(cfg, "p_grid", {}) : o.ps;
  if (ps.empty()) throw revdyn::InvalidArgument("no p values given (use --p or \"p_grid\")");
  std::vector<revdyn::ThresholdRow> rows;
  for (double p : ps) rows.push_back(revdyn::threshold_row(p));
  Output out(g.out_path);
  if (resolve_format(g, "csv") == "csv")
    revdyn::write_thresholds_csv(out.stream(), rows);
  else
    out.stream() << revdyn::thresholds_to_json(rows).dump(2) << '\n';
  return kOk;
}

struct PeriodsOpts {
  std::size_t max_period = 7;
  std::string mode = "auto";
  std::size_t search_grid = 200000;
  std::optional<double> delta;
};

int run_periods(const Globals& g, const PeriodsOpts& o) {
  const json cfg = load_config(g);
  const auto f = checked_map(cfg, g, o.delta);
  revdyn::PeriodicSearchOptions opt;
  opt.mode = o.mode == "exact" ? revdyn::SearchMode::Exact
             : o.mode == "numeric" ? revdyn::SearchMode::Numeric
                                   : revdyn::SearchMode::Auto;
  opt.grid = o.search_grid;
  const auto res = revdyn::find_periodic_orbits(f, o.max_period, opt);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  Output out(g.out_path);
  if (resolve_format(g, "json") == "json") {
    out.stream() << revdyn::to_json(res).dump(2) << '\n';
  } else {
    auto& os = out.stream();
    os << "period,orbit_index,point_index,x\n";
    std::size_t idx = 0, last = 0;
    for (const auto& orb : res.orbits) {
      if (orb.period != last) idx = 0;
      last = orb.period;
      for (std::size_t k = 0; k < orb.points.size(); ++k)
        os << orb.period << ',' << idx << ',' << k << ',' << revdyn::format_double(orb.points[k]) << '\n';
      ++idx;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Revision-protocol dynamics on anti-coordination games"};
  app.set_version_flag("--version", std::string(revdyn::kVersion));
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_path, "output file (default: stdout)");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--grid", g.grid, "range-check grid size")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  app.add_option("--tolerance", g.tolerance, "range-check tolerance")->check(CLI::NonNegativeNumber);

  CertifyOpts co;
  auto* certify = app.add_subcommand("certify", "range check, stability at p and chaos certificate");
  certify->add_option("--probe", co.probes, "probe points for (z_l, z_r) pairs");
  certify->add_option("--delta", co.delta, "override the step size");

  SimulateOpts so;
  auto* simulate = app.add_subcommand("simulate", "orbit of one starting point");
  simulate->add_option("--x0", so.x0, "starting point");
  simulate->add_option("--steps", so.steps, "number of iterations");
  simulate->add_option("--delta", so.delta, "override the step size");

  BifurcateOpts bo;
  auto* bifurcate = app.add_subcommand("bifurcate", "bifurcation scan over the step size");
  bifurcate->add_option("--delta-min", bo.delta_min);
  bifurcate->add_option("--delta-max", bo.delta_max);
  bifurcate->add_option("--steps", bo.steps, "number of step sizes (inclusive grid)");
  bifurcate->add_option("--transient", bo.transient);
  bifurcate->add_option("--keep", bo.keep);
  bifurcate->add_option("--threads", bo.threads);
  bifurcate->add_option("--seed", bo.seeds, "starting points (default: critical points)");

  CobwebOpts cw;
  auto* cobweb = app.add_subcommand("cobweb", "cobweb staircase and map graph");
  cobweb->add_option("--x0", cw.x0, "starting point");
  cobweb->add_option("--steps", cw.steps, "number of iterations");
  cobweb->add_option("--graph-points", cw.graph_points, "samples of the map graph");
  cobweb->add_option("--delta", cw.delta, "override the step size");

  ThresholdsOpts to;
  auto* thresholds = app.add_subcommand("thresholds", "step-size threshold table");
  thresholds->add_option("--p", to.ps, "equilibrium values");

  PeriodsOpts po;
  auto* periods = app.add_subcommand("periods", "periodic orbits of minimal period 1..n");
  periods->add_option("--max-period", po.max_period)->check(CLI::PositiveNumber);
  periods->add_option("--mode", po.mode)->check(CLI::IsMember({"auto", "exact", "numeric"}));
  periods->add_option("--search-grid", po.search_grid);
  periods->add_option("--delta", po.delta, "override the step size");

  // global flags may also follow the subcommand
  for (auto* sub : {certify, simulate, bifurcate, cobweb, thresholds, periods}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*certify) return run_certify(g, co);
    if (*simulate) return run_simulate(g, so);
    if (*bifurcate) return run_bifurcate(g, bo);
    if (*cobweb) return run_cobweb(g, cw);
    if (*thresholds) return run_thresholds(g, to);
    if (*periods) return run_periods(g, po);
  } catch (const RangeFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRangeFailure;
  } catch (const revdyn::NotIntervalMap& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRangeFailure;
  } catch (const revdyn::InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const json::exception& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalidConfig;
  }
  return kUsage;
}
