#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "revdyn/chaos.hpp"
#include "revdyn/dynamics.hpp"
#include "revdyn/protocols.hpp"

namespace revdyn {

// ---------------------------------------------------------------------------
// bifurcation scans

struct BifurcationScanConfig {
  double delta_min = 0.0;
  double delta_max = 1.0;
  /// Number of grid points; the grid includes both ends.
  std::size_t delta_steps = 500;
  std::size_t transient = 20000;
  std::size_t keep = 100;
  /// Starting points; empty means the critical points of the map at delta_max.
  std::vector<double> seeds;
  /// Plotting order of the seeds (indices into seeds); metadata only.
  std::vector<std::size_t> seed_order;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct ScanRow {
  double delta;
  std::size_t seed_index;
  std::size_t iteration_index;
  double x;
};

struct ScanResult {
  std::vector<ScanRow> rows;  // ordered by (delta, seed, iteration)
  std::vector<double> seeds;
  std::vector<std::size_t> seed_order;
  std::vector<double> deltas;
  /// delta values left out, with the reason
  std::vector<std::pair<double, std::string>> skipped;
  std::vector<std::string> log;

  [[nodiscard]] std::vector<double> tail(double delta, std::size_t seed, double tol = 1e-15) const {
    std::vector<double> out;
    for (const auto& r : rows)
      if (r.seed_index == seed && std::abs(r.delta - delta) <= tol) out.push_back(r.x);
    return out;
  }
};

inline std::vector<double> delta_grid(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw InvalidArgument("delta_steps must be positive");
  if (steps == 1) return {lo};
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  g.back() = hi;
  return g;
}

/// For each delta on the grid and each seed: iterate `transient` steps,
/// then record `keep` further states. Step sizes whose map is not an
/// interval self-map (or whose orbit escapes) are skipped and logged.
/// Work is spread over threads; the output order does not depend on it.
inline ScanResult bifurcation_scan(const RevisionProtocol& proto, const BifurcationScanConfig& cfg) {
  if (!(cfg.delta_min < cfg.delta_max) && cfg.delta_steps != 1) throw InvalidArgument("need delta_min < delta_max");
  if (!(cfg.delta_min > 0.0)) throw InvalidArgument("delta_min must be positive");
  if (cfg.transient < 1 || cfg.keep < 1) throw InvalidArgument("transient and keep must be at least 1");
  ScanResult res;
  res.deltas = delta_grid(cfg.delta_min, cfg.delta_max, cfg.delta_steps);
  res.seeds = cfg.seeds;
  if (res.seeds.empty()) {
    const auto top = detail::unchecked_map(proto, cfg.delta_max);
    for (const auto& c : critical_points(top)) res.seeds.push_back(c.x);
    if (res.seeds.empty()) {
      res.seeds.push_back(0.5);
      res.log.push_back("map has no interior critical points at delta_max; seeding at 0.5");
    }
  }
  for (double s : res.seeds)
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("seeds must lie in [0,1]");
  res.seed_order = cfg.seed_order;
  if (res.seed_order.empty())
    for (std::size_t i = 0; i < res.seeds.size(); ++i) res.seed_order.push_back(i);

  const std::size_t nd = res.deltas.size(), ns = res.seeds.size();
  std::vector<std::vector<ScanRow>> slots(nd);
  std::vector<std::string> why(nd);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < nd; i = next++) {
      const double d = res.deltas[i];
      try {
        const UpdateMap f = build_update_map(proto, d);
        if (f.flagged()) {
          std::ostringstream os;
          os << "not an interval self-map (excursion " << f.range_report()->max_excursion << ")";
          why[i] = os.str();
          continue;
        }
        std::vector<ScanRow> rows;
        rows.reserve(ns * cfg.keep);
        for (std::size_t s = 0; s < ns; ++s) {
          const Orbit o = iterate(f, res.seeds[s], cfg.transient + cfg.keep);
          for (std::size_t k = 0; k < cfg.keep; ++k) rows.push_back({d, s, k, o.samples[cfg.transient + 1 + k]});
        }
        slots[i] = std::move(rows);
      } catch (const std::exception& e) {
        why[i] = e.what();
      }
    }
  };
  unsigned nt = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  nt = static_cast<unsigned>(std::min<std::size_t>(nt, nd));
  if (nt <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < nd; ++i) {
    if (!why[i].empty()) {
      res.skipped.emplace_back(res.deltas[i], why[i]);
      std::ostringstream os;
      os << "skipped delta=" << res.deltas[i] << ": " << why[i];
      res.log.push_back(os.str());
      continue;
    }
    res.rows.insert(res.rows.end(), slots[i].begin(), slots[i].end());
  }
  return res;
}

// ---------------------------------------------------------------------------
// cobweb

struct CobwebData {
  /// (x_0,x_0), (x_0,x_1), (x_1,x_1), (x_1,x_2), ...
  std::vector<std::pair<double, double>> staircase;
  /// samples (x, f(x)) of the map graph
  std::vector<std::pair<double, double>> graph;
  std::vector<double> orbit;
};

inline CobwebData cobweb_export(const UpdateMap& f, double x0, std::size_t n, std::size_t graph_points = 1001) {
  CobwebData c;
  c.orbit = iterate(f, x0, n).samples;
  c.staircase.emplace_back(x0, x0);
  for (std::size_t k = 0; k < n; ++k) {
    c.staircase.emplace_back(c.orbit[k], c.orbit[k + 1]);
    c.staircase.emplace_back(c.orbit[k + 1], c.orbit[k + 1]);
  }
  for (double x : detail::unit_grid(std::max<std::size_t>(graph_points, 2))) c.graph.emplace_back(x, f(x));
  return c;
}

// ---------------------------------------------------------------------------
// thresholds table

struct ThresholdRow {
  double p_input = 0.0;
  /// p used in the formulas (1 - p_input when reflected)
  double p = 0.0;
  bool reflected = false;
  ThresholdReport perturbed;
  ThresholdReport truncated;
};

inline ThresholdRow threshold_row(double p_in) {
  if (!(p_in > 0.0 && p_in < 1.0) || p_in == 0.5)
    throw InvalidArgument("threshold formulas need p in (0,1) other than 1/2");
  ThresholdRow r;
  r.p_input = p_in;
  r.reflected = p_in > 0.5;
  r.p = r.reflected ? 1.0 - p_in : p_in;
  r.perturbed = delta_threshold_perturbed(r.p);
  r.truncated = delta_threshold_truncated(r.p);
  return r;
}

// ---------------------------------------------------------------------------
// certification pipeline

struct ProbeResult {
  double z_l, z_r;
  ChaosCheck check;
};

struct CertifyReport {
  RangeReport range;
  std::optional<StabilityReport> stability;
  std::vector<CriticalPoint> critical;
  std::vector<ProbeResult> probes;
  /// index into probes of the first certified pair
  std::optional<std::size_t> certified_probe;
  std::optional<PeriodicOrbit> period3;

  [[nodiscard]] bool certified() const noexcept { return certified_probe.has_value(); }
  [[nodiscard]] const ChaosCertificate& certificate() const { return *probes.at(*certified_probe).check.certificate; }
};

/// Probe points suggested by the map family: analytic extrema for the
/// perturbed and truncated PPI families, then the computed critical points.
inline std::vector<double> default_probes(const UpdateMap& f) {
  std::vector<double> pts;
  if (f.has_protocol() && !f.mirrored() && !f.protocol().is_reflected()) {
    const auto& pr = f.protocol();
    const double p = pr.p();
    if (p < 0.5 && pr.family() == ProtocolFamily::PerturbedPPI) {
      pts.push_back(0.5 * p);
      pts.push_back(0.5 * (p + 1.0));
    } else if (p < 0.5 && pr.family() == ProtocolFamily::TruncatedPPI && pr.params().gamma > p) {
      pts.push_back(0.5 * p);
      pts.push_back(pr.params().gamma);
    }
  }
  for (const auto& c : critical_points(f)) pts.push_back(c.x);
  std::vector<double> out;
  for (double v : pts)
    if (std::none_of(out.begin(), out.end(), [&](double u) { return std::abs(u - v) <= 1e-12; })) out.push_back(v);
  return out;
}

/// Range check, stability at the equilibrium, chaos conditions at every
/// ordered pair of probe points (first success wins) and a period-3 search.
inline CertifyReport certify(UpdateMap& f, std::vector<double> probes = {}, std::size_t range_grid = 100001,
                             const PeriodicSearchOptions& opt = {}, double range_tol = kRangeTolerance) {
  CertifyReport rep;
  rep.range = range_check(f, range_grid, range_tol);
  rep.critical = critical_points(f);
  if (auto p = f.equilibrium()) rep.stability = one_sided_derivatives(f, *p);
  if (!rep.range.ok) return rep;
  if (probes.empty()) probes = default_probes(f);
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < probes.size(); ++i)
    for (std::size_t j = 0; j < probes.size(); ++j)
      if (probes[i] < probes[j]) pairs.emplace_back(probes[i], probes[j]);
  for (const auto& [zl, zr] : pairs) {
    rep.probes.push_back({zl, zr, check_chaos_conditions(f, zl, zr, opt)});
    if (rep.probes.back().check.certified()) {
      rep.certified_probe = rep.probes.size() - 1;
      rep.period3 = rep.probes.back().check.certificate->period3;
      break;
    }
  }
  if (!rep.period3) rep.period3 = find_period3(f, opt);
  return rep;
}

}  // namespace revdyn
