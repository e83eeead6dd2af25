#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "revdyn/chaos.hpp"
#include "revdyn/dynamics.hpp"
#include "revdyn/game.hpp"
#include "revdyn/protocols.hpp"
#include "revdyn/scan.hpp"

namespace revdyn {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return {buf, res.ptr};
}

// ---------------------------------------------------------------------------
// descriptors

namespace detail {

inline double number_at(const json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("missing numeric field \"") + key + "\"");
  if (!j.at(key).is_number()) throw InvalidArgument(std::string("field \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number_at(j, key) : fallback;
}

}  // namespace detail

/// Either {"a","b","c","d"} or {"p", optional "b_minus_d"}.
inline AntiCoordinationGame game_from_json(const json& j) {
  if (!j.is_object()) throw InvalidArgument("game descriptor must be an object");
  if (j.contains("p")) return AntiCoordinationGame::from_equilibrium(detail::number_at(j, "p"),
                                                                     detail::number_or(j, "b_minus_d", 1.0));
  return {detail::number_at(j, "a"), detail::number_at(j, "b"), detail::number_at(j, "c"), detail::number_at(j, "d")};
}

inline json game_to_json(const AntiCoordinationGame& g) {
  return {{"a", g.a()}, {"b", g.b()}, {"c", g.c()}, {"d", g.d()}, {"p", g.p()}};
}

/// {"kind": "ppi"|"pc"|"perturbed_ppi"|"truncated_ppi"|"innovative_constructed"|
///  "imitative_constructed", parameters..., "reflect": bool}
///
/// "maximal": true selects the largest admissible eta and xi (and, for the
/// truncated family without "gamma", the level p + p^2/2). With
/// "reflect": true the construction is carried out on the game with the
/// strategy labels swapped (equilibrium 1 - p), where all parameters are
/// interpreted, and then reflected back onto the given game.
inline RevisionProtocol protocol_from_json(const json& j, const AntiCoordinationGame& game) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw InvalidArgument("protocol descriptor needs a string field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const bool reflect = j.value("reflect", false);
  const AntiCoordinationGame g = reflect ? game.reflected() : game;
  const bool maximal = j.value("maximal", false);
  const auto build = [&]() -> RevisionProtocol {
    if (kind == "ppi") return ppi_protocol(g);
    if (kind == "pc") return pairwise_comparison_protocol(g);
    if (kind == "perturbed_ppi") {
      const auto [em, xm] = maximal_perturbation(g);
      return perturbed_ppi_protocol(g, maximal ? em : detail::number_at(j, "eta"),
                                    maximal ? xm : detail::number_at(j, "xi"));
    }
    if (kind == "truncated_ppi") {
      const auto [em, xm] = maximal_truncated_perturbation(g);
      const double gamma = maximal ? detail::number_or(j, "gamma", canonical_truncation_level(g.p()))
                                   : detail::number_at(j, "gamma");
      return truncated_ppi_protocol(g, maximal ? em : detail::number_at(j, "eta"),
                                    maximal ? xm : detail::number_at(j, "xi"), gamma);
    }
    if (kind == "innovative_constructed")
      return innovative_chaotic_protocol(g, detail::number_at(j, "beta2"), detail::number_at(j, "beta3"));
    if (kind == "imitative_constructed") return imitative_chaotic_protocol(g);
    throw InvalidArgument("unknown protocol kind \"" + kind + "\"");
  };
  RevisionProtocol pr = build();
  return reflect ? reflect_protocol(pr) : pr;
}

/// A map descriptor is either
///   {"kind": "piecewise_linear", "breakpoints": [...], "slopes": [...], "intercepts": [...]}
///   {"kind": "piecewise_linear", "nodes_x": [...], "nodes_y": [...]}
///   {"kind": "pl_bimodal_innovative", "c_l", "c_r", "beta1", "beta2", "beta3"}
///   {"kind": "pl_bimodal_imitative", "c_l", "c_r", "beta2"}
///   {"kind": "identity"}
inline UpdateMap map_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidArgument("map descriptor needs a field \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const auto vec = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw InvalidArgument(std::string("missing array \"") + key + "\"");
    return j.at(key).get<std::vector<double>>();
  };
  if (kind == "identity") return identity_map();
  if (kind == "piecewise_linear") {
    if (j.contains("nodes_x")) return piecewise_linear_map(vec("nodes_x"), vec("nodes_y"));
    return piecewise_linear_map_from_segments(vec("breakpoints"), vec("slopes"), vec("intercepts"));
  }
  if (kind == "pl_bimodal_innovative")
    return pl_bimodal_innovative(detail::number_at(j, "c_l"), detail::number_at(j, "c_r"),
                                 detail::number_at(j, "beta1"), detail::number_at(j, "beta2"),
                                 detail::number_at(j, "beta3"));
  if (kind == "pl_bimodal_imitative")
    return pl_bimodal_imitative(detail::number_at(j, "c_l"), detail::number_at(j, "c_r"),
                                detail::number_at(j, "beta2"));
  throw InvalidArgument("unknown map kind \"" + kind + "\"");
}

/// Builds the map described by a run configuration: either a "map" object,
/// or "game" + "protocol" + "delta" (delta may be overridden).
inline UpdateMap map_from_config(const json& cfg, std::optional<double> delta_override = std::nullopt) {
  if (cfg.contains("map")) return map_from_json(cfg.at("map"));
  if (!cfg.contains("game") || !cfg.contains("protocol"))
    throw InvalidArgument("configuration needs either \"map\" or both \"game\" and \"protocol\"");
  const auto game = game_from_json(cfg.at("game"));
  const auto proto = protocol_from_json(cfg.at("protocol"), game);
  const double delta = delta_override ? *delta_override : detail::number_or(cfg, "delta", 1.0);
  return build_update_map(proto, delta);
}

inline RevisionProtocol protocol_from_config(const json& cfg) {
  if (!cfg.contains("game") || !cfg.contains("protocol"))
    throw InvalidArgument("configuration needs \"game\" and \"protocol\"");
  return protocol_from_json(cfg.at("protocol"), game_from_json(cfg.at("game")));
}

// ---------------------------------------------------------------------------
// JSON export

/// Map descriptor readable by map_from_json.
inline json pl_map_to_json(const UpdateMap& f) {
  if (!f.is_piecewise_linear()) throw InvalidArgument("map has no exact piecewise-linear form");
  json j;
  const auto& ex = f.exact();
  std::vector<double> s, c;
  for (const auto& q : ex.pieces()) {
    s.push_back(q.coeff(1));
    c.push_back(q.coeff(0));
  }
  j["kind"] = "piecewise_linear";
  j["breakpoints"] = ex.breakpoints();
  j["slopes"] = s;
  j["intercepts"] = c;
  return j;
}

inline json to_json(const RangeReport& r) {
  return {{"ok", r.ok},
          {"min_value", r.min_value},
          {"max_value", r.max_value},
          {"max_excursion", r.max_excursion},
          {"worst_x", r.worst_x},
          {"points_checked", r.points_checked}};
}

inline json to_json(const StabilityReport& s) {
  json j{{"point", s.point},
         {"left_derivative", s.left_derivative},
         {"right_derivative", s.right_derivative},
         {"classification", to_string(s.classification)},
         {"analytic", s.analytic}};
  if (s.basin_probe_converged) j["heuristic_basin_probe_converged"] = *s.basin_probe_converged;
  return j;
}

inline json to_json(const PeriodicOrbit& o) { return {{"period", o.period}, {"points", o.points}}; }

inline json to_json(const Inequality& q) {
  return {{"name", q.name}, {"lhs", q.lhs}, {"rhs", q.rhs}, {"slack", q.slack}, {"holds", q.holds}};
}

inline json to_json(const ChaosCertificate& c) {
  json ineq = json::array();
  for (const auto& q : c.inequalities) ineq.push_back(to_json(q));
  json j{{"z_l", c.z_l},
         {"z_r", c.z_r},
         {"branch", to_string(c.branch)},
         {"f_z_l", c.f_zl},
         {"f_z_r", c.f_zr},
         {"f2_z_l", c.f2_zl},
         {"inequalities", ineq},
         {"witness", {{"x", c.witness}, {"f_x", c.f_witness}, {"f3_x", c.f3_witness}}},
         {"version", kVersion}};
  j["period3"] = c.period3 ? to_json(*c.period3) : json(nullptr);
  return j;
}

inline json to_json(const ChaosCheck& c) {
  json ineq = json::array();
  for (const auto& q : c.inequalities) ineq.push_back(to_json(q));
  json j{{"certified", c.certified()}, {"f_z_l", c.f_zl}, {"f_z_r", c.f_zr}, {"f2_z_l", c.f2_zl}, {"inequalities", ineq}};
  if (c.certificate) j["certificate"] = to_json(*c.certificate);
  if (!c.failure.empty()) j["failure"] = c.failure;
  return j;
}

inline json to_json(const ThresholdReport& t) {
  return {{"p", t.p}, {"components", t.components}, {"threshold", t.threshold}, {"valid", t.valid}};
}

inline json to_json(const CertifyReport& r) {
  json j;
  j["version"] = kVersion;
  j["range_check"] = to_json(r.range);
  j["stability"] = r.stability ? to_json(*r.stability) : json(nullptr);
  json crit = json::array();
  for (const auto& c : r.critical) crit.push_back({{"x", c.x}, {"type", to_string(c.type)}});
  j["critical_points"] = crit;
  json probes = json::array();
  for (const auto& p : r.probes) {
    json e = to_json(p.check);
    e["z_l"] = p.z_l;
    e["z_r"] = p.z_r;
    probes.push_back(e);
  }
  j["probes"] = probes;
  j["certified"] = r.certified();
  j["certificate"] = r.certified() ? to_json(r.certificate()) : json(nullptr);
  j["period3"] = r.period3 ? to_json(*r.period3) : json(nullptr);
  return j;
}

inline json to_json(const PeriodicSearchResult& r) {
  json orbits = json::array();
  for (const auto& o : r.orbits) orbits.push_back(to_json(o));
  json cont = json::array();
  for (const auto& c : r.continua) cont.push_back({{"n", c.n}, {"lo", c.lo}, {"hi", c.hi}});
  return {{"orbits", orbits}, {"continua", cont}, {"warnings", r.warnings}, {"exact_periods", r.exact_periods}};
}

// ---------------------------------------------------------------------------
// CSV export

inline void write_orbit_csv(std::ostream& os, const Orbit& o) {
  os << "iteration,x\n";
  for (std::size_t i = 0; i < o.samples.size(); ++i) os << i << ',' << format_double(o.samples[i]) << '\n';
}

inline void write_scan_csv(std::ostream& os, const ScanResult& r) {
  os << "# seeds=";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) os << (i ? ";" : "") << format_double(r.seeds[i]);
  os << " seed_order=";
  for (std::size_t i = 0; i < r.seed_order.size(); ++i) os << (i ? ";" : "") << r.seed_order[i];
  os << '\n';
  os << "delta,seed_index,iteration_index,x\n";
  for (const auto& row : r.rows)
    os << format_double(row.delta) << ',' << row.seed_index << ',' << row.iteration_index << ','
       << format_double(row.x) << '\n';
}

inline json scan_to_json(const ScanResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) rows.push_back({row.delta, row.seed_index, row.iteration_index, row.x});
  json skipped = json::array();
  for (const auto& [d, why] : r.skipped) skipped.push_back({{"delta", d}, {"reason", why}});
  return {{"columns", {"delta", "seed_index", "iteration_index", "x"}},
          {"seeds", r.seeds},
          {"seed_order", r.seed_order},
          {"rows", rows},
          {"skipped", skipped}};
}

inline void write_cobweb_csv(std::ostream& os, const CobwebData& c) {
  os << "series,index,x,y\n";
  for (std::size_t i = 0; i < c.staircase.size(); ++i)
    os << "staircase," << i << ',' << format_double(c.staircase[i].first) << ','
       << format_double(c.staircase[i].second) << '\n';
  for (std::size_t i = 0; i < c.graph.size(); ++i)
    os << "graph," << i << ',' << format_double(c.graph[i].first) << ',' << format_double(c.graph[i].second) << '\n';
}

inline void write_thresholds_csv(std::ostream& os, const std::vector<ThresholdRow>& rows) {
  os << "p,reflected,p_used,delta_1,delta_2,delta_3,delta_p,delta_star_1,delta_star_2,delta_star_3,"
        "delta_star_4,delta_star_5,delta_star_p\n";
  for (const auto& r : rows) {
    os << format_double(r.p_input) << ',' << (r.reflected ? 1 : 0) << ',' << format_double(r.p);
    for (double v : r.perturbed.components) os << ',' << format_double(v);
    os << ',' << format_double(r.perturbed.threshold);
    for (double v : r.truncated.components) os << ',' << format_double(v);
    os << ',' << format_double(r.truncated.threshold) << '\n';
  }
}

inline json thresholds_to_json(const std::vector<ThresholdRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"p", r.p_input},
                   {"reflected", r.reflected},
                   {"p_used", r.p},
                   {"perturbed", to_json(r.perturbed)},
                   {"truncated", to_json(r.truncated)}});
  return arr;
}

}  // namespace revdyn
