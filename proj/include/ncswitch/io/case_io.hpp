#pragma once

// Case files and solution files in JSON.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncswitch/scots/solve.hpp"

namespace ncswitch::io {

using Json = nlohmann::ordered_json;

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCode::IoError, "cannot read " + path);
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::ParseError, what + ": " + e.what());
  }
}

namespace detail {

template <class T>
T field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::SchemaError, where + " lacks '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::SchemaError, where + "." + key + " has the wrong type");
  }
}

template <class T>
T field_or(const Json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key, where);
}

inline const Json& array_field(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_array()) fail(ErrorCode::SchemaError, std::string("case lacks the array '") + key + "'");
  return obj.at(key);
}

}  // namespace detail

/// {buses:[{id, load}], generators:[{bus, pmin, pmax, cost, reg_up, reg_dn}],
///  branches:[{from, to, susceptance, capacity}], config:{...}}
/// Bus ids are arbitrary integers; generators and branches refer to them.
inline ScotsCase case_from_json(const Json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "case must be a JSON object");
  ScotsCase cs;
  cs.name = detail::field_or<std::string>(doc, "name", "", "case");
  std::map<long long, int> index;
  const Json& buses = detail::array_field(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const std::string where = "buses[" + std::to_string(i) + "]";
    const auto id = detail::field<long long>(buses[i], "id", where);
    if (!index.emplace(id, static_cast<int>(i)).second) fail(ErrorCode::SchemaError, "duplicate bus id " + std::to_string(id));
    cs.load.push_back(detail::field_or<double>(buses[i], "load", 0.0, where));
  }
  auto bus_of = [&](long long id, const std::string& where) {
    auto it = index.find(id);
    if (it == index.end()) fail(ErrorCode::SchemaError, where + " references missing bus " + std::to_string(id));
    return it->second;
  };
  const Json& gens = detail::array_field(doc, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const std::string where = "generators[" + std::to_string(i) + "]";
    Generator g;
    g.bus = bus_of(detail::field<long long>(gens[i], "bus", where), where);
    g.pmin = detail::field_or<double>(gens[i], "pmin", 0.0, where);
    g.pmax = detail::field<double>(gens[i], "pmax", where);
    g.cost = detail::field<double>(gens[i], "cost", where);
    g.reg_up = detail::field_or<double>(gens[i], "reg_up", g.pmax, where);
    g.reg_dn = detail::field_or<double>(gens[i], "reg_dn", g.pmax, where);
    cs.generators.push_back(g);
  }
  std::vector<std::pair<int, int>> links;
  const Json& branches = detail::array_field(doc, "branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string where = "branches[" + std::to_string(i) + "]";
    const int from = bus_of(detail::field<long long>(branches[i], "from", where), where);
    const int to = bus_of(detail::field<long long>(branches[i], "to", where), where);
    links.emplace_back(from + 1, to + 1);
    cs.branches.push_back({detail::field_or<double>(branches[i], "susceptance", 1.0, where), detail::field<double>(branches[i], "capacity", where)});
  }
  try {
    cs.topology = build_topology(static_cast<int>(cs.load.size()), links);
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, e.what());
  }
  const Json cfg = doc.contains("config") ? doc.at("config") : Json::object();
  if (!cfg.is_object()) fail(ErrorCode::SchemaError, "config must be an object");
  cs.eta = detail::field_or<int>(cfg, "eta", cs.eta, "config");
  cs.lambda = detail::field_or<int>(cfg, "lambda", cs.lambda, "config");
  cs.switch_budget = detail::field_or<int>(cfg, "switch_budget", cs.switch_budget, "config");
  cs.first_stage_switch_limit = detail::field_or<int>(cfg, "first_stage_switch_limit", cs.first_stage_switch_limit, "config");
  cs.voll = detail::field_or<double>(cfg, "voll", cs.voll, "config");
  cs.switch_cost = detail::field_or<double>(cfg, "switch_cost", cs.switch_cost, "config");
  cs.reg_cost = detail::field_or<double>(cfg, "reg_cost", cs.reg_cost, "config");
  cs.outage_probability = detail::field_or<double>(cfg, "outage_probability", cs.outage_probability, "config");
  cs.base_mva = detail::field_or<double>(cfg, "base_mva", cs.base_mva, "config");
  validate_case(cs);
  return cs;
}

inline ScotsCase parse_case(std::string_view text) { return case_from_json(parse_json(text, "case")); }
inline ScotsCase load_case(const std::string& path) { return parse_case(read_file(path)); }

inline Json case_to_json(const ScotsCase& cs) {
  Json doc;
  if (!cs.name.empty()) doc["name"] = cs.name;
  doc["buses"] = Json::array();
  for (int v = 0; v < cs.bus_count(); ++v) doc["buses"].push_back({{"id", v + 1}, {"load", cs.load[static_cast<std::size_t>(v)]}});
  doc["generators"] = Json::array();
  for (const auto& g : cs.generators) {
    doc["generators"].push_back(
        {{"bus", g.bus + 1}, {"pmin", g.pmin}, {"pmax", g.pmax}, {"cost", g.cost}, {"reg_up", g.reg_up}, {"reg_dn", g.reg_dn}});
  }
  doc["branches"] = Json::array();
  for (int e = 0; e < cs.branch_count(); ++e) {
    const Branch& br = cs.topology.branch(e);
    const BranchData& bd = cs.branches[static_cast<std::size_t>(e)];
    doc["branches"].push_back({{"from", br.from + 1}, {"to", br.to + 1}, {"susceptance", bd.susceptance}, {"capacity", bd.capacity}});
  }
  doc["config"] = {{"eta", cs.eta},
                   {"lambda", cs.lambda},
                   {"switch_budget", cs.switch_budget},
                   {"first_stage_switch_limit", cs.first_stage_switch_limit},
                   {"voll", cs.voll},
                   {"switch_cost", cs.switch_cost},
                   {"reg_cost", cs.reg_cost},
                   {"outage_probability", cs.outage_probability},
                   {"base_mva", cs.base_mva}};
  return doc;
}

// ---- solutions --------------------------------------------------------------

inline std::string bits_str(const std::vector<std::uint8_t>& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

inline std::vector<std::uint8_t> parse_bits(const std::string& text, std::size_t expected, const std::string& where) {
  if (text.size() != expected) fail(ErrorCode::SchemaError, where + " has length " + std::to_string(text.size()) + ", expected " + std::to_string(expected));
  if (text.find_first_not_of("01") != std::string::npos) fail(ErrorCode::SchemaError, where + " must contain only 0/1");
  return EdgeMask::parse(text).bits();
}

inline std::vector<int> one_based(const std::vector<int>& v) {
  std::vector<int> out;
  for (int x : v) out.push_back(x + 1);
  return out;
}

inline Json outcome_to_json(const ScenarioOutcome& o) {
  Json j;
  j["label"] = o.o.label();
  j["o_g"] = bits_str(o.o.o_g);
  j["o_b"] = bits_str(o.o.o_b);
  j["probability"] = o.probability;
  j["feasible"] = o.feasible;
  j["cost"] = o.cost;
  j["shed"] = o.shed;
  j["nc_objective"] = o.nc_objective;
  j["class"] = to_string(o.klass);
  j["phi"] = {o.phi1, o.phi2, o.phi3};
  j["switched_on"] = one_based(o.switched_on);
  j["switched_off"] = one_based(o.switched_off);
  j["output"] = o.output;
  j["shed_by_bus"] = o.shed_by_bus;
  j["z_bar"] = o.z_bar.str();
  return j;
}

inline Json solution_to_json(const ScotsSolution& s) {
  Json j;
  j["mode"] = to_string(s.mode);
  j["nc"] = to_string(s.nc);
  j["method"] = s.method;
  j["proven_optimal"] = s.proven_optimal;
  j["z"] = s.z.str();
  j["p"] = s.p;
  j["objective"] = s.objective;
  j["first_stage_cost"] = s.first_stage_cost;
  j["recourse_cost"] = s.recourse_cost;
  j["candidates"] = s.candidates;
  j["evaluated"] = s.evaluated;
  j["milp_nodes"] = s.milp_nodes;
  j["scenarios"] = Json::array();
  for (const auto& o : s.scenarios) j["scenarios"].push_back(outcome_to_json(o));
  return j;
}

inline ScenarioMode parse_scenario_mode(const std::string& text) {
  if (text == "stochastic") return ScenarioMode::Stochastic;
  if (text == "robust") return ScenarioMode::Robust;
  fail(ErrorCode::InvalidArgument, "mode must be stochastic or robust, got '" + text + "'");
}

inline NcMode parse_nc_mode(const std::string& text) {
  if (text == "full") return NcMode::FullCriteria;
  if (text == "first-stage-only") return NcMode::FirstStageOnly;
  fail(ErrorCode::InvalidArgument, "nc must be full or first-stage-only, got '" + text + "'");
}

inline ScotsSolution solution_from_json(const Json& j, const ScotsCase& cs) {
  const std::size_t nb = static_cast<std::size_t>(cs.branch_count()), ng = static_cast<std::size_t>(cs.generator_count());
  ScotsSolution s;
  try {
    s.mode = parse_scenario_mode(detail::field<std::string>(j, "mode", "solution"));
    s.nc = parse_nc_mode(detail::field<std::string>(j, "nc", "solution"));
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, e.what());
  }
  s.method = detail::field_or<std::string>(j, "method", "", "solution");
  s.z = EdgeMask(parse_bits(detail::field<std::string>(j, "z", "solution"), nb, "solution.z"));
  s.p = detail::field<std::vector<double>>(j, "p", "solution");
  if (s.p.size() != ng) fail(ErrorCode::SchemaError, "solution.p length differs from generator count");
  s.objective = detail::field_or<double>(j, "objective", 0.0, "solution");
  s.first_stage_cost = detail::field_or<double>(j, "first_stage_cost", 0.0, "solution");
  s.recourse_cost = detail::field_or<double>(j, "recourse_cost", 0.0, "solution");
  if (j.contains("scenarios")) {
    if (!j.at("scenarios").is_array()) fail(ErrorCode::SchemaError, "solution.scenarios must be an array");
    for (const auto& sj : j.at("scenarios")) {
      ScenarioOutcome o;
      o.o.o_g = parse_bits(detail::field<std::string>(sj, "o_g", "scenario"), ng, "scenario.o_g");
      o.o.o_b = parse_bits(detail::field<std::string>(sj, "o_b", "scenario"), nb, "scenario.o_b");
      o.probability = detail::field_or<double>(sj, "probability", 0.0, "scenario");
      o.feasible = detail::field_or<bool>(sj, "feasible", true, "scenario");
      o.cost = detail::field_or<double>(sj, "cost", 0.0, "scenario");
      o.shed = detail::field_or<double>(sj, "shed", 0.0, "scenario");
      for (int e : detail::field<std::vector<int>>(sj, "switched_on", "scenario")) o.switched_on.push_back(e - 1);
      for (int e : detail::field<std::vector<int>>(sj, "switched_off", "scenario")) o.switched_off.push_back(e - 1);
      for (int e : o.switched_on) {
        if (e < 0 || e >= static_cast<int>(nb)) fail(ErrorCode::SchemaError, "scenario switches a missing branch");
      }
      for (int e : o.switched_off) {
        if (e < 0 || e >= static_cast<int>(nb)) fail(ErrorCode::SchemaError, "scenario switches a missing branch");
      }
      o.z_bar = EdgeMask(parse_bits(detail::field<std::string>(sj, "z_bar", "scenario"), nb, "scenario.z_bar"));
      s.scenarios.push_back(std::move(o));
    }
  }
  return s;
}

}  // namespace ncswitch::io
