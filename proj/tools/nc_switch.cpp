// nc-switch: connectivity analysis and two-stage switching from the command line.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ncswitch/io/case_io.hpp"

namespace {

using ncswitch::io::Json;
using namespace ncswitch;

struct Args {
  std::string case_path;
  std::optional<int> lambda;
  std::optional<int> eta;
  std::string mode = "stochastic";
  std::string nc = "full";
  std::string mask;
  std::string solution_path;
  std::string out;
  std::uint32_t seed = 1;
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible: return 2;
    case ErrorCode::BigMTooSmall:
    case ErrorCode::NumericalFailure:
    case ErrorCode::SolverFailure:
    case ErrorCode::VerificationFailed: return 4;
    default: return 3;
  }
}

Json w_catalog_json(const WCatalog& w) {
  Json pairs = Json::array();
  for (const auto& p : w.pairs) {
    Json branches = Json::array(), buses = Json::array();
    for (int e : p.branches) branches.push_back(e + 1);
    for (int v : p.stranded.members()) buses.push_back(v + 1);
    pairs.push_back({{"branches", branches}, {"stranded", buses}, {"components", p.component_count}});
  }
  return pairs;
}

Json balanced_json(const BalancedVector& b, int n_u) {
  return {{"c", b.c},
          {"r", b.r},
          {"lower_threshold", b.lower_threshold()},
          {"upper_threshold", b.upper_threshold(n_u)},
          {"uniquely_balanced", b.uniquely_balanced},
          {"w_uniquely_balanced", b.w_uniquely_balanced}};
}

Json stats_json(const mp::SolveStats& s) {
  return {{"iterations", s.iterations}, {"nodes", s.nodes}, {"primal_residual", s.primal_residual}, {"dual_residual", s.dual_residual}, {"duality_gap", s.duality_gap}};
}

struct Loaded {
  ScotsCase cs;
  std::string digest;
  int lambda = 1;
  int eta = 2;
};

Loaded load(const Args& a) {
  const std::string text = io::read_file(a.case_path);
  Loaded l{io::parse_case(text), io::fnv1a_hex(text), 1, 2};
  l.lambda = a.lambda.value_or(l.cs.lambda);
  l.eta = a.eta.value_or(l.cs.eta);
  if (l.lambda < 1) fail(ErrorCode::InvalidArgument, "--lambda must be at least 1");
  if (l.eta < 1) fail(ErrorCode::InvalidArgument, "--eta must be at least 1");
  l.cs.lambda = l.lambda;
  l.cs.eta = l.eta;
  return l;
}

Json header(const std::string& command, const Loaded& l) {
  Json r;
  r["command"] = command;
  r["input_digest"] = l.digest;
  r["case"] = l.cs.name;
  r["buses"] = l.cs.bus_count();
  r["branches"] = l.cs.branch_count();
  r["generators"] = l.cs.generator_count();
  r["lambda"] = l.lambda;
  return r;
}

/// W(lambda)-uniquely balanced data for the case; the trivial vector serves
/// when W(lambda) is empty.
NcBundle bundle_for(const Loaded& l, std::uint32_t seed) {
  WCatalog w = enumerate_w_lambda(l.cs.topology, l.lambda);
  if (w.pairs.empty()) {
    SubgraphCatalog cat = enumerate_connected_induced_subgraphs(l.cs.topology);
    return make_nc_bundle(l.cs.topology, l.lambda, trivial_uniquely_balanced(l.cs.topology, cat, build_w_matrices(w, cat), w.n_u));
  }
  SynthesisOptions so;
  so.seed = seed;
  return make_nc_bundle(l.cs.topology, l.lambda, so);
}

Json cmd_analyze(const Args& a) {
  Loaded l = load(a);
  SubgraphCatalog cat = enumerate_connected_induced_subgraphs(l.cs.topology);
  WCatalog w = enumerate_w_lambda(l.cs.topology, l.lambda);
  WMatrices m = build_w_matrices(w, cat);
  Json r = header("analyze", l);
  r["outputs"] = {{"connected_subgraphs", cat.size()},
                  {"n_w", w.n_w()},
                  {"n_u", w.n_u},
                  {"n_d", m.n_d()},
                  {"w_catalog", w_catalog_json(w)},
                  {"must_stay_on", Json::array()}};
  std::vector<char> keep(static_cast<std::size_t>(l.cs.branch_count()), 0);
  for (const auto& p : w.pairs) {
    for (int e : p.branches) keep[static_cast<std::size_t>(e)] = 1;
  }
  for (int e = 0; e < l.cs.branch_count(); ++e) {
    if (keep[static_cast<std::size_t>(e)]) r["outputs"]["must_stay_on"].push_back(e + 1);
  }
  return r;
}

Json cmd_find_c(const Args& a) {
  Loaded l = load(a);
  SubgraphCatalog cat = enumerate_connected_induced_subgraphs(l.cs.topology);
  WCatalog w = enumerate_w_lambda(l.cs.topology, l.lambda);
  WMatrices m = build_w_matrices(w, cat);
  Json r = header("find-c", l);
  r["seed"] = a.seed;
  BalancedVector b;
  SynthesisReport rep;
  std::string path;
  if (w.pairs.empty()) {
    b = trivial_uniquely_balanced(l.cs.topology, cat, m, w.n_u);
    path = "trivial";
  } else {
    SynthesisOptions so;
    so.seed = a.seed;
    b = synthesize_w_balanced(l.cs.topology, cat, m, w.n_u, so, &rep);
    path = "milp";
  }
  BalanceFlags f = verify_w_balance(b.c, b.r, cat, m, w.n_u);
  r["outputs"] = {{"path", path}, {"n_u", w.n_u}, {"balanced", balanced_json(b, w.n_u)}};
  r["outputs"]["verification"] = {{"uniquely_balanced", f.uniquely_balanced},
                                  {"w_uniquely_balanced", f.w_uniquely_balanced},
                                  {"e_w_norm", f.e_w_norm},
                                  {"b_second_min_abs", f.b_second_min_abs}};
  r["solver"] = {{"rounds", rep.rounds}, {"rows_in_model", rep.rows_in_model}, {"nodes", rep.nodes}};
  if (!f.w_uniquely_balanced) fail(ErrorCode::VerificationFailed, "synthesized c failed verification");
  return r;
}

Json cmd_classify(const Args& a) {
  Loaded l = load(a);
  EdgeMask mask = EdgeMask::parse(a.mask);
  if (mask.size() != l.cs.branch_count()) fail(ErrorCode::LengthMismatch, "mask length differs from branch count");
  NcBundle nc = bundle_for(l, a.seed);
  ClassificationResult c = nc.classify(l.cs.topology, mask);
  const double oracle = oracle_objective(l.cs.topology, mask, nc.bal.c);
  Json r = header("classify", l);
  r["mask"] = mask.str();
  r["outputs"] = {{"balanced", balanced_json(nc.bal, nc.n_u)},
                  {"objective", c.objective},
                  {"class", to_string(c.klass)},
                  {"oracle_objective", oracle},
                  {"oracle_agrees", std::abs(oracle - c.objective) <= 1e-6},
                  {"w_disconnected", is_w_disconnected(l.cs.topology, mask, nc.w)},
                  {"d_plus", c.d_plus},
                  {"d_minus", c.d_minus}};
  r["solver"] = stats_json(c.stats);
  r["audit"] = {{"big_m_checks", true}, {"forbidden_band", c.forbidden_band}};
  return r;
}

Json statistics_json(const NcStatistics& st, const CriteriaAudit& au) {
  return {{"r_tilde", st.r_tilde},
          {"r_bar", st.r_bar},
          {"lambda_branch_contingencies", st.lambda_branch_count},
          {"contingencies", st.contingency_count},
          {"r_tilde_hits", st.r_tilde_hits},
          {"r_bar_hits", st.r_bar_hits},
          {"criterion1_violations", au.criterion1_violations},
          {"criterion2_violations", au.criterion2_violations}};
}

Json cmd_solve(const Args& a) {
  Loaded l = load(a);
  const ScenarioMode mode = io::parse_scenario_mode(a.mode);
  const NcMode nc_mode = io::parse_nc_mode(a.nc);
  NcBundle nc = bundle_for(l, a.seed);
  ScenarioSet set = make_scenario_set(l.cs, mode, l.eta);
  ScotsSolution sol = solve_two_stage(l.cs, nc, set, nc_mode);
  NcStatistics st = evaluate_statistics(l.cs, nc, sol, l.eta);
  CriteriaAudit au = audit_criteria(l.cs, nc, sol, l.eta);
  Json r = header("solve", l);
  r["eta"] = l.eta;
  r["seed"] = a.seed;
  r["outputs"] = {{"balanced", balanced_json(nc.bal, nc.n_u)}, {"scenario_count", set.scenarios.size()}, {"solution", io::solution_to_json(sol)}};
  r["outputs"]["statistics"] = statistics_json(st, au);
  r["audit"] = {{"big_m_checks", true}, {"criteria_passed", au.passed()}};
  return r;
}

Json cmd_stats(const Args& a) {
  Loaded l = load(a);
  const std::string text = io::read_file(a.solution_path);
  Json doc = io::parse_json(text, "solution");
  const Json* sj = &doc;
  if (doc.contains("outputs") && doc["outputs"].contains("solution")) sj = &doc["outputs"]["solution"];
  ScotsSolution sol = io::solution_from_json(*sj, l.cs);
  NcBundle nc = [&] {
    if (doc.contains("outputs") && doc["outputs"].contains("balanced")) {
      const Json& b = doc["outputs"]["balanced"];
      BalancedVector bv;
      bv.c = io::detail::field<std::vector<double>>(b, "c", "balanced");
      bv.r = io::detail::field<double>(b, "r", "balanced");
      return make_nc_bundle(l.cs.topology, l.lambda, bv);
    }
    return bundle_for(l, a.seed);
  }();
  NcStatistics st = evaluate_statistics(l.cs, nc, sol, l.eta);
  CriteriaAudit au = audit_criteria(l.cs, nc, sol, l.eta);
  Json r = header("stats", l);
  r["eta"] = l.eta;
  r["solution_digest"] = io::fnv1a_hex(text);
  r["outputs"] = {{"mode", to_string(sol.mode)}, {"nc", to_string(sol.nc)}, {"z", sol.z.str()}, {"statistics", statistics_json(st, au)}};
  r["audit"] = {{"big_m_checks", true}, {"criteria_passed", au.passed()}};
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-connectedness tools for transmission switching"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* sub) {
    sub->add_option("case", a.case_path, "case file (JSON)")->required();
    sub->add_option("--lambda", a.lambda, "branch-failure depth of W(lambda); defaults to the case config");
    sub->add_option("--out", a.out, "write the report here instead of stdout");
    sub->add_option("--seed", a.seed, "seed of the balanced-vector search");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "W(lambda) catalog and sizes");
  common(analyze);
  CLI::App* find_c = app.add_subcommand("find-c", "synthesize and verify a W(lambda)-uniquely balanced c");
  common(find_c);
  CLI::App* classify_cmd = app.add_subcommand("classify", "classify one branch mask");
  common(classify_cmd);
  classify_cmd->add_option("--mask", a.mask, "branch statuses, e.g. 1101")->required();
  CLI::App* solve = app.add_subcommand("solve", "two-stage switching over all contingencies up to eta");
  common(solve);
  solve->add_option("--eta", a.eta, "failure depth of the scenario set; defaults to the case config");
  solve->add_option("--mode", a.mode, "stochastic or robust");
  solve->add_option("--nc", a.nc, "full or first-stage-only");
  CLI::App* stats = app.add_subcommand("stats", "r_tilde and r_bar of a stored solution");
  common(stats);
  stats->add_option("--solution", a.solution_path, "solve report or solution JSON")->required();
  stats->add_option("--eta", a.eta, "failure depth of the sweep; defaults to the case config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }

  try {
    Json report;
    if (*analyze) report = cmd_analyze(a);
    else if (*find_c) report = cmd_find_c(a);
    else if (*classify_cmd) report = cmd_classify(a);
    else if (*solve) report = cmd_solve(a);
    else report = cmd_stats(a);
    const std::string text = report.dump(2) + "\n";
    if (a.out.empty()) std::cout << text;
    else io::write_file(a.out, text);
    return 0;
  } catch (const Error& e) {
    std::cerr << "nc-switch: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "nc-switch: " << e.what() << "\n";
    return 4;
  }
}
