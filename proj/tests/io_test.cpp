#include <gtest/gtest.h>

#include <filesystem>

#include "ncswitch/io/case_io.hpp"
#include "ncswitch/scots/solve.hpp"

using namespace ncswitch;

namespace {

const char* kCase = R"({
  "name": "ids",
  "buses": [{"id": 10, "load": 0}, {"id": 20, "load": 40}, {"id": 30}],
  "generators": [{"bus": 10, "pmax": 80, "cost": 12}],
  "branches": [{"from": 10, "to": 20, "capacity": 50}, {"from": 20, "to": 30, "susceptance": 4, "capacity": 25}]
})";

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

}  // namespace

TEST(Digest, PublishedFnv1aVectors) {
  EXPECT_EQ(io::fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(io::fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(io::fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(CaseJson, MapsIdsAndFillsDefaults) {
  const ScotsCase cs = io::parse_case(kCase);
  EXPECT_EQ(cs.name, "ids");
  ASSERT_EQ(cs.bus_count(), 3);
  EXPECT_EQ(cs.load, (std::vector<double>{0.0, 40.0, 0.0}));
  ASSERT_EQ(cs.generator_count(), 1);
  EXPECT_EQ(cs.generators[0].bus, 0);
  EXPECT_EQ(cs.generators[0].pmin, 0.0);
  EXPECT_EQ(cs.generators[0].reg_up, 80.0);
  EXPECT_EQ(cs.generators[0].reg_dn, 80.0);
  ASSERT_EQ(cs.branch_count(), 2);
  EXPECT_EQ(cs.topology.branch(1).from, 1);
  EXPECT_EQ(cs.topology.branch(1).to, 2);
  EXPECT_EQ(cs.branches[0].susceptance, 1.0);
  EXPECT_EQ(cs.branches[1].susceptance, 4.0);
  EXPECT_EQ(cs.eta, ScotsCase{}.eta);
  EXPECT_EQ(cs.lambda, ScotsCase{}.lambda);
}

TEST(CaseJson, RoundTrip) {
  ScotsCase cs = io::parse_case(kCase);
  cs.eta = 3;
  cs.voll = 5000.0;
  cs.first_stage_switch_limit = 1;
  const ScotsCase back = io::case_from_json(io::case_to_json(cs));
  EXPECT_EQ(io::case_to_json(back).dump(), io::case_to_json(cs).dump());
  EXPECT_EQ(back.eta, 3);
  EXPECT_EQ(back.voll, 5000.0);
  EXPECT_EQ(back.first_stage_switch_limit, 1);
}

TEST(CaseJson, ErrorsCarryTheirCodes) {
  EXPECT_EQ(code_of([] { io::parse_case("{ \"buses\": [ "); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { io::parse_case("[]"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "\"branches\"", "\"edges\"")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "\"to\": 30", "\"to\": 31")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "{\"id\": 30}", "{\"id\": 20}")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "\"pmax\": 80", "\"pmax\": \"lots\"")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "\"capacity\": 50", "\"capacity\": -1")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::parse_case(with(kCase, "\"to\": 20,", "\"to\": 10,")); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { io::load_case("/nonexistent/case.json"); }), ErrorCode::IoError);
  EXPECT_EQ(code_of([] { io::parse_scenario_mode("fancy"); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { io::parse_nc_mode("half"); }), ErrorCode::InvalidArgument);
}

TEST(CaseJson, BundledCasesLoad) {
  const std::filesystem::path dir = NCSWITCH_CASES_DIR;
  const ScotsCase g4 = io::load_case((dir / "g4.json").string());
  EXPECT_EQ(g4.bus_count(), 4);
  EXPECT_EQ(g4.branch_count(), 4);
  const ScotsCase tri = io::load_case((dir / "triangle.json").string());
  EXPECT_EQ(tri.bus_count(), 3);
  const ScotsCase e14 = io::load_case((dir / "ieee14.json").string());
  EXPECT_EQ(e14.bus_count(), 14);
  EXPECT_EQ(e14.branch_count(), 20);
  EXPECT_EQ(e14.generator_count(), 5);
  EXPECT_EQ(e14.eta, 2);
  EXPECT_EQ(e14.lambda, 1);
  EXPECT_NEAR(e14.total_load(), 259.0, 1e-9);
}

TEST(SolutionJson, RoundTrip) {
  const ScotsCase cs = io::load_case((std::filesystem::path(NCSWITCH_CASES_DIR) / "g4.json").string());
  const NcBundle nc = make_nc_bundle(cs.topology, 1);
  const ScotsSolution sol = solve_two_stage(cs, nc, make_scenario_set(cs, ScenarioMode::Stochastic, 1), NcMode::FirstStageOnly);
  const io::Json j = io::solution_to_json(sol);
  const ScotsSolution back = io::solution_from_json(io::parse_json(j.dump(2), "solution"), cs);
  EXPECT_EQ(back.mode, sol.mode);
  EXPECT_EQ(back.nc, sol.nc);
  EXPECT_EQ(back.z, sol.z);
  EXPECT_EQ(back.p, sol.p);
  EXPECT_EQ(back.objective, sol.objective);
  ASSERT_EQ(back.scenarios.size(), sol.scenarios.size());
  for (std::size_t s = 0; s < sol.scenarios.size(); ++s) {
    EXPECT_EQ(back.scenarios[s].o, sol.scenarios[s].o);
    EXPECT_EQ(back.scenarios[s].z_bar, sol.scenarios[s].z_bar);
    EXPECT_EQ(back.scenarios[s].switched_on, sol.scenarios[s].switched_on);
    EXPECT_EQ(back.scenarios[s].switched_off, sol.scenarios[s].switched_off);
    EXPECT_EQ(back.scenarios[s].feasible, sol.scenarios[s].feasible);
  }
  // Statistics from the reloaded solution match the original.
  const NcStatistics a = evaluate_statistics(cs, nc, sol, 1), b = evaluate_statistics(cs, nc, back, 1);
  EXPECT_EQ(a.r_tilde_hits, b.r_tilde_hits);
  EXPECT_EQ(a.r_bar_hits, b.r_bar_hits);
}

TEST(SolutionJson, RejectsMalformed) {
  const ScotsCase cs = io::load_case((std::filesystem::path(NCSWITCH_CASES_DIR) / "g4.json").string());
  const auto parse = [&](const std::string& text) { io::solution_from_json(io::parse_json(text, "solution"), cs); };
  EXPECT_EQ(code_of([&] { parse(R"({"mode": "stochastic", "nc": "full", "z": "111", "p": [0, 0]})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse(R"({"mode": "stochastic", "nc": "full", "z": "11x1", "p": [0, 0]})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse(R"({"mode": "stochastic", "nc": "full", "z": "1111", "p": [0]})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] { parse(R"({"mode": "sometimes", "nc": "full", "z": "1111", "p": [0, 0]})"); }), ErrorCode::SchemaError);
  EXPECT_EQ(code_of([&] {
              parse(R"({"mode": "robust", "nc": "full", "z": "1111", "p": [0, 0],
                        "scenarios": [{"o_g": "11", "o_b": "1111", "switched_on": [9], "switched_off": [], "z_bar": "1111"}]})");
            }),
            ErrorCode::SchemaError);
}
