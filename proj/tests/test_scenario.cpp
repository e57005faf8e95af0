#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <string>

#include "mpflow/error.hpp"
#include "mpflow/scenario.hpp"
#include "support/fixtures.hpp"

using nlohmann::json;

namespace {

json load_json(const std::string& name) {
  std::ifstream in(fixtures::scenario(name));
  return json::parse(in);
}

// Message of the ConfigError raised by parsing `doc`, or "" if it parses.
std::string config_error(const json& doc) {
  try {
    (void)mpflow::parse_scenario(doc);
  } catch (const mpflow::Error& e) {
    CHECK(e.code() == mpflow::ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("vendored fused-LASSO scenario") {
  const auto cfg = mpflow::load_scenario(fixtures::scenario("fused_lasso_s5.json"));
  CHECK(cfg.name == "fused_lasso_s5");
  CHECK(cfg.weights == fixtures::l4_weights());
  REQUIRE(cfg.agents.size() == 4);
  CHECK(cfg.agents[0].terms.size() == 3);
  CHECK(cfg.agents[2].terms[1].tag() == "pairwise_exact");
  CHECK_FALSE(cfg.params.automatic);
  CHECK(cfg.params.alpha == 5.0);
  CHECK(cfg.params.gamma == 0.2);
  CHECK(cfg.mode == mpflow::ModeSelection::Estimator);
  CHECK(cfg.oracle.kind == mpflow::OracleKind::Subgradient);

  Eigen::MatrixXd x0(4, 2);
  for (Eigen::Index i = 0; i < 4; ++i) x0.row(i) = cfg.agents[static_cast<std::size_t>(i)].x0.transpose();
  CHECK(x0 == fixtures::s5_x0());

  const auto p = mpflow::build_problem(cfg);
  CHECK(p.resources() == fixtures::s5_d());
  const auto reference = fixtures::s5_problem();
  for (const Eigen::MatrixXd& x : {fixtures::s5_x0(), fixtures::s5_d()})
    CHECK(mpflow::smooth_value(p, x) == doctest::Approx(mpflow::smooth_value(reference, x)));

  const auto phi = mpflow::load_scenario(fixtures::scenario("fused_lasso_s5_phi.json"));
  CHECK(phi.agents[0].terms[1].tag() == "pairwise_phi");
}

TEST_CASE("every shipped scenario normalizes to a fixed point") {
  for (const char* name : {"fused_lasso_s5.json", "fused_lasso_s5_phi.json", "tiny_grid.json", "balanced_ring.json"}) {
    CAPTURE(name);
    const auto cfg = mpflow::load_scenario(fixtures::scenario(name));
    const json once = mpflow::normalized(cfg);
    const json twice = mpflow::normalized(mpflow::parse_scenario(once));
    CHECK(once == twice);
    CHECK(once.at("schema") == "mpflow.scenario/1");
    CHECK(once.at("graph").contains("weights"));
  }
}

TEST_CASE("defaults are filled in") {
  json doc = load_json("tiny_grid.json");
  doc.erase("integrator");
  doc.erase("mode");
  doc.erase("output");
  doc.erase("oracle");
  const auto cfg = mpflow::parse_scenario(doc);
  CHECK(cfg.mode == mpflow::ModeSelection::Estimator);
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.seed == 1);
  CHECK(cfg.oracle.kind == mpflow::OracleKind::None);
  CHECK(cfg.params.automatic);
  const json n = mpflow::normalized(cfg);
  CHECK(n.at("mode") == "estimator");
  CHECK(n.at("tolerances").at("agreement") == 1e-2);
}

TEST_CASE("edge-list and matrix graph forms agree") {
  const auto from_edges = mpflow::load_scenario(fixtures::scenario("tiny_grid.json"));
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 3, 1, 0;  // edge 1 → 0 of weight 3 lands in a_01
  CHECK(from_edges.weights == expected);

  json doc = load_json("tiny_grid.json");
  doc["graph"] = {{"weights", {{0, 3}, {1, 0}}}};
  CHECK(mpflow::parse_scenario(doc).weights == expected);

  doc["graph"] = {{"n", 2}, {"edges", {{{"from", 0}, {"to", 1}}, {{"from", 1}, {"to", 0}}}}};
  Eigen::MatrixXd unit(2, 2);
  unit << 0, 1, 1, 0;
  CHECK(mpflow::parse_scenario(doc).weights == unit);
}

TEST_CASE("diagnostics name the offending field") {
  const json base = load_json("fused_lasso_s5.json");

  json doc = base;
  doc.erase("graph");
  CHECK(contains(config_error(doc), "graph: missing"));

  doc = base;
  doc["bogus"] = 1;
  CHECK(contains(config_error(doc), "bogus: unknown field"));

  doc = base;
  doc["agents"][1]["terms"][2]["radius"] = "eight";
  CHECK(contains(config_error(doc), "agents[1].terms[2].radius: expected a number"));

  doc = base;
  doc["agents"][1]["terms"][2]["radius"] = -1.0;
  CHECK(contains(config_error(doc), "agents[1].terms[2].radius: must be positive"));

  doc = base;
  doc["agents"][0]["terms"][0]["kind"] = "l2";
  CHECK(contains(config_error(doc), "agents[0].terms[0].kind: unknown term kind 'l2'"));

  doc = base;
  doc["agents"][3]["d"] = {1.0};
  CHECK(contains(config_error(doc), "agents[3]"));

  doc = base;
  doc["agents"].erase(3);
  CHECK(contains(config_error(doc), "3 agents for a graph with 4 nodes"));

  doc = base;
  doc["schema"] = "mpflow.scenario/0";
  CHECK(contains(config_error(doc), "schema: unsupported"));

  doc = base;
  doc["mode"] = "fast";
  CHECK(contains(config_error(doc), "mode: unknown value 'fast'"));

  doc = base;
  doc["integrator"]["method"] = "leapfrog";
  CHECK(contains(config_error(doc), "integrator.method"));

  doc = base;
  doc["integrator"]["t_end"] = 1e-6;
  CHECK(contains(config_error(doc), "integrator"));

  doc = base;
  doc["params"] = "manual";
  CHECK(contains(config_error(doc), "params: expected \"auto\" or an object"));

  doc = base;
  doc["graph"] = {{"n", 2}, {"edges", {{{"from", 0}, {"to", 2}}}}};
  CHECK(contains(config_error(doc), "graph.edges[0].to: node index out of range"));

  doc = base;
  doc["graph"] = {{"n", 2}, {"edges", {{{"from", 1}, {"to", 1}}}}};
  CHECK(contains(config_error(doc), "self-loops"));

  json tiny = load_json("tiny_grid.json");
  tiny["agents"][0]["terms"][0] = {{"kind", "pairwise_exact"}};
  CHECK(contains(config_error(tiny), "2-dimensional"));

  tiny = load_json("tiny_grid.json");
  tiny["oracle"]["bounds"] = {{1.0, -1.0}};
  CHECK(contains(config_error(tiny), "hi > lo"));

  CHECK(contains(config_error(json::array()), "expected a JSON object"));
}

TEST_CASE("syntax errors report line and column") {
  const auto dir = std::filesystem::temp_directory_path() / "mpflow_test_scenario";
  std::filesystem::create_directories(dir);
  const auto path = dir / "broken.json";
  {
    std::ofstream out(path);
    out << "{\n  \"schema\": \"mpflow.scenario/1\",\n  \"name\": ,\n}\n";
  }
  try {
    (void)mpflow::load_scenario(path);
    FAIL("expected ConfigError");
  } catch (const mpflow::Error& e) {
    CHECK(e.code() == mpflow::ErrorCode::ConfigError);
    CHECK(contains(e.what(), "broken.json:3:11"));
  }
  CHECK_THROWS_AS(mpflow::load_scenario(dir / "absent.json"), mpflow::Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mode selection") {
  CHECK(mpflow::parse_mode("known_h") == mpflow::ModeSelection::KnownH);
  CHECK(mpflow::flow_modes(mpflow::ModeSelection::Both).size() == 2);
  CHECK(mpflow::flow_modes(mpflow::ModeSelection::Estimator).front() == mpflow::FlowMode::Estimator);
  CHECK(mpflow::to_string(mpflow::ModeSelection::Both) == "both");
  CHECK_THROWS_AS(mpflow::parse_mode("KNOWN_H"), mpflow::Error);
}

TEST_CASE("initial state follows the mode") {
  const auto cfg = mpflow::load_scenario(fixtures::scenario("fused_lasso_s5.json"));
  const auto known = mpflow::scenario_initial_state(cfg, mpflow::FlowMode::KnownH);
  const auto est = mpflow::scenario_initial_state(cfg, mpflow::FlowMode::Estimator);
  CHECK(known.x == fixtures::s5_x0());
  CHECK(known.z.size() == 2);
  CHECK_FALSE(known.y.has_value());
  REQUIRE(est.y.has_value());
  CHECK(*est.y == Eigen::MatrixXd::Identity(4, 4));
  CHECK(est.v.isZero(0.0));
  CHECK(est.w.isZero(0.0));
}

TEST_CASE("explicit parameters resolve through the certificate") {
  const auto cfg = mpflow::load_scenario(fixtures::scenario("fused_lasso_s5.json"));
  const auto p = mpflow::build_problem(cfg);
  const auto params = mpflow::resolve_params(cfg, p);
  CHECK(params.alpha == 5.0);
  CHECK(params.gamma == 0.2);
  CHECK(params.gamma_admissible);
  CHECK_FALSE(params.feasible);  // α = 5 sits below the certified threshold

  const auto ring = mpflow::load_scenario(fixtures::scenario("balanced_ring.json"));
  const auto ring_params = mpflow::resolve_params(ring, mpflow::build_problem(ring));
  CHECK(ring_params.feasible);
  CHECK(ring_params.gamma == doctest::Approx(0.5));
}
