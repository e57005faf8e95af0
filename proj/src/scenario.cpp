#include "mpflow/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include "mpflow/error.hpp"

namespace mpflow {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ConfigError, path + ": " + what);
}

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string element(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Field access with path-tagged diagnostics.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  bool has(std::string_view key) const { return j_.is_object() && j_.contains(key); }

  Node at(std::string_view key) const {
    if (!j_.is_object()) fail(path_, "expected an object");
    const auto it = j_.find(key);
    if (it == j_.end()) fail(child(path_, key), "missing");
    return {*it, child(path_, key)};
  }

  Node operator[](std::size_t i) const { return {j_.at(i), element(path_, i)}; }

  std::size_t size() const {
    if (!j_.is_array()) fail(path_, "expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail(path_, "expected a number");
    const double x = j_.get<double>();
    if (!std::isfinite(x)) fail(path_, "must be finite");
    return x;
  }

  double positive() const {
    const double x = number();
    if (!(x > 0.0)) fail(path_, "must be positive");
    return x;
  }

  std::size_t count() const {
    if (!j_.is_number_integer() || j_.get<long long>() < 0) fail(path_, "expected a nonnegative integer");
    return j_.get<std::size_t>();
  }

  std::string text() const {
    if (!j_.is_string()) fail(path_, "expected a string");
    return j_.get<std::string>();
  }

  bool flag() const {
    if (!j_.is_boolean()) fail(path_, "expected true or false");
    return j_.get<bool>();
  }

  Eigen::VectorXd vector(std::optional<std::size_t> expected = std::nullopt) const {
    const std::size_t n = size();
    if (expected && n != *expected) fail(path_, "expected " + std::to_string(*expected) + " entries, got " + std::to_string(n));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = (*this)[i].number();
    return v;
  }

  void only(std::initializer_list<std::string_view> keys) const {
    if (!j_.is_object()) fail(path_, "expected an object");
    for (const auto& [key, _] : j_.items()) {
      bool known = false;
      for (auto k : keys) known = known || key == k;
      if (!known) fail(child(path_, key), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
};

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd parse_graph(const Node& g) {
  if (g.has("weights")) {
    g.only({"weights"});
    const Node rows = g.at("weights");
    const std::size_t n = rows.size();
    if (n == 0) fail(rows.path(), "must have at least one row");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i].vector(n).transpose();
    return a;
  }
  g.only({"n", "edges"});
  const std::size_t n = g.at("n").count();
  if (n == 0) fail(child(g.path(), "n"), "must be positive");
  const Node edges = g.at("edges");
  std::vector<Digraph::Edge> list;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Node edge = edges[e];
    edge.only({"from", "to", "weight"});
    const std::size_t from = edge.at("from").count();
    const std::size_t to = edge.at("to").count();
    if (from >= n) fail(child(edge.path(), "from"), "node index out of range");
    if (to >= n) fail(child(edge.path(), "to"), "node index out of range");
    if (from == to) fail(edge.path(), "self-loops are not allowed");
    const double w = edge.has("weight") ? edge.at("weight").positive() : 1.0;
    list.push_back({from, to, w});
  }
  return Digraph::from_edges(n, list).weights();
}

NonsmoothTerm parse_term(const Node& t, std::size_t q) {
  const std::string kind = t.at("kind").text();
  try {
    if (kind == "l1_anchor") {
      t.only({"kind", "anchor", "weight"});
      return NonsmoothTerm::l1_anchor(t.at("anchor").vector(q), t.has("weight") ? t.at("weight").positive() : 1.0);
    }
    if (kind == "pairwise_phi" || kind == "pairwise_exact") {
      if (q != 2) fail(t.path(), kind + " needs a 2-dimensional decision variable");
      if (kind == "pairwise_phi") {
        t.only({"kind"});
        return NonsmoothTerm::pairwise_phi();
      }
      t.only({"kind", "weight"});
      return NonsmoothTerm::pairwise_exact(t.has("weight") ? t.at("weight").positive() : 1.0);
    }
    if (kind == "ball") {
      t.only({"kind", "center", "radius"});
      return NonsmoothTerm::ball_indicator(t.at("center").vector(q), t.at("radius").positive());
    }
    if (kind == "box") {
      t.only({"kind", "lower", "upper"});
      return NonsmoothTerm::box_indicator(t.at("lower").vector(q), t.at("upper").vector(q));
    }
    if (kind == "zero") {
      t.only({"kind"});
      return NonsmoothTerm::zero(q);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(t.path(), e.what());
  }
  fail(child(t.path(), "kind"), "unknown term kind '" + kind + "'");
}

json term_json(const NonsmoothTerm& term) {
  json out{{"kind", term.tag()}};
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, NonsmoothTerm::L1Anchor>) {
          out["anchor"] = vector_json(d.anchor);
          out["weight"] = d.weight;
        } else if constexpr (std::is_same_v<T, NonsmoothTerm::PairwiseExact>) {
          out["weight"] = d.weight;
        } else if constexpr (std::is_same_v<T, NonsmoothTerm::BallIndicator>) {
          out["center"] = vector_json(d.center);
          out["radius"] = d.radius;
        } else if constexpr (std::is_same_v<T, NonsmoothTerm::BoxIndicator>) {
          out["lower"] = vector_json(d.lower);
          out["upper"] = vector_json(d.upper);
        } else if constexpr (std::is_same_v<T, NonsmoothTerm::Custom>) {
          throw Error(ErrorCode::ConfigError, "custom terms cannot be serialized");
        }
      },
      term.data());
  return out;
}

AgentConfig parse_agent(const Node& a) {
  a.only({"f0", "terms", "d", "x0"});
  AgentConfig agent;
  agent.d = a.at("d").vector();
  const std::size_t q = static_cast<std::size_t>(agent.d.size());
  if (q == 0) fail(child(a.path(), "d"), "must be non-empty");
  agent.x0 = a.at("x0").vector(q);

  const Node f0 = a.at("f0");
  f0.only({"kind", "weight", "center", "scale"});
  if (const std::string kind = f0.at("kind").text(); kind != "quadratic")
    fail(child(f0.path(), "kind"), "unknown cost kind '" + kind + "' (expected quadratic)");
  agent.f0.weight = f0.at("weight").positive();
  agent.f0.center = f0.at("center").vector(q);
  agent.f0.scale = f0.has("scale") ? f0.at("scale").positive() : 1.0;

  const Node terms = a.at("terms");
  for (std::size_t j = 0; j < terms.size(); ++j) agent.terms.push_back(parse_term(terms[j], q));
  if (agent.terms.size() < 2) fail(terms.path(), "at least two nonsmooth terms are required");
  return agent;
}

Method parse_method(const Node& n) {
  const std::string s = n.text();
  if (s == "euler") return Method::Euler;
  if (s == "rk4") return Method::Rk4;
  fail(n.path(), "unknown method '" + s + "' (expected euler or rk4)");
}

OracleKind parse_oracle_kind(const Node& n) {
  const std::string s = n.text();
  if (s == "none") return OracleKind::None;
  if (s == "grid") return OracleKind::Grid;
  if (s == "subgradient") return OracleKind::Subgradient;
  fail(n.path(), "unknown oracle '" + s + "' (expected none, grid or subgradient)");
}

}  // namespace

std::string_view to_string(ModeSelection mode) {
  switch (mode) {
    case ModeSelection::KnownH: return "known_h";
    case ModeSelection::Estimator: return "estimator";
    case ModeSelection::Both: return "both";
  }
  return "unknown";
}

ModeSelection parse_mode(std::string_view text) {
  if (text == "known_h") return ModeSelection::KnownH;
  if (text == "estimator") return ModeSelection::Estimator;
  if (text == "both") return ModeSelection::Both;
  throw Error(ErrorCode::ConfigError, "mode: unknown value '" + std::string(text) + "' (expected known_h, estimator or both)");
}

std::vector<FlowMode> flow_modes(ModeSelection mode) {
  switch (mode) {
    case ModeSelection::KnownH: return {FlowMode::KnownH};
    case ModeSelection::Estimator: return {FlowMode::Estimator};
    case ModeSelection::Both: return {FlowMode::KnownH, FlowMode::Estimator};
  }
  return {};
}

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::None: return "none";
    case OracleKind::Grid: return "grid";
    case OracleKind::Subgradient: return "subgradient";
  }
  return "unknown";
}

ScenarioConfig parse_scenario(const json& doc) {
  const Node root(doc, "");
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "scenario: expected a JSON object");
  root.only({"schema", "name", "graph", "agents", "params", "integrator", "mode", "output", "seed", "tolerances",
             "oracle"});
  if (const std::string schema = root.at("schema").text(); schema != kScenarioSchema)
    fail("schema", "unsupported '" + schema + "' (expected " + std::string(kScenarioSchema) + ")");

  ScenarioConfig cfg;
  cfg.name = root.has("name") ? root.at("name").text() : "";
  cfg.weights = parse_graph(root.at("graph"));

  const Node agents = root.at("agents");
  for (std::size_t i = 0; i < agents.size(); ++i) cfg.agents.push_back(parse_agent(agents[i]));
  if (cfg.agents.size() != static_cast<std::size_t>(cfg.weights.rows()))
    fail("agents", std::to_string(cfg.agents.size()) + " agents for a graph with " +
                       std::to_string(cfg.weights.rows()) + " nodes");
  for (std::size_t i = 1; i < cfg.agents.size(); ++i) {
    if (cfg.agents[i].d.size() != cfg.agents[0].d.size())
      fail(element("agents", i) + ".d", "dimension differs from agent 0");
    if (cfg.agents[i].terms.size() != cfg.agents[0].terms.size())
      fail(element("agents", i) + ".terms", "term count differs from agent 0");
  }

  if (root.has("params")) {
    const Node params = root.at("params");
    if (params.raw().is_string()) {
      if (params.text() != "auto") fail("params", "expected \"auto\" or an object");
    } else {
      params.only({"alpha", "gamma", "eta", "beta"});
      cfg.params.automatic = false;
      cfg.params.alpha = params.at("alpha").positive();
      cfg.params.gamma = params.at("gamma").number();
      if (params.has("eta")) cfg.params.eta = params.at("eta").positive();
      if (params.has("beta")) cfg.params.beta = params.at("beta").positive();
    }
  }

  if (root.has("integrator")) {
    const Node in = root.at("integrator");
    in.only({"method", "step", "t_end", "stop_tol", "record_every", "lyapunov"});
    if (in.has("method")) cfg.integrator.method = parse_method(in.at("method"));
    if (in.has("step")) cfg.integrator.step = in.at("step").positive();
    if (in.has("t_end")) cfg.integrator.t_end = in.at("t_end").positive();
    if (in.has("stop_tol")) cfg.integrator.stop_tol = in.at("stop_tol").number();
    if (in.has("record_every")) cfg.integrator.record_every = in.at("record_every").count();
    if (in.has("lyapunov")) cfg.integrator.lyapunov = in.at("lyapunov").flag();
    try {
      cfg.integrator.validate();
    } catch (const Error& e) {
      fail("integrator", e.what());
    }
  }

  if (root.has("mode")) cfg.mode = parse_mode(root.at("mode").text());

  if (root.has("output")) {
    const Node out = root.at("output");
    out.only({"dir"});
    if (out.has("dir")) cfg.output_dir = out.at("dir").text();
  }

  if (root.has("seed")) cfg.seed = root.at("seed").count();

  if (root.has("tolerances")) {
    const Node tol = root.at("tolerances");
    tol.only({"spectral", "agreement"});
    if (tol.has("spectral")) cfg.spectral_tol = tol.at("spectral").positive();
    if (tol.has("agreement")) cfg.agreement_tol = tol.at("agreement").positive();
  }

  if (root.has("oracle")) {
    const Node o = root.at("oracle");
    o.only({"kind", "bounds", "resolution", "iters"});
    cfg.oracle.kind = parse_oracle_kind(o.at("kind"));
    if (o.has("resolution")) cfg.oracle.resolution = o.at("resolution").count();
    if (o.has("iters")) cfg.oracle.iters = o.at("iters").count();
    if (o.has("bounds")) {
      const Node b = o.at("bounds");
      for (std::size_t k = 0; k < b.size(); ++k) {
        const Eigen::VectorXd lh = b[k].vector(2);
        if (!(lh(1) > lh(0))) fail(b[k].path(), "expected [lo, hi] with hi > lo");
        cfg.oracle.bounds.push_back({lh(0), lh(1)});
      }
    }
    if (cfg.oracle.kind == OracleKind::Grid && cfg.oracle.bounds.size() != static_cast<std::size_t>(cfg.agents.front().d.size()))
      fail("oracle.bounds", "grid needs one [lo, hi] interval per coordinate");
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, path.string() + ": cannot open");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::ConfigError,
                path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": invalid JSON");
  }
  return parse_scenario(doc);
}

json normalized(const ScenarioConfig& cfg) {
  json weights = json::array();
  for (Eigen::Index i = 0; i < cfg.weights.rows(); ++i) weights.push_back(vector_json(cfg.weights.row(i).transpose()));

  json agents = json::array();
  for (const auto& a : cfg.agents) {
    json terms = json::array();
    for (const auto& t : a.terms) terms.push_back(term_json(t));
    agents.push_back({{"f0", {{"kind", "quadratic"}, {"weight", a.f0.weight}, {"center", vector_json(a.f0.center)},
                              {"scale", a.f0.scale}}},
                      {"terms", terms},
                      {"d", vector_json(a.d)},
                      {"x0", vector_json(a.x0)}});
  }

  json params = "auto";
  if (!cfg.params.automatic) {
    params = {{"alpha", cfg.params.alpha}, {"gamma", cfg.params.gamma}};
    if (cfg.params.eta) params["eta"] = *cfg.params.eta;
    if (cfg.params.beta) params["beta"] = *cfg.params.beta;
  }

  json oracle = {{"kind", to_string(cfg.oracle.kind)}, {"resolution", cfg.oracle.resolution}, {"iters", cfg.oracle.iters}};
  if (!cfg.oracle.bounds.empty()) {
    json bounds = json::array();
    for (const auto& b : cfg.oracle.bounds) bounds.push_back({b.lo, b.hi});
    oracle["bounds"] = bounds;
  }

  const auto& in = cfg.integrator;
  return {{"schema", kScenarioSchema},
          {"name", cfg.name},
          {"graph", {{"weights", weights}}},
          {"agents", agents},
          {"params", params},
          {"integrator",
           {{"method", to_string(in.method)},
            {"step", in.step},
            {"t_end", in.t_end},
            {"stop_tol", in.stop_tol},
            {"record_every", in.record_every},
            {"lyapunov", in.lyapunov}}},
          {"mode", to_string(cfg.mode)},
          {"output", {{"dir", cfg.output_dir}}},
          {"seed", cfg.seed},
          {"tolerances", {{"spectral", cfg.spectral_tol}, {"agreement", cfg.agreement_tol}}},
          {"oracle", oracle}};
}

NetworkProblem build_problem(const ScenarioConfig& cfg) {
  std::vector<AgentSpec> agents;
  agents.reserve(cfg.agents.size());
  for (const auto& a : cfg.agents) {
    AgentSpec spec = AgentSpec::quadratic(a.f0.weight, a.f0.center, a.terms, a.d);
    if (a.f0.scale != 1.0) spec = scale_smooth_cost(spec, a.f0.scale);
    agents.push_back(std::move(spec));
  }
  return NetworkProblem(std::move(agents), Digraph(cfg.weights), cfg.spectral_tol);
}

FlowParams resolve_params(const ScenarioConfig& cfg, const NetworkProblem& problem) {
  if (cfg.params.automatic) return suggest_params(problem);
  return complete_params(problem, cfg.params.alpha, cfg.params.gamma, cfg.params.eta, cfg.params.beta);
}

FlowState scenario_initial_state(const ScenarioConfig& cfg, FlowMode mode) {
  const auto n = static_cast<Eigen::Index>(cfg.agents.size());
  const Eigen::Index q = cfg.agents.front().x0.size();
  Eigen::MatrixXd x0(n, q);
  for (Eigen::Index i = 0; i < n; ++i) x0.row(i) = cfg.agents[static_cast<std::size_t>(i)].x0.transpose();
  return initial_state(x0, cfg.agents.front().terms.size(), mode == FlowMode::Estimator);
}

}  // namespace mpflow
