#include "mpflow/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "mpflow/error.hpp"

namespace mpflow {

using nlohmann::json;

namespace {

// JSON has no inf/nan; they are emitted as null.
json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void append_block(std::vector<std::string>& row, const Eigen::MatrixXd& b) {
  for (Eigen::Index i = 0; i < b.rows(); ++i)
    for (Eigen::Index k = 0; k < b.cols(); ++k) row.push_back(format_number(b(i, k)));
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> csv_header(std::size_t n, std::size_t q, std::size_t m, FlowMode mode) {
  std::vector<std::string> cols{"t"};
  const auto block = [&](const std::string& prefix) {
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 1; k <= q; ++k) cols.push_back(prefix + std::to_string(i) + "_" + std::to_string(k));
  };
  block("x_");
  for (std::size_t j = 1; j < m; ++j) block("z_" + std::to_string(j) + "_");
  block("v_");
  block("w_");
  if (mode == FlowMode::Estimator)
    for (std::size_t i = 1; i <= n; ++i) cols.push_back("y_" + std::to_string(i));
  for (const char* name : {"F", "r_x", "r_z", "r_feas", "r_cons", "conservation", "lyapunov"}) cols.emplace_back(name);
  return cols;
}

void write_csv(std::ostream& out, const Trajectory& tr, std::size_t m) {
  if (tr.empty()) throw Error(ErrorCode::InvalidArgument, "cannot export an empty trajectory");
  const FlowState& first = tr.states.front();
  const auto header = csv_header(first.agents(), first.dim(), m, tr.mode);
  const auto join = [&out](const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "," : "") << cells[k];
    out << '\n';
  };
  join(header);
  std::vector<std::string> row;
  row.reserve(header.size());
  for (std::size_t s = 0; s < tr.times.size(); ++s) {
    const FlowState& st = tr.states[s];
    const Monitor& mon = tr.monitors[s];
    row.clear();
    row.push_back(format_number(tr.times[s]));
    append_block(row, st.x);
    for (const auto& zj : st.z) append_block(row, zj);
    append_block(row, st.v);
    append_block(row, st.w);
    if (tr.mode == FlowMode::Estimator) append_block(row, st.y->diagonal().transpose());
    for (double val : {mon.F, mon.r_x, mon.r_z, mon.r_feas, mon.r_cons, mon.conservation})
      row.push_back(format_number(val));
    row.push_back(mon.lyapunov ? format_number(*mon.lyapunov) : "");
    join(row);
  }
}

std::string trajectory_csv(const Trajectory& tr, std::size_t m) {
  std::ostringstream out;
  write_csv(out, tr, m);
  return out.str();
}

json to_json(const Eigen::MatrixXd& blocks) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < blocks.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < blocks.cols(); ++k) row.push_back(number_or_null(blocks(i, k)));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const FlowParams& p) {
  return {{"alpha", p.alpha},
          {"gamma", p.gamma},
          {"eta", number_or_null(p.eta)},
          {"beta", number_or_null(p.beta)},
          {"b1", number_or_null(p.b1)},
          {"b2", number_or_null(p.b2)},
          {"beta_window", {number_or_null(p.beta_window_lo), number_or_null(p.beta_window_hi)}},
          {"eta_threshold", number_or_null(p.eta_threshold)},
          {"alpha_threshold", number_or_null(p.alpha_threshold)},
          {"margins",
           {{"gamma_lower", number_or_null(p.margins.gamma_lower)},
            {"gamma_upper", number_or_null(p.margins.gamma_upper)},
            {"beta_lower", number_or_null(p.margins.beta_lower)},
            {"beta_upper", number_or_null(p.margins.beta_upper)},
            {"eta", number_or_null(p.margins.eta)},
            {"alpha", number_or_null(p.margins.alpha)}}},
          {"gamma_admissible", p.gamma_admissible},
          {"feasible", p.feasible}};
}

json to_json(const Summary& s) {
  json out{{"mode", to_string(s.mode)},
           {"termination", to_string(s.termination)},
           {"diverged", s.diverged},
           {"t_final", s.t_final},
           {"steps", s.steps},
           {"samples", s.samples},
           {"residuals",
            {{"r_x", s.final_residual.r_x},
             {"r_z", s.final_residual.r_z},
             {"r_feas", s.final_residual.r_feas},
             {"r_cons", s.final_residual.r_cons}}},
           {"F", number_or_null(s.final_F)},
           {"sup_norm", s.final_sup_norm},
           {"settling_time", s.settling_time ? json(*s.settling_time) : json(nullptr)},
           {"max_conservation", s.max_conservation},
           {"max_conservation_ratio", s.max_conservation_ratio},
           {"x_final", to_json(s.x_final)},
           {"resource_gap", to_json(Eigen::MatrixXd(s.resource_gap.transpose()))}};
  if (!s.diagnostic.empty()) out["diagnostic"] = s.diagnostic;
  if (s.mode == FlowMode::Estimator) {
    out["min_estimator_diagonal"] = s.min_estimator_diagonal;
    if (s.estimator_fit)
      out["estimator_fit"] = {{"slope", s.estimator_fit->slope},
                              {"intercept", s.estimator_fit->intercept},
                              {"r2", s.estimator_fit->r2},
                              {"samples", s.estimator_fit->samples}};
  }
  return out;
}

json to_json(const OracleResult& r) {
  const auto& c = r.certificate;
  json cert{{"feasibility_gap", c.feasibility_gap}, {"no_feasible_point", c.no_feasible_point},
            {"evaluations", c.evaluations}};
  if (r.method == OracleMethod::Grid) {
    cert["spacing"] = c.spacing;
    cert["ties"] = c.ties;
    cert["best_neighbor_gap"] = c.best_neighbor_gap ? number_or_null(*c.best_neighbor_gap) : json(nullptr);
  } else {
    cert["iterations"] = c.iterations;
    cert["last_step_norm"] = c.last_step_norm;
  }
  return {{"method", to_string(r.method)}, {"F_star", number_or_null(r.F_star)}, {"x_star", to_json(r.x_star)},
          {"certificate", cert}};
}

json to_json(const AssumptionReport& r) {
  json agents = json::array();
  for (const auto& a : r.agents) {
    json entry{{"agent", a.agent},
               {"c_declared", a.c_declared},
               {"c_observed", number_or_null(a.c_observed)},
               {"modulus_ok", a.modulus_ok},
               {"spot_check_ok", a.spot_check_ok}};
    if (a.scale_lower_bound) entry["scale_lower_bound"] = *a.scale_lower_bound;
    agents.push_back(entry);
  }
  return {{"passed", r.passed()}, {"strongly_connected", r.strongly_connected}, {"agents", agents},
          {"messages", r.messages}};
}

json to_json(const SpectralData& s) {
  json h = json::array();
  for (Eigen::Index i = 0; i < s.h.size(); ++i) h.push_back(s.h(i));
  return {{"h", h}, {"h_star", s.h_star}, {"lambda2", number_or_null(s.lambda2)}, {"balanced", s.balanced}};
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::InvalidArgument, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace mpflow
