#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mpflow/integrator.hpp"
#include "mpflow/oracle.hpp"
#include "mpflow/problem.hpp"

namespace mpflow {

/// t, x_i_k, z_j_i_k, v_i_k, w_i_k, [y_i], F, r_x, r_z, r_feas, r_cons,
/// conservation, lyapunov. Indices are 1-based; y_i is the diagonal estimate.
std::vector<std::string> csv_header(std::size_t n, std::size_t q, std::size_t m, FlowMode mode);

void write_csv(std::ostream& out, const Trajectory& tr, std::size_t m);
std::string trajectory_csv(const Trajectory& tr, std::size_t m);

/// Shortest decimal that round-trips; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);

nlohmann::json to_json(const Eigen::MatrixXd& blocks);
nlohmann::json to_json(const FlowParams& params);
nlohmann::json to_json(const Summary& summary);
nlohmann::json to_json(const OracleResult& result);
nlohmann::json to_json(const AssumptionReport& report);
nlohmann::json to_json(const SpectralData& spectral);

/// Writes through a sibling temporary file and renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace mpflow
