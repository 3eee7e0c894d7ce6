#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "lvgm/baseline.hpp"
#include "lvgm/calibration.hpp"
#include "lvgm/recovery.hpp"
#include "lvgm/synthetic.hpp"

namespace lvgm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

Json matrix_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json support_json(const Support& s);
Support support_from_json(const Json& j);

Json kkt_json(const KktReport& k);

/// {m, gamma, delta, lambda_star, rank_L, support, S, L, X, kkt}, matrices
/// as row-major nested arrays.
Json robust_decomposition_json(const Recovery& rec, const ProblemSpec& spec,
                               double lambda_star);

/// Same layout for the classical fit: delta, lambda_star and kkt are null and
/// an "admm" block carries the ADMM parameters and residuals.
Json classic_decomposition_json(const ClassicResult& res,
                                const ClassicSpec& spec);

/// {alpha, delta_alpha, replicates, seed, delta_max, exceeded_delta_max,
///  quantiles: {0.5, 0.9, 0.95, 0.99}, discarded, divergence}.
Json calibration_json(const CalibrationReport& r);

Json ground_truth_json(const GroundTruth& gt, const GroundTruthOptions& opts);
GroundTruth ground_truth_from_json(const Json& j);

Json metrics_json(const RecoveryMetrics& m);

/// Writes `text` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const Json& j);
Json read_json_file(const std::filesystem::path& path);

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json params = Json::object();
  Json seeds = Json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;
  int exit_code = 0;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

}  // namespace lvgm
