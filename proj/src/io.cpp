#include "lvgm/io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

namespace lvgm {

Json matrix_json(const Eigen::MatrixXd& m) { return Json(to_rows(m)); }

Eigen::MatrixXd matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j.at(i);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("matrix rows have unequal lengths");
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

Json support_json(const Support& s) {
  Json out = Json::array();
  for (const auto& [i, j] : s) out.push_back({i, j});
  return out;
}

Support support_from_json(const Json& j) {
  Support s;
  for (const auto& pair : j) {
    auto a = pair.at(0).get<Eigen::Index>();
    auto b = pair.at(1).get<Eigen::Index>();
    if (a == b) throw ParseError("support pair on the diagonal");
    if (a > b) std::swap(a, b);
    s.emplace(a, b);
  }
  return s;
}

Json kkt_json(const KktReport& k) {
  Json j;
  j["kl_gap"] = k.kl_gap;
  j["primal_objective"] = k.primal_objective;
  j["dual_objective"] = k.dual_objective;
  j["duality_gap"] = k.duality_gap;
  j["comp_slack"] = k.comp_slack;
  j["support_margin"] = k.support_margin;
  j["lowrank_residual"] = k.lowrank_residual;
  j["reconstruction_error"] = k.reconstruction_error;
  j["min_eig_S_minus_L"] = k.min_eig_S_minus_L;
  j["feasibility_violation"] = k.feasibility_violation;
  j["residual_warning"] = k.residual_warning;
  j["rank_deficient_ls"] = k.rank_deficient_ls;
  return j;
}

namespace {

Json decomposition_body(const Decomposition& d, double gamma) {
  Json j;
  j["m"] = d.X.dim();
  j["gamma"] = gamma;
  j["delta"] = nullptr;
  j["lambda_star"] = nullptr;
  j["rank_L"] = d.rank_L;
  j["support"] = support_json(d.support);
  j["S"] = matrix_json(d.S.mat());
  j["L"] = matrix_json(d.L.mat());
  j["X"] = matrix_json(d.X.mat());
  j["kkt"] = nullptr;
  return j;
}

}  // namespace

Json robust_decomposition_json(const Recovery& rec, const ProblemSpec& spec,
                               double lambda_star) {
  Json j = decomposition_body(rec.decomposition, spec.gamma());
  j["delta"] = spec.delta();
  j["lambda_star"] = lambda_star;
  j["kkt"] = kkt_json(rec.kkt);
  return j;
}

Json classic_decomposition_json(const ClassicResult& res,
                                const ClassicSpec& spec) {
  Json j = decomposition_body(res.decomposition, spec.gamma);
  Json a;
  a["lambda_reg"] = spec.lambda_reg;
  a["rho"] = spec.rho;
  a["iterations"] = res.iterations;
  a["converged"] = res.converged;
  a["primal_residual"] = res.primal_residual;
  a["dual_residual"] = res.dual_residual;
  a["objective"] = res.objective;
  j["admm"] = a;
  return j;
}

Json calibration_json(const CalibrationReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["delta_alpha"] = r.delta_alpha;
  j["replicates"] = r.replicates;
  j["seed"] = r.seed;
  j["delta_max"] = r.delta_max;
  j["exceeded_delta_max"] = r.exceeded_delta_max;
  Json q;
  for (const char* level : {"0.5", "0.9", "0.95", "0.99"}) {
    q[level] = r.quantile(std::stod(level));
  }
  j["quantiles"] = q;
  j["discarded"] = r.discarded;
  j["divergence"] = "kl2(replicate, sigma_hat)";
  return j;
}

Json ground_truth_json(const GroundTruth& gt, const GroundTruthOptions& opts) {
  Json j;
  j["m"] = gt.S0.dim();
  j["rank0"] = gt.rank0;
  j["density"] = gt.density;
  j["seed"] = gt.seed;
  j["diag_level"] = gt.diag_level;
  j["lowrank_scale"] = gt.lowrank_scale;
  Json o;
  o["offdiag_lo"] = opts.offdiag_lo;
  o["offdiag_hi"] = opts.offdiag_hi;
  o["lowrank_scale"] = opts.lowrank_scale;
  o["diag_start"] = opts.diag_start;
  o["min_eig"] = opts.min_eig;
  o["max_retries"] = opts.max_retries;
  j["options"] = o;
  j["support0"] = support_json(gt.support0);
  j["S0"] = matrix_json(gt.S0.mat());
  j["L0"] = matrix_json(gt.L0.mat());
  j["sigma_m"] = matrix_json(gt.sigma_m.mat());
  return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
  try {
    GroundTruth gt;
    gt.S0 = SymMatrix(matrix_from_json(j.at("S0")));
    gt.L0 = SymMatrix(matrix_from_json(j.at("L0")));
    gt.sigma_m = SymMatrix(matrix_from_json(j.at("sigma_m")));
    gt.support0 = support_from_json(j.at("support0"));
    gt.rank0 = j.at("rank0").get<int>();
    gt.density = j.at("density").get<double>();
    gt.seed = j.at("seed").get<std::uint64_t>();
    gt.diag_level = j.at("diag_level").get<double>();
    gt.lowrank_scale = j.at("lowrank_scale").get<double>();
    const Eigen::Index m = gt.S0.dim();
    if (gt.L0.dim() != m || gt.sigma_m.dim() != m) {
      throw DimensionMismatch("ground truth matrices differ in size");
    }
    return gt;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
}

Json metrics_json(const RecoveryMetrics& m) {
  Json j;
  j["support_f1"] = m.support_f1;
  j["false_pos"] = m.false_pos;
  j["false_neg"] = m.false_neg;
  j["rank_err"] = m.rank_err;
  j["frob_err_X"] = m.frob_err_X;
  return j;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_json_atomic(const std::filesystem::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

Json RunManifest::to_json() const {
  Json j;
  j["command"] = command;
  j["argv"] = argv;
  j["params"] = params;
  j["seeds"] = seeds;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["tool_version"] = kToolVersion;
  j["wall_time_s"] = wall_time_s;
  j["exit_code"] = exit_code;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest r;
    r.command = j.at("command").get<std::string>();
    r.argv = j.at("argv").get<std::vector<std::string>>();
    r.params = j.at("params");
    r.seeds = j.at("seeds");
    r.inputs = j.at("inputs").get<std::vector<std::string>>();
    r.outputs = j.at("outputs").get<std::vector<std::string>>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.exit_code = j.at("exit_code").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

}  // namespace lvgm
