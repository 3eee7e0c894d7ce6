#include "lvgm/cli.hpp"

#include <chrono>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "lvgm/experiment.hpp"
#include "lvgm/io.hpp"

namespace lvgm::cli {

namespace {

namespace fs = std::filesystem;

struct SynthOptions {
  Eigen::Index m = ExperimentDefaults::m;
  int rank = ExperimentDefaults::rank;
  double density = ExperimentDefaults::density;
  std::int64_t n_samples = ExperimentDefaults::n_samples;
  std::uint64_t seed = 1;
};

struct CalibrateOptions {
  std::string samples;
  double alpha = ExperimentDefaults::alpha;
  std::int64_t replicates = ExperimentDefaults::replicates;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct DecomposeOptions {
  std::string samples;
  std::string cov;
  std::int64_t n_samples = 0;
  std::string mode = "robust";
  std::optional<double> gamma;
  std::optional<double> delta;
  std::optional<double> alpha;
  std::int64_t replicates = ExperimentDefaults::replicates;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  double grad_tol = ExperimentDefaults::grad_tol;
  int max_iters = SolverConfig{}.max_iters;
  double support_tol = RecoveryConfig{}.support_rel_tol;
  double kernel_tol = RecoveryConfig{}.kernel_rel_tol;
  double lambda_reg = ExperimentDefaults::classic_lambda;
  double rho = ClassicSpec{}.rho;
  int admm_max_iters = ClassicSpec{}.max_iters;
  double admm_tol = ClassicSpec{}.tol_primal;
};

struct CompareCliOptions {
  std::string truth;
  std::string samples;
  double gamma = ExperimentDefaults::robust_gamma;
  double alpha = ExperimentDefaults::alpha;
  std::int64_t replicates = ExperimentDefaults::replicates;
  std::uint64_t seed = 1;
  double classic_lambda = ExperimentDefaults::classic_lambda;
  double classic_gamma = ExperimentDefaults::classic_gamma;
  double grad_tol = ExperimentDefaults::grad_tol;
  int max_iters = SolverConfig{}.max_iters;
};

class Outputs {
 public:
  Outputs(fs::path dir, RunManifest& manifest)
      : dir_(std::move(dir)), manifest_(manifest) {}

  void json(const std::string& name, const Json& j) {
    const fs::path p = prepare(name);
    write_json_atomic(p, j);
    manifest_.outputs.push_back(p.string());
  }

  void text(const std::string& name, const std::string& body) {
    const fs::path p = prepare(name);
    write_file_atomic(p, body);
    manifest_.outputs.push_back(p.string());
  }

  void csv(const std::string& name, const Eigen::MatrixXd& table) {
    std::ostringstream os;
    write_csv_table(os, table);
    text(name, os.str());
  }

 private:
  fs::path prepare(const std::string& name) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    return p;
  }

  fs::path dir_;
  RunManifest& manifest_;
};

std::string trace_text(const SolverTrace& trace) {
  std::ostringstream os;
  trace.write_jsonl(os);
  return os.str();
}

std::string admm_trace_text(const ClassicResult& res) {
  std::ostringstream os;
  for (std::size_t k = 0; k < res.objective_history.size(); ++k) {
    Json j;
    j["iter"] = k + 1;
    j["objective"] = res.objective_history[k];
    os << j.dump() << '\n';
  }
  return os.str();
}

Json solver_json(const SolverTrace& trace) {
  Json j;
  j["termination"] = to_string(trace.reason);
  j["converged"] = trace.converged();
  j["iterations"] = trace.records.empty() ? 0 : trace.records.back().iter;
  j["final_pgrad_norm"] =
      trace.records.empty() ? 0.0 : trace.records.back().pgrad_norm;
  j["projection_failures"] = trace.projection_failures;
  return j;
}

Eigen::MatrixXd column(const Eigen::VectorXd& v) { return v; }

void warn_if_residual(const Recovery& rec, std::ostream& err) {
  if (rec.kkt.residual_warning) {
    err << "warning: the low-rank fit leaves off-support residual "
        << rec.kkt.lowrank_residual << "; rerun with a smaller --grad-tol\n";
  }
  if (rec.kkt.feasibility_violation) {
    err << "warning: S - L is not positive definite after zeroing (min "
           "eigenvalue "
        << rec.kkt.min_eig_S_minus_L << ")\n";
  }
}

std::string infeasible_message(double delta, double dmax) {
  std::ostringstream os;
  os.precision(17);
  os << "delta = " << delta << " is not below delta_max = " << dmax;
  return os.str();
}

int cmd_synth(const SynthOptions& o, Outputs& outputs, RunManifest& mf,
              std::ostream& out) {
  mf.params = {{"m", o.m},
               {"rank", o.rank},
               {"density", o.density},
               {"n_samples", o.n_samples}};
  mf.seeds = {{"seed", o.seed}};
  const GroundTruthOptions gopts;
  const GroundTruth gt = gen_ground_truth(o.m, o.rank, o.density, o.seed, gopts);
  const Eigen::MatrixXd data = sample_data(gt, o.n_samples, o.seed);
  outputs.json("truth.json", ground_truth_json(gt, gopts));
  outputs.csv("samples.csv", data);
  outputs.csv("plotdata/support_pattern.csv",
              support_pattern(o.m, gt.support0));
  outputs.csv("plotdata/eigvals_L.csv", column(descending_eigenvalues(gt.L0)));
  out << "synth: m = " << o.m << ", rank = " << gt.rank0
      << ", |support| = " << gt.support0.size() << ", N = " << o.n_samples
      << "\n";
  return kSuccess;
}

int cmd_calibrate(const CalibrateOptions& o, Outputs& outputs, RunManifest& mf,
                  std::ostream& out, std::ostream& err) {
  mf.params = {{"alpha", o.alpha}, {"replicates", o.replicates}};
  mf.seeds = {{"seed", o.seed}};
  mf.inputs.push_back(o.samples);
  const CovarianceEstimate ce = sample_covariance(read_csv_table(o.samples));
  const CalibrationReport rep =
      calibrate_delta(ce, o.alpha, o.replicates, o.seed, o.workers);
  outputs.json("calibration.json", calibration_json(rep));
  out << "calibrate: delta_alpha = " << rep.delta_alpha
      << ", delta_max = " << rep.delta_max << "\n";
  if (rep.exceeded_delta_max) {
    err << "error: " << infeasible_message(rep.delta_alpha, rep.delta_max)
        << "\n";
    return kInfeasible;
  }
  return kSuccess;
}

int decompose_classic(const DecomposeOptions& o, const SymMatrix& sigma,
                      Outputs& outputs, RunManifest& mf, std::ostream& out,
                      std::ostream& err) {
  ClassicSpec spec;
  spec.lambda_reg = o.lambda_reg;
  spec.gamma = o.gamma.value_or(ExperimentDefaults::classic_gamma);
  spec.rho = o.rho;
  spec.max_iters = o.admm_max_iters;
  spec.tol_primal = o.admm_tol;
  spec.tol_dual = o.admm_tol;
  mf.params["gamma"] = spec.gamma;
  mf.params["lambda"] = spec.lambda_reg;
  mf.params["rho"] = spec.rho;
  mf.params["admm_max_iters"] = spec.max_iters;
  mf.params["admm_tol"] = spec.tol_primal;

  const ClassicResult res = solve_classic(sigma, spec);
  const Decomposition& d = res.decomposition;
  outputs.json("decomposition.json", classic_decomposition_json(res, spec));
  outputs.text("trace.jsonl", admm_trace_text(res));
  outputs.csv("plotdata/support_pattern.csv", support_pattern(d.X.dim(), d.support));
  outputs.csv("plotdata/eigvals_L.csv", column(descending_eigenvalues(d.L)));
  out << "decompose (classic): rank_L = " << d.rank_L
      << ", |support| = " << d.support.size()
      << ", iterations = " << res.iterations << "\n";
  if (!res.converged) {
    err << "error: ADMM did not converge within " << spec.max_iters
        << " iterations; outputs are flagged\n";
    return kNotConverged;
  }
  return kSuccess;
}

int decompose_robust(const DecomposeOptions& o, const CovarianceEstimate& ce,
                     Outputs& outputs, RunManifest& mf, std::ostream& out,
                     std::ostream& err) {
  const double gamma = o.gamma.value_or(ExperimentDefaults::robust_gamma);
  mf.params["gamma"] = gamma;
  mf.params["grad_tol"] = o.grad_tol;
  mf.params["max_iters"] = o.max_iters;
  mf.params["support_tol"] = o.support_tol;
  mf.params["kernel_tol"] = o.kernel_tol;

  double delta = 0.0;
  if (o.delta) {
    delta = *o.delta;
    mf.params["delta"] = delta;
  } else {
    mf.params["alpha"] = *o.alpha;
    mf.params["replicates"] = o.replicates;
    mf.seeds = {{"seed", o.seed}};
    const CalibrationReport rep =
        calibrate_delta(ce, *o.alpha, o.replicates, o.seed, o.workers);
    outputs.json("calibration.json", calibration_json(rep));
    delta = rep.delta_alpha;
  }
  const double dmax = delta_max(ce.sigma_hat());
  if (!(delta < dmax)) throw InfeasibleSpec(infeasible_message(delta, dmax));
  const ProblemSpec spec(gamma, delta, ce);

  SolverConfig cfg;
  cfg.grad_tol = o.grad_tol;
  cfg.max_iters = o.max_iters;
  RecoveryConfig rcfg;
  rcfg.support_rel_tol = o.support_tol;
  rcfg.kernel_rel_tol = o.kernel_tol;

  const DualSolution sol = solve_dual(ce, spec, cfg);
  const Recovery rec = recover(sol.point, ce, spec, rcfg);
  const Decomposition& d = rec.decomposition;
  Json j = robust_decomposition_json(rec, spec, sol.point.lambda);
  j["solver"] = solver_json(sol.trace);
  outputs.json("decomposition.json", j);
  outputs.text("trace.jsonl", trace_text(sol.trace));
  outputs.csv("plotdata/support_pattern.csv", support_pattern(d.X.dim(), d.support));
  outputs.csv("plotdata/eigvals_L.csv", column(descending_eigenvalues(d.L)));
  out << "decompose (robust): delta = " << delta << ", rank_L = " << d.rank_L
      << ", |support| = " << d.support.size()
      << ", lambda* = " << sol.point.lambda << "\n";
  warn_if_residual(rec, err);
  if (!sol.trace.converged()) {
    err << "error: dual solver stopped with " << to_string(sol.trace.reason)
        << "; outputs are flagged\n";
    return kNotConverged;
  }
  return kSuccess;
}

int cmd_decompose(const DecomposeOptions& o, Outputs& outputs, RunManifest& mf,
                  std::ostream& out, std::ostream& err) {
  const bool robust = o.mode == "robust";
  mf.params = {{"mode", o.mode}};
  if (!robust && (o.delta || o.alpha)) {
    throw Error("--delta and --alpha apply to --mode robust only");
  }
  if (robust && !o.delta && !o.alpha) {
    throw Error("--mode robust needs --delta or --alpha");
  }

  std::optional<CovarianceEstimate> ce;
  SymMatrix sigma;
  if (!o.samples.empty()) {
    mf.inputs.push_back(o.samples);
    ce = sample_covariance(read_csv_table(o.samples));
    sigma = ce->sigma_hat();
  } else {
    mf.inputs.push_back(o.cov);
    sigma = read_sym_csv(o.cov);
    if (robust) {
      if (o.n_samples < 2) throw Error("--cov in robust mode needs --n-samples");
      ce.emplace(sigma, o.n_samples);
    }
  }
  if (ce) mf.params["n_samples"] = ce->n_samples();

  if (robust) return decompose_robust(o, *ce, outputs, mf, out, err);
  return decompose_classic(o, sigma, outputs, mf, out, err);
}

Json metrics_or_null(const std::optional<RecoveryMetrics>& m) {
  return m ? metrics_json(*m) : Json(nullptr);
}

int cmd_compare(const CompareCliOptions& o, Outputs& outputs, RunManifest& mf,
                std::ostream& out, std::ostream& err) {
  mf.params = {{"gamma", o.gamma},
               {"alpha", o.alpha},
               {"replicates", o.replicates},
               {"classic_lambda", o.classic_lambda},
               {"classic_gamma", o.classic_gamma},
               {"grad_tol", o.grad_tol},
               {"max_iters", o.max_iters}};
  mf.seeds = {{"calibration_seed", o.seed}};
  mf.inputs = {o.truth, o.samples};

  const GroundTruth gt = ground_truth_from_json(read_json_file(o.truth));
  const CovarianceEstimate ce = sample_covariance(read_csv_table(o.samples));

  CompareOptions copts;
  copts.classic.lambda_reg = o.classic_lambda;
  copts.classic.gamma = o.classic_gamma;
  copts.robust_gamma = o.gamma;
  copts.alpha = o.alpha;
  copts.replicates = o.replicates;
  copts.calibration_seed = o.seed;
  copts.solver.grad_tol = o.grad_tol;
  copts.solver.max_iters = o.max_iters;
  const CompareResult r = run_compare(gt, ce, copts);

  Json j;
  j["m"] = gt.S0.dim();
  j["rank0"] = gt.rank0;
  j["truth_seed"] = gt.seed;
  j["n_samples"] = ce.n_samples();
  j["classic_true"] = {
      {"decomposition", classic_decomposition_json(r.classic_true, copts.classic)},
      {"metrics", metrics_json(r.classic_true_metrics)}};
  j["classic_hat"] = {
      {"decomposition", classic_decomposition_json(r.classic_hat, copts.classic)},
      {"metrics", metrics_json(r.classic_hat_metrics)}};
  j["calibration"] = calibration_json(r.calibration);
  if (r.robust) {
    Json rob = robust_decomposition_json(
        *r.robust, ProblemSpec(o.gamma, r.calibration.delta_alpha),
        r.dual->point.lambda);
    rob["solver"] = solver_json(r.dual->trace);
    j["robust"] = {{"decomposition", rob},
                   {"metrics", metrics_or_null(r.robust_metrics)}};
  } else {
    j["robust"] = nullptr;
  }
  outputs.json("compare.json", j);

  const Eigen::Index m = gt.S0.dim();
  outputs.csv("plotdata/support_true.csv", support_pattern(m, gt.support0));
  outputs.csv("plotdata/support_classic_true.csv",
              support_pattern(m, r.classic_true.decomposition.support));
  outputs.csv("plotdata/support_classic_hat.csv",
              support_pattern(m, r.classic_hat.decomposition.support));
  Eigen::MatrixXd eig(m, 4);
  eig.col(0) = descending_eigenvalues(gt.L0);
  eig.col(1) = descending_eigenvalues(r.classic_true.decomposition.L);
  eig.col(2) = descending_eigenvalues(r.classic_hat.decomposition.L);
  eig.col(3).setConstant(std::numeric_limits<double>::quiet_NaN());
  if (r.robust) {
    outputs.csv("plotdata/support_robust.csv",
                support_pattern(m, r.robust->decomposition.support));
    eig.col(3) = descending_eigenvalues(r.robust->decomposition.L);
  }
  outputs.csv("plotdata/eigvals_L.csv", eig);

  auto line = [&](const char* name, const RecoveryMetrics& mt) {
    out << "  " << name << ": F1 = " << mt.support_f1
        << ", false_pos = " << mt.false_pos << ", rank_err = " << mt.rank_err
        << "\n";
  };
  out << "compare: calibrated delta = "
      << r.calibration.delta_alpha << "\n";
  line("classic on true sigma", r.classic_true_metrics);
  line("classic on sample sigma", r.classic_hat_metrics);
  if (r.robust_metrics) line("robust on sample sigma", *r.robust_metrics);

  if (r.calibration.exceeded_delta_max) {
    err << "error: "
        << infeasible_message(r.calibration.delta_alpha, r.calibration.delta_max)
        << "; robust fit skipped\n";
    return kInfeasible;
  }
  warn_if_residual(*r.robust, err);
  if (!r.dual->trace.converged()) {
    err << "error: dual solver stopped with " << to_string(r.dual->trace.reason)
        << "; outputs are flagged\n";
    return kNotConverged;
  }
  return kSuccess;
}

/// Replaces the value of --out in a recorded argument vector.
std::vector<std::string> redirect_out(std::vector<std::string> argv,
                                      const std::string& dir) {
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--out" && i + 1 < argv.size()) {
      argv[i + 1] = dir;
      return argv;
    }
    if (argv[i].rfind("--out=", 0) == 0) {
      argv[i] = "--out=" + dir;
      return argv;
    }
  }
  throw ParseError("manifest argv has no --out");
}

int map_error(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const InfeasibleSpec*>(&e) != nullptr) return kInfeasible;
  return kInputError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Robust sparse plus low-rank decomposition of Gaussian "
               "graphical models",
               "lvgm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  std::string out_dir;

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate a ground truth and samples");
  synth->add_option("--m", so.m, "Dimension")->capture_default_str()->check(CLI::Range(2, 100000));
  synth->add_option("--rank", so.rank, "Rank of L0")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--density", so.density, "Off-diagonal density of S0")->capture_default_str();
  synth->add_option("--n-samples", so.n_samples, "Number of samples")->capture_default_str()->check(CLI::Range(std::int64_t{2}, std::numeric_limits<std::int64_t>::max()));
  synth->add_option("--seed", so.seed, "Seed")->capture_default_str();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CalibrateOptions co;
  auto* cal = app.add_subcommand("calibrate", "Monte Carlo calibration of delta");
  cal->add_option("--samples", co.samples, "N x m data CSV")->required();
  cal->add_option("--alpha", co.alpha, "Quantile level")->capture_default_str();
  cal->add_option("--replicates", co.replicates, "Monte Carlo replicates")->capture_default_str();
  cal->add_option("--seed", co.seed, "Seed")->capture_default_str();
  cal->add_option("--workers", co.workers, "Threads (0 = hardware)")->capture_default_str();
  cal->add_option("--out", out_dir, "Output directory")->required();

  DecomposeOptions dop;
  auto* dec = app.add_subcommand("decompose", "Fit S - L to a covariance");
  auto* dsamples = dec->add_option("--samples", dop.samples, "N x m data CSV");
  auto* dcov = dec->add_option("--cov", dop.cov, "m x m covariance CSV");
  dsamples->excludes(dcov);
  dec->add_option("--n-samples", dop.n_samples, "Sample size behind --cov")->needs(dcov);
  dec->add_option("--mode", dop.mode, "robust or classic")->capture_default_str()->check(CLI::IsMember({"robust", "classic"}));
  dec->add_option("--gamma", dop.gamma, "Sparsity weight gamma");
  auto* ddelta = dec->add_option("--delta", dop.delta, "KL tolerance delta");
  auto* dalpha = dec->add_option("--alpha", dop.alpha, "Calibrate delta at this level");
  ddelta->excludes(dalpha);
  dec->add_option("--replicates", dop.replicates, "Calibration replicates")->capture_default_str();
  dec->add_option("--seed", dop.seed, "Calibration seed")->capture_default_str();
  dec->add_option("--workers", dop.workers, "Calibration threads")->capture_default_str();
  dec->add_option("--grad-tol", dop.grad_tol, "Projected-gradient tolerance")->capture_default_str();
  dec->add_option("--max-iters", dop.max_iters, "Dual solver iteration cap")->capture_default_str();
  dec->add_option("--support-tol", dop.support_tol, "Support detection tolerance")->capture_default_str();
  dec->add_option("--kernel-tol", dop.kernel_tol, "Kernel detection tolerance")->capture_default_str();
  dec->add_option("--lambda", dop.lambda_reg, "Classic penalty weight")->capture_default_str();
  dec->add_option("--rho", dop.rho, "ADMM penalty")->capture_default_str();
  dec->add_option("--admm-max-iters", dop.admm_max_iters, "ADMM iteration cap")->capture_default_str();
  dec->add_option("--admm-tol", dop.admm_tol, "ADMM residual tolerance")->capture_default_str();
  dec->add_option("--out", out_dir, "Output directory")->required();

  CompareCliOptions cmp;
  auto* com = app.add_subcommand("compare", "Classic versus robust on a known truth");
  com->add_option("--truth", cmp.truth, "truth.json from synth")->required();
  com->add_option("--samples", cmp.samples, "samples.csv from synth")->required();
  com->add_option("--gamma", cmp.gamma, "Robust gamma")->capture_default_str();
  com->add_option("--alpha", cmp.alpha, "Calibration level")->capture_default_str();
  com->add_option("--replicates", cmp.replicates, "Calibration replicates")->capture_default_str();
  com->add_option("--seed", cmp.seed, "Calibration seed")->capture_default_str();
  com->add_option("--classic-lambda", cmp.classic_lambda, "Classic lambda")->capture_default_str();
  com->add_option("--classic-gamma", cmp.classic_gamma, "Classic gamma")->capture_default_str();
  com->add_option("--grad-tol", cmp.grad_tol, "Projected-gradient tolerance")->capture_default_str();
  com->add_option("--max-iters", cmp.max_iters, "Dual solver iteration cap")->capture_default_str();
  com->add_option("--out", out_dir, "Output directory")->required();

  std::string manifest_path;
  auto* rep = app.add_subcommand("replay", "Rerun a command from its manifest");
  rep->add_option("manifest", manifest_path, "run_manifest.json")->required();
  rep->add_option("--out", out_dir, "Output directory for the rerun")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kInputError;
  }

  if (rep->parsed()) {
    try {
      const RunManifest mf = RunManifest::from_json(read_json_file(manifest_path));
      return run(redirect_out(mf.argv, out_dir), out, err);
    } catch (const std::exception& e) {
      return map_error(e, err);
    }
  }

  RunManifest mf;
  mf.argv = args;
  const auto start = std::chrono::steady_clock::now();
  int code = kSuccess;
  try {
    fs::create_directories(out_dir);
    Outputs outputs(out_dir, mf);
    if (synth->parsed()) {
      mf.command = "synth";
      code = cmd_synth(so, outputs, mf, out);
    } else if (cal->parsed()) {
      mf.command = "calibrate";
      code = cmd_calibrate(co, outputs, mf, out, err);
    } else if (dec->parsed()) {
      mf.command = "decompose";
      code = cmd_decompose(dop, outputs, mf, out, err);
    } else {
      mf.command = "compare";
      code = cmd_compare(cmp, outputs, mf, out, err);
    }
  } catch (const std::exception& e) {
    code = map_error(e, err);
  }
  mf.exit_code = code;
  mf.wall_time_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  try {
    if (fs::is_directory(out_dir)) {
      write_json_atomic(fs::path(out_dir) / "run_manifest.json", mf.to_json());
    }
  } catch (const std::exception& e) {
    err << "error: cannot write run manifest: " << e.what() << "\n";
    if (code == kSuccess) code = kInputError;
  }
  return code;
}

}  // namespace lvgm::cli
