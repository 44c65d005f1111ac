// gsm: truncated Gaussian graphical model estimation via generalized
// score matching, plus the simulation harness around it.
#include <cstdio>
#include <iostream>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsm/errors.hpp"
#include "gsm/expfam.hpp"
#include "gsm/experiments.hpp"
#include "gsm/hfunc.hpp"
#include "gsm/io.hpp"
#include "gsm/oracles.hpp"
#include "gsm/tggm.hpp"
#include "gsm/truncated_normal.hpp"
#include "gsm/univariate.hpp"

namespace {

std::string g_partial_out;  // where a partial result can be dropped

double parse_ratio(const std::string& s) {
  if (s == "Inf" || s == "inf" || s == "INF")
    return std::numeric_limits<double>::infinity();
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw gsm::DomainError("--ratio-k-eta: expected a number or \"Inf\", got '" +
                           s + "'");
  }
}

std::vector<gsm::HFunction> resolve_h(const std::vector<std::string>& ids,
                                      int m) {
  if (ids.empty()) throw gsm::DomainError("--h is required");
  std::vector<gsm::HFunction> hs;
  for (const auto& id : ids) hs.push_back(gsm::HFunction::parse(id));
  if (static_cast<int>(hs.size()) == 1)
    return gsm::h_vector(hs.front(), m);
  if (static_cast<int>(hs.size()) != m)
    throw gsm::DomainError("--h: give one weight function or exactly one per "
                           "column (" + std::to_string(m) + ")");
  return hs;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    gsm::atomic_write_file(out_path, content);
}

gsm::TNParams load_params(const std::string& k_arg, int m,
                          const std::vector<double>& mu) {
  gsm::TNParams p;
  if (k_arg == "id") {
    if (m < 1) throw gsm::DomainError("--k id requires --m");
    p = gsm::TNParams::identity(m);
  } else {
    try {
      p = gsm::TNParams::from_json(gsm::read_file(k_arg), k_arg);
    } catch (const gsm::DomainError&) {
      throw;
    } catch (const std::exception& e) {
      throw gsm::DomainError("--k: cannot parse '" + k_arg + "': " + e.what());
    }
  }
  if (!mu.empty()) {
    const Eigen::VectorXd muv =
        Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    p = gsm::TNParams::from_mu(p.K, muv);
  }
  return p;
}

struct FitArgs {
  std::string data_path;
  std::vector<std::string> h_ids;
  bool noncentered = false;
  double diag_multiplier = 1.01;
  std::string ratio = "Inf";
  bool scale = false;
  std::string out;
};

void add_fit_args(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--data", a.data_path, "input sample CSV")->required();
  cmd->add_option("--h", a.h_ids,
                  "weight function id (pow:a, log1p, min_pow:a:c, "
                  "min_log1p:c, mcp:knee, scad:knee, const:c); repeat for "
                  "per-column weights")
      ->required();
  cmd->add_flag("--non-centered,!--centered", a.noncentered,
                "estimate eta jointly (default: centered, mu = 0)");
  cmd->add_option("--diag-multiplier", a.diag_multiplier,
                  "factor applied to the quadratic's diagonal");
  cmd->add_option("--ratio-k-eta", a.ratio,
                  "lambda_eta = lambda / ratio; \"Inf\" leaves eta unpenalized");
  cmd->add_flag("--scale", a.scale,
                "rescale columns to unit root-mean-square before fitting and "
                "map the estimate back");
  cmd->add_option("--out", a.out, "output path (stdout when omitted)");
}

struct Loaded {
  Eigen::MatrixXd data;
  gsm::ColumnScaling scaling;
  gsm::BlockQuadratic q;
};

Loaded load_and_assemble(const FitArgs& a) {
  Loaded L;
  L.data = gsm::read_csv_matrix(a.data_path);
  Eigen::MatrixXd x = L.data;
  if (a.scale) {
    auto [scaled, sc] = gsm::scale_columns(L.data);
    x = std::move(scaled);
    L.scaling = std::move(sc);
  }
  const auto hs = resolve_h(a.h_ids, static_cast<int>(x.cols()));
  L.q = a.noncentered
            ? gsm::assemble_noncentered(x, hs, a.diag_multiplier)
            : gsm::assemble_centered(x, hs, a.diag_multiplier);
  return L;
}

int cmd_sample(const std::string& k_arg, int m, const std::vector<double>& mu,
               long n, std::uint64_t seed, const std::string& method,
               int burn_in, int thinning, const std::string& out) {
  gsm::TNParams p = load_params(k_arg, m, mu);
  gsm::SampleOptions opts;
  opts.method = gsm::parse_sample_method(method);
  opts.burn_in = burn_in;
  opts.thinning = thinning;
  const gsm::SampleResult r = gsm::sample(p, n, seed, opts);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (out.empty())
    std::cout << gsm::matrix_to_csv(r.x);
  else
    gsm::write_csv_matrix(out, r.x);
  return 0;
}

int cmd_fit(const FitArgs& a, double lambda) {
  g_partial_out = a.out;
  const Loaded L = load_and_assemble(a);
  gsm::FitOptions fo;
  fo.ratio_k_eta = parse_ratio(a.ratio);
  gsm::FitResult fit = gsm::fit_regularized(L.q, lambda, fo);
  if (a.scale) fit = gsm::unscale_fit(fit, L.scaling);
  emit(a.out, fit.to_json());
  return 0;
}

gsm::PathResult run_path(const FitArgs& a, const Loaded& L,
                         const std::vector<double>& grid, int lambda_count,
                         bool no_screening, bool no_refit) {
  gsm::PathOptions po;
  po.fit.ratio_k_eta = parse_ratio(a.ratio);
  po.lambda_count = lambda_count;
  po.grid = grid;
  po.screening = !no_screening;
  po.ebic_refit = !no_refit;
  return gsm::solution_path(L.q, po);
}

int cmd_path(const FitArgs& a, const std::vector<double>& grid,
             int lambda_count, bool no_screening, bool no_refit,
             const std::string& json_out) {
  g_partial_out = a.out;
  const Loaded L = load_and_assemble(a);
  const gsm::PathResult pr =
      run_path(a, L, grid, lambda_count, no_screening, no_refit);
  emit(a.out, pr.to_csv());
  if (!json_out.empty()) gsm::atomic_write_file(json_out, pr.to_json());
  return 0;
}

int cmd_select(const FitArgs& a, const std::vector<double>& grid,
               int lambda_count, bool no_screening, bool raw) {
  g_partial_out = a.out;
  const Loaded L = load_and_assemble(a);
  const gsm::PathResult pr =
      run_path(a, L, grid, lambda_count, no_screening, raw);
  const bool use_refit = !raw;
  const int idx = use_refit ? pr.selected_refit : pr.selected_raw;
  gsm::FitResult fit = use_refit ? pr.refits[idx] : pr.fits[idx];
  fit.lambda = pr.lambdas[idx];
  if (a.scale) fit = gsm::unscale_fit(fit, L.scaling);
  nlohmann::ordered_json j;
  j["criterion"] = use_refit ? "ebic_refit" : "ebic_raw";
  j["index"] = idx;
  j["lambda"] = pr.lambdas[idx];
  j["ebic"] = use_refit ? pr.ebic_refit[idx] : pr.ebic_raw[idx];
  j["fit"] = nlohmann::ordered_json::parse(fit.to_json());
  emit(a.out, j.dump(2) + "\n");
  return 0;
}

int cmd_experiment(const gsm::ExperimentConfig& cfg, const std::string& out) {
  cfg.validate();
  if (out.empty()) throw gsm::DomainError("--out directory is required");
  const gsm::ExperimentSummary s = gsm::run_experiment(cfg);
  gsm::write_summary(s, out);
  for (const auto& hs : s.per_h)
    std::cout << hs.h_id << ": mean_auc=" << gsm::format_double(hs.mean_auc)
              << " sd=" << gsm::format_double(hs.sd_auc) << " trials_ok="
              << hs.n_ok << "/" << cfg.trials << "\n";
  long failed = 0;
  for (const auto& hv : s.results)
    for (const auto& tr : hv)
      if (!tr.ok) ++failed;
  if (failed > 0)
    std::cerr << "warning: " << failed
              << " trial runs failed; see manifest.json\n";
  return 0;
}

int cmd_eff_curves(const std::string& target, double known,
                   const std::vector<double>& theta0,
                   const std::vector<std::string>& h_ids,
                   const std::string& out) {
  gsm::UnivariateTask::Target tg;
  if (target == "mu")
    tg = gsm::UnivariateTask::Target::Mu;
  else if (target == "sigma2")
    tg = gsm::UnivariateTask::Target::Sigma2;
  else
    throw gsm::DomainError("--target must be mu or sigma2");
  std::vector<gsm::HFunction> hs;
  for (const auto& id : h_ids) hs.push_back(gsm::HFunction::parse(id));
  const auto pts = gsm::efficiency_curve(tg, known, theta0, hs);
  emit(out, gsm::efficiency_csv(pts));
  return 0;
}

int cmd_validate_h(const std::string& h_id) {
  const gsm::HFunction h = gsm::HFunction::parse(h_id);
  const gsm::ValidationReport r = gsm::validate(h);
  std::cout << r.to_string();
  if (!r.ok()) {
    std::cerr << "error: " << h_id << " fails the weight-function contract\n";
    return 1;
  }
  return 0;
}

int cmd_diagnostics(const std::string& k_path, const std::string& h_id,
                    long mc_n, std::uint64_t seed, const std::string& out) {
  const gsm::TNParams p =
      gsm::TNParams::from_json(gsm::read_file(k_path), k_path);
  const gsm::HFunction h = gsm::HFunction::parse(h_id);
  const Eigen::VectorXd mu0 = p.centered ? Eigen::VectorXd() : p.mu;
  const gsm::TheoryDiagnostics d = gsm::diagnostics(p.K, mu0, h, mc_n, seed);
  emit(out, d.to_json());
  return 0;
}

int cmd_verify_oracles(const gsm::OracleOptions& opts) {
  const auto checks = gsm::run_oracle_suite(opts);
  std::cout << gsm::oracle_report(checks);
  return gsm::all_passed(checks) ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truncated Gaussian graphical models via generalized score "
               "matching"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_flag("--help", "print help and exit");
  app.set_config("--config", "", "read defaults from an INI file");
  auto add_cmd = [&app](const std::string& name, const std::string& desc) {
    CLI::App* c = app.add_subcommand(name, desc);
    c->set_help_flag("--help", "print help and exit");
    c->option_defaults()->always_capture_default();
    return c;
  };

  // sample
  auto* sample = add_cmd("sample", "draw from a truncated normal");
  std::string s_k = "id";
  int s_m = 0;
  std::vector<double> s_mu;
  long s_n = 100;
  std::uint64_t s_seed = 1;
  std::string s_method = "auto";
  int s_burn = 100, s_thin = 10;
  std::string s_out;
  sample->add_option("--k", s_k, "params JSON path, or \"id\" for identity K");
  sample->add_option("--m", s_m, "dimension (with --k id)");
  sample->add_option("--mu", s_mu, "mean-form parameter, one value per column");
  sample->add_option("--n", s_n, "number of draws");
  sample->add_option("--seed", s_seed, "RNG seed");
  sample->add_option("--method", s_method, "auto | rejection | gibbs");
  sample->add_option("--burn-in", s_burn, "Gibbs burn-in sweeps");
  sample->add_option("--thinning", s_thin, "Gibbs thinning");
  sample->add_option("--out", s_out, "output CSV (stdout when omitted)");

  // fit
  auto* fit = add_cmd("fit", "penalized fit at one lambda");
  FitArgs f_args;
  double f_lambda = 0.1;
  add_fit_args(fit, f_args);
  fit->add_option("--lambda", f_lambda, "l1 penalty level")->required();

  // path
  auto* path = add_cmd("path", "fit a lambda path with eBIC");
  FitArgs p_args;
  std::vector<double> p_grid;
  int p_count = 50;
  bool p_noscreen = false, p_norefit = false;
  std::string p_json;
  add_fit_args(path, p_args);
  path->add_option("--lambda", p_grid,
                   "explicit decreasing lambda grid (repeatable); "
                   "auto grid when omitted");
  path->add_option("--lambda-count", p_count, "auto grid size");
  path->add_flag("--no-screening", p_noscreen, "disable the strong rule");
  path->add_flag("--no-ebic-refit,!--ebic-refit", p_norefit,
                 "skip the refit-based eBIC column");
  path->add_option("--json", p_json, "also write the full path as JSON");

  // select
  auto* sel = add_cmd("select", "eBIC-selected model from a path");
  FitArgs sel_args;
  std::vector<double> sel_grid;
  int sel_count = 50;
  bool sel_noscreen = false, sel_raw = false;
  add_fit_args(sel, sel_args);
  sel->add_option("--lambda", sel_grid, "explicit decreasing lambda grid");
  sel->add_option("--lambda-count", sel_count, "auto grid size");
  sel->add_flag("--no-screening", sel_noscreen, "disable the strong rule");
  sel->add_flag("--raw,!--ebic-refit", sel_raw,
                "select by raw eBIC instead of the refit variant");

  // experiment
  auto* exp = add_cmd("experiment", "graph-recovery simulation");
  gsm::ExperimentConfig cfg;
  std::string e_out;
  std::string e_ratio = "Inf";
  bool e_noncentered = false, e_norefit = false, e_noscreen = false,
       e_noscale = false;
  exp->add_option("--m", cfg.m, "dimension");
  exp->add_option("--n", cfg.n, "sample size per trial");
  exp->add_option("--n-blocks", cfg.n_blocks, "diagonal blocks in K0");
  exp->add_option("--pi", cfg.pi, "within-block zero probability");
  exp->add_option("--edge-lo", cfg.edge_range.first, "edge magnitude lower end");
  exp->add_option("--edge-hi", cfg.edge_range.second, "edge magnitude upper end");
  exp->add_option("--min-eig", cfg.min_eigenvalue, "minimum eigenvalue of K0");
  exp->add_flag("--non-centered,!--centered", e_noncentered,
                "draw mu0 and estimate eta");
  exp->add_option("--mu-sd", cfg.mu_sd, "sd of mu0 coordinates");
  exp->add_option("--h", cfg.h_ids, "weight function ids (repeatable)");
  exp->add_option("--lambda-count", cfg.lambda_count, "path grid size");
  exp->add_option("--trials", cfg.trials, "total trials");
  exp->add_option("--matrices", cfg.matrices, "distinct K0 draws");
  exp->add_option("--seed", cfg.seed, "master seed");
  exp->add_option("--threads", cfg.threads, "worker threads");
  exp->add_option("--ratio-k-eta", e_ratio, "lambda_eta = lambda / ratio");
  exp->add_option("--diag-multiplier", cfg.diag_multiplier,
                  "quadratic diagonal factor");
  exp->add_flag("--no-ebic-refit,!--ebic-refit", e_norefit,
                "pick eBIC points without refitting");
  exp->add_flag("--no-screening", e_noscreen, "disable the strong rule");
  exp->add_flag("--no-scale", e_noscale, "skip column rescaling");
  exp->add_option("--out", e_out, "output directory")->required();

  // eff-curves
  auto* eff = add_cmd("eff-curves",
                                 "univariate asymptotic efficiency table");
  std::string ef_target = "mu";
  double ef_known = 1.0;
  std::vector<double> ef_theta0 = {-2, -1, 0, 1, 2, 3};
  std::vector<std::string> ef_h = {"pow:2", "min_log1p:1", "min_log1p:2"};
  std::string ef_out;
  eff->add_option("--target", ef_target, "mu | sigma2");
  eff->add_option("--known", ef_known,
                  "the known parameter (sigma^2 for mu, mu for sigma2)");
  eff->add_option("--theta0", ef_theta0, "true parameter grid (repeatable)");
  eff->add_option("--h", ef_h, "weight function ids (repeatable)");
  eff->add_option("--out", ef_out, "output CSV (stdout when omitted)");

  // validate-h
  auto* val = add_cmd("validate-h",
                                 "check a weight function's contract");
  std::string v_h;
  val->add_option("--h", v_h, "weight function id")->required();

  // diagnostics
  auto* diag = add_cmd(
      "diagnostics", "support-recovery constants for a known model");
  std::string d_k, d_h = "min_pow:1:3", d_out;
  long d_mcn = 1000000;
  std::uint64_t d_seed = 1;
  diag->add_option("--k", d_k, "params JSON path")->required();
  diag->add_option("--h", d_h, "weight function id");
  diag->add_option("--mc-n", d_mcn, "Monte Carlo sample size");
  diag->add_option("--seed", d_seed, "RNG seed");
  diag->add_option("--out", d_out, "output JSON (stdout when omitted)");

  // verify-oracles (maintenance)
  auto* ver = add_cmd("verify-oracles",
                                 "run the reference-implementation checks");
  ver->group("");  // hidden
  gsm::OracleOptions o_opts;
  ver->add_option("--data", o_opts.data_path, "optional CSV for data checks");
  ver->add_option("--perturb-gamma", o_opts.perturb_gamma,
                  "fault-injection factor");
  ver->add_option("--seed", o_opts.seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sample->parsed())
      return cmd_sample(s_k, s_m, s_mu, s_n, s_seed, s_method, s_burn, s_thin,
                        s_out);
    if (fit->parsed()) return cmd_fit(f_args, f_lambda);
    if (path->parsed())
      return cmd_path(p_args, p_grid, p_count, p_noscreen, p_norefit, p_json);
    if (sel->parsed())
      return cmd_select(sel_args, sel_grid, sel_count, sel_noscreen, sel_raw);
    if (exp->parsed()) {
      cfg.centered = !e_noncentered;
      cfg.ebic_refit = !e_norefit;
      cfg.screening = !e_noscreen;
      cfg.scale = !e_noscale;
      cfg.ratio_k_eta = parse_ratio(e_ratio);
      return cmd_experiment(cfg, e_out);
    }
    if (eff->parsed())
      return cmd_eff_curves(ef_target, ef_known, ef_theta0, ef_h, ef_out);
    if (val->parsed()) return cmd_validate_h(v_h);
    if (diag->parsed())
      return cmd_diagnostics(d_k, d_h, d_mcn, d_seed, d_out);
    if (ver->parsed()) return cmd_verify_oracles(o_opts);
    std::cerr << "error: no command\n";
    return 1;
  } catch (const gsm::ConvergenceError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    if (!g_partial_out.empty()) {
      try {
        gsm::atomic_write_file(g_partial_out + ".partial", e.last.to_json());
        std::cerr << "partial result written to " << g_partial_out
                  << ".partial\n";
      } catch (...) {
      }
    }
    return 2;
  } catch (const gsm::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gsm::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
