#include "pluc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <random>

namespace {

uint64_t resolve_seed(CLI::Option* opt, uint64_t value) {
  if (opt->count() > 0) return value;
  std::random_device rd;
  const uint64_t drawn = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed not given; drew " << drawn << " (recorded in output manifests)\n";
  return drawn;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PLUC: policy learning under an adverse-event constraint"};
  app.require_subcommand(1);

  using namespace pluc::cli;

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic scenario dataset");
  sim_cmd->add_option("--scenario", sim.scenario, "linear|threshold|small|realistic")
      ->required();
  sim_cmd->add_option("--n", sim.n, "number of observations")->required();
  auto* sim_seed = sim_cmd->add_option("--seed", sim.seed, "rng seed");
  sim_cmd->add_flag("--with-baseline", sim.with_baseline,
                    "add the covariate-dependent baseline outcome component");
  sim_cmd->add_option("--propensity", sim.propensity, "x2|x5 (controlled scenarios)");
  sim_cmd->add_option("--out", sim.out_dir, "output directory")->required();

  FitOptions fit;
  std::string fit_mode, fit_scenario, fit_nuisances;
  std::vector<double> fit_lambdas, fit_betas;
  double fit_alpha = 0.1, fit_precision = 0.025, fit_gamma = 0.025;
  int fit_iters = 40, fit_threads = 1, fit_K = 5;
  bool fit_exhaustive = false;
  auto* fit_cmd = app.add_subcommand("fit", "run the full learning pipeline on a dataset");
  fit_cmd->add_option("--data", fit.data_path, "dataset csv")->required();
  fit_cmd->add_option("--config", fit.config_path, "key-value config file");
  fit_cmd->add_option("--out", fit.out_dir, "output directory")->required();
  auto* fit_seed = fit_cmd->add_option("--seed", fit.seed, "rng seed");
  auto* fit_mode_opt = fit_cmd->add_option("--mode", fit_mode, "naive|pluc|oracle");
  auto* fit_scen_opt = fit_cmd->add_option("--scenario", fit_scenario,
                                           "scenario (oracle mode / oracle nuisances)");
  fit_cmd->add_flag("--with-baseline", fit.with_baseline, "scenario baseline variant");
  fit_cmd->add_option("--propensity", fit.propensity, "x2|x5 scenario propensity");
  auto* fit_nuis_opt = fit_cmd->add_option("--nuisances", fit_nuisances, "glm|oracle");
  auto* fit_alpha_opt = fit_cmd->add_option("--alpha", fit_alpha, "constraint budget");
  auto* fit_lam_opt = fit_cmd->add_option("--lambdas", fit_lambdas, "lambda grid");
  auto* fit_beta_opt = fit_cmd->add_option("--betas", fit_betas, "beta grid");
  auto* fit_it_opt = fit_cmd->add_option("--fw-iterations", fit_iters, "Frank-Wolfe steps");
  auto* fit_prec_opt =
      fit_cmd->add_option("--fw-precision", fit_precision, "sets iterations = ceil(1/prec)");
  auto* fit_exh_opt = fit_cmd->add_flag("--exhaustive-grid", fit_exhaustive,
                                        "assess every lambda (no early break)");
  auto* fit_thr_opt = fit_cmd->add_option("--threads", fit_threads, "worker cap");
  auto* fit_gam_opt = fit_cmd->add_option("--gamma-tol", fit_gamma, "alternating stop");
  auto* fit_K_opt = fit_cmd->add_option("--max-corrections", fit_K, "alternating cap K");
  fit_cmd->add_flag("--preprocess", fit.preprocess, "min-max scale raw columns into [0,1]");
  fit_cmd->add_flag("--intercept", fit.add_intercept, "append a constant-1 covariate");

  EvaluateOptions ev;
  std::string ev_scenario, ev_data;
  auto* ev_cmd = app.add_subcommand("evaluate", "evaluate a saved policy");
  ev_cmd->add_option("--policy", ev.policy_path, "policy json")->required();
  auto* ev_scen_opt = ev_cmd->add_option("--scenario", ev_scenario, "oracle metrics target");
  ev_cmd->add_flag("--with-baseline", ev.with_baseline, "scenario baseline variant");
  ev_cmd->add_option("--propensity", ev.propensity, "x2|x5 scenario propensity");
  auto* ev_data_opt = ev_cmd->add_option("--data", ev_data, "dataset for targeted assessment");
  ev_cmd->add_option("--alpha", ev.alpha, "constraint budget");
  ev_cmd->add_option("--mc-n", ev.mc_n, "Monte Carlo draws for oracle metrics");
  auto* ev_seed = ev_cmd->add_option("--seed", ev.seed, "rng seed");
  ev_cmd->add_option("--out", ev.out_path, "output file")->required();

  SweepOptions sw;
  auto* sw_cmd = app.add_subcommand("sweep", "replicate sweep over scenarios and modes");
  sw_cmd->add_option("--scenarios", sw.scenarios, "scenario list");
  sw_cmd->add_option("--modes", sw.modes, "mode list (naive|pluc|oracle)");
  sw_cmd->add_option("--n", sw.n, "observations per replicate");
  sw_cmd->add_option("--replicates", sw.replicates, "replicates per cell");
  auto* sw_seed = sw_cmd->add_option("--seed", sw.seed, "rng seed");
  sw_cmd->add_option("--alpha", sw.alpha, "constraint budget");
  sw_cmd->add_option("--threads", sw.threads, "worker cap");
  sw_cmd->add_option("--mc-n", sw.mc_n, "Monte Carlo draws for oracle metrics");
  sw_cmd->add_option("--config", sw.config_path, "key-value config file");
  sw_cmd->add_option("--out", sw.out_path, "output csv")->required();

  CertifyOptions ce;
  auto* ce_cmd = app.add_subcommand("certify", "Frank-Wolfe convergence certificate harness");
  ce_cmd->add_option("--iterations", ce.iterations, "Frank-Wolfe steps");
  ce_cmd->add_option("--lambda", ce.lambda, "toy Lagrange multiplier");
  ce_cmd->add_option("--beta", ce.beta, "toy scaling sharpness");
  ce_cmd->add_option("--alpha", ce.alpha, "toy constraint budget");
  ce_cmd->add_option("--out", ce.out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) {
      sim.seed = resolve_seed(sim_seed, sim.seed);
      return cmd_simulate(sim);
    }
    if (fit_cmd->parsed()) {
      fit.seed = resolve_seed(fit_seed, fit.seed);
      if (fit_mode_opt->count()) fit.mode = fit_mode;
      if (fit_scen_opt->count()) fit.scenario = fit_scenario;
      if (fit_nuis_opt->count()) fit.nuisances = fit_nuisances;
      if (fit_alpha_opt->count()) fit.alpha = fit_alpha;
      if (fit_lam_opt->count()) fit.lambdas = fit_lambdas;
      if (fit_beta_opt->count()) fit.betas = fit_betas;
      if (fit_it_opt->count()) fit.fw_iterations = fit_iters;
      if (fit_prec_opt->count()) fit.fw_precision = fit_precision;
      if (fit_exh_opt->count()) fit.exhaustive_grid = fit_exhaustive;
      if (fit_thr_opt->count()) fit.threads = fit_threads;
      if (fit_gam_opt->count()) fit.gamma_tol = fit_gamma;
      if (fit_K_opt->count()) fit.max_corrections = fit_K;
      return cmd_fit(fit);
    }
    if (ev_cmd->parsed()) {
      ev.seed = resolve_seed(ev_seed, ev.seed);
      if (ev_scen_opt->count()) ev.scenario = ev_scenario;
      if (ev_data_opt->count()) ev.data_path = ev_data;
      return cmd_evaluate(ev);
    }
    if (sw_cmd->parsed()) {
      sw.seed = resolve_seed(sw_seed, sw.seed);
      return cmd_sweep(sw);
    }
    if (ce_cmd->parsed()) {
      return cmd_certify(ce);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return pluc::cli::kExitError;
  }
  return pluc::cli::kExitError;
}
