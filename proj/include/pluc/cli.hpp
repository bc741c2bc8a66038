#pragma once

#include "pluc/pipeline.hpp"

#include <optional>
#include <string>

namespace pluc::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNeverTreat = 2;

struct SimulateOptions {
  std::string scenario = "linear";
  bool with_baseline = false;
  std::string propensity = "x2";
  int n = 1000;
  uint64_t seed = 0;
  std::string out_dir;
};

struct FitOptions {
  std::string data_path;
  std::string config_path;  // optional key-value config file
  std::string out_dir;
  uint64_t seed = 0;
  bool preprocess = false;      // min-max scale raw covariates/outcome first
  bool add_intercept = false;   // append a constant-1 covariate column
  // flag overrides; unset fields defer to the config file / defaults
  std::optional<std::string> mode;
  std::optional<std::string> scenario;
  bool with_baseline = false;
  std::string propensity = "x2";
  std::optional<std::string> nuisances;  // glm | oracle
  std::optional<double> alpha;
  std::optional<std::vector<double>> lambdas;
  std::optional<std::vector<double>> betas;
  std::optional<int> fw_iterations;
  std::optional<double> fw_precision;
  std::optional<bool> exhaustive_grid;
  std::optional<int> threads;
  std::optional<double> gamma_tol;
  std::optional<int> max_corrections;
};

struct EvaluateOptions {
  std::string policy_path;
  std::optional<std::string> scenario;
  bool with_baseline = false;
  std::string propensity = "x2";
  std::optional<std::string> data_path;
  double alpha = 0.1;
  int mc_n = 100000;
  uint64_t seed = 0;
  std::string out_path;
};

struct SweepOptions {
  std::vector<std::string> scenarios = {"linear"};
  std::vector<std::string> modes = {"naive"};
  int n = 3000;
  int replicates = 5;
  uint64_t seed = 0;
  double alpha = 0.1;
  int threads = 1;
  int mc_n = 100000;
  std::string config_path;
  std::string out_path;
};

struct CertifyOptions {
  int iterations = 40;
  double lambda = 2.0;
  double beta = 0.25;
  double alpha = 0.1;
  std::string out_dir;
};

int cmd_simulate(const SimulateOptions& opt);
int cmd_fit(const FitOptions& opt);
int cmd_evaluate(const EvaluateOptions& opt);
int cmd_sweep(const SweepOptions& opt);
int cmd_certify(const CertifyOptions& opt);

// Flat sectioned key-value config; unknown sections or keys are rejected with
// the offending line number. Flags always win over file values.
struct RunConfig {
  GridConfig grid;
  std::string nuisances = "glm";
  bool add_intercept = false;
};

RunConfig parse_config_file(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value, int line_no);

// The 50-point toy problem driven by `certify`.
LagrangianProblem certify_toy_problem(double lambda, double beta, double alpha);
std::vector<Atom> certify_toy_candidates();

}  // namespace pluc::cli
