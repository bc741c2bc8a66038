#pragma once

#include "pluc/evaluation.hpp"
#include "pluc/targeting.hpp"

namespace pluc {

enum class FitMode { Naive, Pluc, Oracle };

FitMode fit_mode_from_string(const std::string& s);
std::string to_string(FitMode m);

struct TargetingConfig {
  double gamma_tol = 0.025;
  int max_corrections = 5;  // K
};

struct GridConfig {
  std::vector<double> lambdas = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> betas = {0.0, 0.05, 0.1, 0.25, 0.5};
  double alpha = 0.1;
  FitMode mode = FitMode::Naive;
  FWConfig fw;
  TargetingConfig targeting;
  // Assess every lambda instead of breaking at the first feasible upper bound.
  bool exhaustive_grid = false;
  // Oracle mode: size of the fresh covariate sample standing in for E_{P_0}.
  int oracle_grid_n = 20000;
  std::optional<Scenario> scenario;  // required for oracle mode
  int threads = 1;

  void validate() const;
};

struct CellResult {
  double lambda = 0.0;
  double beta = 0.0;
  bool attempted = false;
  bool ok = false;
  std::string error;
  ScoreFunction psi;
  PolicyAssessment assessment;
  int alternating_iterations = 0;
  std::vector<AlternatingDiagnostics> alternating;
};

struct GridResult {
  std::vector<CellResult> cells;  // row-major over (beta, lambda)
  bool never_treat = true;
  int selected = -1;  // index into cells when a policy was selected
  double lambda_star = 0.0, beta_star = 0.0;
  uint64_t seed = 0;
  FoldSplit folds;

  const CellResult& selected_cell() const;
  // The recommended smooth policy; identically zero under never-treat.
  SmoothPolicy policy() const;
};

// Learns the score function for one (lambda, beta) grid cell.
ScoreFunction learn_cell(double lambda, double beta, FitMode mode, const NuisanceModel& nuis1,
                         const Dataset& data, const FoldSplit& folds, const GridConfig& cfg,
                         uint64_t cell_seed, CellResult* diag = nullptr);

// Full run: nuisance estimation on folds 1 and 3, per-(beta, lambda) policy
// learning with ascending-lambda early stop, fold-3 targeted assessment, and
// best-policy identification (never-treat when no upper bound clears zero).
GridResult run(const Dataset& data, const GridConfig& cfg, const NuisanceSpec& nuisance_spec,
               uint64_t seed);

// Same with externally supplied nuisance models for folds 1 and 3.
GridResult run_with_nuisances(const Dataset& data, const GridConfig& cfg,
                              const NuisanceModel& nuis1, const NuisanceModel& nuis3,
                              uint64_t seed);

struct ThresholdSelection {
  bool never_treat = true;
  double t = 1.0;
  PolicyAssessment assessment;
};

// Feasible threshold (s_upper <= 0) maximizing the value lower bound over the
// grid; never-treat when no threshold is feasible. Ties prefer the smaller t.
ThresholdSelection select_threshold(const SmoothPolicy& policy, const NuisanceModel& nuis3,
                                    const Dataset& data, const std::vector<int>& fold3,
                                    double alpha, const std::vector<double>& t_grid);

std::vector<double> default_threshold_grid();

nlohmann::json grid_result_to_json(const GridResult& res, const GridConfig& cfg);
std::string grid_summary_csv(const GridResult& res);

}  // namespace pluc
