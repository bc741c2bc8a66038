#pragma once

#include "pluc/frankwolfe.hpp"

namespace pluc {

// Score functions visited so far; the fluctuation targets the Lagrangian's
// value at each of them simultaneously.
struct LandmarkSet {
  std::vector<ScoreFunction> landmarks;
  double lambda = 0.0;
  double beta = 0.0;

  int count() const { return static_cast<int>(landmarks.size()); }
};

// Logit-scale perturbation of the initial mu/nu along one clever-covariate
// direction per landmark; e is never fluctuated.
struct FluctuatedNuisance {
  NuisanceModel base;
  Vec eps_mu;
  Vec eps_nu;
  LandmarkSet landmarks;

  double mu(int a, const Vec& x) const;
  double nu(int a, const Vec& x) const;
  // Wraps the fluctuated evaluators (and the base propensity) as a model.
  NuisanceModel as_model() const;
};

double fluctuated_mu(const FluctuatedNuisance& f, int a, const Vec& x);
double fluctuated_nu(const FluctuatedNuisance& f, int a, const Vec& x);

// Jointly fits eps_mu and eps_nu by minimizing the two fold cross-entropy
// criteria (damped Newton with analytic gradient/Hessian, gradient-descent
// fallback). Stationarity of every partial derivative at the optimum is what
// makes the landmark score equations vanish. Throws after max_iter with the
// final gradient norm if the inf-norm stays above tol.
FluctuatedNuisance fit_fluctuation(const NuisanceModel& base, const LandmarkSet& landmarks,
                                   const Dataset& data, const std::vector<int>& fold,
                                   double tol = 1e-11, int max_iter = 200,
                                   Vec warm_eps_mu = Vec(), Vec warm_eps_nu = Vec());

struct AlternatingDiagnostics {
  int k = 0;             // iteration (1-based; row per correction+minimization)
  Vec eps_mu, eps_nu;    // fitted fluctuation parameters at this iteration
  double stop_stat = 0.0;    // raw sum over the fold of [psi^k - psi^{k-1}]^2
  double lagrangian = 0.0;   // corrected criterion at the new minimizer
  double bias_check = 0.0;   // max over landmarks of |mean D| after correction
};

struct AlternatingResult {
  ScoreFunction psi;
  int iterations = 0;
  FluctuatedNuisance fluct;
  std::vector<AlternatingDiagnostics> diagnostics;
};

// Alternating correction/minimization procedure. Starts from the naive
// empirical Lagrangian built from `init` on the fold's covariates, then loops
// {fit fluctuation against all landmarks; re-minimize by Frank-Wolfe} while
// the raw squared change of the minimizer on the fold exceeds gamma_tol and
// fewer than K iterations have run.
AlternatingResult alternating_procedure(const NuisanceModel& init, double lambda, double beta,
                                        double alpha, const Dataset& data,
                                        const std::vector<int>& fold_fit,
                                        const std::vector<int>& fold_eval,
                                        const FWConfig& fw_cfg, double gamma_tol = 0.025,
                                        int max_corrections = 5);

std::string alternating_diagnostics_csv(const std::vector<AlternatingDiagnostics>& rows,
                                        int max_corrections);

}  // namespace pluc
