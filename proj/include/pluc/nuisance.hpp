#pragma once

#include "pluc/core.hpp"
#include "pluc/synthdata.hpp"

#include <nlohmann/json_fwd.hpp>
#include <optional>

namespace pluc {

inline double clamp01(double p, double lo = 0.01, double hi = 0.99) {
  if (!std::isfinite(p)) throw std::domain_error("clamp01: non-finite probability");
  return std::min(hi, std::max(lo, p));
}

// Evaluators for mu(a,x), nu(a,x) and the propensity e(x) = P(A=1|X=x).
// All outputs are clamped into [clamp_lo, clamp_hi] so logits and inverse
// propensity weights stay bounded.
struct NuisanceModel {
  std::function<double(int, const Vec&)> mu_raw;
  std::function<double(int, const Vec&)> nu_raw;
  std::function<double(const Vec&)> e_raw;  // probability of a = 1
  double clamp_lo = 0.01;
  double clamp_hi = 0.99;

  double mu(int a, const Vec& x) const { return clamp01(mu_raw(a, x), clamp_lo, clamp_hi); }
  double nu(int a, const Vec& x) const { return clamp01(nu_raw(a, x), clamp_lo, clamp_hi); }
  double e1(const Vec& x) const { return clamp01(e_raw(x), clamp_lo, clamp_hi); }
  double e(int a, const Vec& x) const {
    const double p = e1(x);
    return a == 1 ? p : 1.0 - p;
  }
  double delta_mu(const Vec& x) const { return mu(1, x) - mu(0, x); }
  double delta_nu(const Vec& x) const { return nu(1, x) - nu(0, x); }
};

struct GlmFit {
  Vec coefficients;
  double intercept = 0.0;
  bool converged = false;
  int iterations = 0;
  double loss = 0.0;
};

// Quasi-binomial regression: minimizes the mean cross-entropy
// -[y log p + (1-y) log(1-p)] with p = expit(intercept + beta'x) by damped
// Newton, falling back to gradient steps when the Hessian solve fails.
// Labels may be continuous in [0,1].
GlmFit fit_logistic(const Mat& features, const Vec& labels, int max_iter = 100,
                    double tol = 1e-8);

double glm_predict(const GlmFit& fit, const Vec& features);

nlohmann::json glm_to_json(const GlmFit& fit);
GlmFit glm_from_json(const nlohmann::json& j);

struct NuisanceSpec {
  enum class Kind { Glm, Oracle } kind = Kind::Glm;
  std::optional<Scenario> scenario;  // required for Kind::Oracle

  static NuisanceSpec glm() { return NuisanceSpec{}; }
  static NuisanceSpec oracle(const Scenario& sc) {
    NuisanceSpec s;
    s.kind = Kind::Oracle;
    s.scenario = sc;
    return s;
  }
};

// Fits the three nuisance regressions on the given fold (mu and nu on
// [x, a, a*x] features, e on x), or returns the scenario's true functions in
// oracle mode.
NuisanceModel estimate_nuisances(const Dataset& data, const std::vector<int>& fold,
                                 const NuisanceSpec& spec);

NuisanceModel oracle_nuisances(const Scenario& sc);

}  // namespace pluc
