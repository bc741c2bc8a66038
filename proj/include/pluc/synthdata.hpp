#pragma once

#include "pluc/core.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pluc {

enum class ScenarioKind { Linear, Threshold, SmallAdverse, Realistic };

enum class PropensityVariant { X2, X5 };

ScenarioKind scenario_kind_from_string(const std::string& s);
std::string to_string(ScenarioKind k);

// Synthetic data-generating mechanism with full counterfactual access. The
// analytic conditional means below are the single source of truth shared by
// the generator, the oracle nuisances and the Monte Carlo oracle metrics.
struct Scenario {
  ScenarioKind kind = ScenarioKind::Linear;
  bool with_baseline = false;
  PropensityVariant propensity = PropensityVariant::X2;

  int dim() const { return kind == ScenarioKind::Realistic ? 5 : 10; }

  // Treatment effect f(a,x) on the latent outcome scale.
  double treatment_effect(int a, const Vec& x) const;
  // Conditional mean outcome with the per-row noise integrated out.
  double mean_outcome(int a, const Vec& x) const;
  // Adverse-event conditional means; nu0(1,x) = nu0(0,x) + (1-nu0(0,x)) p(x).
  double nu0(int a, const Vec& x) const;
  // Probability that a treated, otherwise-safe subject flips to the event.
  double adverse_jump(const Vec& x) const;
  double propensity_score(const Vec& x) const;

  double delta_mu(const Vec& x) const { return mean_outcome(1, x) - mean_outcome(0, x); }
  double delta_nu(const Vec& x) const { return nu0(1, x) - nu0(0, x); }
};

Scenario parse_scenario(const std::string& kind, bool with_baseline = false,
                        const std::string& propensity = "x2");

struct CounterfactualRow {
  Vec x;
  double y0 = 0.0, y1 = 0.0;
  int xi0 = 0, xi1 = 0;
  int a = 0;
  Observation observed;
};

// Draws n i.i.d. rows with potential outcomes for both arms; the observed
// dataset takes the factual arm. The realistic scenario returns raw-range
// values that must go through preprocess_realistic before fitting.
std::pair<Dataset, std::vector<CounterfactualRow>> generate(const Scenario& sc, int n,
                                                            uint64_t seed);

// Fresh covariate draw from the scenario's marginal law.
Vec draw_covariates(const Scenario& sc, Rng& rng);

struct OracleMetrics {
  double value = 0.0;
  double constraint = 0.0;
};

// Monte Carlo estimate of the true policy value and constraint using the
// analytic conditional means (outcome noise integrated out).
OracleMetrics oracle_metrics(const Scenario& sc, const PolicyFn& policy, double alpha,
                             int mc_n = 100000, uint64_t seed = 20240901u);

// Mean of expit(eps) under eps ~ N(0,1), computed once by Gauss-Hermite
// quadrature (equals 1/2 by symmetry).
double mean_expit_std_normal();

struct ColumnTransform {
  double lo = 0.0;
  double hi = 1.0;
};

struct TransformRecord {
  std::vector<ColumnTransform> x_cols;
  ColumnTransform y;

  Vec transform_x(const Vec& raw) const;
  double inverse_y(double scaled) const { return y.lo + scaled * (y.hi - y.lo); }
};

// Min-max scales every covariate column and y into [0,1] using the provided
// sample's statistics; errors on constant columns.
std::pair<Dataset, TransformRecord> preprocess_realistic(const Dataset& raw);

}  // namespace pluc
