#pragma once

#include "pluc/core.hpp"
#include "pluc/nuisance.hpp"
#include "pluc/policy.hpp"

namespace pluc {

// Empirical measure over covariate points together with the CATE evaluators
// it is paired with. delta_nu values are projected onto [0,1] so the model
// assumption Delta nu >= 0 holds for whatever estimator is plugged in.
struct CriterionContext {
  Mat x;        // support points, one per row
  Vec dmu;      // delta_mu at the support
  Vec dnu;      // delta_nu at the support (nonnegative)
  double alpha = 0.1;
  ScalarField delta_mu;
  ScalarField delta_nu;

  int points() const { return static_cast<int>(x.rows()); }

  static CriterionContext make(Mat support, ScalarField delta_mu, ScalarField delta_nu,
                               double alpha);
};

// Risk R(psi) = E[psi(X)^2 - 2 psi(X) delta_mu(X)], the 1-strongly convex
// criterion whose minimizer over the hull is the projection of delta_mu.
double risk(const CriterionContext& ctx, const ScoreFunction& psi);
double risk_at(const CriterionContext& ctx, const Vec& psi_vals);

// Constraint S(pi) = E[pi(X) delta_nu(X)] - alpha.
double constraint(const CriterionContext& ctx, const SmoothPolicy& p);
double constraint_at(const CriterionContext& ctx, double beta, const Vec& psi_vals);

// Policy value E[pi mu(1,X) + (1-pi) mu(0,X)] over the given support.
double value(const Mat& support, const ScalarField& mu1, const ScalarField& mu0,
             const PolicyFn& policy);

struct LagrangianProblem {
  CriterionContext ctx;
  double lambda = 0.0;
  double beta = 0.0;
};

double lagrangian(const LagrangianProblem& prob, const ScoreFunction& psi);
double lagrangian_at(const LagrangianProblem& prob, const Vec& psi_vals);

// Pointwise gradient x -> 2(psi(x) - delta_mu(x)) + lambda sigma'(psi(x)) delta_nu(x).
ScalarField lagrangian_gradient(const LagrangianProblem& prob, const ScoreFunction& psi);
// Same gradient materialized on the context's support.
Vec gradient_at(const LagrangianProblem& prob, const Vec& psi_vals);

// Efficient influence curve of the policy value at one observation.
double eic_value(const NuisanceModel& nuis, const PolicyFn& policy, double v_hat,
                 const Observation& o);

// Efficient influence curve of the constraint at one observation.
double eic_constraint(const NuisanceModel& nuis, const PolicyFn& policy, double alpha,
                      double s_hat, const Observation& o);

// Bias term D of the Lagrangian's influence curve:
// (2A-1)/e(A,X) [ -2 psi(X)(Y - mu(A,X)) + lambda pi(X)(xi - nu(A,X)) ].
double score_D(const NuisanceModel& nuis, const ScoreFunction& psi, double lambda,
               double beta, const Observation& o);

}  // namespace pluc
