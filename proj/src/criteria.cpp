#include "pluc/criteria.hpp"

namespace pluc {

CriterionContext CriterionContext::make(Mat support, ScalarField delta_mu,
                                        ScalarField delta_nu, double alpha) {
  if (support.rows() < 1) throw std::invalid_argument("criterion context: empty support");
  if (!(alpha >= 0.0 && alpha <= 0.5)) {
    throw std::invalid_argument("criterion context: alpha must lie in [0,1/2]");
  }
  CriterionContext ctx;
  ctx.alpha = alpha;
  ctx.dmu = Vec(support.rows());
  ctx.dnu = Vec(support.rows());
  for (int i = 0; i < support.rows(); ++i) {
    const Vec xi = support.row(i).transpose();
    ctx.dmu[i] = delta_mu(xi);
    ctx.dnu[i] = std::min(1.0, std::max(0.0, delta_nu(xi)));
  }
  if (!ctx.dmu.allFinite() || !ctx.dnu.allFinite()) {
    throw std::invalid_argument("criterion context: non-finite CATE values");
  }
  ctx.x = std::move(support);
  ctx.delta_mu = std::move(delta_mu);
  ctx.delta_nu = std::move(delta_nu);
  return ctx;
}

double risk_at(const CriterionContext& ctx, const Vec& psi_vals) {
  return (psi_vals.array().square() - 2.0 * psi_vals.array() * ctx.dmu.array()).mean();
}

double risk(const CriterionContext& ctx, const ScoreFunction& psi) {
  return risk_at(ctx, eval_score_on(psi, ctx.x));
}

double constraint_at(const CriterionContext& ctx, double beta, const Vec& psi_vals) {
  double acc = 0.0;
  for (int i = 0; i < psi_vals.size(); ++i) acc += sigma(beta, psi_vals[i]) * ctx.dnu[i];
  return acc / psi_vals.size() - ctx.alpha;
}

double constraint(const CriterionContext& ctx, const SmoothPolicy& p) {
  return constraint_at(ctx, p.beta, eval_score_on(p.score, ctx.x));
}

double value(const Mat& support, const ScalarField& mu1, const ScalarField& mu0,
             const PolicyFn& policy) {
  if (support.rows() < 1) throw std::invalid_argument("value: empty support");
  double acc = 0.0;
  for (int i = 0; i < support.rows(); ++i) {
    const Vec xi = support.row(i).transpose();
    const double pi = policy(xi);
    acc += pi * mu1(xi) + (1.0 - pi) * mu0(xi);
  }
  return acc / support.rows();
}

double lagrangian_at(const LagrangianProblem& prob, const Vec& psi_vals) {
  return risk_at(prob.ctx, psi_vals) +
         prob.lambda * constraint_at(prob.ctx, prob.beta, psi_vals);
}

double lagrangian(const LagrangianProblem& prob, const ScoreFunction& psi) {
  return lagrangian_at(prob, eval_score_on(psi, prob.ctx.x));
}

ScalarField lagrangian_gradient(const LagrangianProblem& prob, const ScoreFunction& psi) {
  const double lambda = prob.lambda;
  const double beta = prob.beta;
  const ScalarField dmu = prob.ctx.delta_mu;
  const ScalarField dnu = prob.ctx.delta_nu;
  return [psi, lambda, beta, dmu, dnu](const Vec& x) {
    const double s = eval_score(psi, x);
    const double nu_term = std::min(1.0, std::max(0.0, dnu(x)));
    return 2.0 * (s - dmu(x)) + lambda * sigma_prime(beta, s) * nu_term;
  };
}

Vec gradient_at(const LagrangianProblem& prob, const Vec& psi_vals) {
  Vec g(psi_vals.size());
  for (int i = 0; i < psi_vals.size(); ++i) {
    g[i] = 2.0 * (psi_vals[i] - prob.ctx.dmu[i]) +
           prob.lambda * sigma_prime(prob.beta, psi_vals[i]) * prob.ctx.dnu[i];
  }
  return g;
}

namespace {

double checked_inverse_propensity(const NuisanceModel& nuis, const Observation& o) {
  const double e = nuis.e(o.a, o.x);
  if (!(e > 0.0 && e < 1.0)) {
    throw std::domain_error("positivity violation: e(a,x) outside (0,1)");
  }
  return 1.0 / e;
}

}  // namespace

double eic_value(const NuisanceModel& nuis, const PolicyFn& policy, double v_hat,
                 const Observation& o) {
  const double pi = policy(o.x);
  const double inv_e = checked_inverse_propensity(nuis, o);
  const double plug_in = pi * nuis.mu(1, o.x) + (1.0 - pi) * nuis.mu(0, o.x) - v_hat;
  const double w = o.a == 1 ? pi : (1.0 - pi);
  return plug_in + w * inv_e * (o.y - nuis.mu(o.a, o.x));
}

double eic_constraint(const NuisanceModel& nuis, const PolicyFn& policy, double alpha,
                      double s_hat, const Observation& o) {
  const double pi = policy(o.x);
  const double inv_e = checked_inverse_propensity(nuis, o);
  const double sgn = 2.0 * o.a - 1.0;
  return pi * nuis.delta_nu(o.x) - alpha - s_hat +
         sgn * inv_e * pi * (o.xi - nuis.nu(o.a, o.x));
}

double score_D(const NuisanceModel& nuis, const ScoreFunction& psi, double lambda,
               double beta, const Observation& o) {
  const double inv_e = checked_inverse_propensity(nuis, o);
  const double sgn = 2.0 * o.a - 1.0;
  const double s = eval_score(psi, o.x);
  const double pi = sigma(beta, s);
  return sgn * inv_e *
         (-2.0 * s * (o.y - nuis.mu(o.a, o.x)) + lambda * pi * (o.xi - nuis.nu(o.a, o.x)));
}

}  // namespace pluc
