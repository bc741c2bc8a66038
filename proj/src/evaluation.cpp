#include "pluc/evaluation.hpp"

#include <cstdio>

namespace pluc {

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie strictly inside (0,1)");
  }
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // one Newton refinement: Phi(x) via erfc, phi(x) the density
  const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return x + (p - cdf) / pdf;
}

namespace {

// Scalar logistic fluctuation: minimizes mean[softplus(off + eps h) - y (off + eps h)].
// The score mean[h (y - expit(off + eps h))] is nonincreasing in eps, so a
// safeguarded Newton with bisection fallback on [-10, 10] finds the root.
double fit_scalar_fluctuation(const Vec& h, const Vec& offset, const Vec& labels) {
  const int m = static_cast<int>(h.size());
  const auto score = [&](double eps) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += h[i] * (labels[i] - expit(offset[i] + eps * h[i]));
    return acc / m;
  };
  const auto slope = [&](double eps) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double p = expit(offset[i] + eps * h[i]);
      acc += h[i] * h[i] * p * (1.0 - p);
    }
    return acc / m;
  };

  if (h.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;  // fluctuation inert

  double lo = -10.0, hi = 10.0;
  double slo = score(lo), shi = score(hi);
  // score decreases; no sign change means the loss is minimized at a boundary
  if (slo <= 0.0) return lo;
  if (shi >= 0.0) return hi;

  double eps = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double s = score(eps);
    if (std::abs(s) < 1e-13) return eps;
    if (s > 0.0) {
      lo = eps;
    } else {
      hi = eps;
    }
    const double d = slope(eps);
    double next = d > 0.0 ? eps + s / d : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(next) || next <= lo || next >= hi) {
      next = 0.5 * (lo + hi);  // bisection fallback
    }
    eps = next;
  }
  return eps;
}

PolicyAssessment assess_with_values(const Vec& pi, const NuisanceModel& nuis,
                                    const Dataset& data, const std::vector<int>& fold,
                                    double alpha) {
  if (fold.empty()) throw std::invalid_argument("assess_policy: empty fold");
  if (!(alpha >= 0.0 && alpha <= 0.5)) {
    throw std::invalid_argument("assess_policy: alpha must lie in [0,1/2]");
  }
  const int m = static_cast<int>(fold.size());

  Vec h_mu(m), h_nu(m), off_mu(m), off_nu(m), ys(m), xis(m);
  Vec logit_mu1(m), logit_mu0(m), logit_nu1(m), logit_nu0(m), lever1(m), lever0(m);
  for (int r = 0; r < m; ++r) {
    const Observation& o = data.obs[fold[r]];
    const double e_a = nuis.e(o.a, o.x);
    if (!(e_a > 0.0 && e_a < 1.0)) {
      throw std::domain_error("assess_policy: positivity violation");
    }
    h_mu[r] = (o.a == 1 ? pi[r] : 1.0 - pi[r]) / e_a;
    h_nu[r] = pi[r] * (2.0 * o.a - 1.0) / e_a;
    off_mu[r] = logit(nuis.mu(o.a, o.x));
    off_nu[r] = logit(nuis.nu(o.a, o.x));
    ys[r] = o.y;
    xis[r] = static_cast<double>(o.xi);
    logit_mu1[r] = logit(nuis.mu(1, o.x));
    logit_mu0[r] = logit(nuis.mu(0, o.x));
    logit_nu1[r] = logit(nuis.nu(1, o.x));
    logit_nu0[r] = logit(nuis.nu(0, o.x));
    const double e1 = nuis.e1(o.x);
    lever1[r] = 1.0 / e1;
    lever0[r] = -1.0 / (1.0 - e1);
  }

  PolicyAssessment out;
  out.eps_mu_star = fit_scalar_fluctuation(h_mu, off_mu, ys);
  out.eps_nu_star = fit_scalar_fluctuation(h_nu, off_nu, xis);

  // fluctuated nuisances at both arms; the clever covariate for arm a is
  // [a pi + (1-a)(1-pi)]/e(a,.) for mu and pi (2a-1)/e(a,.) for nu
  Vec mu1(m), mu0(m), dnu(m), resid_v(m), resid_s(m);
  for (int r = 0; r < m; ++r) {
    mu1[r] = expit(logit_mu1[r] + out.eps_mu_star * pi[r] * lever1[r]);
    mu0[r] = expit(logit_mu0[r] + out.eps_mu_star * (1.0 - pi[r]) * (-lever0[r]));
    const double nu1 = expit(logit_nu1[r] + out.eps_nu_star * pi[r] * lever1[r]);
    const double nu0 = expit(logit_nu0[r] + out.eps_nu_star * pi[r] * lever0[r]);
    dnu[r] = nu1 - nu0;
    const double mu_a = expit(off_mu[r] + out.eps_mu_star * h_mu[r]);
    const double nu_a = expit(off_nu[r] + out.eps_nu_star * h_nu[r]);
    resid_v[r] = h_mu[r] * (ys[r] - mu_a);
    resid_s[r] = h_nu[r] * (xis[r] - nu_a);
  }

  const Vec plug_v = pi.array() * mu1.array() + (1.0 - pi.array()) * mu0.array();
  const Vec plug_s = pi.array() * dnu.array();
  out.v_star = plug_v.mean();
  out.s_star = plug_s.mean() - alpha;

  const Vec z_v = resid_v + plug_v;
  const Vec z_s = resid_s + plug_s;
  out.var_v = (z_v.array() - z_v.mean()).square().mean();
  out.var_s = (z_s.array() - z_s.mean()).square().mean();

  const double q95 = normal_quantile(0.95);
  out.s_upper = out.s_star + q95 * std::sqrt(out.var_s / m);
  out.v_lower = out.v_star - q95 * std::sqrt(out.var_v / m);
  return out;
}

}  // namespace

PolicyAssessment assess_policy(const PolicyFn& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha) {
  Vec pi(fold.size());
  for (size_t r = 0; r < fold.size(); ++r) {
    pi[r] = policy(data.obs[fold[r]].x);
    if (!(pi[r] >= 0.0 && pi[r] <= 1.0)) {
      throw std::invalid_argument("assess_policy: policy value outside [0,1]");
    }
  }
  return assess_with_values(pi, nuis, data, fold, alpha);
}

PolicyAssessment assess_policy(const SmoothPolicy& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha) {
  return assess_policy(as_policy_fn(policy), nuis, data, fold, alpha);
}

PolicyAssessment assess_policy(const ThresholdPolicy& policy, const NuisanceModel& nuis,
                               const Dataset& data, const std::vector<int>& fold,
                               double alpha) {
  return assess_policy(as_policy_fn(policy), nuis, data, fold, alpha);
}

std::string assessment_csv_header() {
  return "lambda,beta,s_star,s_upper,v_star,v_lower,var_s,var_v";
}

std::string assessment_csv_row(double lambda, double beta, const PolicyAssessment& a) {
  char buf[400];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", lambda,
                beta, a.s_star, a.s_upper, a.v_star, a.v_lower, a.var_s, a.var_v);
  return buf;
}

}  // namespace pluc
