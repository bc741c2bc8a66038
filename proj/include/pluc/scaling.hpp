#pragma once

#include "pluc/common.hpp"

namespace pluc {

// Scaling family sigma_beta mapping score values in [-1,1] to treatment
// probabilities in [0,1]. For beta > 0,
//   sigma_beta(u) = [log(1+e^{beta u}) - log(1+e^{-beta})] / beta,
// which is normalized so that sigma_beta(-1) = 0 and sigma_beta(1) = 1; the
// beta = 0 member is the linear map (1+u)/2 and is the pointwise limit.
// Derivatives: sigma_beta'(t) = expit(beta t),
//              sigma_beta''(t) = beta expit(beta t) (1 - expit(beta t)).

namespace detail {

constexpr double kBetaLinearEps = 1e-8;

inline double checked_score(double u) {
  if (!(u >= -1.0 - 1e-12 && u <= 1.0 + 1e-12)) {
    throw std::domain_error("sigma: score argument outside [-1,1]");
  }
  return std::min(1.0, std::max(-1.0, u));
}

}  // namespace detail

struct ScalingParams {
  double beta = 0.0;
};

inline double sigma(double beta, double u) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::domain_error("sigma: beta must be finite and >= 0");
  }
  u = detail::checked_score(u);
  if (beta < detail::kBetaLinearEps) {
    return 0.5 * (1.0 + u);
  }
  return (softplus(beta * u) - softplus(-beta)) / beta;
}

inline double sigma_prime(double beta, double t) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::domain_error("sigma_prime: beta must be finite and >= 0");
  }
  t = detail::checked_score(t);
  if (beta < detail::kBetaLinearEps) return 0.5;
  return expit(beta * t);
}

inline double sigma_second(double beta, double t) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::domain_error("sigma_second: beta must be finite and >= 0");
  }
  t = detail::checked_score(t);
  if (beta < detail::kBetaLinearEps) return 0.0;
  const double p = expit(beta * t);
  return beta * p * (1.0 - p);
}

// Curvature constant C = 4 [1 + (lambda/2) sigma_beta''(1)] used by the
// Frank-Wolfe convergence certificate.
inline double curvature_constant(double lambda, double beta) {
  return 4.0 * (1.0 + 0.5 * lambda * sigma_second(beta, 1.0));
}

}  // namespace pluc
