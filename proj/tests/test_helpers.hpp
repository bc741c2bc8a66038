#pragma once

// Test-only oracles and generators, independent of the library paths they
// check: bisection quantiles, finite differences, dense simplex search.

#include "pluc/policy.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace pluc::testing {

// Phi^{-1}(p) by bisection on the erf-based normal CDF.
inline double quantile_bisection(double p) {
  auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double central_diff(const std::function<double(double)>& f, double t, double h) {
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

// Scalar root by bisection; assumes g is monotone nonincreasing on [lo,hi]
// with a sign change.
inline double root_bisection(const std::function<double(double)>& g, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Exhaustive search over the weight simplex at resolution 1/steps (all
// compositions of `steps` among the atoms), refined recursively around the
// best point. Only viable for a handful of atoms.
inline Eigen::VectorXd dense_simplex_search(
    const std::function<double(const Eigen::VectorXd&)>& f, int n_atoms, int steps,
    int refinements) {
  Eigen::VectorXd best = Eigen::VectorXd::Zero(n_atoms);
  best[0] = 1.0;
  double best_val = f(best);

  std::function<void(Eigen::VectorXd&, int, int)> rec = [&](Eigen::VectorXd& units, int pos,
                                                            int left) {
    if (pos == n_atoms - 1) {
      units[pos] = left;
      Eigen::VectorXd w = units / static_cast<double>(steps);
      const double v = f(w);
      if (v < best_val) {
        best_val = v;
        best = w;
      }
      return;
    }
    for (int u = 0; u <= left; ++u) {
      units[pos] = u;
      rec(units, pos + 1, left - u);
    }
  };
  Eigen::VectorXd units = Eigen::VectorXd::Zero(n_atoms);
  rec(units, 0, steps);

  // local refinement: random perturbations projected back onto the simplex
  pluc::Rng rng(1234);
  double radius = 1.0 / steps;
  for (int r = 0; r < refinements; ++r) {
    for (int trial = 0; trial < 4000; ++trial) {
      Eigen::VectorXd w = best;
      for (int k = 0; k < n_atoms; ++k) w[k] += radius * (2.0 * rng.uniform01() - 1.0);
      for (int k = 0; k < n_atoms; ++k) w[k] = std::max(0.0, w[k]);
      const double s = w.sum();
      if (s <= 0.0) continue;
      w /= s;
      const double v = f(w);
      if (v < best_val) {
        best_val = v;
        best = w;
      }
    }
    radius *= 0.25;
  }
  return best;
}

inline pluc::ScoreFunction random_score(pluc::Rng& rng, int d, int max_atoms = 4) {
  pluc::ScoreFunction psi;
  const int k = 1 + static_cast<int>(rng.below(max_atoms));
  psi.weights = Eigen::VectorXd(k);
  for (int a = 0; a < k; ++a) {
    if (rng.uniform01() < 0.25) {
      psi.atoms.push_back(pluc::Atom::constant_minus_one());
    } else {
      Eigen::VectorXd theta(d);
      for (int j = 0; j < d; ++j) theta[j] = 4.0 * (rng.uniform01() - 0.5);
      psi.atoms.push_back(pluc::Atom::logistic(std::move(theta)));
    }
    psi.weights[a] = rng.uniform01() + 1e-3;
  }
  psi.weights /= psi.weights.sum();
  return psi;
}

inline Eigen::MatrixXd random_support(pluc::Rng& rng, int m, int d) {
  Eigen::MatrixXd X(m, d);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform01();
  }
  return X;
}

}  // namespace pluc::testing
