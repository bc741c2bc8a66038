#include "pluc/policy.hpp"

#include <nlohmann/json.hpp>

namespace pluc {

Atom Atom::logistic(Vec th) {
  if (!th.allFinite()) throw std::invalid_argument("logistic atom: theta must be finite");
  Atom a;
  a.minus_one = false;
  a.theta = std::move(th);
  return a;
}

double Atom::eval(const Vec& x) const {
  if (minus_one) return -1.0;
  if (x.size() != theta.size()) {
    throw std::invalid_argument("atom evaluation: covariate dimension mismatch");
  }
  return 2.0 * expit(theta.dot(x)) - 1.0;
}

Vec Atom::eval_on(const Mat& X) const {
  if (minus_one) return Vec::Constant(X.rows(), -1.0);
  if (X.cols() != theta.size()) {
    throw std::invalid_argument("atom evaluation: covariate dimension mismatch");
  }
  Vec z = X * theta;
  return z.unaryExpr([](double v) { return 2.0 * expit(v) - 1.0; });
}

bool Atom::same_as(const Atom& other) const {
  if (minus_one != other.minus_one) return false;
  if (minus_one) return true;
  if (theta.size() != other.theta.size()) return false;
  for (int i = 0; i < theta.size(); ++i) {
    if (theta[i] != other.theta[i]) return false;
  }
  return true;
}

ScoreFunction ScoreFunction::constant_minus_one() {
  ScoreFunction psi;
  psi.atoms.push_back(Atom::constant_minus_one());
  psi.weights = Vec::Ones(1);
  return psi;
}

double eval_score(const ScoreFunction& psi, const Vec& x) {
  if (psi.atoms.empty()) throw std::invalid_argument("empty score function");
  double v = 0.0;
  for (int k = 0; k < psi.size(); ++k) v += psi.weights[k] * psi.atoms[k].eval(x);
  return v;
}

Vec eval_score_on(const ScoreFunction& psi, const Mat& X) {
  if (psi.atoms.empty()) throw std::invalid_argument("empty score function");
  Vec v = Vec::Zero(X.rows());
  for (int k = 0; k < psi.size(); ++k) v += psi.weights[k] * psi.atoms[k].eval_on(X);
  return v;
}

ScoreFunction combine(const ScoreFunction& psi, const Atom& s, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("combine: gamma must lie in [0,1]");
  }
  ScoreFunction out;
  int merge_idx = -1;
  for (int k = 0; k < psi.size(); ++k) {
    const double w = (1.0 - gamma) * psi.weights[k];
    if (w == 0.0) continue;
    out.atoms.push_back(psi.atoms[k]);
    out.weights.conservativeResize(out.atoms.size());
    out.weights[out.size() - 1] = w;
    if (merge_idx < 0 && psi.atoms[k].same_as(s)) merge_idx = out.size() - 1;
  }
  if (gamma > 0.0) {
    if (merge_idx >= 0) {
      out.weights[merge_idx] += gamma;
    } else {
      out.atoms.push_back(s);
      out.weights.conservativeResize(out.atoms.size());
      out.weights[out.size() - 1] = gamma;
    }
  }
  if (out.atoms.empty()) {
    // gamma == 0 on a degenerate input cannot occur; gamma == 1 always adds s.
    out.atoms.push_back(s);
    out.weights = Vec::Ones(1);
  }
  return out;
}

double eval_policy(const SmoothPolicy& p, const Vec& x) {
  return sigma(p.beta, eval_score(p.score, x));
}

Vec eval_policy_on(const SmoothPolicy& p, const Mat& X) {
  Vec v = eval_score_on(p.score, X);
  for (int i = 0; i < v.size(); ++i) v[i] = sigma(p.beta, v[i]);
  return v;
}

int eval_threshold(const ThresholdPolicy& p, const Vec& x) {
  if (!(p.t >= 0.0 && p.t <= 1.0)) {
    throw std::invalid_argument("threshold policy: t must lie in [0,1]");
  }
  return eval_policy(p.base, x) >= p.t ? 1 : 0;
}

PolicyFn as_policy_fn(const SmoothPolicy& p) {
  return [p](const Vec& x) { return eval_policy(p, x); };
}

PolicyFn as_policy_fn(const ThresholdPolicy& p) {
  return [p](const Vec& x) { return static_cast<double>(eval_threshold(p, x)); };
}

nlohmann::json score_to_json(const ScoreFunction& psi) {
  nlohmann::json arr = nlohmann::json::array();
  for (int k = 0; k < psi.size(); ++k) {
    nlohmann::json rec;
    rec["weight"] = psi.weights[k];
    if (psi.atoms[k].minus_one) {
      rec["theta"] = "minus_one";
    } else {
      rec["theta"] = std::vector<double>(psi.atoms[k].theta.data(),
                                         psi.atoms[k].theta.data() + psi.atoms[k].theta.size());
    }
    arr.push_back(std::move(rec));
  }
  return arr;
}

ScoreFunction score_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument("score function json must be a nonempty array");
  }
  ScoreFunction psi;
  psi.weights = Vec(j.size());
  int k = 0;
  for (const auto& rec : j) {
    psi.weights[k] = rec.at("weight").get<double>();
    const auto& th = rec.at("theta");
    if (th.is_string()) {
      if (th.get<std::string>() != "minus_one") {
        throw std::invalid_argument("unknown atom kind: " + th.get<std::string>());
      }
      psi.atoms.push_back(Atom::constant_minus_one());
    } else {
      const auto vals = th.get<std::vector<double>>();
      psi.atoms.push_back(Atom::logistic(Eigen::Map<const Vec>(vals.data(), vals.size())));
    }
    ++k;
  }
  double sum = psi.weights.sum();
  if (std::abs(sum - 1.0) > 1e-8 || (psi.weights.array() < -1e-12).any()) {
    throw std::invalid_argument("score function weights must be a probability vector");
  }
  return psi;
}

}  // namespace pluc
