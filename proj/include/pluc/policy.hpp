#pragma once

#include "pluc/common.hpp"
#include "pluc/scaling.hpp"

#include <nlohmann/json_fwd.hpp>
#include <vector>

namespace pluc {

// Extreme point of the working model: either the shifted logistic score
// x -> 2 expit(theta'x) - 1 or the constant -1.
struct Atom {
  bool minus_one = true;
  Vec theta;

  static Atom constant_minus_one() { return Atom{}; }
  static Atom logistic(Vec th);

  double eval(const Vec& x) const;
  // Values at each row of X.
  Vec eval_on(const Mat& X) const;
  bool same_as(const Atom& other) const;
};

// Convex combination of atoms; the object Frank-Wolfe iterates on. Weights
// are nonnegative and sum to one, so evaluations stay in [-1,1].
struct ScoreFunction {
  std::vector<Atom> atoms;
  Vec weights;

  static ScoreFunction constant_minus_one();
  int size() const { return static_cast<int>(atoms.size()); }
};

double eval_score(const ScoreFunction& psi, const Vec& x);
Vec eval_score_on(const ScoreFunction& psi, const Mat& X);

// Frank-Wolfe update: scale existing weights by (1-gamma) and give s weight
// gamma. Atoms equal to s (bitwise) are merged; exactly-zero weights are
// dropped so 40 iterations stay compact.
ScoreFunction combine(const ScoreFunction& psi, const Atom& s, double gamma);

struct SmoothPolicy {
  double beta = 0.0;
  ScoreFunction score;
};

double eval_policy(const SmoothPolicy& p, const Vec& x);
Vec eval_policy_on(const SmoothPolicy& p, const Mat& X);

// Hard recommendation rule 1{ policy(x) >= t }.
struct ThresholdPolicy {
  SmoothPolicy base;
  double t = 0.5;
};

int eval_threshold(const ThresholdPolicy& p, const Vec& x);

PolicyFn as_policy_fn(const SmoothPolicy& p);
PolicyFn as_policy_fn(const ThresholdPolicy& p);

nlohmann::json score_to_json(const ScoreFunction& psi);
ScoreFunction score_from_json(const nlohmann::json& j);

}  // namespace pluc
