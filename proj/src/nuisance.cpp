#include "pluc/nuisance.hpp"

#include <nlohmann/json.hpp>

#include <memory>

namespace pluc {

namespace {

double cross_entropy(const Vec& eta, const Vec& y) {
  double loss = 0.0;
  for (int i = 0; i < eta.size(); ++i) {
    // -[y log p + (1-y) log(1-p)] = softplus(eta) - y*eta
    loss += softplus(eta[i]) - y[i] * eta[i];
  }
  return loss / eta.size();
}

}  // namespace

GlmFit fit_logistic(const Mat& features, const Vec& labels, int max_iter, double tol) {
  const int n = static_cast<int>(features.rows());
  const int p = static_cast<int>(features.cols());
  if (labels.size() != n) throw std::invalid_argument("fit_logistic: label count mismatch");
  if (n < p + 2) throw std::invalid_argument("fit_logistic: needs more rows than columns");
  if (!features.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("fit_logistic: non-finite input");
  }
  if ((labels.array() < 0.0).any() || (labels.array() > 1.0).any()) {
    throw std::invalid_argument("fit_logistic: labels must lie in [0,1]");
  }

  // design with intercept column first
  Mat X(n, p + 1);
  X.col(0).setOnes();
  X.rightCols(p) = features;

  Vec beta = Vec::Zero(p + 1);
  Vec eta = Vec::Zero(n);
  double loss = cross_entropy(eta, labels);
  GlmFit fit;

  int it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    Vec prob = eta.unaryExpr([](double z) { return expit(z); });
    Vec grad = X.transpose() * (prob - labels) / n;
    if (grad.lpNorm<Eigen::Infinity>() < tol) {
      converged = true;
      break;
    }
    Vec w = prob.array() * (1.0 - prob.array());
    Mat H = X.transpose() * w.asDiagonal() * X / n;
    H.diagonal().array() += 1e-10;
    Vec dir = -H.ldlt().solve(grad);
    if (!dir.allFinite() || grad.dot(dir) >= 0.0) {
      dir = -grad;  // singular or indefinite Hessian
    }
    // backtracking keeps the training loss monotone
    double step = 1.0;
    const double slope = grad.dot(dir);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vec beta_new = beta + step * dir;
      Vec eta_new = X * beta_new;
      const double loss_new = cross_entropy(eta_new, labels);
      if (loss_new <= loss + 1e-4 * step * slope) {
        beta = std::move(beta_new);
        eta = std::move(eta_new);
        loss = loss_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no improving step exists at this scale
  }

  fit.intercept = beta[0];
  fit.coefficients = beta.tail(p);
  fit.converged = converged;
  fit.iterations = it;
  fit.loss = loss;
  if (!fit.coefficients.allFinite() || !std::isfinite(fit.intercept)) {
    throw std::runtime_error("fit_logistic: diverged to non-finite coefficients");
  }
  return fit;
}

double glm_predict(const GlmFit& fit, const Vec& features) {
  if (features.size() != fit.coefficients.size()) {
    throw std::invalid_argument("glm_predict: feature dimension mismatch");
  }
  return expit(fit.intercept + fit.coefficients.dot(features));
}

nlohmann::json glm_to_json(const GlmFit& fit) {
  nlohmann::json j;
  j["intercept"] = fit.intercept;
  j["coefficients"] = std::vector<double>(fit.coefficients.data(),
                                          fit.coefficients.data() + fit.coefficients.size());
  j["converged"] = fit.converged;
  return j;
}

GlmFit glm_from_json(const nlohmann::json& j) {
  GlmFit fit;
  fit.intercept = j.at("intercept").get<double>();
  const auto coefs = j.at("coefficients").get<std::vector<double>>();
  fit.coefficients = Eigen::Map<const Vec>(coefs.data(), coefs.size());
  fit.converged = j.value("converged", true);
  if (!fit.coefficients.allFinite() || !std::isfinite(fit.intercept)) {
    throw std::invalid_argument("glm_from_json: non-finite coefficients");
  }
  return fit;
}

namespace {

// [x, a, a*x] feature row for the outcome and adverse-event regressions.
Vec interaction_features(const Vec& x, int a) {
  Vec f(2 * x.size() + 1);
  f.head(x.size()) = x;
  f[x.size()] = static_cast<double>(a);
  f.tail(x.size()) = a == 1 ? x : Vec::Zero(x.size()).eval();
  return f;
}

}  // namespace

NuisanceModel estimate_nuisances(const Dataset& data, const std::vector<int>& fold,
                                 const NuisanceSpec& spec) {
  if (spec.kind == NuisanceSpec::Kind::Oracle) {
    if (!spec.scenario) throw std::invalid_argument("oracle nuisances need a scenario");
    return oracle_nuisances(*spec.scenario);
  }
  if (fold.empty()) throw std::invalid_argument("estimate_nuisances: empty fold");

  const int m = static_cast<int>(fold.size());
  const int d = data.d;
  Mat Fxa(m, 2 * d + 1), Fx(m, d);
  Vec ys(m), xis(m), as(m);
  for (int r = 0; r < m; ++r) {
    const Observation& o = data.obs[fold[r]];
    Fxa.row(r) = interaction_features(o.x, o.a).transpose();
    Fx.row(r) = o.x.transpose();
    ys[r] = o.y;
    xis[r] = static_cast<double>(o.xi);
    as[r] = static_cast<double>(o.a);
  }

  GlmFit mu_fit, nu_fit, e_fit;
  try {
    mu_fit = fit_logistic(Fxa, ys);
    nu_fit = fit_logistic(Fxa, xis);
    e_fit = fit_logistic(Fx, as);
  } catch (const std::exception& ex) {
    throw std::runtime_error(std::string("nuisance fit failed on fold of size ") +
                             std::to_string(m) + ": " + ex.what());
  }

  auto mu_shared = std::make_shared<GlmFit>(std::move(mu_fit));
  auto nu_shared = std::make_shared<GlmFit>(std::move(nu_fit));
  auto e_shared = std::make_shared<GlmFit>(std::move(e_fit));

  NuisanceModel model;
  model.mu_raw = [mu_shared](int a, const Vec& x) {
    return glm_predict(*mu_shared, interaction_features(x, a));
  };
  model.nu_raw = [nu_shared](int a, const Vec& x) {
    return glm_predict(*nu_shared, interaction_features(x, a));
  };
  model.e_raw = [e_shared](const Vec& x) { return glm_predict(*e_shared, x); };
  return model;
}

NuisanceModel oracle_nuisances(const Scenario& sc) {
  NuisanceModel model;
  model.mu_raw = [sc](int a, const Vec& x) { return sc.mean_outcome(a, x); };
  model.nu_raw = [sc](int a, const Vec& x) { return sc.nu0(a, x); };
  model.e_raw = [sc](const Vec& x) { return sc.propensity_score(x); };
  return model;
}

}  // namespace pluc
