#include "pluc/targeting.hpp"

#include <cstdio>
#include <sstream>

namespace pluc {

namespace {

double fluctuation_offset(const FluctuatedNuisance& f, int a, const Vec& x, bool for_mu) {
  if (f.landmarks.count() == 0) return 0.0;
  const double lever = (2.0 * a - 1.0) / f.base.e(a, x);
  double sum = 0.0;
  const Vec& eps = for_mu ? f.eps_mu : f.eps_nu;
  for (int l = 0; l < f.landmarks.count(); ++l) {
    const double s = eval_score(f.landmarks.landmarks[l], x);
    sum += eps[l] * (for_mu ? s : sigma(f.landmarks.beta, s));
  }
  return lever * sum;
}

}  // namespace

double fluctuated_mu(const FluctuatedNuisance& f, int a, const Vec& x) {
  return expit(logit(f.base.mu(a, x)) + fluctuation_offset(f, a, x, true));
}

double fluctuated_nu(const FluctuatedNuisance& f, int a, const Vec& x) {
  return expit(logit(f.base.nu(a, x)) + fluctuation_offset(f, a, x, false));
}

double FluctuatedNuisance::mu(int a, const Vec& x) const { return fluctuated_mu(*this, a, x); }
double FluctuatedNuisance::nu(int a, const Vec& x) const { return fluctuated_nu(*this, a, x); }

NuisanceModel FluctuatedNuisance::as_model() const {
  const FluctuatedNuisance self = *this;
  NuisanceModel m;
  m.mu_raw = [self](int a, const Vec& x) { return fluctuated_mu(self, a, x); };
  m.nu_raw = [self](int a, const Vec& x) { return fluctuated_nu(self, a, x); };
  // the base already clamps e; mu/nu must pass through unclamped or the
  // fitted score equations would no longer vanish exactly
  const NuisanceModel base = self.base;
  m.e_raw = [base](const Vec& x) { return base.e1(x); };
  m.clamp_lo = 1e-12;
  m.clamp_hi = 1.0 - 1e-12;
  return m;
}

namespace {

// Minimizes the quasi-binomial cross-entropy with fixed offsets and clever
// covariates H: loss(eps) = mean[softplus(off + H eps) - y (off + H eps)].
Vec newton_fluctuation(const Mat& H, const Vec& offset, const Vec& labels, Vec eps,
                       double tol, int max_iter, const char* what) {
  const int m = static_cast<int>(H.rows());
  const auto loss_of = [&](const Vec& e) {
    const Vec eta = offset + H * e;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += softplus(eta[i]) - labels[i] * eta[i];
    return acc / m;
  };
  double loss = loss_of(eps);
  for (int it = 0; it < max_iter; ++it) {
    const Vec eta = offset + H * eps;
    const Vec prob = eta.unaryExpr([](double z) { return expit(z); });
    const Vec grad = H.transpose() * (prob - labels) / m;
    if (grad.lpNorm<Eigen::Infinity>() <= tol) return eps;
    const Vec w = prob.array() * (1.0 - prob.array());
    Mat hess = H.transpose() * w.asDiagonal() * H / m;
    hess.diagonal().array() += 1e-12;
    Vec dir = -hess.ldlt().solve(grad);
    if (!dir.allFinite() || grad.dot(dir) >= 0.0) dir = -grad;
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec cand = eps + step * dir;
      const double cand_loss = loss_of(cand);
      if (cand_loss <= loss + 1e-4 * step * grad.dot(dir)) {
        eps = cand;
        loss = cand_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // flat to machine precision in every direction
      if (grad.lpNorm<Eigen::Infinity>() <= 1e-9) return eps;
      break;
    }
  }
  const Vec eta = offset + H * eps;
  const Vec prob = eta.unaryExpr([](double z) { return expit(z); });
  const double gnorm = (H.transpose() * (prob - labels) / m).lpNorm<Eigen::Infinity>();
  if (gnorm > 1e-8) {
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "fluctuation fit (%s) did not converge: gradient inf-norm %.3e", what, gnorm);
    throw std::runtime_error(buf);
  }
  return eps;
}

}  // namespace

FluctuatedNuisance fit_fluctuation(const NuisanceModel& base, const LandmarkSet& landmarks,
                                   const Dataset& data, const std::vector<int>& fold,
                                   double tol, int max_iter, Vec warm_eps_mu,
                                   Vec warm_eps_nu) {
  if (landmarks.count() < 1) throw std::invalid_argument("fit_fluctuation: no landmarks");
  if (fold.empty()) throw std::invalid_argument("fit_fluctuation: empty fold");
  const int m = static_cast<int>(fold.size());
  const int k = landmarks.count();
  const auto padded = [k](Vec warm) {
    Vec eps = Vec::Zero(k);
    if (warm.size() > 0) eps.head(std::min<int>(k, warm.size())) =
        warm.head(std::min<int>(k, warm.size()));
    return eps;
  };

  Mat Hmu(m, k), Hnu(m, k);
  Vec off_mu(m), off_nu(m), ys(m), xis(m);
  for (int r = 0; r < m; ++r) {
    const Observation& o = data.obs[fold[r]];
    const double lever = (2.0 * o.a - 1.0) / base.e(o.a, o.x);
    for (int l = 0; l < k; ++l) {
      const double s = eval_score(landmarks.landmarks[l], o.x);
      Hmu(r, l) = lever * s;
      Hnu(r, l) = lever * sigma(landmarks.beta, s);
    }
    off_mu[r] = logit(base.mu(o.a, o.x));
    off_nu[r] = logit(base.nu(o.a, o.x));
    ys[r] = o.y;
    xis[r] = static_cast<double>(o.xi);
  }

  FluctuatedNuisance out;
  out.base = base;
  out.landmarks = landmarks;
  out.eps_mu = newton_fluctuation(Hmu, off_mu, ys, padded(std::move(warm_eps_mu)), tol,
                                  max_iter, "mu");
  out.eps_nu = newton_fluctuation(Hnu, off_nu, xis, padded(std::move(warm_eps_nu)), tol,
                                  max_iter, "nu");
  return out;
}

AlternatingResult alternating_procedure(const NuisanceModel& init, double lambda, double beta,
                                        double alpha, const Dataset& data,
                                        const std::vector<int>& fold_fit,
                                        const std::vector<int>& fold_eval,
                                        const FWConfig& fw_cfg, double gamma_tol,
                                        int max_corrections) {
  (void)fold_fit;  // the initial estimators were fitted there; only `init` is needed
  if (max_corrections < 0) throw std::invalid_argument("alternating: K must be >= 0");
  const Mat X2 = covariate_matrix(data, fold_eval);

  const auto problem_from = [&](const NuisanceModel& nm) {
    return LagrangianProblem{
        CriterionContext::make(
            X2, [nm](const Vec& x) { return nm.delta_mu(x); },
            [nm](const Vec& x) { return nm.delta_nu(x); }, alpha),
        lambda, beta};
  };

  AlternatingResult res;
  {
    const LagrangianProblem prob0 = problem_from(init);
    res.psi = frank_wolfe(prob0, fw_cfg).first;
  }
  res.fluct.base = init;
  res.fluct.landmarks.lambda = lambda;
  res.fluct.landmarks.beta = beta;
  res.fluct.eps_mu = Vec();
  res.fluct.eps_nu = Vec();

  Vec prev_vals = Vec::Constant(X2.rows(), -1.0);  // psi^{-1} = -1
  Vec cur_vals = eval_score_on(res.psi, X2);

  LandmarkSet landmarks;
  landmarks.lambda = lambda;
  landmarks.beta = beta;

  int k = 0;
  while ((cur_vals - prev_vals).squaredNorm() > gamma_tol && k < max_corrections) {
    landmarks.landmarks.push_back(res.psi);
    FluctuatedNuisance fluct;
    try {
      fluct = fit_fluctuation(init, landmarks, data, fold_eval, 1e-11, 200, res.fluct.eps_mu,
                              res.fluct.eps_nu);
    } catch (const std::exception& ex) {
      throw std::runtime_error("alternating iteration " + std::to_string(k + 1) + ": " +
                               ex.what());
    }

    const NuisanceModel corrected = fluct.as_model();
    double bias_check = 0.0;
    for (const auto& lm : landmarks.landmarks) {
      double acc = 0.0;
      for (int i : fold_eval) acc += score_D(corrected, lm, lambda, beta, data.obs[i]);
      bias_check = std::max(bias_check, std::abs(acc / fold_eval.size()));
    }

    const LagrangianProblem prob_k = problem_from(corrected);
    FWConfig stage_cfg = fw_cfg;
    stage_cfg.sgd.seed = derive_seed(fw_cfg.sgd.seed, static_cast<uint64_t>(k) + 1);
    ScoreFunction psi_next;
    try {
      psi_next = frank_wolfe(prob_k, stage_cfg).first;
    } catch (const std::exception& ex) {
      throw std::runtime_error("alternating iteration " + std::to_string(k + 1) + ": " +
                               ex.what());
    }

    prev_vals = cur_vals;
    res.psi = std::move(psi_next);
    cur_vals = eval_score_on(res.psi, X2);
    res.fluct = std::move(fluct);
    ++k;

    AlternatingDiagnostics diag;
    diag.k = k;
    diag.eps_mu = res.fluct.eps_mu;
    diag.eps_nu = res.fluct.eps_nu;
    diag.stop_stat = (cur_vals - prev_vals).squaredNorm();
    diag.lagrangian = lagrangian_at(prob_k, cur_vals);
    diag.bias_check = bias_check;
    res.diagnostics.push_back(std::move(diag));
  }
  res.iterations = k;
  return res;
}

std::string alternating_diagnostics_csv(const std::vector<AlternatingDiagnostics>& rows,
                                        int max_corrections) {
  std::ostringstream out;
  out << "# pluc-alternating v1\n";
  out << "k";
  for (int l = 1; l <= max_corrections; ++l) out << ",eps_mu_" << l;
  for (int l = 1; l <= max_corrections; ++l) out << ",eps_nu_" << l;
  out << ",stop_stat,lagrangian\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.k;
    for (int l = 0; l < max_corrections; ++l) {
      const double v = l < r.eps_mu.size() ? r.eps_mu[l] : 0.0;
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    for (int l = 0; l < max_corrections; ++l) {
      const double v = l < r.eps_nu.size() ? r.eps_nu[l] : 0.0;
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g", r.stop_stat);
    out << buf;
    std::snprintf(buf, sizeof(buf), ",%.17g\n", r.lagrangian);
    out << buf;
  }
  return out.str();
}

}  // namespace pluc
