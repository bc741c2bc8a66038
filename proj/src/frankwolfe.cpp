#include "pluc/frankwolfe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace pluc {

FWConfig FWConfig::from_precision(double precision) {
  if (!(precision > 0.0)) throw std::invalid_argument("precision must be positive");
  FWConfig cfg;
  cfg.iterations = static_cast<int>(std::ceil(1.0 / precision));
  return cfg;
}

std::string CertificateTrace::to_csv() const {
  std::ostringstream out;
  out << "# pluc-fw-trace v1\n";
  out << "j,gamma,criterion,lin_obj,gap\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.j, r.gamma,
                  r.criterion, r.lin_obj, r.gap);
    out << buf;
  }
  return out.str();
}

Atom solve_linear_subproblem(const Mat& support, const Vec& grad_vals, const SGDConfig& cfg) {
  const int m = static_cast<int>(support.rows());
  const int d = static_cast<int>(support.cols());
  if (m < 1) throw std::invalid_argument("solve_linear_subproblem: empty measure");
  if (grad_vals.size() != m) {
    throw std::invalid_argument("solve_linear_subproblem: gradient size mismatch");
  }
  if (!grad_vals.allFinite()) {
    throw std::invalid_argument("solve_linear_subproblem: non-finite gradient values");
  }

  const int batch = std::max(1, std::min<int>(m, static_cast<int>(
                                     std::ceil(cfg.batch_fraction * m))));
  Rng rng(derive_seed(cfg.seed, 0x56d));
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  Mat Xp(m, d);  // epoch-permuted copies keep batches contiguous
  Vec gp(m);
  int pos = m;  // triggers a shuffle on first use

  Vec theta = Vec::Zero(d);
  Vec epoch_start = theta;
  Vec w(batch), g(d);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (pos >= m) {
      // stop once a whole epoch moves theta by less than the tolerance
      if (it > 0 && (theta - epoch_start).lpNorm<Eigen::Infinity>() < cfg.tolerance) break;
      epoch_start = theta;
      rng.shuffle(order);
      for (int r = 0; r < m; ++r) {
        Xp.row(r) = support.row(order[r]);
        gp[r] = grad_vals[order[r]];
      }
      pos = 0;
    }
    const int k = std::min(batch, m - pos);
    const auto Xb = Xp.middleRows(pos, k);
    auto wk = w.head(k);
    wk.noalias() = Xb * theta;
    for (int b = 0; b < k; ++b) {
      const double p = expit(wk[b]);
      wk[b] = 2.0 * p * (1.0 - p) * gp[pos + b];
    }
    g.noalias() = Xb.transpose() * wk / static_cast<double>(k);
    pos += k;
    theta -= cfg.learning_rate * g;
  }

  const Atom logistic = Atom::logistic(theta);
  const double obj_logistic = (logistic.eval_on(support).array() * grad_vals.array()).mean();
  const double obj_minus_one = -grad_vals.mean();
  if (obj_logistic < obj_minus_one - 1e-12) return logistic;
  return Atom::constant_minus_one();
}

Atom best_atom_enumerated(const Mat& support, const Vec& grad_vals,
                          const std::vector<Atom>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("best_atom_enumerated: no candidates");
  if (!grad_vals.allFinite()) {
    throw std::invalid_argument("best_atom_enumerated: non-finite gradient values");
  }
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  bool best_is_minus_one = false;
  for (size_t k = 0; k < candidates.size(); ++k) {
    const double obj = (candidates[k].eval_on(support).array() * grad_vals.array()).mean();
    const bool better = obj < best - 1e-12;
    const bool tie_prefers = std::abs(obj - best) <= 1e-12 && candidates[k].minus_one &&
                             !best_is_minus_one;
    if (better || tie_prefers || best_idx < 0) {
      best = std::min(best, obj);
      best_idx = static_cast<int>(k);
      best_is_minus_one = candidates[k].minus_one;
    }
  }
  return candidates[best_idx];
}

std::pair<ScoreFunction, CertificateTrace> frank_wolfe_with_solver(
    const LagrangianProblem& prob, int iterations, const SubproblemSolver& solver,
    bool record_certificate) {
  if (iterations < 1) throw std::invalid_argument("frank_wolfe: iterations must be >= 1");
  const Mat& X = prob.ctx.x;

  ScoreFunction psi = ScoreFunction::constant_minus_one();
  Vec psi_vals = Vec::Constant(X.rows(), -1.0);
  CertificateTrace trace;

  for (int j = 0; j < iterations; ++j) {
    const double gamma = 2.0 / (2.0 + j);
    const Vec grad = gradient_at(prob, psi_vals);
    const Atom s = solver(grad, j);
    const Vec s_vals = s.eval_on(X);
    const double lin_obj = (s_vals.array() * grad.array()).mean();
    if (record_certificate) {
      CertificateRecord rec;
      rec.j = j;
      rec.gamma = gamma;
      rec.criterion = lagrangian_at(prob, psi_vals);
      rec.lin_obj = lin_obj;
      rec.gap = (grad.array() * psi_vals.array()).mean() - lin_obj;
      trace.records.push_back(rec);
    }
    psi = combine(psi, s, gamma);
    psi_vals = (1.0 - gamma) * psi_vals + gamma * s_vals;
  }

  if (record_certificate) {
    // terminal record: one extra subproblem solve yields the final gap
    const Vec grad = gradient_at(prob, psi_vals);
    const Atom s = solver(grad, iterations);
    const double lin_obj = (s.eval_on(X).array() * grad.array()).mean();
    CertificateRecord rec;
    rec.j = iterations;
    rec.gamma = 2.0 / (2.0 + iterations);
    rec.criterion = lagrangian_at(prob, psi_vals);
    rec.lin_obj = lin_obj;
    rec.gap = (grad.array() * psi_vals.array()).mean() - lin_obj;
    trace.records.push_back(rec);
  }
  return {std::move(psi), std::move(trace)};
}

std::pair<ScoreFunction, CertificateTrace> frank_wolfe(const LagrangianProblem& prob,
                                                       const FWConfig& cfg) {
  const Mat& X = prob.ctx.x;
  SubproblemSolver solver;
  if (!cfg.exact_atoms.empty()) {
    const std::vector<Atom>& atoms = cfg.exact_atoms;
    solver = [&X, &atoms](const Vec& grad, int) {
      return best_atom_enumerated(X, grad, atoms);
    };
  } else {
    const SGDConfig sgd = cfg.sgd;
    solver = [&X, sgd](const Vec& grad, int j) {
      SGDConfig c = sgd;
      c.seed = derive_seed(sgd.seed, static_cast<uint64_t>(j) + 0xf3);
      return solve_linear_subproblem(X, grad, c);
    };
  }
  return frank_wolfe_with_solver(prob, cfg.iterations, solver, cfg.record_certificate);
}

double duality_gap(const LagrangianProblem& prob, const ScoreFunction& psi,
                   const std::vector<Atom>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("duality_gap: no candidates");
  const Vec psi_vals = eval_score_on(psi, prob.ctx.x);
  const Vec grad = gradient_at(prob, psi_vals);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : candidates) {
    best = std::min(best, (s.eval_on(prob.ctx.x).array() * grad.array()).mean());
  }
  return (grad.array() * psi_vals.array()).mean() - best;
}

namespace {

Vec project_simplex(Vec v) {
  const int n = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int rho = 0;
  for (int k = 0; k < n; ++k) {
    cum += u[k];
    const double t = (cum - 1.0) / (k + 1);
    if (u[k] - t > 0.0) {
      rho = k + 1;
      tau = t;
    }
  }
  (void)rho;
  for (int i = 0; i < n; ++i) v[i] = std::max(0.0, v[i] - tau);
  return v;
}

}  // namespace

HullMinimizer hull_minimizer(const LagrangianProblem& prob, const std::vector<Atom>& atoms,
                             int max_iterations, double tol) {
  if (atoms.empty()) throw std::invalid_argument("hull_minimizer: no atoms");
  const Mat& X = prob.ctx.x;
  const int m = static_cast<int>(X.rows());
  const int K = static_cast<int>(atoms.size());
  Mat S(m, K);
  for (int k = 0; k < K; ++k) S.col(k) = atoms[k].eval_on(X);

  const auto grad_w = [&](const Vec& w) -> Vec {
    return S.transpose() * gradient_at(prob, S * w) / m;
  };

  Vec w = Vec::Constant(K, 1.0 / K);
  double f = lagrangian_at(prob, S * w);
  double step = 1.0;
  double vi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iterations; ++it) {
    const Vec g = grad_w(w);
    vi = w.dot(g) - g.minCoeff();
    if (vi <= tol * std::max(1.0, std::abs(f))) break;
    bool moved = false;
    const double slack = 1e-16 * (1.0 + std::abs(f));
    while (step >= 1e-18) {
      Vec wn = project_simplex(w - step * g);
      const Vec dw = wn - w;
      const double fn = lagrangian_at(prob, S * wn);
      if (fn <= f + g.dot(dw) + dw.squaredNorm() / (2.0 * step) + slack) {
        w = std::move(wn);
        f = fn;
        step *= 1.3;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  {
    const Vec g = grad_w(w);
    vi = w.dot(g) - g.minCoeff();
  }

  HullMinimizer out;
  out.weights = w;
  out.criterion = f;
  out.vi_gap = vi;
  for (int k = 0; k < K; ++k) {
    if (w[k] > 0.0) {
      out.psi.atoms.push_back(atoms[k]);
      out.psi.weights.conservativeResize(out.psi.atoms.size());
      out.psi.weights[out.psi.size() - 1] = w[k];
    }
  }
  if (out.psi.atoms.empty()) {
    out.psi = ScoreFunction::constant_minus_one();  // all-zero projection cannot occur
  } else {
    out.psi.weights /= out.psi.weights.sum();
  }
  return out;
}

std::string CertifyReport::to_csv() const {
  std::ostringstream out;
  out << "# pluc-certify v1\n";
  out << "j,gamma,criterion,lin_obj,gap,bound,bound_ok,descent_ok\n";
  char buf[240];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.j, r.gamma,
                  r.criterion, r.lin_obj, r.gap, r.bound, r.bound_ok ? 1 : 0,
                  r.descent_ok ? 1 : 0);
    out << buf;
  }
  return out.str();
}

CertifyReport certify_frank_wolfe(const LagrangianProblem& prob,
                                  const std::vector<Atom>& candidates, int iterations) {
  const Mat& X = prob.ctx.x;
  // replayed exact oracle that also measures the Assumption-FW slack
  std::vector<double> slack;
  SubproblemSolver solver = [&](const Vec& grad, int) {
    const Atom s = best_atom_enumerated(X, grad, candidates);
    const double chosen = (s.eval_on(X).array() * grad.array()).mean();
    double exact = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      exact = std::min(exact, (c.eval_on(X).array() * grad.array()).mean());
    }
    slack.push_back(std::max(0.0, chosen - exact));
    return s;
  };
  auto [psi, trace] = frank_wolfe_with_solver(prob, iterations, solver, true);

  const HullMinimizer opt = hull_minimizer(prob, candidates);
  const double C = curvature_constant(prob.lambda, prob.beta);

  CertifyReport rep;
  rep.optimum = opt.criterion;
  rep.curvature = C;
  double delta = 0.0;
  for (size_t j = 0; j < slack.size(); ++j) {
    delta = std::max(delta, slack[j] * (static_cast<double>(j) + 2.0) / C);
  }
  rep.delta = delta;

  const double slack_tol = 1e-9;
  const int J = iterations;
  for (int i = 0; i <= J; ++i) {
    const CertificateRecord& rec = trace.records[i];
    CertifyRow row;
    row.j = rec.j;
    row.gamma = rec.gamma;
    row.criterion = rec.criterion;
    row.lin_obj = rec.lin_obj;
    row.gap = rec.gap;
    // psi^0 carries its duality-gap certificate; the 1/(j+2) rate starts at j=1
    row.bound = i == 0 ? rec.gap : 4.0 * C * (1.0 + 0.5 * delta) / (i + 2.0);
    row.bound_ok = rec.criterion - opt.criterion + opt.vi_gap <= row.bound + slack_tol;
    if (i < J) {
      const double next = trace.records[i + 1].criterion;
      row.descent_ok = next - rec.criterion <=
                       -rec.gamma * rec.gap + C * (1.0 + 0.5 * delta) * rec.gamma * rec.gamma +
                           slack_tol;
    }
    rep.all_ok = rep.all_ok && row.bound_ok && row.descent_ok;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace pluc
