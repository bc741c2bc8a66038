#pragma once

#include "pluc/criteria.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pluc {

struct SGDConfig {
  double tolerance = 1e-3;
  double learning_rate = 1e-2;
  double batch_fraction = 0.2;
  int max_iterations = 1000;
  uint64_t seed = 0;
};

struct FWConfig {
  int iterations = 40;  // J
  SGDConfig sgd;
  bool record_certificate = false;
  // When nonempty, the linearized subproblem is solved exactly by enumerating
  // these candidates instead of running SGD (toy problems, certification).
  std::vector<Atom> exact_atoms;

  // Precision-style configuration: J = ceil(1/precision).
  static FWConfig from_precision(double precision);
};

struct CertificateRecord {
  int j = 0;
  double gamma = 0.0;
  double criterion = 0.0;  // Lagrangian at psi^j
  double lin_obj = 0.0;    // mean[s_j(X) grad(X)] of the chosen direction
  double gap = 0.0;        // duality-gap surrogate g(psi^j)
};

struct CertificateTrace {
  std::vector<CertificateRecord> records;  // j = 0..J when recorded

  std::string to_csv() const;
};

// Linearized subproblem: minimize mean[s(X) grad(X)] over the atom class.
// Returns the better of an SGD-optimized logistic atom and the constant -1;
// ties (within 1e-12) go to the constant.
Atom solve_linear_subproblem(const Mat& support, const Vec& grad_vals, const SGDConfig& cfg);

// Exact variant over an explicit candidate list.
Atom best_atom_enumerated(const Mat& support, const Vec& grad_vals,
                          const std::vector<Atom>& candidates);

// Subproblem seam shared by the SGD and exact-oracle paths; also the hook the
// closed-form tests drive with scripted directions.
using SubproblemSolver = std::function<Atom(const Vec& grad_vals, int iteration)>;

std::pair<ScoreFunction, CertificateTrace> frank_wolfe_with_solver(
    const LagrangianProblem& prob, int iterations, const SubproblemSolver& solver,
    bool record_certificate);

std::pair<ScoreFunction, CertificateTrace> frank_wolfe(const LagrangianProblem& prob,
                                                       const FWConfig& cfg);

// g(psi) = max over candidates s of mean[grad(X) (psi(X) - s(X))]; nonnegative
// whenever psi lies in the candidates' hull.
double duality_gap(const LagrangianProblem& prob, const ScoreFunction& psi,
                   const std::vector<Atom>& candidates);

// Minimizer of the Lagrangian over the convex hull of the given atoms, found
// by projected gradient on the weight simplex (independent of the Frank-Wolfe
// path). vi_gap reports the terminal variational-inequality residual
// max_k <grad, psi - atom_k>, which certifies optimality when ~0.
struct HullMinimizer {
  ScoreFunction psi;
  Vec weights;
  double criterion = 0.0;
  double vi_gap = 0.0;
};

HullMinimizer hull_minimizer(const LagrangianProblem& prob, const std::vector<Atom>& atoms,
                             int max_iterations = 200000, double tol = 1e-13);

// Frank-Wolfe run with the exact subproblem oracle plus the theoretical
// per-iterate bound 4C(1+delta/2)/(j+3) against the brute-forced hull optimum.
struct CertifyRow {
  int j = 0;
  double gamma = 0.0;
  double criterion = 0.0;
  double lin_obj = 0.0;
  double gap = 0.0;
  double bound = 0.0;    // 4C(1+delta/2)/(j+2) for the iterate psi^j, j >= 1
  bool bound_ok = true;  // criterion - optimum <= bound (slack 1e-9)
  bool descent_ok = true;  // per-step inequality of the certificate proof
};

struct CertifyReport {
  std::vector<CertifyRow> rows;
  double optimum = 0.0;  // Lagrangian at the brute-forced minimizer
  double delta = 0.0;    // measured subproblem slack of Assumption FW
  double curvature = 0.0;
  bool all_ok = true;

  std::string to_csv() const;
};

CertifyReport certify_frank_wolfe(const LagrangianProblem& prob,
                                  const std::vector<Atom>& candidates, int iterations);

}  // namespace pluc
