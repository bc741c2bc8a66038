#include "pluc/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <sstream>
#include <thread>

namespace pluc {

FitMode fit_mode_from_string(const std::string& s) {
  if (s == "naive") return FitMode::Naive;
  if (s == "pluc") return FitMode::Pluc;
  if (s == "oracle") return FitMode::Oracle;
  throw std::invalid_argument("unknown mode: " + s);
}

std::string to_string(FitMode m) {
  switch (m) {
    case FitMode::Naive: return "naive";
    case FitMode::Pluc: return "pluc";
    case FitMode::Oracle: return "oracle";
  }
  return "?";
}

void GridConfig::validate() const {
  if (lambdas.empty() || betas.empty()) throw std::invalid_argument("empty (lambda,beta) grid");
  double prev = -1.0;
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw std::invalid_argument("lambdas must be >= 0");
    if (l <= prev) throw std::invalid_argument("lambdas must be strictly ascending");
    prev = l;
  }
  for (double b : betas) {
    if (!(b >= 0.0)) throw std::invalid_argument("betas must be >= 0");
  }
  if (!(alpha >= 0.0 && alpha <= 0.5)) throw std::invalid_argument("alpha must lie in [0,1/2]");
  if (fw.iterations < 1) throw std::invalid_argument("fw iterations must be >= 1");
  if (targeting.max_corrections < 0) throw std::invalid_argument("targeting K must be >= 0");
  if (mode == FitMode::Oracle && !scenario) {
    throw std::invalid_argument("oracle mode requires a scenario");
  }
  if (oracle_grid_n < 1) throw std::invalid_argument("oracle_grid_n must be >= 1");
}

const CellResult& GridResult::selected_cell() const {
  if (never_treat || selected < 0) throw std::logic_error("no selected cell (never-treat)");
  return cells[selected];
}

SmoothPolicy GridResult::policy() const {
  if (never_treat) return SmoothPolicy{0.0, ScoreFunction::constant_minus_one()};
  return SmoothPolicy{cells[selected].beta, cells[selected].psi};
}

namespace {

LagrangianProblem naive_problem(const NuisanceModel& nuis1, const Mat& X2, double lambda,
                                double beta, double alpha) {
  return LagrangianProblem{
      CriterionContext::make(
          X2, [nuis1](const Vec& x) { return nuis1.delta_mu(x); },
          [nuis1](const Vec& x) { return nuis1.delta_nu(x); }, alpha),
      lambda, beta};
}

}  // namespace

ScoreFunction learn_cell(double lambda, double beta, FitMode mode, const NuisanceModel& nuis1,
                         const Dataset& data, const FoldSplit& folds, const GridConfig& cfg,
                         uint64_t cell_seed, CellResult* diag) {
  FWConfig fw = cfg.fw;
  fw.sgd.seed = cell_seed;
  switch (mode) {
    case FitMode::Naive: {
      const Mat X2 = covariate_matrix(data, folds.n2);
      return frank_wolfe(naive_problem(nuis1, X2, lambda, beta, cfg.alpha), fw).first;
    }
    case FitMode::Pluc: {
      AlternatingResult alt =
          alternating_procedure(nuis1, lambda, beta, cfg.alpha, data, folds.n1, folds.n2, fw,
                                cfg.targeting.gamma_tol, cfg.targeting.max_corrections);
      if (diag != nullptr) {
        diag->alternating_iterations = alt.iterations;
        diag->alternating = alt.diagnostics;
      }
      return alt.psi;
    }
    case FitMode::Oracle: {
      const Scenario sc = *cfg.scenario;
      // dense fresh-sample stand-in for the population measure, shared seed
      Rng rng(derive_seed(cell_seed, 0x09acd0));
      Mat X(cfg.oracle_grid_n, data.d);
      for (int i = 0; i < cfg.oracle_grid_n; ++i) {
        Vec x = draw_covariates(sc, rng);
        if (x.size() < data.d) {
          Vec padded = Vec::Ones(data.d);  // intercept-augmented datasets
          padded.head(x.size()) = x;
          x = padded;
        }
        X.row(i) = x.transpose();
      }
      LagrangianProblem prob{
          CriterionContext::make(
              X, [sc](const Vec& x) { return sc.delta_mu(x.head(sc.dim())); },
              [sc](const Vec& x) { return sc.delta_nu(x.head(sc.dim())); }, cfg.alpha),
          lambda, beta};
      return frank_wolfe(prob, fw).first;
    }
  }
  throw std::logic_error("unreachable");
}

GridResult run(const Dataset& data, const GridConfig& cfg, const NuisanceSpec& nuisance_spec,
               uint64_t seed) {
  cfg.validate();
  const FoldSplit folds = split_folds(data, derive_seed(seed, 1));
  const NuisanceModel nuis1 = estimate_nuisances(data, folds.n1, nuisance_spec);
  const NuisanceModel nuis3 = estimate_nuisances(data, folds.n3, nuisance_spec);
  return run_with_nuisances(data, cfg, nuis1, nuis3, seed);
}

GridResult run_with_nuisances(const Dataset& data, const GridConfig& cfg,
                              const NuisanceModel& nuis1, const NuisanceModel& nuis3,
                              uint64_t seed) {
  cfg.validate();

  GridResult res;
  res.seed = seed;
  res.folds = split_folds(data, derive_seed(seed, 1));

  const int nb = static_cast<int>(cfg.betas.size());
  const int nl = static_cast<int>(cfg.lambdas.size());
  res.cells.assign(static_cast<size_t>(nb) * nl, CellResult{});

  // beta rows are independent; within a row the lambda loop carries the
  // early-stop dependency and stays sequential
  const auto run_beta_row = [&](int bi) {
    for (int li = 0; li < nl; ++li) {
      CellResult& cell = res.cells[static_cast<size_t>(bi) * nl + li];
      cell.lambda = cfg.lambdas[li];
      cell.beta = cfg.betas[bi];
      cell.attempted = true;
      const uint64_t cell_seed =
          derive_seed(seed, 1000 + static_cast<uint64_t>(bi) * 211 + li);
      try {
        cell.psi = learn_cell(cell.lambda, cell.beta, cfg.mode, nuis1, data, res.folds, cfg,
                              cell_seed, &cell);
        const SmoothPolicy pol{cell.beta, cell.psi};
        cell.assessment = assess_policy(pol, nuis3, data, res.folds.n3, cfg.alpha);
        cell.ok = true;
      } catch (const std::exception& ex) {
        cell.ok = false;
        cell.error = ex.what();
        continue;  // skip the cell, keep scanning the row
      }
      if (!cfg.exhaustive_grid && cell.assessment.s_upper <= 0.0) {
        break;  // larger lambda only shrinks treatment
      }
    }
  };

  const int workers = std::max(1, std::min<int>(cfg.threads, nb));
  if (workers <= 1) {
    for (int bi = 0; bi < nb; ++bi) run_beta_row(bi);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        int bi;
        while ((bi = next.fetch_add(1)) < nb) run_beta_row(bi);
      });
    }
    for (auto& th : pool) th.join();
  }

  bool any_ok = false;
  for (const auto& cell : res.cells) any_ok = any_ok || cell.ok;
  if (!any_ok) throw std::runtime_error("all grid cells failed");

  // best-policy identification among confidently feasible cells
  res.never_treat = true;
  for (size_t i = 0; i < res.cells.size(); ++i) {
    const CellResult& cell = res.cells[i];
    if (!cell.ok || cell.assessment.s_upper > 0.0) continue;
    if (res.never_treat) {
      res.never_treat = false;
      res.selected = static_cast<int>(i);
      continue;
    }
    const CellResult& best = res.cells[res.selected];
    const double v = cell.assessment.v_lower, vb = best.assessment.v_lower;
    const bool wins = v > vb ||
                      (v == vb && (cell.lambda < best.lambda ||
                                   (cell.lambda == best.lambda && cell.beta < best.beta)));
    if (wins) res.selected = static_cast<int>(i);
  }
  if (!res.never_treat) {
    res.lambda_star = res.cells[res.selected].lambda;
    res.beta_star = res.cells[res.selected].beta;
  }
  return res;
}

ThresholdSelection select_threshold(const SmoothPolicy& policy, const NuisanceModel& nuis3,
                                    const Dataset& data, const std::vector<int>& fold3,
                                    double alpha, const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("select_threshold: empty grid");
  ThresholdSelection sel;
  for (double t : t_grid) {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("select_threshold: t outside [0,1]");
    }
    const ThresholdPolicy rule{policy, t};
    const PolicyAssessment a = assess_policy(rule, nuis3, data, fold3, alpha);
    if (a.s_upper > 0.0) continue;
    if (sel.never_treat || a.v_lower > sel.assessment.v_lower) {
      sel.never_treat = false;
      sel.t = t;
      sel.assessment = a;
    }
  }
  return sel;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(101);
  for (int i = 0; i <= 100; ++i) grid[i] = i / 100.0;
  return grid;
}

nlohmann::json grid_result_to_json(const GridResult& res, const GridConfig& cfg) {
  nlohmann::json j;
  j["schema"] = "pluc-grid-result v1";
  j["seed"] = res.seed;
  j["config"] = {
      {"lambdas", cfg.lambdas},
      {"betas", cfg.betas},
      {"alpha", cfg.alpha},
      {"mode", to_string(cfg.mode)},
      {"fw_iterations", cfg.fw.iterations},
      {"sgd",
       {{"tolerance", cfg.fw.sgd.tolerance},
        {"learning_rate", cfg.fw.sgd.learning_rate},
        {"batch_fraction", cfg.fw.sgd.batch_fraction},
        {"max_iterations", cfg.fw.sgd.max_iterations}}},
      {"targeting",
       {{"gamma_tol", cfg.targeting.gamma_tol}, {"K", cfg.targeting.max_corrections}}},
      {"exhaustive_grid", cfg.exhaustive_grid},
  };
  if (cfg.scenario) j["config"]["scenario"] = to_string(cfg.scenario->kind);
  j["folds"] = {{"n1", res.folds.n1}, {"n2", res.folds.n2}, {"n3", res.folds.n3}};

  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : res.cells) {
    if (!cell.attempted) continue;
    nlohmann::json c;
    c["lambda"] = cell.lambda;
    c["beta"] = cell.beta;
    c["ok"] = cell.ok;
    if (!cell.ok) {
      c["error"] = cell.error;
    } else {
      c["score"] = score_to_json(cell.psi);
      c["assessment"] = {{"s_star", cell.assessment.s_star},
                         {"s_upper", cell.assessment.s_upper},
                         {"v_star", cell.assessment.v_star},
                         {"v_lower", cell.assessment.v_lower},
                         {"var_s", cell.assessment.var_s},
                         {"var_v", cell.assessment.var_v},
                         {"eps_mu_star", cell.assessment.eps_mu_star},
                         {"eps_nu_star", cell.assessment.eps_nu_star}};
      c["alternating_iterations"] = cell.alternating_iterations;
    }
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  if (res.never_treat) {
    j["selection"] = "never_treat";
  } else {
    j["selection"] = {{"lambda", res.lambda_star}, {"beta", res.beta_star}};
  }
  return j;
}

std::string grid_summary_csv(const GridResult& res) {
  std::ostringstream out;
  out << "# pluc-grid-summary v1\n";
  out << assessment_csv_header() << ",selected\n";
  for (size_t i = 0; i < res.cells.size(); ++i) {
    const CellResult& cell = res.cells[i];
    if (!cell.attempted || !cell.ok) continue;
    out << assessment_csv_row(cell.lambda, cell.beta, cell.assessment) << ","
        << (!res.never_treat && static_cast<int>(i) == res.selected ? 1 : 0) << "\n";
  }
  return out.str();
}

}  // namespace pluc
