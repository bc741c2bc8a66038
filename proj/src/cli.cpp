#include "pluc/cli.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pluc::cli {

namespace fs = std::filesystem;

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_double_list(const std::string& s, int line_no) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": bad number '" + tok + "'");
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty list");
  }
  return out;
}

double parse_number(const std::string& s, int line_no) {
  try {
    return std::stod(trim(s));
  } catch (const std::exception&) {
    throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad number '" +
                                s + "'");
  }
}

bool parse_bool(const std::string& s, int line_no) {
  const std::string v = trim(s);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config line " + std::to_string(line_no) + ": bad boolean '" +
                              s + "'");
}

nlohmann::json transform_to_json(const TransformRecord& rec) {
  nlohmann::json j;
  j["x"] = nlohmann::json::array();
  for (const auto& c : rec.x_cols) j["x"].push_back({{"lo", c.lo}, {"hi", c.hi}});
  j["y"] = {{"lo", rec.y.lo}, {"hi", rec.y.hi}};
  return j;
}

TransformRecord transform_from_json(const nlohmann::json& j) {
  TransformRecord rec;
  for (const auto& c : j.at("x")) {
    rec.x_cols.push_back({c.at("lo").get<double>(), c.at("hi").get<double>()});
  }
  rec.y = {j.at("y").at("lo").get<double>(), j.at("y").at("hi").get<double>()};
  return rec;
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value, int line_no) {
  const auto unknown = [&]() -> std::invalid_argument {
    return std::invalid_argument("config line " + std::to_string(line_no) +
                                 ": unknown key '" + key + "' in section [" + section + "]");
  };
  if (section == "grid") {
    if (key == "lambdas") cfg.grid.lambdas = parse_double_list(value, line_no);
    else if (key == "betas") cfg.grid.betas = parse_double_list(value, line_no);
    else if (key == "alpha") cfg.grid.alpha = parse_number(value, line_no);
    else if (key == "mode") cfg.grid.mode = fit_mode_from_string(trim(value));
    else if (key == "exhaustive") cfg.grid.exhaustive_grid = parse_bool(value, line_no);
    else if (key == "threads") cfg.grid.threads = static_cast<int>(parse_number(value, line_no));
    else if (key == "oracle_grid_n")
      cfg.grid.oracle_grid_n = static_cast<int>(parse_number(value, line_no));
    else throw unknown();
  } else if (section == "fw") {
    if (key == "iterations") cfg.grid.fw.iterations = static_cast<int>(parse_number(value, line_no));
    else if (key == "precision")
      cfg.grid.fw.iterations = FWConfig::from_precision(parse_number(value, line_no)).iterations;
    else throw unknown();
  } else if (section == "sgd") {
    if (key == "tolerance") cfg.grid.fw.sgd.tolerance = parse_number(value, line_no);
    else if (key == "learning_rate") cfg.grid.fw.sgd.learning_rate = parse_number(value, line_no);
    else if (key == "batch_fraction") cfg.grid.fw.sgd.batch_fraction = parse_number(value, line_no);
    else if (key == "max_iterations")
      cfg.grid.fw.sgd.max_iterations = static_cast<int>(parse_number(value, line_no));
    else throw unknown();
  } else if (section == "targeting") {
    if (key == "gamma_tol") cfg.grid.targeting.gamma_tol = parse_number(value, line_no);
    else if (key == "max_corrections")
      cfg.grid.targeting.max_corrections = static_cast<int>(parse_number(value, line_no));
    else throw unknown();
  } else if (section == "data") {
    if (key == "intercept") cfg.add_intercept = parse_bool(value, line_no);
    else if (key == "nuisances") cfg.nuisances = trim(value);
    else throw unknown();
  } else {
    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                ": unknown section [" + section + "]");
  }
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  RunConfig cfg;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    }
    if (section.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key outside any section");
    }
    apply_config_line(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line_no);
  }
  return cfg;
}

int cmd_simulate(const SimulateOptions& opt) {
  const Scenario sc = parse_scenario(opt.scenario, opt.with_baseline, opt.propensity);
  fs::create_directories(opt.out_dir);
  auto [data, rows] = generate(sc, opt.n, opt.seed);

  const std::string data_path = (fs::path(opt.out_dir) / "data.csv").string();
  const std::string cf_path = (fs::path(opt.out_dir) / "counterfactuals.csv").string();
  save_dataset_csv(data, data_path);
  {
    std::ostringstream out;
    out << "# pluc-counterfactuals v1\n";
    out << "y0,y1,xi0,xi1\n";
    char buf[96];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d,%d\n", r.y0, r.y1, r.xi0, r.xi1);
      out << buf;
    }
    write_text(cf_path, out.str());
  }

  nlohmann::json manifest;
  manifest["schema"] = "pluc-scenario-manifest v1";
  manifest["scenario"] = to_string(sc.kind);
  manifest["with_baseline"] = sc.with_baseline;
  manifest["propensity"] = sc.propensity == PropensityVariant::X2 ? "x2" : "x5";
  manifest["n"] = opt.n;
  manifest["seed"] = opt.seed;
  manifest["files"] = {{"data", "data.csv"}, {"counterfactuals", "counterfactuals.csv"}};
  manifest["raw_ranges"] = sc.kind == ScenarioKind::Realistic;
  if (sc.kind == ScenarioKind::Realistic) {
    manifest["note"] = "covariates and y are raw-range; run fit with --preprocess";
    // per-column min-max of this sample, the stats --preprocess would use
    const auto [scaled, rec] = preprocess_realistic(data);
    manifest["preprocessing"] = transform_to_json(rec);
  }
  write_json((fs::path(opt.out_dir) / "manifest.json").string(), manifest);
  return kExitOk;
}

namespace {

Dataset append_intercept_column(const Dataset& data) {
  std::vector<Observation> obs = data.obs;
  for (auto& o : obs) {
    Vec x(o.x.size() + 1);
    x.head(o.x.size()) = o.x;
    x[o.x.size()] = 1.0;
    o.x = std::move(x);
  }
  return make_dataset(std::move(obs), false);
}

struct AssembledRun {
  GridConfig grid;
  NuisanceSpec nuisance_spec;
  bool add_intercept = false;
};

AssembledRun assemble_run(const FitOptions& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty()) cfg = parse_config_file(opt.config_path);
  if (opt.mode) cfg.grid.mode = fit_mode_from_string(*opt.mode);
  if (opt.alpha) cfg.grid.alpha = *opt.alpha;
  if (opt.lambdas) cfg.grid.lambdas = *opt.lambdas;
  if (opt.betas) cfg.grid.betas = *opt.betas;
  if (opt.fw_iterations) cfg.grid.fw.iterations = *opt.fw_iterations;
  if (opt.fw_precision) {
    cfg.grid.fw.iterations = FWConfig::from_precision(*opt.fw_precision).iterations;
  }
  if (opt.exhaustive_grid) cfg.grid.exhaustive_grid = *opt.exhaustive_grid;
  if (opt.threads) cfg.grid.threads = *opt.threads;
  if (opt.gamma_tol) cfg.grid.targeting.gamma_tol = *opt.gamma_tol;
  if (opt.max_corrections) cfg.grid.targeting.max_corrections = *opt.max_corrections;
  if (opt.nuisances) cfg.nuisances = *opt.nuisances;
  if (opt.add_intercept) cfg.add_intercept = true;

  std::optional<Scenario> sc;
  if (opt.scenario) sc = parse_scenario(*opt.scenario, opt.with_baseline, opt.propensity);
  if (cfg.grid.mode == FitMode::Oracle && !sc) {
    throw std::invalid_argument("--mode oracle requires --scenario");
  }
  cfg.grid.scenario = sc;

  AssembledRun run;
  run.grid = cfg.grid;
  run.add_intercept = cfg.add_intercept;
  if (cfg.nuisances == "glm") {
    run.nuisance_spec = NuisanceSpec::glm();
  } else if (cfg.nuisances == "oracle") {
    if (!sc) throw std::invalid_argument("oracle nuisances require --scenario");
    run.nuisance_spec = NuisanceSpec::oracle(*sc);
  } else {
    throw std::invalid_argument("unknown nuisances option: " + cfg.nuisances);
  }
  return run;
}

}  // namespace

int cmd_fit(const FitOptions& opt) {
  AssembledRun run_spec = assemble_run(opt);
  fs::create_directories(opt.out_dir);

  Dataset data = load_dataset_csv(opt.data_path, !opt.preprocess);
  std::optional<TransformRecord> transform;
  if (opt.preprocess) {
    auto [scaled, rec] = preprocess_realistic(data);
    data = std::move(scaled);
    transform = rec;
  }
  if (run_spec.add_intercept) data = append_intercept_column(data);

  const GridResult res = run(data, run_spec.grid, run_spec.nuisance_spec, opt.seed);

  nlohmann::json result_json = grid_result_to_json(res, run_spec.grid);
  if (transform) result_json["transform"] = transform_to_json(*transform);
  result_json["intercept_appended"] = run_spec.add_intercept;
  write_json((fs::path(opt.out_dir) / "grid_result.json").string(), result_json);
  write_text((fs::path(opt.out_dir) / "summary.csv").string(), grid_summary_csv(res));

  // alternating diagnostics for the selected cell, when any
  if (!res.never_treat && !res.selected_cell().alternating.empty()) {
    write_text((fs::path(opt.out_dir) / "alternating.csv").string(),
               alternating_diagnostics_csv(res.selected_cell().alternating,
                                           run_spec.grid.targeting.max_corrections));
  }

  nlohmann::json policy_json;
  policy_json["schema"] = "pluc-policy v1";
  const SmoothPolicy pol = res.policy();
  policy_json["beta"] = pol.beta;
  policy_json["score"] = score_to_json(pol.score);
  policy_json["alpha"] = run_spec.grid.alpha;
  policy_json["seed"] = opt.seed;
  if (transform) policy_json["transform"] = transform_to_json(*transform);
  policy_json["intercept_appended"] = run_spec.add_intercept;
  if (res.never_treat) {
    policy_json["selection"] = "never_treat";
    policy_json["lambda"] = 0.0;
  } else {
    policy_json["selection"] = "selected";
    policy_json["lambda"] = res.lambda_star;
    // recommendation rule per the threshold-selection step
    const NuisanceModel nuis3 =
        estimate_nuisances(data, res.folds.n3, run_spec.nuisance_spec);
    const ThresholdSelection ts = select_threshold(pol, nuis3, data, res.folds.n3,
                                                   run_spec.grid.alpha,
                                                   default_threshold_grid());
    if (ts.never_treat) {
      policy_json["threshold"] = "never_treat";
    } else {
      policy_json["threshold"] = ts.t;
      policy_json["threshold_assessment"] = {{"s_upper", ts.assessment.s_upper},
                                             {"v_lower", ts.assessment.v_lower}};
    }
  }
  write_json((fs::path(opt.out_dir) / "selected_policy.json").string(), policy_json);
  return res.never_treat ? kExitNeverTreat : kExitOk;
}

namespace {

struct LoadedPolicy {
  SmoothPolicy policy;
  double lambda = 0.0;
  std::optional<double> threshold;
  std::optional<TransformRecord> transform;
  bool intercept_appended = false;
};

LoadedPolicy load_policy(const std::string& path) {
  const nlohmann::json j = read_json(path);
  LoadedPolicy lp;
  lp.policy.beta = j.at("beta").get<double>();
  lp.policy.score = score_from_json(j.at("score"));
  lp.lambda = j.value("lambda", 0.0);
  if (j.contains("threshold") && j["threshold"].is_number()) {
    lp.threshold = j["threshold"].get<double>();
  }
  if (j.contains("transform")) lp.transform = transform_from_json(j["transform"]);
  lp.intercept_appended = j.value("intercept_appended", false);
  return lp;
}

// Policy as seen from raw covariate space (undoing preprocessing/intercept).
PolicyFn raw_space_policy(const LoadedPolicy& lp) {
  const SmoothPolicy pol = lp.policy;
  const std::optional<TransformRecord> tr = lp.transform;
  const bool intercept = lp.intercept_appended;
  return [pol, tr, intercept](const Vec& raw) {
    Vec x = tr ? tr->transform_x(raw) : raw;
    if (intercept) {
      Vec padded(x.size() + 1);
      padded.head(x.size()) = x;
      padded[x.size()] = 1.0;
      x = std::move(padded);
    }
    return eval_policy(pol, x);
  };
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& opt) {
  if (!opt.scenario == !opt.data_path) {
    throw std::invalid_argument("evaluate needs exactly one of --scenario or --data");
  }
  const LoadedPolicy lp = load_policy(opt.policy_path);

  if (opt.scenario) {
    const Scenario sc = parse_scenario(*opt.scenario, opt.with_baseline, opt.propensity);
    const OracleMetrics m =
        oracle_metrics(sc, raw_space_policy(lp), opt.alpha, opt.mc_n, opt.seed);
    nlohmann::json j;
    j["schema"] = "pluc-oracle-evaluation v1";
    j["scenario"] = to_string(sc.kind);
    j["alpha"] = opt.alpha;
    j["mc_n"] = opt.mc_n;
    j["seed"] = opt.seed;
    j["value"] = m.value;
    j["constraint"] = m.constraint;
    write_json(opt.out_path, j);
    return kExitOk;
  }

  Dataset data = load_dataset_csv(*opt.data_path, true);
  for (const Atom& atom : lp.policy.score.atoms) {
    if (!atom.minus_one && atom.theta.size() != data.d) {
      throw std::invalid_argument("policy expects " + std::to_string(atom.theta.size()) +
                                  " covariates but the dataset has " + std::to_string(data.d));
    }
  }
  std::vector<int> all(data.n());
  for (int i = 0; i < data.n(); ++i) all[i] = i;
  // fold-3 style assessment: initial estimators fitted on the same fold
  const NuisanceModel nuis = estimate_nuisances(data, all, NuisanceSpec::glm());
  PolicyFn pol = [&](const Vec& x) { return eval_policy(lp.policy, x); };
  const PolicyAssessment a = assess_policy(pol, nuis, data, all, opt.alpha);
  std::ostringstream out;
  out << "# pluc-assessment v1\n";
  out << assessment_csv_header() << "\n";
  out << assessment_csv_row(lp.lambda, lp.policy.beta, a) << "\n";
  write_text(opt.out_path, out.str());
  return kExitOk;
}

int cmd_sweep(const SweepOptions& opt) {
  RunConfig base;
  if (!opt.config_path.empty()) base = parse_config_file(opt.config_path);
  base.grid.alpha = opt.alpha;
  base.grid.threads = opt.threads;

  std::ostringstream out;
  out << "# pluc-sweep v1\n";
  out << "replicate,mode,scenario,n,lambda,beta,value_oracle,constraint_oracle,s_upper,"
         "v_lower,selected\n";
  char buf[340];

  for (const std::string& scen_name : opt.scenarios) {
    const Scenario sc = parse_scenario(scen_name);
    for (const std::string& mode_name : opt.modes) {
      const FitMode mode = fit_mode_from_string(mode_name);
      for (int rep = 0; rep < opt.replicates; ++rep) {
        const uint64_t rep_seed = derive_seed(
            opt.seed, fnv1a(scen_name + "/" + mode_name) + static_cast<uint64_t>(rep));
        auto [data, rows] = generate(sc, opt.n, rep_seed);
        std::optional<TransformRecord> transform;
        if (sc.kind == ScenarioKind::Realistic) {
          auto [scaled, rec] = preprocess_realistic(data);
          data = std::move(scaled);
          transform = rec;
        }
        GridConfig grid = base.grid;
        grid.mode = mode;
        grid.scenario = sc;
        const GridResult res = run(data, grid, NuisanceSpec::glm(), rep_seed);

        for (size_t ci = 0; ci < res.cells.size(); ++ci) {
          const CellResult& cell = res.cells[ci];
          if (!cell.attempted || !cell.ok) continue;
          const SmoothPolicy pol{cell.beta, cell.psi};
          PolicyFn raw_pol = [&](const Vec& raw) {
            const Vec x = transform ? transform->transform_x(raw) : raw;
            return eval_policy(pol, x);
          };
          const OracleMetrics m =
              oracle_metrics(sc, raw_pol, opt.alpha, opt.mc_n, derive_seed(rep_seed, ci));
          const bool is_sel = !res.never_treat && static_cast<int>(ci) == res.selected;
          std::snprintf(buf, sizeof(buf),
                        "%d,%s,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", rep,
                        mode_name.c_str(), scen_name.c_str(), opt.n, cell.lambda, cell.beta,
                        m.value, m.constraint, cell.assessment.s_upper,
                        cell.assessment.v_lower, is_sel ? 1 : 0);
          out << buf;
        }
      }
    }
  }
  write_text(opt.out_path, out.str());
  return kExitOk;
}

LagrangianProblem certify_toy_problem(double lambda, double beta, double alpha) {
  const int m = 50;
  Mat X(m, 1);
  for (int i = 0; i < m; ++i) X(i, 0) = (i + 0.5) / m;
  return LagrangianProblem{
      CriterionContext::make(
          X, [](const Vec& x) { return 0.8 - 1.6 * x[0]; },
          [](const Vec& x) { return x[0]; }, alpha),
      lambda, beta};
}

std::vector<Atom> certify_toy_candidates() {
  std::vector<Atom> atoms;
  atoms.push_back(Atom::constant_minus_one());
  for (int t = -10; t <= 10; t += 2) {
    Vec theta(1);
    theta[0] = static_cast<double>(t);
    atoms.push_back(Atom::logistic(std::move(theta)));
  }
  return atoms;
}

int cmd_certify(const CertifyOptions& opt) {
  const LagrangianProblem prob = certify_toy_problem(opt.lambda, opt.beta, opt.alpha);
  const std::vector<Atom> candidates = certify_toy_candidates();
  const CertifyReport rep = certify_frank_wolfe(prob, candidates, opt.iterations);

  fs::create_directories(opt.out_dir);
  write_text((fs::path(opt.out_dir) / "certify_trace.csv").string(), rep.to_csv());
  nlohmann::json j;
  j["schema"] = "pluc-certify-manifest v1";
  j["iterations"] = opt.iterations;
  j["lambda"] = opt.lambda;
  j["beta"] = opt.beta;
  j["alpha"] = opt.alpha;
  j["optimum"] = rep.optimum;
  j["delta"] = rep.delta;
  j["curvature"] = rep.curvature;
  j["all_ok"] = rep.all_ok;
  write_json((fs::path(opt.out_dir) / "certify_manifest.json").string(), j);
  return rep.all_ok ? kExitOk : kExitError;
}

}  // namespace pluc::cli
