#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pluc/cli.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pluc;
using namespace pluc::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pluc_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

FitOptions quick_fit(const std::string& data, const std::string& out) {
  FitOptions fit;
  fit.data_path = data;
  fit.out_dir = out;
  fit.seed = 5;
  fit.lambdas = std::vector<double>{1.0, 2.0};
  fit.betas = std::vector<double>{0.0, 0.1};
  fit.fw_iterations = 8;
  fit.nuisances = "oracle";
  fit.scenario = "linear";
  return fit;
}

}  // namespace

TEST_CASE("simulate writes deterministic files with the expected shape") {
  const auto dir1 = fresh_dir("sim1"), dir2 = fresh_dir("sim2");
  SimulateOptions opt;
  opt.scenario = "linear";
  opt.n = 60;
  opt.seed = 7;
  opt.out_dir = dir1.string();
  CHECK(cmd_simulate(opt) == kExitOk);
  opt.out_dir = dir2.string();
  CHECK(cmd_simulate(opt) == kExitOk);

  const std::string data = slurp(dir1 / "data.csv");
  CHECK(data == slurp(dir2 / "data.csv"));  // byte-identical
  CHECK(slurp(dir1 / "counterfactuals.csv") == slurp(dir2 / "counterfactuals.csv"));

  // 11 header-ish lines: schema comment + header; then 60 rows
  CHECK(std::count(data.begin(), data.end(), '\n') == 2 + 60);
  std::istringstream ss(data);
  std::string schema_line, header;
  std::getline(ss, schema_line);
  std::getline(ss, header);
  CHECK(schema_line.rfind("# ", 0) == 0);
  CHECK(header ==
        "x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,a,y,xi");

  const auto manifest = nlohmann::json::parse(slurp(dir1 / "manifest.json"));
  CHECK(manifest["scenario"] == "linear");
  CHECK(manifest["seed"] == 7);

  SUBCASE("realistic emits the raw-range note") {
    const auto dir3 = fresh_dir("sim3");
    opt.scenario = "realistic";
    opt.out_dir = dir3.string();
    CHECK(cmd_simulate(opt) == kExitOk);
    const auto m3 = nlohmann::json::parse(slurp(dir3 / "manifest.json"));
    CHECK(m3["raw_ranges"] == true);
  }
}

TEST_CASE("fit produces grid outputs; identical seeds give identical bytes") {
  const auto sim_dir = fresh_dir("fit_sim");
  SimulateOptions sim;
  sim.scenario = "linear";
  sim.n = 240;
  sim.seed = 21;
  sim.out_dir = sim_dir.string();
  REQUIRE(cmd_simulate(sim) == kExitOk);

  const auto out1 = fresh_dir("fit_out1"), out2 = fresh_dir("fit_out2");
  auto fit = quick_fit((sim_dir / "data.csv").string(), out1.string());
  const int code1 = cmd_fit(fit);
  fit.out_dir = out2.string();
  const int code2 = cmd_fit(fit);
  CHECK(code1 == code2);
  CHECK((code1 == kExitOk || code1 == kExitNeverTreat));

  CHECK(slurp(out1 / "grid_result.json") == slurp(out2 / "grid_result.json"));
  CHECK(slurp(out1 / "summary.csv") == slurp(out2 / "summary.csv"));
  CHECK(slurp(out1 / "selected_policy.json") == slurp(out2 / "selected_policy.json"));

  const auto grid = nlohmann::json::parse(slurp(out1 / "grid_result.json"));
  CHECK(grid["seed"] == 5);
  CHECK(grid["cells"].is_array());
  const auto policy = nlohmann::json::parse(slurp(out1 / "selected_policy.json"));
  CHECK(policy.contains("score"));
  if (code1 == kExitNeverTreat) {
    CHECK(policy["selection"] == "never_treat");
  } else {
    CHECK(policy["selection"] == "selected");
  }

  // summary csv column contract
  std::istringstream ss(slurp(out1 / "summary.csv"));
  std::string line;
  std::getline(ss, line);  // schema
  std::getline(ss, line);
  CHECK(line == "lambda,beta,s_star,s_upper,v_star,v_lower,var_s,var_v,selected");
}

TEST_CASE("naive and pluc share the grid shape; never-treat exits with 2") {
  const auto sim_dir = fresh_dir("fit_modes");
  SimulateOptions sim;
  sim.scenario = "linear";
  sim.n = 240;
  sim.seed = 41;
  sim.out_dir = sim_dir.string();
  REQUIRE(cmd_simulate(sim) == kExitOk);

  auto fit = quick_fit((sim_dir / "data.csv").string(), "");
  std::vector<std::string> headers;
  for (const std::string mode : {"naive", "pluc"}) {
    fit.mode = mode;
    fit.out_dir = fresh_dir("fit_mode_" + mode).string();
    const int rc = cmd_fit(fit);
    CHECK((rc == kExitOk || rc == kExitNeverTreat));
    std::istringstream ss(slurp(fs::path(fit.out_dir) / "summary.csv"));
    std::string schema, header;
    std::getline(ss, schema);
    std::getline(ss, header);
    headers.push_back(header);
    // every summary row's (lambda,beta) stays inside the configured grid
    std::string line;
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string lam, bet;
      std::getline(ls, lam, ',');
      std::getline(ls, bet, ',');
      CHECK((lam == "1" || lam == "2"));
      CHECK((bet == "0" || bet == "0.10000000000000001"));
    }
  }
  CHECK(headers[0] == headers[1]);

  // a zero budget with an unconstrained criterion cannot be confidently
  // feasible: never-treat, exit code 2, recorded in json
  fit.mode = "naive";
  fit.alpha = 0.0;
  fit.lambdas = std::vector<double>{0.0};
  fit.out_dir = fresh_dir("fit_never").string();
  CHECK(cmd_fit(fit) == kExitNeverTreat);
  const auto pj = nlohmann::json::parse(slurp(fs::path(fit.out_dir) / "selected_policy.json"));
  CHECK(pj["selection"] == "never_treat");
  const auto gj = nlohmann::json::parse(slurp(fs::path(fit.out_dir) / "grid_result.json"));
  CHECK(gj["selection"] == "never_treat");
}

TEST_CASE("fit honors mode oracle requirements") {
  const auto sim_dir = fresh_dir("fit_sim_oracle");
  SimulateOptions sim;
  sim.scenario = "linear";
  sim.n = 150;
  sim.seed = 3;
  sim.out_dir = sim_dir.string();
  REQUIRE(cmd_simulate(sim) == kExitOk);

  FitOptions fit = quick_fit((sim_dir / "data.csv").string(),
                             fresh_dir("fit_oracle_out").string());
  fit.mode = "oracle";
  fit.scenario.reset();
  fit.nuisances = "glm";
  CHECK_THROWS_WITH_AS(cmd_fit(fit), doctest::Contains("requires --scenario"),
                       std::invalid_argument);
}

TEST_CASE("config file parsing") {
  const auto dir = fresh_dir("config");
  const auto cfg_path = dir / "run.cfg";

  SUBCASE("valid file applies across sections") {
    spit(cfg_path, "# comment\n[grid]\nlambdas = 1, 2.5\nalpha = 0.2\nmode = pluc\n"
                   "[fw]\nprecision = 0.1\n[sgd]\nlearning_rate = 0.05\n"
                   "[targeting]\nmax_corrections = 2\n[data]\nintercept = true\n");
    const auto cfg = parse_config_file(cfg_path.string());
    CHECK(cfg.grid.lambdas == std::vector<double>{1.0, 2.5});
    CHECK(cfg.grid.alpha == doctest::Approx(0.2));
    CHECK(cfg.grid.mode == FitMode::Pluc);
    CHECK(cfg.grid.fw.iterations == 10);  // ceil(1/0.1)
    CHECK(cfg.grid.fw.sgd.learning_rate == doctest::Approx(0.05));
    CHECK(cfg.grid.targeting.max_corrections == 2);
    CHECK(cfg.add_intercept);
  }
  SUBCASE("unknown key rejected with its line number") {
    spit(cfg_path, "[grid]\nalpha = 0.1\nbogus = 3\n");
    CHECK_THROWS_WITH_AS(parse_config_file(cfg_path.string()), doctest::Contains("line 3"),
                         std::invalid_argument);
  }
  SUBCASE("unknown section rejected") {
    spit(cfg_path, "[nope]\nx = 1\n");
    CHECK_THROWS_AS(parse_config_file(cfg_path.string()), std::invalid_argument);
  }
  SUBCASE("key outside a section rejected") {
    spit(cfg_path, "alpha = 0.1\n");
    CHECK_THROWS_AS(parse_config_file(cfg_path.string()), std::invalid_argument);
  }
}

TEST_CASE("evaluate a never-treat policy against scenarios and data") {
  const auto dir = fresh_dir("evaluate");
  const auto policy_path = dir / "policy.json";
  nlohmann::json pj;
  pj["schema"] = "pluc-policy v1";
  pj["beta"] = 0.0;
  pj["lambda"] = 1.0;
  pj["score"] = nlohmann::json::array({{{"weight", 1.0}, {"theta", "minus_one"}}});
  spit(policy_path, pj.dump(2));

  SUBCASE("scenario route gives constraint exactly -alpha") {
    EvaluateOptions ev;
    ev.policy_path = policy_path.string();
    ev.scenario = "linear";
    ev.alpha = 0.1;
    ev.mc_n = 500;
    ev.out_path = (dir / "oracle.json").string();
    CHECK(cmd_evaluate(ev) == kExitOk);
    const auto out = nlohmann::json::parse(slurp(dir / "oracle.json"));
    CHECK(out["constraint"].get<double>() == doctest::Approx(-0.1));
  }
  SUBCASE("treat-all vs small-adverse hits the analytic -0.0604") {
    nlohmann::json ta = pj;
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
    theta[0] = 1e6;
    ta["score"] = nlohmann::json::array(
        {{{"weight", 1.0}, {"theta", std::vector<double>(theta.data(), theta.data() + 10)}}});
    ta["beta"] = 0.0;
    const auto ta_path = dir / "treat_all.json";
    spit(ta_path, ta.dump());
    EvaluateOptions ev;
    ev.policy_path = ta_path.string();
    ev.scenario = "small";
    ev.alpha = 0.1;
    ev.mc_n = 400;
    ev.out_path = (dir / "small.json").string();
    CHECK(cmd_evaluate(ev) == kExitOk);
    const auto out = nlohmann::json::parse(slurp(dir / "small.json"));
    CHECK(out["constraint"].get<double>() == doctest::Approx(-0.0604).epsilon(1e-9));
  }
  SUBCASE("dataset route emits the assessment schema") {
    const auto sim_dir = fresh_dir("evaluate_sim");
    SimulateOptions sim;
    sim.scenario = "linear";
    sim.n = 120;
    sim.seed = 5;
    sim.out_dir = sim_dir.string();
    REQUIRE(cmd_simulate(sim) == kExitOk);
    EvaluateOptions ev;
    ev.policy_path = policy_path.string();
    ev.data_path = (sim_dir / "data.csv").string();
    ev.alpha = 0.1;
    ev.out_path = (dir / "assess.csv").string();
    CHECK(cmd_evaluate(ev) == kExitOk);
    std::istringstream ss(slurp(dir / "assess.csv"));
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    CHECK(line == "lambda,beta,s_star,s_upper,v_star,v_lower,var_s,var_v");
    std::getline(ss, line);
    CHECK(line.find("-0.1") != std::string::npos);  // s_star = -alpha for never-treat
  }
  SUBCASE("needs exactly one target") {
    EvaluateOptions ev;
    ev.policy_path = policy_path.string();
    ev.out_path = (dir / "x.json").string();
    CHECK_THROWS_AS(cmd_evaluate(ev), std::invalid_argument);
  }
  SUBCASE("dimension mismatch is reported") {
    const auto sim_dir = fresh_dir("evaluate_dim");
    SimulateOptions sim;
    sim.scenario = "linear";
    sim.n = 120;
    sim.seed = 5;
    sim.out_dir = sim_dir.string();
    REQUIRE(cmd_simulate(sim) == kExitOk);
    nlohmann::json narrow = pj;
    narrow["score"] = nlohmann::json::array(
        {{{"weight", 1.0}, {"theta", std::vector<double>{0.5, -0.5}}}});
    const auto np = dir / "narrow.json";
    spit(np, narrow.dump());
    EvaluateOptions ev;
    ev.policy_path = np.string();
    ev.data_path = (sim_dir / "data.csv").string();
    ev.out_path = (dir / "y.csv").string();
    CHECK_THROWS_AS(cmd_evaluate(ev), std::invalid_argument);
  }
}

TEST_CASE("certify command") {
  const auto dir = fresh_dir("certify");
  CertifyOptions ce;
  ce.iterations = 25;
  ce.lambda = 0.0;
  ce.beta = 0.0;
  ce.out_dir = dir.string();
  CHECK(cmd_certify(ce) == kExitOk);

  const std::string trace = slurp(dir / "certify_trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 2 + 26);  // J+1 rows
  const auto manifest = nlohmann::json::parse(slurp(dir / "certify_manifest.json"));
  CHECK(manifest["all_ok"] == true);
  CHECK(manifest["delta"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("sweep emits the long-format csv") {
  const auto dir = fresh_dir("sweep");
  SweepOptions sw;
  sw.scenarios = {"linear"};
  sw.modes = {"naive"};
  sw.n = 240;
  sw.replicates = 2;
  sw.seed = 3;
  sw.mc_n = 300;
  sw.out_path = (dir / "sweep.csv").string();

  // trim the grid through the config file
  const auto cfg_path = dir / "sweep.cfg";
  spit(cfg_path, "[grid]\nlambdas = 1,2\nbetas = 0,0.1\n[fw]\niterations = 6\n"
                 "[sgd]\nmax_iterations = 100\n");
  sw.config_path = cfg_path.string();

  CHECK(cmd_sweep(sw) == kExitOk);
  std::istringstream ss(slurp(dir / "sweep.csv"));
  std::string line;
  std::getline(ss, line);  // schema
  std::getline(ss, line);
  CHECK(line ==
        "replicate,mode,scenario,n,lambda,beta,value_oracle,constraint_oracle,s_upper,"
        "v_lower,selected");
  int rows = 0, selected = 0;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.back() == '1') ++selected;
  }
  CHECK(rows >= 2);       // at least one assessed cell per replicate
  CHECK(selected <= 2);   // at most one selection per replicate

  SUBCASE("realistic scenario goes through preprocessing and the transform") {
    SweepOptions rw = sw;
    rw.scenarios = {"realistic"};
    rw.n = 360;
    rw.replicates = 1;
    rw.out_path = (dir / "sweep_realistic.csv").string();
    CHECK(cmd_sweep(rw) == kExitOk);
    std::istringstream rs(slurp(dir / "sweep_realistic.csv"));
    std::string l;
    std::getline(rs, l);
    std::getline(rs, l);
    int n_rows = 0;
    while (std::getline(rs, l)) {
      if (!l.empty()) ++n_rows;
    }
    CHECK(n_rows >= 1);
  }
}

#ifdef PLUC_CLI_BINARY
TEST_CASE("binary smoke: simulate | fit | evaluate and exit codes") {
  const auto dir = fresh_dir("binary");
  const std::string bin = PLUC_CLI_BINARY;
  auto sh = [&](const std::string& args) {
    return std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
  };
  CHECK(WEXITSTATUS(sh("simulate --scenario linear --n 180 --seed 4 --out " +
                       (dir / "sim").string())) == 0);
  const int fit_rc = WEXITSTATUS(
      sh("fit --data " + (dir / "sim" / "data.csv").string() + " --seed 4 --lambdas 1 2 " +
         "--betas 0 0.1 --fw-iterations 6 --nuisances oracle --scenario linear --out " +
         (dir / "fit").string()));
  CHECK((fit_rc == 0 || fit_rc == 2));
  CHECK(WEXITSTATUS(sh("evaluate --policy " + (dir / "fit" / "selected_policy.json").string() +
                       " --scenario linear --mc-n 500 --seed 1 --alpha 0.1 --out " +
                       (dir / "eval.json").string())) == 0);
  CHECK(WEXITSTATUS(sh("fit --data /nonexistent.csv --out " + (dir / "bad").string() +
                       " --seed 1")) == 1);
}
#endif
