#include "pluc/synthdata.hpp"

#include <algorithm>
#include <cmath>

namespace pluc {

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "linear") return ScenarioKind::Linear;
  if (s == "threshold") return ScenarioKind::Threshold;
  if (s == "small") return ScenarioKind::SmallAdverse;
  if (s == "realistic") return ScenarioKind::Realistic;
  throw std::invalid_argument("unknown scenario: " + s);
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Linear: return "linear";
    case ScenarioKind::Threshold: return "threshold";
    case ScenarioKind::SmallAdverse: return "small";
    case ScenarioKind::Realistic: return "realistic";
  }
  return "?";
}

Scenario parse_scenario(const std::string& kind, bool with_baseline,
                        const std::string& propensity) {
  Scenario sc;
  sc.kind = scenario_kind_from_string(kind);
  sc.with_baseline = with_baseline;
  if (propensity == "x2") {
    sc.propensity = PropensityVariant::X2;
  } else if (propensity == "x5") {
    sc.propensity = PropensityVariant::X5;
  } else {
    throw std::invalid_argument("unknown propensity variant: " + propensity);
  }
  return sc;
}

double mean_expit_std_normal() {
  // Gauss-Hermite rule for the weight e^{-t^2} via the Golub-Welsch Jacobi
  // matrix; E[f(eps)] = pi^{-1/2} sum_i w_i f(sqrt(2) t_i).
  static const double value = [] {
    const int m = 40;
    Mat J = Mat::Zero(m, m);
    for (int i = 1; i < m; ++i) {
      const double b = std::sqrt(i / 2.0);
      J(i, i - 1) = b;
      J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(J);
    const Vec nodes = es.eigenvalues();
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const double w = std::sqrt(M_PI) * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
      acc += w * expit(std::sqrt(2.0) * nodes[i]);
    }
    return acc / std::sqrt(M_PI);
  }();
  return value;
}

double Scenario::treatment_effect(int a, const Vec& x) const {
  const double sgn = 2.0 * a - 1.0;
  switch (kind) {
    case ScenarioKind::Linear:
    case ScenarioKind::SmallAdverse:
      return 2.0 * sgn * (1.0 - x[0] - x[1]);
    case ScenarioKind::Threshold: {
      double level;
      if (x[0] > 0.4 && x[1] > 0.6) {
        level = 1.1;
      } else if (x[0] <= 0.4 && x[1] <= 0.6) {
        level = -0.9;
      } else {
        level = 0.1;
      }
      return sgn * level;
    }
    case ScenarioKind::Realistic:
      return sgn * (-4.0 + 0.1 * x[0]);
  }
  return 0.0;
}

double Scenario::mean_outcome(int a, const Vec& x) const {
  const double f = treatment_effect(a, x);
  if (kind == ScenarioKind::Realistic) {
    return 0.4 * x[3] - 0.2 * x[4] + f;  // E[eps_Y] = 0
  }
  const double noise_mean = mean_expit_std_normal();
  if (with_baseline) {
    return 0.55 * expit(f) + 0.35 * expit(3.0 * x[2] - x[3]) + 0.05 * noise_mean;
  }
  return 0.95 * expit(f) + 0.05 * noise_mean;
}

double Scenario::nu0(int a, const Vec& x) const {
  double base;
  switch (kind) {
    case ScenarioKind::Linear: base = 0.25; break;
    case ScenarioKind::Threshold: base = 0.1; break;
    case ScenarioKind::SmallAdverse:
    case ScenarioKind::Realistic: base = 0.01; break;
    default: base = 0.0;
  }
  if (a == 0) return base;
  return base + (1.0 - base) * adverse_jump(x);
}

double Scenario::adverse_jump(const Vec& x) const {
  switch (kind) {
    case ScenarioKind::Linear:
      return expit(4.0 * (x[1] - 0.5));
    case ScenarioKind::Threshold:
      return 0.1 + 0.9 * ((x[2] > 0.2 && x[2] < 0.8 && x[3] > 0.25 && x[3] < 0.75) ? 1.0 : 0.0);
    case ScenarioKind::SmallAdverse:
      return 0.04;
    case ScenarioKind::Realistic:
      if (x[2] == 1.0) return 1.0;
      return (x[1] == 1.0 && x[2] == 0.0) ? 0.35 : 0.0;
  }
  return 0.0;
}

double Scenario::propensity_score(const Vec& x) const {
  if (kind == ScenarioKind::Realistic) {
    return expit(-0.5 * x[1] + 0.2 * x[4] + 0.6 * (x[3] - 5.5));
  }
  const int j = propensity == PropensityVariant::X2 ? 1 : 4;
  return expit(4.0 * (x[j] - 0.5));
}

Vec draw_covariates(const Scenario& sc, Rng& rng) {
  Vec x(sc.dim());
  if (sc.kind == ScenarioKind::Realistic) {
    x[0] = rng.uniform(16.0, 65.0);
    x[1] = static_cast<double>(rng.bernoulli(0.5));
    const double p3 = (x[0] >= 18.0 && x[0] <= 45.0 && x[1] == 1.0) ? 0.3 : 0.0;
    x[2] = static_cast<double>(rng.bernoulli(p3));
    x[3] = rng.uniform(0.0, 10.0);
    x[4] = rng.uniform(0.0, 10.0);
  } else {
    for (int j = 0; j < x.size(); ++j) x[j] = rng.uniform01();
  }
  return x;
}

namespace {

double draw_outcome(const Scenario& sc, int a, const Vec& x, Rng& rng) {
  const double f = sc.treatment_effect(a, x);
  if (sc.kind == ScenarioKind::Realistic) {
    return 0.4 * x[3] - 0.2 * x[4] + f + 0.5 * rng.normal();
  }
  if (sc.with_baseline) {
    return 0.55 * expit(f) + 0.35 * expit(3.0 * x[2] - x[3]) + 0.05 * expit(rng.normal());
  }
  return 0.95 * expit(f) + 0.05 * expit(rng.normal());
}

}  // namespace

std::pair<Dataset, std::vector<CounterfactualRow>> generate(const Scenario& sc, int n,
                                                            uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate: n must be >= 1");
  Rng rng(derive_seed(seed, 0x5ce9a710));
  std::vector<CounterfactualRow> rows;
  std::vector<Observation> obs;
  rows.reserve(n);
  obs.reserve(n);
  for (int i = 0; i < n; ++i) {
    CounterfactualRow r;
    r.x = draw_covariates(sc, rng);
    r.a = rng.bernoulli(sc.propensity_score(r.x));
    // independent noise per arm
    r.y0 = draw_outcome(sc, 0, r.x, rng);
    r.y1 = draw_outcome(sc, 1, r.x, rng);
    r.xi0 = rng.bernoulli(sc.nu0(0, r.x));
    r.xi1 = r.xi0 == 1 ? 1 : rng.bernoulli(sc.adverse_jump(r.x));
    r.observed.x = r.x;
    r.observed.a = r.a;
    r.observed.y = r.a == 1 ? r.y1 : r.y0;
    r.observed.xi = r.a == 1 ? r.xi1 : r.xi0;
    obs.push_back(r.observed);
    rows.push_back(std::move(r));
  }
  const bool unit = sc.kind != ScenarioKind::Realistic;
  return {make_dataset(std::move(obs), unit), std::move(rows)};
}

OracleMetrics oracle_metrics(const Scenario& sc, const PolicyFn& policy, double alpha,
                             int mc_n, uint64_t seed) {
  if (mc_n < 1) throw std::invalid_argument("oracle_metrics: mc_n must be >= 1");
  Rng rng(derive_seed(seed, 0x0eac1e));
  double value = 0.0, excess = 0.0;
  for (int i = 0; i < mc_n; ++i) {
    const Vec x = draw_covariates(sc, rng);
    const double pi = policy(x);
    value += pi * sc.mean_outcome(1, x) + (1.0 - pi) * sc.mean_outcome(0, x);
    excess += pi * sc.delta_nu(x);
  }
  OracleMetrics m;
  m.value = value / mc_n;
  m.constraint = excess / mc_n - alpha;
  return m;
}

Vec TransformRecord::transform_x(const Vec& raw) const {
  if (raw.size() != static_cast<Eigen::Index>(x_cols.size())) {
    throw std::invalid_argument("transform_x: dimension mismatch");
  }
  Vec out(raw.size());
  for (int j = 0; j < raw.size(); ++j) {
    out[j] = (raw[j] - x_cols[j].lo) / (x_cols[j].hi - x_cols[j].lo);
  }
  return out;
}

std::pair<Dataset, TransformRecord> preprocess_realistic(const Dataset& raw) {
  TransformRecord rec;
  rec.x_cols.resize(raw.d);
  for (int j = 0; j < raw.d; ++j) {
    double lo = raw.obs[0].x[j], hi = lo;
    for (const auto& o : raw.obs) {
      lo = std::min(lo, o.x[j]);
      hi = std::max(hi, o.x[j]);
    }
    if (hi - lo < 1e-12) {
      throw std::invalid_argument("preprocess: covariate column x" + std::to_string(j + 1) +
                                  " is constant");
    }
    rec.x_cols[j] = {lo, hi};
  }
  {
    double lo = raw.obs[0].y, hi = lo;
    for (const auto& o : raw.obs) {
      lo = std::min(lo, o.y);
      hi = std::max(hi, o.y);
    }
    if (hi - lo < 1e-12) throw std::invalid_argument("preprocess: outcome column y is constant");
    rec.y = {lo, hi};
  }
  std::vector<Observation> scaled;
  scaled.reserve(raw.obs.size());
  for (const auto& o : raw.obs) {
    Observation s;
    s.x = rec.transform_x(o.x);
    s.a = o.a;
    s.y = (o.y - rec.y.lo) / (rec.y.hi - rec.y.lo);
    s.xi = o.xi;
    scaled.push_back(std::move(s));
  }
  return {make_dataset(std::move(scaled), true), rec};
}

}  // namespace pluc
