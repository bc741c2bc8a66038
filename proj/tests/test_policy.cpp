#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pluc/policy.hpp"
#include "test_helpers.hpp"

#include <nlohmann/json.hpp>

using namespace pluc;

TEST_CASE("eval_score basics") {
  const Vec x = Vec::Constant(3, 0.4);

  const auto minus_one = ScoreFunction::constant_minus_one();
  CHECK(eval_score(minus_one, x) == doctest::Approx(-1.0));

  ScoreFunction zero_atom;
  zero_atom.atoms.push_back(Atom::logistic(Vec::Zero(3)));
  zero_atom.weights = Vec::Ones(1);
  CHECK(eval_score(zero_atom, x) == doctest::Approx(0.0));

  ScoreFunction half;
  half.atoms.push_back(Atom::constant_minus_one());
  half.atoms.push_back(Atom::logistic(Vec::Zero(3)));
  half.weights = Vec::Constant(2, 0.5);
  CHECK(eval_score(half, x) == doctest::Approx(-0.5));

  ScoreFunction bad;
  bad.atoms.push_back(Atom::logistic(Vec::Zero(2)));
  bad.weights = Vec::Ones(1);
  CHECK_THROWS_AS(eval_score(bad, x), std::invalid_argument);
}

TEST_CASE("eval_policy composes sigma with the score") {
  SmoothPolicy never{3.0, ScoreFunction::constant_minus_one()};
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    Vec x(2);
    x << rng.uniform01(), rng.uniform01();
    CHECK(eval_policy(never, x) == doctest::Approx(0.0));
  }

  ScoreFunction zero_atom;
  zero_atom.atoms.push_back(Atom::logistic(Vec::Zero(2)));
  zero_atom.weights = Vec::Ones(1);
  // beta = 0: sigma0(0) = 0.5; shifted example via mixture value 0.2
  ScoreFunction s02;
  s02.atoms.push_back(Atom::constant_minus_one());
  s02.atoms.push_back(Atom::logistic(Vec::Zero(2)));
  s02.weights = Vec(2);
  s02.weights << 0.0, 1.0;
  (void)s02;
  SmoothPolicy p0{0.0, zero_atom};
  CHECK(eval_policy(p0, Vec::Zero(2)) == doctest::Approx(0.5));
  SmoothPolicy p1{1.0, zero_atom};
  CHECK(eval_policy(p1, Vec::Zero(2)) == doctest::Approx(0.37988549304172248).epsilon(1e-14));
}

TEST_CASE("threshold rule semantics") {
  ScoreFunction zero_atom;
  zero_atom.atoms.push_back(Atom::logistic(Vec::Zero(2)));
  zero_atom.weights = Vec::Ones(1);
  const SmoothPolicy base{0.0, zero_atom};  // policy == 0.5 everywhere
  const Vec x = Vec::Zero(2);

  CHECK(eval_threshold({base, 0.0}, x) == 1);   // pi >= 0 always
  CHECK(eval_threshold({base, 0.5}, x) == 1);   // boundary uses >=
  CHECK(eval_threshold({base, 0.51}, x) == 0);
  CHECK(eval_threshold({base, 1.0}, x) == 0);

  SmoothPolicy treat_all{0.0, zero_atom};
  // policy value exactly 1 at t=1 boundary
  ScoreFunction one_ish;
  one_ish.atoms.push_back(Atom::logistic(Vec::Constant(2, 600.0)));
  one_ish.weights = Vec::Ones(1);
  const SmoothPolicy p{0.0, one_ish};
  CHECK(eval_policy(p, Vec::Constant(2, 1.0)) == doctest::Approx(1.0));
  CHECK(eval_threshold({p, 1.0}, Vec::Constant(2, 1.0)) == 1);
}

TEST_CASE("combine replaces, keeps, and merges") {
  const auto psi0 = ScoreFunction::constant_minus_one();
  Vec th(2);
  th << 1.0, -2.0;
  const Atom s = Atom::logistic(th);

  SUBCASE("gamma = 1 replaces everything") {
    const auto out = combine(psi0, s, 1.0);
    REQUIRE(out.size() == 1);
    CHECK(out.atoms[0].same_as(s));
    CHECK(out.weights[0] == doctest::Approx(1.0));
  }
  SUBCASE("gamma = 0 keeps psi") {
    const auto out = combine(psi0, s, 0.0);
    REQUIRE(out.size() == 1);
    CHECK(out.atoms[0].minus_one);
  }
  SUBCASE("two-step recursion gives (1/3, 2/3)") {
    Vec th1(2);
    th1 << 0.5, 0.5;
    const Atom s1 = Atom::logistic(th1);
    auto psi = combine(psi0, s, 1.0);       // j=0, gamma=1
    psi = combine(psi, s1, 2.0 / 3.0);      // j=1, gamma=2/3
    REQUIRE(psi.size() == 2);
    CHECK(psi.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(psi.weights[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("identical atoms merge") {
    auto psi = combine(psi0, s, 0.5);
    psi = combine(psi, s, 0.5);
    REQUIRE(psi.size() == 2);
    double total = psi.weights.sum();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("weight simplex preserved under arbitrary combine sequences") {
  Rng rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    auto psi = ScoreFunction::constant_minus_one();
    for (int step = 0; step < 25; ++step) {
      Vec theta(3);
      for (int j = 0; j < 3; ++j) theta[j] = 6.0 * (rng.uniform01() - 0.5);
      const Atom s = rng.uniform01() < 0.15 ? Atom::constant_minus_one()
                                            : Atom::logistic(std::move(theta));
      psi = combine(psi, s, rng.uniform01());
    }
    CHECK(std::abs(psi.weights.sum() - 1.0) <= 1e-10);
    CHECK((psi.weights.array() >= 0.0).all());
  }
}

TEST_CASE("closed-form Frank-Wolfe weights after J combine steps") {
  for (int J : {1, 2, 5, 17, 40}) {
    auto psi = ScoreFunction::constant_minus_one();
    std::vector<Atom> atoms;
    for (int j = 0; j < J; ++j) {
      Vec theta(1);
      theta << static_cast<double>(j + 1);  // pairwise distinct
      atoms.push_back(Atom::logistic(std::move(theta)));
      psi = combine(psi, atoms.back(), 2.0 / (2.0 + j));
    }
    REQUIRE(psi.size() == J);
    for (int j = 1; j <= J; ++j) {
      const double expect = 2.0 * j / (static_cast<double>(J) * (J + 1));
      CHECK(std::abs(psi.weights[j - 1] - expect) <= 1e-12);
      CHECK(psi.atoms[j - 1].same_as(atoms[j - 1]));
    }
  }
}

TEST_CASE("eval_score stays in [-1,1] on random inputs") {
  Rng rng(23);
  for (int rep = 0; rep < 10000; ++rep) {
    const auto psi = testing::random_score(rng, 3);
    Vec x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform01();
    const double v = eval_score(psi, x);
    CHECK(v >= -1.0 - 1e-12);
    CHECK(v <= 1.0 + 1e-12);
  }
}

TEST_CASE("score json round trip is exact") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const auto psi = testing::random_score(rng, 4);
    const auto j = score_to_json(psi);
    const auto text = j.dump();
    const auto back = score_from_json(nlohmann::json::parse(text));
    REQUIRE(back.size() == psi.size());
    for (int k = 0; k < psi.size(); ++k) {
      CHECK(back.weights[k] == psi.weights[k]);  // bitwise
      CHECK(back.atoms[k].same_as(psi.atoms[k]));
    }
  }
  CHECK_THROWS_AS(score_from_json(nlohmann::json::array()), std::invalid_argument);
}
