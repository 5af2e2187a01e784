#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "psrl/environments.hpp"
#include "psrl/trajectory_prob.hpp"

using namespace psrl;

TEST_CASE("tiger kernels") {
  const PomdpModel m = make_tiger({0.3, 10, 0.99});
  CHECK(validate_model(m).empty());
  CHECK(m.num_states == 5);
  CHECK(m.num_actions == 3);
  CHECK(m.num_obs == 5);
  for (int h = 0; h < 10; ++h) {
    CHECK(m.observation(h, tiger::kTigerLeft, tiger::kHearLeft) == doctest::Approx(0.8));
    CHECK(m.observation(h, tiger::kTigerLeft, tiger::kHearRight) == doctest::Approx(0.2));
    CHECK(m.observation(h, tiger::kTigerRight, tiger::kHearRight) == doctest::Approx(0.8));
    CHECK(m.observation(h, tiger::kTigerRight, tiger::kHearLeft) == doctest::Approx(0.2));
  }
  CHECK(m.transition(0, tiger::kTigerLeft, tiger::kOpenLeft, tiger::kDead) == 1.0);
  CHECK(m.transition(0, tiger::kTigerLeft, tiger::kOpenRight, tiger::kAlive) == 1.0);
  CHECK(m.transition(3, tiger::kDead, tiger::kListen, tiger::kEnd) == 1.0);
  CHECK(m.transition(3, tiger::kEnd, tiger::kOpenLeft, tiger::kEnd) == 1.0);

  const PomdpModel flat = make_tiger({0.0, 2, 0.99});
  CHECK(flat.observation(0, tiger::kTigerLeft, tiger::kHearLeft) == 0.5);
  CHECK(flat.observation(0, tiger::kTigerRight, tiger::kHearLeft) == 0.5);
  CHECK_THROWS_AS(make_tiger({0.6, 2, 0.99}), std::invalid_argument);
}

TEST_CASE("tiger rewards map back to the native scale") {
  const PomdpModel m = make_tiger({0.3, 10, 0.99});
  auto raw = [&](int h, int o, int a) { return kTigerRewardScale.scale * m.reward(h, o, a) + kTigerRewardScale.offset; };
  // One-based step h+1 discounts eaten by beta^h, listening costs beta^(h+1).
  CHECK(raw(0, tiger::kObsDead, tiger::kOpenLeft) == doctest::Approx(-100));
  CHECK(raw(2, tiger::kObsAlive, tiger::kOpenLeft) == doctest::Approx(10 * 0.99 * 0.99));
  CHECK(raw(4, tiger::kHearLeft, tiger::kListen) == doctest::Approx(-std::pow(0.99, 5)));
  CHECK(raw(4, tiger::kHearLeft, tiger::kOpenRight) == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& r : m.rewards) {
    CHECK(r.minCoeff() >= 0.0);
    CHECK(r.maxCoeff() <= 1.0);
  }
}

TEST_CASE("lock structure") {
  const PomdpModel m = make_lock({3, 3, 0.2, {2, 0}});
  CHECK(validate_model(m).empty());
  CHECK(m.transition(0, 0, 2, 0) == 1.0);
  CHECK(m.transition(0, 0, 1, 1) == 1.0);
  CHECK(m.transition(1, 1, 0, 1) == 1.0);
  CHECK(m.observation(2, 0, 0) == doctest::Approx(0.7));
  CHECK(m.observation(1, 0, 0) == 0.5);
  CHECK(m.reward(2, 0, 1) == 1.0);
  CHECK(m.reward(1, 0, 1) == 0.0);
  CHECK_THROWS_AS(make_lock({2, 3, 0.25, {1}}), std::invalid_argument);
  CHECK_THROWS_AS(make_lock({2, 2, 0.5, {1}}), std::invalid_argument);
}

TEST_CASE("lock family enumerates secrets lexicographically") {
  const FamilyWithPrior fp = lock_family(2, 3, 0.25);
  REQUIRE(fp.prior.size() == 4);
  CHECK(fp.prior.points[1](0) == 0);
  CHECK(fp.prior.points[1](1) == 1);
  CHECK(fp.prior.points[2](0) == 1);
  for (double w : fp.prior.weights()) CHECK(w == doctest::Approx(0.25));
  CHECK(fp.family->instantiate(fp.prior.points[2]) == make_lock({2, 3, 0.25, {1, 0}}));
  CHECK_THROWS_AS(fp.family->instantiate(Eigen::Vector2d(0.5, 0)), std::out_of_range);
  CHECK_THROWS_AS(fp.family->instantiate(Eigen::Vector2d(2, 0)), std::out_of_range);
}

TEST_CASE("tiger family checks its bounds") {
  const TigerFamily fam(4, 0.99);
  CHECK(fam.instantiate(Eigen::VectorXd::Constant(1, 0.25)) == make_tiger({0.25, 4, 0.99}));
  CHECK_THROWS_AS(fam.instantiate(Eigen::VectorXd::Constant(1, 0.7)), std::out_of_range);
  CHECK_THROWS_AS(fam.instantiate(Eigen::VectorXd::Zero(2)), std::out_of_range);
}

TEST_CASE("grid spacing") {
  const auto g = linspace_grid(0.1, 0.5, 41);
  REQUIRE(g.size() == 41);
  CHECK(g.front()(0) == 0.1);
  CHECK(g[20](0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(g.back()(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(linspace_grid(0.2, 0.4, 1).front()(0) == 0.2);
}

TEST_CASE("random models are valid, seeded and screened") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const RandomModelSpec spec{1 + int(seed % 4), 1 + int(seed % 3), 1 + int(seed % 4), 1 + int(seed % 4)};
    const PomdpModel m = make_random(spec, seed);
    CHECK(validate_model(m).empty());
    CHECK(m == make_random(spec, seed));
  }
  CHECK_FALSE(make_random({3, 2, 3, 2}, 1) == make_random({3, 2, 3, 2}, 2));

  RandomModelSpec screened{3, 2, 4, 3};
  screened.alpha_min = 0.3;
  const PomdpModel m = make_random(screened, 9);
  for (const auto& Z : m.observations) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z);
    CHECK(svd.singularValues()(2) >= 0.3);
  }
  RandomModelSpec ident{3, 2, 3, 2};
  ident.identity_obs = true;
  CHECK(make_random(ident, 0).observations[1] == Eigen::MatrixXd::Identity(3, 3));
  ident.num_obs = 2;
  CHECK_THROWS_AS(make_random(ident, 0), std::invalid_argument);
}

TEST_CASE("simplex draws are uniform on average") {
  Rng rng(12);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
  const int n = 20'000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd p = random_simplex(4, rng);
    CHECK(p.minCoeff() >= 0.0);
    mean += p;
  }
  mean /= n;
  // Each coordinate is Beta(1, 3): mean 1/4, sd sqrt(3/80).
  for (int i = 0; i < 4; ++i) CHECK(std::abs(mean(i) - 0.25) <= 4 * std::sqrt(3.0 / 80 / n));
}
