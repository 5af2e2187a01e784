#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "psrl/environments.hpp"
#include "psrl/model_io.hpp"
#include "psrl/simulation.hpp"
#include "psrl/trajectory_prob.hpp"

#include <cmath>
#include <map>

using namespace psrl;

namespace {

// Wilson-Hilferty upper quantile of chi-square(df) at z standard deviations.
double chi2_upper(int df, double z) {
  const double k = df;
  const double c = 1.0 - 2.0 / (9 * k) + z * std::sqrt(2.0 / (9 * k));
  return k * c * c * c;
}

PomdpModel lock22() { return make_lock({2, 2, 0.25, {1}}); }

}  // namespace

TEST_CASE("single state model gives uniform observation products") {
  PomdpModel m = PomdpModel::zeros(1, 2, 3, 3);
  m.initial(0) = 1;
  for (auto& step : m.transitions)
    for (auto& T : step) T(0, 0) = 1;
  for (auto& Z : m.observations) Z.setConstant(1.0 / 3);
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const Trajectory tau = oracle::random_trajectory(3, 2, 3, rng);
    CHECK(env_prob_enum(m, tau) == doctest::Approx(1.0 / 27).epsilon(1e-14));
    CHECK(env_prob_matrix(m, tau) == doctest::Approx(1.0 / 27).epsilon(1e-14));
  }
}

TEST_CASE("lock trajectory through the secret has probability 0.375") {
  const PomdpModel m = lock22();
  const Trajectory tau{{0, 0}, {1, 0}};
  CHECK(env_prob_enum(m, tau) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(env_prob_enum(m, tau, EnumMode::kLiteral) == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(env_prob_matrix(m, tau) == doctest::Approx(0.375).epsilon(1e-15));
  const OpenLoopPolicy pi({1, 0});
  CHECK(trajectory_prob(m, pi, tau) == doctest::Approx(0.375));
  CHECK(trajectory_prob(m, OpenLoopPolicy({0, 0}), tau) == 0.0);
}

TEST_CASE("open-loop lock law splits as one half times one half plus or minus epsilon") {
  const PomdpModel m = lock22();
  const auto dist = enumerate_distribution(m, OpenLoopPolicy({1, 0}));
  CHECK(dist.mass.size() == 4);
  CHECK(dist.at({{0, 0}, {1, 0}}) == doctest::Approx(0.375));
  CHECK(dist.at({{0, 1}, {1, 0}}) == doctest::Approx(0.125));
  CHECK(dist.at({{1, 0}, {1, 0}}) == doctest::Approx(0.375));
  CHECK(dist.at({{1, 1}, {1, 0}}) == doctest::Approx(0.125));
  CHECK(dist.total() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("probability backends agree with the literal state sum") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const RandomModelSpec spec{2 + int(seed % 3), 1 + int(seed % 2), 2 + int(seed % 2), 1 + int(seed % 4)};
    const PomdpModel m = make_random(spec, seed);
    for (int i = 0; i < 10; ++i) {
      const Trajectory tau = oracle::random_trajectory(m.num_obs, m.num_actions, m.horizon, rng);
      const double ref = oracle::literal_env_prob(m, tau);
      CHECK(std::abs(env_prob_enum(m, tau) - ref) <= 1e-14);
      CHECK(std::abs(env_prob_enum(m, tau, EnumMode::kLiteral) - ref) <= 1e-14);
      CHECK(std::abs(env_prob_matrix(m, tau) - ref) <= 1e-14);
    }
  }
}

TEST_CASE("long-double backend matches double") {
  const PomdpModel m = make_random({3, 2, 3, 4}, 11);
  const auto ml = m.cast<long double>();
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Trajectory tau = oracle::random_trajectory(3, 2, 4, rng);
    CHECK(std::abs(double(env_prob_matrix(ml, tau)) - env_prob_matrix(m, tau)) < 1e-15);
  }
}

TEST_CASE("literal enumeration refuses huge state spaces") {
  const PomdpModel m = make_random({20, 1, 2, 4}, 1);
  const Trajectory tau{{0, 0, 0, 0}, {0, 0, 0, 0}};
  CHECK_THROWS_AS(env_prob_enum(m, tau, EnumMode::kLiteral), InstanceTooLarge);
}

TEST_CASE("trajectory law sums to one and enumeration respects its cap") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PomdpModel m = make_random({3, 2, 3, 3}, seed);
    Rng rng(seed + 100);
    const PolicyTree pi = oracle::random_tree(3, 2, 3, rng);
    CHECK(enumerate_distribution(m, pi).total() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const PomdpModel m = make_random({2, 2, 4, 4}, 7);
  CHECK_THROWS_AS(enumerate_distribution(m, OpenLoopPolicy({0}), 10), InstanceTooLarge);
}

TEST_CASE("sampled episodes follow the enumerated law") {
  const PomdpModel m = make_random({3, 2, 2, 3}, 21);
  Rng tree_rng(4);
  const PolicyTree pi = oracle::random_tree(2, 2, 3, tree_rng);
  const auto dist = enumerate_distribution(m, pi);
  std::map<Trajectory, int> counts;
  Rng rng(99);
  const int n = 40'000;
  for (int i = 0; i < n; ++i) ++counts[sample_episode(m, pi, rng)];
  double chi2 = 0;
  for (const auto& [tau, p] : dist.mass) {
    const double expected = n * p;
    const double obs = counts.count(tau) ? counts[tau] : 0;
    chi2 += (obs - expected) * (obs - expected) / expected;
  }
  for (const auto& [tau, c] : counts) CHECK(dist.at(tau) > 0);
  CHECK(chi2 < chi2_upper(int(dist.mass.size()) - 1, 4.0));
}

TEST_CASE("tiger belief after one listen and hear-left") {
  const PomdpModel m = make_tiger({0.3, 10, 0.99});
  CHECK(m.observation(0, tiger::kTigerLeft, tiger::kHearLeft) == doctest::Approx(0.8));
  const Belief b = belief_update(m, prior_belief(m), tiger::kListen, tiger::kHearLeft);
  CHECK(b.probs(tiger::kTigerLeft) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(b.step == 1);
  CHECK_THROWS_AS(belief_update(m, prior_belief(m), tiger::kListen, tiger::kObsDead), ImpossibleObservation);
}

TEST_CASE("tiger always-listen value on the native scale") {
  const PomdpModel m = make_tiger({0.3, 10, 0.99});
  const OpenLoopPolicy listen(std::vector<int>(10, tiger::kListen));
  const double boxed = policy_value_exact(m, listen);
  double expected = 0;
  for (int h = 1; h <= 10; ++h) expected -= std::pow(0.99, h);
  CHECK(kTigerRewardScale.raw_return(boxed, 10) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-9.4662).epsilon(1e-5));
}

TEST_CASE("exact policy value matches enumeration and Monte Carlo") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PomdpModel m = make_random({2, 2, 2, 3}, seed);
    Rng rng(seed);
    const PolicyTree pi = oracle::random_tree(2, 2, 3, rng);
    const double exact = policy_value_exact(m, pi);
    CHECK(exact == doctest::Approx(oracle::enumerated_value(m, pi)).epsilon(1e-12));
    const McEstimate mc = policy_value_mc(m, pi, 4000, rng);
    CHECK(oracle::within_sigma(mc.mean, exact, mc.std_error, 4.5));
  }
  const PomdpModel m = make_random({2, 2, 4, 5}, 3);
  CHECK_THROWS_AS(policy_value_exact(m, OpenLoopPolicy({0}), 50), InstanceTooLarge);
}

TEST_CASE("Monte Carlo of a constant-return policy has zero spread") {
  Rng rng(1);
  CHECK(policy_value_mc(make_random({1, 1, 1, 2}, 0), OpenLoopPolicy({0}), 50, rng).std_error == 0.0);
}

TEST_CASE("validation reports each kind of violation") {
  CHECK(validate_model(lock22()).empty());
  CHECK(validate_model(make_tiger({})).empty());

  PomdpModel bad = lock22();
  bad.initial(0) = 0.9;
  auto v = validate_model(bad);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::kNormalization);

  bad = lock22();
  bad.observations[0](0, 0) = -0.5;
  bad.observations[0](1, 0) = 1.5;
  v = validate_model(bad);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].kind == Violation::Kind::kNegative);

  bad = lock22();
  bad.rewards[1](0, 0) = 1.5;
  v = validate_model(bad);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::kRewardRange);

  bad = lock22();
  bad.transitions.clear();
  v = validate_model(bad);
  REQUIRE_FALSE(v.empty());
  CHECK(v[0].kind == Violation::Kind::kDimension);
}

TEST_CASE("out-of-range trajectories are rejected") {
  const PomdpModel m = lock22();
  CHECK_THROWS_AS(env_prob_matrix(m, Trajectory{{0}, {0}}), std::out_of_range);
  CHECK_THROWS_AS(env_prob_matrix(m, Trajectory{{0, 2}, {0, 0}}), std::out_of_range);
  CHECK_THROWS_AS(env_prob_enum(m, Trajectory{{0, 0}, {0, 5}}), std::out_of_range);
}

TEST_CASE("model JSON round trip is exact") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const PomdpModel m = make_random({3, 2, 4, 3}, seed);
    CHECK(model_from_json(model_to_json(m)) == m);
  }
  const PomdpModel t = make_tiger({});
  CHECK(model_from_json(nlohmann::json::parse(model_to_json(t).dump())) == t);
  const Trajectory tau{{1, 0, 2}, {0, 1, 1}};
  CHECK(trajectory_from_json(trajectory_to_json(tau)) == tau);
  CHECK(tau.flatten() == std::vector<int>{1, 0, 0, 1, 2, 1});
  CHECK_THROWS_AS(model_from_json(nlohmann::json{{"S", 2}}), std::invalid_argument);
}
