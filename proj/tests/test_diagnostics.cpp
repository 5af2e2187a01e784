#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "psrl/diagnostics.hpp"
#include "psrl/environments.hpp"
#include "psrl/trajectory_prob.hpp"

#include <cmath>

using namespace psrl;

TEST_CASE("identity observations are one-revealing") {
  RandomModelSpec spec{3, 2, 3, 3};
  spec.identity_obs = true;
  const RevealingReport r = check_revealing(make_random(spec, 1), 0.5);
  CHECK(r.alpha == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.pass);
  CHECK(r.pinv_bounded);
  CHECK(r.alpha_below_sqrt_s);
}

TEST_CASE("tiger revealing constant is twice theta") {
  for (double theta : {0.1, 0.3, 0.45}) {
    const RevealingReport r = check_revealing(make_tiger({theta, 4, 0.99}), 0.0);
    CHECK(std::abs(r.alpha - 2 * theta) <= 1e-10);
  }
  const RevealingReport flat = check_revealing(make_tiger({0.0, 2, 0.99}), 0.1);
  CHECK_FALSE(flat.pass);
  CHECK(std::isinf(flat.pinv_l1[0]));
}

TEST_CASE("overcomplete models are flagged") {
  const RevealingReport r = check_revealing(make_random({3, 2, 2, 2}, 0), 0.1);
  CHECK(r.overcomplete);
  CHECK_FALSE(r.pass);
  CHECK(to_json(r)["overcomplete"] == true);
}

TEST_CASE("pseudo-inverse norm facts on random revealing models") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomModelSpec spec{2 + int(seed % 3), 2, 4, 2};
    spec.alpha_min = 0.05;
    const PomdpModel m = make_random(spec, seed);
    const RevealingReport r = check_revealing(m, 0.05);
    CHECK(r.pass);
    CHECK(r.alpha_below_sqrt_s);
    CHECK(r.pinv_bounded);
    // Independent check: ||Z^+||_1 via the normal equations.
    const Eigen::MatrixXd& Z = m.observations[0];
    const Eigen::MatrixXd pinv = (Z.transpose() * Z).inverse() * Z.transpose();
    CHECK(pinv.cwiseAbs().colwise().sum().maxCoeff() == doctest::Approx(r.pinv_l1[0]).epsilon(1e-8));
  }
}

TEST_CASE("left inverse rejects rank deficiency") {
  CHECK(left_inverse(Eigen::Matrix2d::Identity()).isApprox(Eigen::Matrix2d::Identity()));
  Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(3, 2, 1.0 / 3);
  CHECK_THROWS_AS(left_inverse(flat), std::domain_error);
}

TEST_CASE("observable operators reproduce trajectory probabilities") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    RandomModelSpec spec{2 + int(seed % 2), 2, 3, 2 + int(seed % 3)};
    spec.alpha_min = 0.05;
    const PomdpModel m = make_random(spec, seed);
    Rng rng(seed);
    for (int i = 0; i < 10; ++i) {
      const Trajectory tau = oracle::random_trajectory(3, 2, m.horizon, rng);
      CHECK(std::abs(env_prob_oop(m, tau) - oracle::literal_env_prob(m, tau)) <= 1e-10);
    }
  }
  const PomdpModel lock = make_lock({2, 2, 0.25, {0}});
  CHECK_THROWS_AS(observable_operator(lock, 1, 0, 0), std::out_of_range);
}

TEST_CASE("Hellinger dominates squared TV") {
  const CheckResult r = hellinger_tv_check(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1));
  CHECK(r.lhs == doctest::Approx(2.0));
  CHECK(r.rhs == doctest::Approx(1.0));
  CHECK(r.pass);
  CHECK(hellinger_tv_check(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)).lhs == 0.0);
  CHECK_THROWS_AS(hellinger_tv_check(Eigen::Vector2d(0.7, 0.7), Eigen::Vector2d(0.5, 0.5)), std::invalid_argument);
  CHECK_THROWS_AS(hellinger_tv_check(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)), std::invalid_argument);
}

TEST_CASE("index change on a single aligned pair") {
  IndexChangeInstance inst;
  inst.xs = {Eigen::VectorXd::Ones(1)};
  inst.ws = {Eigen::VectorXd::Ones(1)};
  const CheckResult r = index_change_check(inst);
  CHECK(r.lhs == doctest::Approx(1.0));
  CHECK(r.rhs == doctest::Approx(std::sqrt(2 * std::log(2.0))).epsilon(1e-14));
  CHECK(r.rhs == doctest::Approx(1.177).epsilon(1e-3));
  CHECK(r.pass);

  inst.beta = 0.5;
  CHECK_THROWS_AS(index_change_check(inst), OutOfScope);
  inst.beta = 1;
  inst.xs[0](0) = 2;
  CHECK_THROWS_AS(index_change_check(inst), OutOfScope);
}

TEST_CASE("realized beta sums over earlier and current pairs") {
  const std::vector<Eigen::VectorXd> xs{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};
  const std::vector<Eigen::VectorXd> ws{Eigen::Vector2d(0.5, 0), Eigen::Vector2d(0.3, 0.4)};
  // k=2: (x1.w2)^2 + (x2.w2)^2 = 0.09 + 0.16.
  CHECK(realized_beta(xs, ws) == doctest::Approx(0.25));
}

TEST_CASE("elliptical potential") {
  const CheckResult r = elliptical_potential_check({Eigen::VectorXd::Ones(1)}, 1.0);
  CHECK(r.lhs == doctest::Approx(std::sqrt(0.5)));
  CHECK(r.rhs == doctest::Approx(std::sqrt(std::log(2.0))));
  CHECK(r.pass);
  CHECK_THROWS_AS(elliptical_potential_check({Eigen::Vector2d(1, 1)}, 1.0), OutOfScope);
  CHECK_THROWS_AS(elliptical_potential_check({Eigen::Vector2d(1, 0)}, 0.0), std::invalid_argument);
}

TEST_CASE("grouped index change") {
  GroupedIndexChangeInstance inst;
  inst.ws = {{{Eigen::Vector2d(0.5, 0)}}};
  inst.xs = {{{Eigen::Vector2d(1, 0)}}};
  inst.beta = 0.25;
  const CheckResult r = grouped_index_change_check(inst);
  CHECK(r.lhs == doctest::Approx(0.5));
  CHECK(r.rhs == doctest::Approx(std::sqrt(1.25 * 2 * std::log1p(1.0 / 2))));
  CHECK(r.pass);
  CHECK(realized_beta(inst) == doctest::Approx(0.25));
  inst.g_w = 0.1;
  CHECK_THROWS_AS(grouped_index_change_check(inst), OutOfScope);
}

TEST_CASE("random in-scope validator instances pass") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 4, K = 1 + t % 15;
    std::vector<Eigen::VectorXd> xs, ws;
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd x(d), w(d);
      for (int i = 0; i < d; ++i) {
        x(i) = standard_normal(rng);
        w(i) = standard_normal(rng);
      }
      xs.push_back(x / std::max(1.0, x.norm()));
      ws.push_back(w / std::max(1.0, w.norm()));
    }
    IndexChangeInstance inst{xs, ws, 1, 1, std::max(realized_beta(xs, ws), 1e-12), 0.5 + uniform01(rng)};
    CHECK(index_change_check(inst).pass);
    CHECK(elliptical_potential_check(xs, inst.lambda).pass);
  }
}

TEST_CASE("confidence-set step-one check on a small lock") {
  const FamilyWithPrior fp = lock_family(2, 2, 0.25);
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  const Step1Report rep = lemma_step1_check(*fp.family, fp.prior, fp.prior.points[1], 10, seeds, alpha_planner(0.0));
  CHECK(rep.runs == 8);
  CHECK(rep.set_size == 2);
  CHECK(rep.bound == doctest::Approx(3 * std::log(20.0) + 3));
  CHECK(rep.per_run_max.size() == 8);
  CHECK(rep.pass_rate >= 0.75);
  CHECK(rep.coverage_rate >= 0.75);

  const Step1Report threaded =
      lemma_step1_check(*fp.family, fp.prior, fp.prior.points[1], 10, seeds, alpha_planner(0.0), 0, 2'000'000, 2);
  CHECK(threaded.per_run_max == rep.per_run_max);
  CHECK(to_json(rep)["runs"] == 8);
}
