#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "psrl/environments.hpp"
#include "psrl/learner.hpp"
#include "psrl/posterior.hpp"
#include "psrl/trajectory_prob.hpp"

#include <cmath>
#include <sstream>

using namespace psrl;

namespace {

std::vector<Eigen::VectorXd> points(std::initializer_list<double> xs) {
  std::vector<Eigen::VectorXd> out;
  for (double x : xs) out.push_back(Eigen::VectorXd::Constant(1, x));
  return out;
}

}  // namespace

TEST_CASE("loglik of a lock trajectory and its additivity") {
  const LockFamily fam(2, 2, 0.25);
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 1);
  const Trajectory tau{{0, 0}, {1, 0}};
  CHECK(loglik(fam, theta, {}) == 0.0);
  CHECK(loglik(fam, theta, std::vector<Trajectory>{tau}) == doctest::Approx(std::log(0.375)));
  CHECK(loglik(fam, theta, std::vector<Trajectory>{tau, tau}) == doctest::Approx(2 * std::log(0.375)));
  // Under secret 0 the final observation is uninformative but still possible.
  CHECK(loglik(fam, Eigen::VectorXd::Zero(1), std::vector<Trajectory>{tau}) == doctest::Approx(std::log(0.25)));
}

TEST_CASE("hearing left from the left state reweights 0.2 and 0.4 as 0.7 to 0.9") {
  std::vector<PomdpModel> models;
  for (double theta : {0.2, 0.4}) {
    PomdpModel m = make_tiger({theta, 1, 0.99});
    m.initial.setZero();
    m.initial(tiger::kTigerLeft) = 1;
    models.push_back(m);
  }
  const ModelListFamily fam(models);
  const GridPosterior prior = GridPosterior::uniform(points({0, 1}));
  const GridPosterior post = posterior_update(prior, fam, Trajectory{{tiger::kHearLeft}, {tiger::kListen}});
  const auto w = post.weights();
  CHECK(w[0] / w[1] == doctest::Approx(0.7 / 0.9).epsilon(1e-14));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("identical models leave the weights unchanged and zero stays zero") {
  const PomdpModel m = make_lock({2, 2, 0.25, {0}});
  const ModelListFamily same({m, m});
  const GridPosterior prior = GridPosterior::from_weights(points({0, 1}), {0.3, 0.7});
  const GridPosterior post = posterior_update(prior, same, Trajectory{{1, 0}, {0, 1}});
  CHECK(post.weights()[0] == doctest::Approx(0.3).epsilon(1e-14));

  // Tiger with a certain-listen kernel (theta = 0.5) cannot hear right from TL.
  PomdpModel sharp = make_tiger({0.5, 1, 0.99});
  sharp.initial.setZero();
  sharp.initial(tiger::kTigerLeft) = 1;
  const ModelListFamily fam({sharp, make_tiger({0.3, 1, 0.99})});
  const GridPosterior upd = posterior_update(GridPosterior::uniform(points({0, 1})), fam,
                                             Trajectory{{tiger::kHearRight}, {tiger::kListen}});
  CHECK(upd.weights()[0] == 0.0);
  CHECK(std::isinf(upd.log_weights[0]));
  const GridPosterior only_sharp = GridPosterior::from_weights(points({0, 1}), {1.0, 0.0});
  CHECK_THROWS_AS(posterior_update(only_sharp, fam, Trajectory{{tiger::kHearRight}, {tiger::kListen}}), DataImpossible);
}

TEST_CASE("posterior updates commute and do not depend on the probability backend") {
  const FamilyWithPrior fp = tiger_family(4, 0.99, linspace_grid(0.1, 0.5, 9));
  const PomdpModel truth = make_tiger({0.3, 4, 0.99});
  Rng rng(8);
  const OpenLoopPolicy listen(std::vector<int>(4, tiger::kListen));
  const Trajectory t1 = sample_episode(truth, listen, rng);
  const Trajectory t2 = sample_episode(truth, listen, rng);
  const GridPosterior a = posterior_update(posterior_update(fp.prior, *fp.family, t1), *fp.family, t2);
  const GridPosterior b = posterior_update(posterior_update(fp.prior, *fp.family, t2), *fp.family, t1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isinf(a.log_weights[i])) {
      CHECK(std::isinf(b.log_weights[i]));
      continue;
    }
    CHECK(std::abs(a.log_weights[i] - b.log_weights[i]) <= 1e-10);
  }
  // Same update through the forward-recursion backend.
  std::vector<double> w;
  for (std::size_t i = 0; i < fp.prior.size(); ++i) {
    const PomdpModel m = fp.family->instantiate(fp.prior.points[i]);
    w.push_back(std::exp(fp.prior.log_weights[i]) * env_prob_enum(m, t1) * env_prob_enum(m, t2));
  }
  const GridPosterior c = GridPosterior::from_weights(fp.prior.points, w);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.weights()[i] - c.weights()[i]) <= 1e-9);
}

TEST_CASE("tiger prior is a truncated Gaussian") {
  const FamilyWithPrior fp = tiger_family(10, 0.99, linspace_grid(0.0, 0.5, 11));
  const auto w = fp.prior.weights();
  CHECK(w[0] == 0.0);  // 0.0 and 0.05 lie outside [0.1, 0.5]
  CHECK(w[1] == 0.0);
  CHECK(w[2] > 0.0);
  CHECK(w[10] > 0.0);
  // Density ratio between 0.25 and 0.5 is exp(0.0625 / 0.5).
  CHECK(w[5] / w[10] == doctest::Approx(std::exp(0.125)).epsilon(1e-12));
}

TEST_CASE("posterior sampling frequencies") {
  Rng rng(2024);
  const GridPosterior point = GridPosterior::from_weights(points({0, 1, 2}), {0, 1, 0});
  for (int i = 0; i < 100; ++i) CHECK(posterior_sample(point, rng) == 1);

  const GridPosterior uni = GridPosterior::uniform(points({0, 1, 2, 3}));
  std::vector<int> counts(4, 0);
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ++counts[posterior_sample(uni, rng)];
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n * 0.25) <= 3 * sd);

  const GridPosterior skew = GridPosterior::from_weights(points({0, 1}), {0.9, 0.1});
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += int(posterior_sample(skew, rng));
  CHECK(std::abs(ones - n * 0.1) <= 3 * std::sqrt(n * 0.09));
}

TEST_CASE("quantized distributions obey the ratio and distance bounds") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 5;
    const double eps_q = 1.0 / (1 + trial % 10);
    const Eigen::VectorXd mu = random_simplex(n, rng);
    const Eigen::VectorXd q = quantize_distribution(mu, eps_q);
    CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(0.5 * (q - mu).cwiseAbs().sum() <= eps_q + 1e-12);
    for (int i = 0; i < n; ++i) CHECK(q(i) >= mu(i) / (1 + eps_q) - 1e-15);
  }
  const Eigen::Vector2d half(0.5, 0.5);
  CHECK(quantize_distribution(half, 0.25) == half);
  CHECK_THROWS_AS(quantize_distribution(half, 0.3), std::invalid_argument);
}

TEST_CASE("quantized tiger stays within 2 H eps_q of the original law") {
  const PomdpModel m = make_tiger({0.3, 3, 0.99});
  const PomdpModel q = quantize_model(m, 0.1);
  CHECK(validate_model(q).empty());
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const PolicyTree pi = oracle::random_tree(5, 3, 3, rng);
    CHECK(tv_distance(enumerate_distribution(m, pi), enumerate_distribution(q, pi)) <= 0.6);
  }
}

TEST_CASE("quantized parameter sets deduplicate and map the truth") {
  const FamilyWithPrior fp = tiger_family(4, 0.99, linspace_grid(0.1, 0.5, 9));
  const QuantizedParamSet one = build_quantized_set(*fp.family, std::vector<Eigen::VectorXd>{fp.prior.points[0]}, 0.1);
  CHECK(one.members.size() == 1);
  CHECK(one.star == -1);

  const Eigen::VectorXd star = Eigen::VectorXd::Constant(1, 0.3);
  const QuantizedParamSet qs = build_quantized_set(*fp.family, fp.prior.points, 0.1, &star);
  CHECK(qs.members.size() <= 10);
  REQUIRE(qs.iota.size() == 9);
  for (int idx : qs.iota) CHECK((idx >= 0 && idx < int(qs.members.size())));
  REQUIRE(qs.star >= 0);
  CHECK(qs.members[qs.star] == quantize_model(fp.family->instantiate(star), 0.1));
  CHECK(std::log(double(qs.members.size())) <= log_cardinality_bound(qs.members[0], 0.1));

  const PomdpModel m = make_tiger({0.3, 2, 0.99});
  const PomdpModel near = make_tiger({0.3 + 1e-12, 2, 0.99});
  const std::vector<PomdpModel> pair{m, near};
  const QuantizedParamSet dedup = build_quantized_set(pair, 0.1);
  CHECK(dedup.members.size() == 1);
  CHECK(dedup.iota == std::vector<int>{0, 0});
}

TEST_CASE("confidence set thresholds") {
  const FamilyWithPrior fp = lock_family(2, 2, 0.25);
  const QuantizedParamSet qs = build_quantized_set(*fp.family, fp.prior.points, 0.125);
  REQUIRE(qs.members.size() == 2);
  const ConfidenceSet empty = confidence_set(qs, {}, 10);
  CHECK(empty.members.size() == 2);
  CHECK(empty.best == 0.0);
  CHECK(empty.threshold == doctest::Approx(-std::log(20.0) - 1));

  // Many lucky openings through secret 1 push secret 0 out.
  std::vector<Trajectory> data(40, Trajectory{{0, 0}, {1, 0}});
  const ConfidenceSet cs = confidence_set(qs, data, 10);
  CHECK(cs.contains(qs.iota[1]));
  CHECK_FALSE(cs.contains(qs.iota[0]));
  CHECK(cs.best == doctest::Approx(cs.logliks[qs.iota[1]]));

  const QuantizedParamSet single = build_quantized_set(*fp.family, std::vector<Eigen::VectorXd>{fp.prior.points[0]}, 0.125);
  CHECK(confidence_set(single, data, 10).members == std::vector<int>{0});
}

TEST_CASE("posterior weight at the truth is a submartingale on average") {
  const FamilyWithPrior fp = lock_family(2, 3, 0.25);
  const int K = 6, runs = 500;
  std::vector<std::vector<double>> w(runs, std::vector<double>(K + 1));
  auto cache = std::make_shared<PlanCache>();
  Rng draw_rng(77);
  for (int r = 0; r < runs; ++r) {
    const std::size_t star = posterior_sample(fp.prior, draw_rng);
    Rng rng(1000 + r);
    LearnerOptions opts;
    opts.cache = cache;
    opts.on_posterior = [&](int k, const GridPosterior& post) { w[r][k - 1] = post.weights()[star]; };
    ps4pomdps_run(*fp.family, fp.prior, fp.prior.points[star], K, 0.0, rng, opts);
  }
  for (int k = 0; k < K; ++k) {
    double mean = 0, sq = 0;
    for (int r = 0; r < runs; ++r) {
      const double d = w[r][k + 1] - w[r][k];
      mean += d;
      sq += d * d;
    }
    mean /= runs;
    const double se = std::sqrt(std::max(0.0, sq / runs - mean * mean) / runs);
    CHECK(mean >= -2 * se);
  }
}

TEST_CASE("posterior CSV rows") {
  const GridPosterior post = GridPosterior::from_weights(points({0.1, 0.2}), {1, 3});
  std::ostringstream out;
  write_posterior_csv(out, 4, post, true);
  const std::string text = out.str();
  CHECK(text.find("k,index,theta_0,weight") == 0);
  CHECK(text.find("4,1,0.2,0.75") != std::string::npos);
}
