#include "psrl/learner.hpp"

#include "psrl/policy_tree.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace psrl {

Planner alpha_planner(double epsilon, std::size_t max_vectors_per_step) {
  return [epsilon, max_vectors_per_step](const PomdpModel& m) {
    PlannerOptions opts;
    opts.epsilon = epsilon;
    opts.max_vectors_per_step = max_vectors_per_step;
    AlphaSolution sol = solve_alpha(m, opts);
    return PlanResult{std::move(sol.policy), sol.value};
  };
}

Planner brute_force_planner() {
  return [](const PomdpModel& m) {
    BruteForceSolution sol = solve_brute_force(m);
    return PlanResult{std::make_shared<const PolicyTree>(std::move(sol.policy)), sol.value};
  };
}

PlanResult PlanCache::get(std::size_t key, const std::function<PlanResult()>& make) {
  {
    std::lock_guard lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
  }
  PlanResult fresh = make();
  std::lock_guard lock(mu_);
  return plans_.emplace(key, std::move(fresh)).first->second;
}

std::size_t PlanCache::size() const {
  std::lock_guard lock(mu_);
  return plans_.size();
}

std::vector<double> LearningLog::raw_regrets() const {
  std::vector<double> out;
  out.reserve(episodes.size());
  for (const EpisodeRecord& e : episodes) out.push_back(scale.raw_difference(e.regret));
  return out;
}

namespace {

struct TrueValue {
  double value = 0;
  bool exact = true;
  double std_error = 0;
};

}  // namespace

LearningLog ps4pomdps_run(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star, int K,
                          const Planner& planner, Rng& rng, const LearnerOptions& opts) {
  if (K < 0) throw std::invalid_argument("ps4pomdps_run: K must be nonnegative");
  std::vector<PomdpModel> models;
  models.reserve(prior.size());
  for (const auto& theta : prior.points) models.push_back(fam.instantiate(theta));
  const PomdpModel truth = fam.instantiate(theta_star);

  LearningLog log;
  log.theta_star = theta_star;
  log.horizon = truth.horizon;
  log.scale = fam.reward_scale();
  log.optimal_value = opts.optimal ? opts.optimal(truth).value : solve_alpha(truth, 0.0).value;

  const std::shared_ptr<PlanCache> cache = opts.cache ? opts.cache : std::make_shared<PlanCache>();
  std::map<std::size_t, TrueValue> evaluated;
  GridPosterior post = prior;

  for (int k = 1; k <= K; ++k) {
    if (opts.on_posterior) opts.on_posterior(k, post);
    const std::size_t i = posterior_sample(post, rng);
    const PlanResult plan = cache->get(i, [&] { return planner(models[i]); });
    Trajectory tau = sample_episode(truth, *plan.policy, rng);

    auto it = evaluated.find(i);
    if (it == evaluated.end()) {
      TrueValue tv;
      try {
        tv.value = policy_value_exact(truth, *plan.policy, opts.eval.exact_node_cap);
      } catch (const InstanceTooLarge&) {
        Rng eval_rng(rng());
        const McEstimate est = policy_value_mc(truth, *plan.policy, opts.eval.mc_rollouts, eval_rng);
        tv = {est.mean, false, est.std_error};
      }
      it = evaluated.emplace(i, tv).first;
    }

    post = posterior_update(post, models, tau);

    EpisodeRecord rec;
    rec.k = k;
    rec.sample_index = i;
    rec.theta_sample = prior.points[i];
    rec.planner_value = plan.value;
    rec.true_value = it->second.value;
    rec.exact = it->second.exact;
    rec.true_value_std_error = it->second.std_error;
    rec.trajectory = std::move(tau);
    rec.regret = log.optimal_value - rec.true_value;
    rec.policy = plan.policy;
    spdlog::debug("episode {}: grid point {}, regret {}", k, i, rec.regret);
    log.episodes.push_back(std::move(rec));
  }
  if (opts.on_posterior) opts.on_posterior(K + 1, post);
  return log;
}

LearningLog ps4pomdps_run(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star, int K,
                          double planner_eps, Rng& rng, const LearnerOptions& opts) {
  return ps4pomdps_run(fam, prior, theta_star, K, alpha_planner(planner_eps), rng, opts);
}

RegretSeries freq_regret(const LearningLog& log) {
  RegretSeries out;
  double cum = 0;
  const std::vector<double> raw = log.raw_regrets();
  for (std::size_t k = 0; k < raw.size(); ++k) {
    cum += raw[k];
    out.cumulative.push_back(cum);
    out.per_episode.push_back(cum / double(k + 1));
    out.per_sqrt.push_back(cum / std::sqrt(double(k + 1)));
  }
  return out;
}

BayesRegretEstimate bayes_regret(const ParamFamily& fam, const GridPosterior& prior, int K, int n_draws,
                                 const Planner& planner, Rng& rng, const LearnerOptions& opts, int jobs) {
  if (n_draws < 1) throw std::invalid_argument("bayes_regret: n_draws must be >= 1");
  BayesRegretEstimate est;
  if (K == 0) {
    est.samples.assign(n_draws, 0.0);
    return est;
  }
  std::vector<std::size_t> draws(n_draws);
  std::vector<std::uint64_t> seeds(n_draws);
  for (int d = 0; d < n_draws; ++d) {
    draws[d] = posterior_sample(prior, rng);
    seeds[d] = rng();
  }
  LearnerOptions shared = opts;
  if (!shared.cache) shared.cache = std::make_shared<PlanCache>();
  shared.on_posterior = nullptr;
  est.samples.assign(n_draws, 0.0);
  parallel_for(n_draws, jobs, [&](int d) {
    Rng run_rng(seeds[d]);
    const LearningLog log = ps4pomdps_run(fam, prior, prior.points[draws[d]], K, planner, run_rng, shared);
    est.samples[d] = freq_regret(log).cumulative.back();
  });
  double mean = 0, m2 = 0;
  for (int d = 0; d < n_draws; ++d) {
    const double delta = est.samples[d] - mean;
    mean += delta / (d + 1);
    m2 += delta * (est.samples[d] - mean);
  }
  est.mean = mean;
  est.std_error = n_draws > 1 ? std::sqrt(m2 / (n_draws - 1) / n_draws) : 0.0;
  return est;
}

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(n > 0 ? n : 0);
  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace psrl
