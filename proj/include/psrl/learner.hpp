#pragma once

// Posterior-sampling episodic learner and regret accounting.

#include "psrl/model.hpp"
#include "psrl/planner.hpp"
#include "psrl/posterior.hpp"
#include "psrl/simulation.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <mutex>

namespace psrl {

struct PlanResult {
  std::shared_ptr<const HistoryPolicy> policy;
  double value = 0;
};

/// Maps a planning model to a policy and its value in that model.
using Planner = std::function<PlanResult(const PomdpModel&)>;

Planner alpha_planner(double epsilon, std::size_t max_vectors_per_step = 100'000);
Planner brute_force_planner();

/// Thread-safe memo of plans keyed by grid index. Plans are deterministic, so a
/// race between two threads planning the same key is harmless.
class PlanCache {
 public:
  PlanResult get(std::size_t key, const std::function<PlanResult()>& make);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::size_t, PlanResult> plans_;
};

struct EvalOptions {
  std::int64_t exact_node_cap = 100'000;
  int mc_rollouts = 10'000;
};

struct LearnerOptions {
  EvalOptions eval;
  /// Computes V*_{theta*}; defaults to the exact alpha-vector planner.
  Planner optimal;
  /// Shared across runs over the same family, grid and planner.
  std::shared_ptr<PlanCache> cache;
  /// Called with the posterior used to sample episode k (k = 1..K), and once more
  /// with k = K+1 for the final posterior.
  std::function<void(int, const GridPosterior&)> on_posterior;
};

struct EpisodeRecord {
  int k = 0;  // 1-based
  std::size_t sample_index = 0;
  Eigen::VectorXd theta_sample;
  double planner_value = 0;  // boxed scale, under the sampled model
  double true_value = 0;     // boxed scale, under the true model
  bool exact = true;         // false when true_value is a Monte-Carlo estimate
  double true_value_std_error = 0;
  Trajectory trajectory;
  double regret = 0;  // boxed scale
  std::shared_ptr<const HistoryPolicy> policy;
};

struct LearningLog {
  std::uint64_t seed = 0;
  Eigen::VectorXd theta_star;
  double optimal_value = 0;  // boxed
  int horizon = 0;
  RewardScale scale;
  std::vector<EpisodeRecord> episodes;
  nlohmann::json config;

  /// Per-episode regret on the native reward scale.
  std::vector<double> raw_regrets() const;
};

/// K episodes of: sample theta~ from the posterior, plan in it, act in the true
/// model, evaluate the policy there, and update the posterior with the trajectory.
LearningLog ps4pomdps_run(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star, int K,
                          const Planner& planner, Rng& rng, const LearnerOptions& opts = {});
LearningLog ps4pomdps_run(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star, int K,
                          double planner_eps, Rng& rng, const LearnerOptions& opts = {});

struct RegretSeries {
  std::vector<double> cumulative;   // Reg(k)
  std::vector<double> per_episode;  // Reg(k) / k
  std::vector<double> per_sqrt;     // Reg(k) / sqrt(k)
};

/// Native-scale frequentist regret series of one run.
RegretSeries freq_regret(const LearningLog& log);

struct BayesRegretEstimate {
  double mean = 0;
  double std_error = 0;
  std::vector<double> samples;  // final cumulative regret per prior draw
};

/// Averages final cumulative regret over n_draws runs with theta* drawn from the prior.
/// Draws and run seeds are taken from `rng` up front; runs use `jobs` threads.
BayesRegretEstimate bayes_regret(const ParamFamily& fam, const GridPosterior& prior, int K, int n_draws,
                                 const Planner& planner, Rng& rng, const LearnerOptions& opts = {}, int jobs = 1);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; exceptions are rethrown
/// in index order after all workers finish.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace psrl
