#pragma once

// Finite-horizon POMDP planning by alpha-vector backward induction.
//
// Value sets are kept over unnormalized state distributions, so V_h is
// homogeneous and the step-h backup is
//   Gamma_h = (+)_o prune{ Z_h(o,.) .* (r_h(o,a) 1 + T_{h,a}^T beta) : a, beta in Gamma_{h+1} }.
// The per-observation sets before weighting by Z_h(o,.) are kept as decision
// sets: the policy conditions its belief on o_h and takes the argmax there.

#include "psrl/errors.hpp"
#include "psrl/model.hpp"
#include "psrl/simulation.hpp"

#include <json.hpp>

#include <memory>

namespace psrl {

struct AlphaVector {
  Eigen::VectorXd values;
  int action = -1;
};

struct AlphaVectorSet {
  /// decision[h][o]: vectors over the belief conditioned on o_h, labelled by action.
  std::vector<std::vector<std::vector<AlphaVector>>> decision;
  /// value[h]: vectors over the prior-to-observation state distribution at step h;
  /// value[H] = {0}.
  std::vector<std::vector<Eigen::VectorXd>> value;

  std::size_t max_step_size() const;
};

/// [h][index] -> {obs, action, values}.
nlohmann::json alpha_set_to_json(const AlphaVectorSet& set);

/// Greedy execution of an alpha-vector set under its planning model.
///
/// Stateless: every call replays the full history through the Bayes filter. An
/// observation with zero probability under the planning model resets the belief
/// to b1 pushed through the actions taken so far, with observations marginalized.
class PlannerPolicy final : public HistoryPolicy {
 public:
  PlannerPolicy(std::shared_ptr<const PomdpModel> model, std::shared_ptr<const AlphaVectorSet> alphas);

  int act(std::span<const int> obs, std::span<const int> actions) const override;

  /// Belief the policy acts on after the given history.
  Belief belief(std::span<const int> obs, std::span<const int> actions) const;

  const PomdpModel& model() const { return *model_; }
  const AlphaVectorSet& alphas() const { return *alphas_; }

 private:
  std::shared_ptr<const PomdpModel> model_;
  std::shared_ptr<const AlphaVectorSet> alphas_;
};

struct PlannerOptions {
  double epsilon = 0;
  std::size_t max_vectors_per_step = 100'000;
  double lp_tolerance = 1e-11;
};

struct AlphaSolution {
  std::shared_ptr<const PlannerPolicy> policy;
  double value = 0;
};

/// epsilon-optimal plan: value >= V* - epsilon, and executing the policy in its own
/// model earns at least `value`. Throws PlanningBudgetExceeded when a set outgrows the cap.
AlphaSolution solve_alpha(const PomdpModel& m, const PlannerOptions& opts);
inline AlphaSolution solve_alpha(const PomdpModel& m, double epsilon = 0) {
  return solve_alpha(m, PlannerOptions{epsilon});
}

/// Action chosen for a given history; same as policy.act.
inline int execute(const PlannerPolicy& policy, const Trajectory& history_prefix, int next_obs) {
  std::vector<int> obs = history_prefix.obs;
  obs.push_back(next_obs);
  return policy.act(obs, history_prefix.actions);
}

namespace alpha {

/// Drops vectors that are `tol`-dominated pointwise by an earlier kept vector, and
/// kept vectors dominated exactly by a later one. Order is preserved.
std::vector<std::size_t> prune_pointwise(const std::vector<Eigen::VectorXd>& vs, double tol);

/// Keeps only vectors that are strictly best (by more than `tol`) somewhere on the
/// simplex. Survivors keep their input order.
std::vector<std::size_t> prune_lp(const std::vector<Eigen::VectorXd>& vs, double tol);

/// Pointwise then LP pruning; returns surviving indices in input order.
std::vector<std::size_t> prune(const std::vector<Eigen::VectorXd>& vs, double pointwise_tol, double lp_tol);

}  // namespace alpha

}  // namespace psrl
