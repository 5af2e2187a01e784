#pragma once

// Multi-agent POMDPs with factored action/observation spaces, individual-
// information policies, brute-force joint planning, and the posterior-sampling
// learner run with a shared random stream.

#include "psrl/learner.hpp"
#include "psrl/policy_tree.hpp"

namespace psrl {

/// Mixed-radix codec, digit 0 most significant.
int encode_joint(std::span<const int> digits, std::span<const int> radices);
std::vector<int> decode_joint(int index, std::span<const int> radices);

struct MaPomdpModel {
  std::vector<int> action_sizes;  // per agent
  std::vector<int> obs_sizes;     // per agent
  PomdpModel joint;               // over joint actions and observations

  /// Checks that the joint sizes are the products of the factor sizes.
  MaPomdpModel(PomdpModel joint, std::vector<int> action_sizes, std::vector<int> obs_sizes);

  int num_agents() const { return static_cast<int>(action_sizes.size()); }
  int encode_action(std::span<const int> per_agent) const { return encode_joint(per_agent, action_sizes); }
  std::vector<int> decode_action(int a) const { return decode_joint(a, action_sizes); }
  int encode_obs(std::span<const int> per_agent) const { return encode_joint(per_agent, obs_sizes); }
  std::vector<int> decode_obs(int o) const { return decode_joint(o, obs_sizes); }
};

/// One policy tree per agent; agent i sees only its own observation components.
class JointFactoredPolicy final : public HistoryPolicy {
 public:
  JointFactoredPolicy(std::vector<int> action_sizes, std::vector<int> obs_sizes, std::vector<PolicyTree> trees);

  int act(std::span<const int> obs, std::span<const int> actions) const override;
  /// Agent i's action from its individual observation history.
  int agent_action(int agent, std::span<const int> own_obs) const;

  const std::vector<PolicyTree>& trees() const { return trees_; }

 private:
  std::vector<int> action_sizes_;
  std::vector<int> obs_sizes_;
  std::vector<PolicyTree> trees_;
};

struct JointBruteForceSolution {
  JointFactoredPolicy policy;
  double value = 0;
};

/// Exhaustive search over tuples of per-agent trees, agent 0's actions most
/// significant; a strict improvement beyond 1e-12 replaces the incumbent.
JointBruteForceSolution solve_joint_brute_force(const MaPomdpModel& m, double cap = kDefaultTreeSpaceCap);

/// A parameter family whose models factor over agents.
class MaParamFamily : public ParamFamily {
 public:
  virtual std::vector<int> action_sizes() const = 0;
  virtual std::vector<int> obs_sizes() const = 0;
};

/// Views a single-agent family as a one-agent factored family.
class SingleAgentFamily final : public MaParamFamily {
 public:
  explicit SingleAgentFamily(std::shared_ptr<const ParamFamily> inner);
  std::string name() const override { return inner_->name(); }
  int dim() const override { return inner_->dim(); }
  Eigen::VectorXd lower() const override { return inner_->lower(); }
  Eigen::VectorXd upper() const override { return inner_->upper(); }
  PomdpModel instantiate(const Eigen::VectorXd& theta) const override { return inner_->instantiate(theta); }
  RewardScale reward_scale() const override { return inner_->reward_scale(); }
  std::vector<int> action_sizes() const override { return {sizes_.first}; }
  std::vector<int> obs_sizes() const override { return {sizes_.second}; }

 private:
  std::shared_ptr<const ParamFamily> inner_;
  std::pair<int, int> sizes_;
};

/// Two agents, two states, two actions and observations each, horizon 2, uniform
/// b1. theta in {0..3} encodes a target joint action (agent 0 in the high bit);
/// agent i "matches" at step 1 when its action equals its target bit XOR the
/// state. The good state 0 follows with probability 0.9 / 0.5 / 0.1 for two /
/// one / zero matches. Both agents see the state exactly at step 1 and with
/// accuracy 0.8 at step 2, where each agent's observation of state 0 pays 1/2.
class CoordinationFamily final : public MaParamFamily {
 public:
  std::string name() const override { return "coordination"; }
  int dim() const override { return 1; }
  Eigen::VectorXd lower() const override { return Eigen::VectorXd::Zero(1); }
  Eigen::VectorXd upper() const override { return Eigen::VectorXd::Constant(1, 3.0); }
  PomdpModel instantiate(const Eigen::VectorXd& theta) const override;
  std::vector<int> action_sizes() const override { return {2, 2}; }
  std::vector<int> obs_sizes() const override { return {2, 2}; }
};

struct MaFamilyWithPrior {
  std::shared_ptr<const MaParamFamily> family;
  GridPosterior prior;
};

/// Coordination family with a uniform prior over its four parameters.
MaFamilyWithPrior coordination_family();

/// Planner that brute-forces factored policies for the family's agent split.
Planner joint_brute_force_planner(std::vector<int> action_sizes, std::vector<int> obs_sizes);

/// The single-agent loop with joint brute-force planning; one random stream
/// drives sampling for all agents, and the posterior uses the joint trajectory.
LearningLog ps4mapomdps_run(const MaParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star,
                            int K, Rng& rng, const LearnerOptions& opts = {});

}  // namespace psrl
