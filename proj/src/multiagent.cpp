#include "psrl/multiagent.hpp"

#include "psrl/errors.hpp"
#include "psrl/simulation.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace psrl {

int encode_joint(std::span<const int> digits, std::span<const int> radices) {
  if (digits.size() != radices.size()) throw std::invalid_argument("encode_joint: digit count mismatch");
  int index = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (digits[i] < 0 || digits[i] >= radices[i]) throw std::out_of_range("encode_joint: digit out of range");
    index = index * radices[i] + digits[i];
  }
  return index;
}

std::vector<int> decode_joint(int index, std::span<const int> radices) {
  const int total = std::accumulate(radices.begin(), radices.end(), 1, std::multiplies<>());
  if (index < 0 || index >= total) throw std::out_of_range("decode_joint: index out of range");
  std::vector<int> digits(radices.size());
  for (std::size_t i = radices.size(); i-- > 0;) {
    digits[i] = index % radices[i];
    index /= radices[i];
  }
  return digits;
}

MaPomdpModel::MaPomdpModel(PomdpModel joint_model, std::vector<int> actions, std::vector<int> obs)
    : action_sizes(std::move(actions)), obs_sizes(std::move(obs)), joint(std::move(joint_model)) {
  if (action_sizes.empty() || action_sizes.size() != obs_sizes.size())
    throw std::invalid_argument("MaPomdpModel: need matching per-agent size lists");
  const int A = std::accumulate(action_sizes.begin(), action_sizes.end(), 1, std::multiplies<>());
  const int O = std::accumulate(obs_sizes.begin(), obs_sizes.end(), 1, std::multiplies<>());
  if (A != joint.num_actions || O != joint.num_obs)
    throw std::invalid_argument("MaPomdpModel: joint sizes are not the products of the agent sizes");
}

JointFactoredPolicy::JointFactoredPolicy(std::vector<int> action_sizes, std::vector<int> obs_sizes,
                                         std::vector<PolicyTree> trees)
    : action_sizes_(std::move(action_sizes)), obs_sizes_(std::move(obs_sizes)), trees_(std::move(trees)) {
  if (trees_.size() != action_sizes_.size() || trees_.size() != obs_sizes_.size())
    throw std::invalid_argument("JointFactoredPolicy: one tree per agent required");
}

int JointFactoredPolicy::agent_action(int agent, std::span<const int> own_obs) const {
  return trees_[agent].act(own_obs, {});
}

int JointFactoredPolicy::act(std::span<const int> obs, std::span<const int>) const {
  const std::size_t I = trees_.size();
  std::vector<std::vector<int>> own(I);
  for (int o : obs) {
    const std::vector<int> parts = decode_joint(o, obs_sizes_);
    for (std::size_t i = 0; i < I; ++i) own[i].push_back(parts[i]);
  }
  std::vector<int> acts(I);
  for (std::size_t i = 0; i < I; ++i) acts[i] = agent_action(static_cast<int>(i), own[i]);
  return encode_joint(acts, action_sizes_);
}

JointBruteForceSolution solve_joint_brute_force(const MaPomdpModel& m, double cap) {
  const int I = m.num_agents();
  const int H = m.joint.horizon;
  std::vector<std::int64_t> nodes(I);
  double space = 1;
  std::vector<int> radix;
  for (int i = 0; i < I; ++i) {
    nodes[i] = PolicyTree::node_count(m.obs_sizes[i], H);
    space *= std::pow(double(m.action_sizes[i]), double(nodes[i]));
    radix.insert(radix.end(), nodes[i], m.action_sizes[i]);
  }
  if (space > cap) throw InstanceTooLarge(fmt::format("{} joint policies exceed the cap {}", space, cap));

  auto build = [&](const std::vector<int>& counter) {
    std::vector<PolicyTree> trees;
    auto it = counter.begin();
    for (int i = 0; i < I; ++i) {
      trees.emplace_back(m.obs_sizes[i], H, std::vector<int>(it, it + nodes[i]));
      it += nodes[i];
    }
    return JointFactoredPolicy(m.action_sizes, m.obs_sizes, std::move(trees));
  };

  std::vector<int> counter(radix.size(), 0);
  JointBruteForceSolution best{build(counter), -std::numeric_limits<double>::infinity()};
  while (true) {
    JointFactoredPolicy policy = build(counter);
    const double v = policy_value_exact(m.joint, policy, std::numeric_limits<std::int64_t>::max());
    if (v > best.value + 1e-12) best = {std::move(policy), v};
    std::int64_t pos = static_cast<std::int64_t>(counter.size()) - 1;
    while (pos >= 0 && ++counter[pos] == radix[pos]) counter[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

SingleAgentFamily::SingleAgentFamily(std::shared_ptr<const ParamFamily> inner) : inner_(std::move(inner)) {
  const PomdpModel probe = inner_->instantiate(inner_->lower());
  sizes_ = {probe.num_actions, probe.num_obs};
}

PomdpModel CoordinationFamily::instantiate(const Eigen::VectorXd& theta) const {
  check_bounds(theta);
  if (theta(0) != std::round(theta(0))) throw std::out_of_range("coordination: parameter must be an integer");
  const int target = static_cast<int>(theta(0));
  const int targets[2] = {target >> 1, target & 1};
  const std::vector<int> two{2, 2};

  PomdpModel m = PomdpModel::zeros(2, 4, 4, 2);
  m.initial.setConstant(0.5);
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 4; ++a) {
      const std::vector<int> acts = decode_joint(a, two);
      int matches = 0;
      for (int i = 0; i < 2; ++i) matches += acts[i] == (targets[i] ^ s);
      const double good = matches == 2 ? 0.9 : matches == 1 ? 0.5 : 0.1;
      m.transitions[0][a](0, s) = good;
      m.transitions[0][a](1, s) = 1 - good;
    }
    const int exact[2] = {s, s};
    m.observations[0](encode_joint(exact, two), s) = 1;
    for (int o = 0; o < 4; ++o) {
      const std::vector<int> parts = decode_joint(o, two);
      m.observations[1](o, s) = (parts[0] == s ? 0.8 : 0.2) * (parts[1] == s ? 0.8 : 0.2);
    }
  }
  for (int o = 0; o < 4; ++o) {
    const std::vector<int> parts = decode_joint(o, two);
    m.rewards[1].row(o).setConstant(0.5 * ((parts[0] == 0) + (parts[1] == 0)));
  }
  return m;
}

MaFamilyWithPrior coordination_family() {
  std::vector<Eigen::VectorXd> grid;
  for (int t = 0; t < 4; ++t) grid.push_back(Eigen::VectorXd::Constant(1, t));
  return {std::make_shared<CoordinationFamily>(), GridPosterior::uniform(std::move(grid))};
}

Planner joint_brute_force_planner(std::vector<int> action_sizes, std::vector<int> obs_sizes) {
  return [action_sizes = std::move(action_sizes), obs_sizes = std::move(obs_sizes)](const PomdpModel& joint) {
    JointBruteForceSolution sol = solve_joint_brute_force(MaPomdpModel(joint, action_sizes, obs_sizes));
    return PlanResult{std::make_shared<const JointFactoredPolicy>(std::move(sol.policy)), sol.value};
  };
}

LearningLog ps4mapomdps_run(const MaParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star,
                            int K, Rng& rng, const LearnerOptions& opts) {
  const Planner planner = joint_brute_force_planner(fam.action_sizes(), fam.obs_sizes());
  LearnerOptions ma = opts;
  if (!ma.optimal) ma.optimal = planner;
  return ps4pomdps_run(fam, prior, theta_star, K, planner, rng, ma);
}

}  // namespace psrl
