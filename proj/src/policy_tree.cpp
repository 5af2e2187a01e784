#include "psrl/policy_tree.hpp"

#include "psrl/errors.hpp"
#include "psrl/simulation.hpp"

#include <cmath>
#include <limits>

namespace psrl {

PolicyTree::PolicyTree(int num_obs, int horizon, std::vector<int> actions)
    : num_obs_(num_obs), horizon_(horizon), actions_(std::move(actions)) {
  if (static_cast<std::int64_t>(actions_.size()) != node_count(num_obs, horizon))
    throw std::invalid_argument("PolicyTree: action list does not match the tree size");
}

std::int64_t PolicyTree::node_count(int num_obs, int horizon) {
  std::int64_t total = 0, level = 1;
  for (int h = 0; h < horizon; ++h) {
    level *= num_obs;
    total += level;
  }
  return total;
}

int PolicyTree::node_index(std::span<const int> obs) const {
  if (obs.empty() || static_cast<int>(obs.size()) > horizon_) throw std::out_of_range("PolicyTree: bad history length");
  std::int64_t offset = 0, level = 1;
  for (std::size_t h = 0; h + 1 < obs.size(); ++h) {
    level *= num_obs_;
    offset += level;
  }
  std::int64_t within = 0;
  for (int o : obs) {
    if (o < 0 || o >= num_obs_) throw std::out_of_range("PolicyTree: observation index out of range");
    within = within * num_obs_ + o;
  }
  return static_cast<int>(offset + within);
}

int PolicyTree::act(std::span<const int> obs, std::span<const int>) const { return actions_[node_index(obs)]; }

BruteForceSolution solve_brute_force(const PomdpModel& m, double cap) {
  const std::int64_t nodes = PolicyTree::node_count(m.num_obs, m.horizon);
  const double space = std::pow(static_cast<double>(m.num_actions), static_cast<double>(nodes));
  if (space > cap) throw InstanceTooLarge(fmt::format("{} policy trees exceed the cap {}", space, cap));

  std::vector<int> counter(nodes, 0);
  BruteForceSolution best{PolicyTree(m.num_obs, m.horizon, counter), -std::numeric_limits<double>::infinity()};
  while (true) {
    PolicyTree tree(m.num_obs, m.horizon, counter);
    const double v = policy_value_exact(m, tree, std::numeric_limits<std::int64_t>::max());
    if (v > best.value + 1e-12) best = {std::move(tree), v};
    std::int64_t pos = nodes - 1;
    while (pos >= 0 && ++counter[pos] == m.num_actions) counter[pos--] = 0;
    if (pos < 0) break;
  }
  return best;
}

}  // namespace psrl
