#pragma once

#include "psrl/model.hpp"

#include <cstdint>

namespace psrl {

/// Complete deterministic decision tree. Node keys are observation prefixes
/// (o_1..o_h); actions are stored breadth-first, prefixes in lexicographic order
/// within a level. Earlier actions are implied by the tree, so they are not keys.
class PolicyTree final : public HistoryPolicy {
 public:
  PolicyTree(int num_obs, int horizon, std::vector<int> actions);

  static std::int64_t node_count(int num_obs, int horizon);

  int node_index(std::span<const int> obs) const;
  int act(std::span<const int> obs, std::span<const int> actions) const override;

  int num_obs() const { return num_obs_; }
  int horizon() const { return horizon_; }
  const std::vector<int>& actions() const { return actions_; }

 private:
  int num_obs_;
  int horizon_;
  std::vector<int> actions_;
};

struct BruteForceSolution {
  PolicyTree policy;
  double value = 0;
};

inline constexpr double kDefaultTreeSpaceCap = 1e7;

/// Exhaustive maximum of the exact value over all policy trees. Trees are visited
/// in lexicographic order of their breadth-first action strings, and only a strict
/// improvement (beyond 1e-12) replaces the incumbent.
BruteForceSolution solve_brute_force(const PomdpModel& m, double cap = kDefaultTreeSpaceCap);

}  // namespace psrl
