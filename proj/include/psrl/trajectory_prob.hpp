#pragma once

// Trajectory probabilities Pr^pi(tau) = pi(tau) * Pr^-(tau), computed by forward
// dynamic programming, by literal state-sequence enumeration, and by the product
// of kernel matrices. Also enumeration of the full trajectory law of a policy.

#include "psrl/errors.hpp"
#include "psrl/model.hpp"

#include <cstdint>
#include <map>

namespace psrl {

/// 1 if `pi` would emit exactly the actions of `tau` given its observations, else 0.
template <typename Scalar>
int policy_weight(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi, const Trajectory& tau) {
  check_trajectory(m, tau);
  const std::span<const int> obs(tau.obs), acts(tau.actions);
  for (int h = 0; h < m.horizon; ++h)
    if (pi.act(obs.first(h + 1), acts.first(h)) != tau.actions[h]) return 0;
  return 1;
}

enum class EnumMode {
  kForward,  // O(H S^2) forward recursion over states
  kLiteral,  // explicit sum over all S^H state sequences; capped at 1e5 sequences
};

/// Environment part Pr^-(tau).
template <typename Scalar>
Scalar env_prob_enum(const PomdpModelT<Scalar>& m, const Trajectory& tau, EnumMode mode = EnumMode::kForward) {
  check_trajectory(m, tau);
  const int S = m.num_states, H = m.horizon;
  if (mode == EnumMode::kForward) {
    std::vector<Scalar> f(S), g(S);
    for (int s = 0; s < S; ++s) f[s] = m.initial(s);
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) f[s] *= m.observation(h, s, tau.obs[h]);
      if (h + 1 == H) break;
      for (int next = 0; next < S; ++next) {
        Scalar acc = 0;
        for (int s = 0; s < S; ++s) acc += m.transition(h, s, tau.actions[h], next) * f[s];
        g[next] = acc;
      }
      std::swap(f, g);
    }
    Scalar total = 0;
    for (Scalar x : f) total += x;
    return total;
  }

  double count = 1;
  for (int h = 0; h < H; ++h) count *= S;
  if (count > 1e5) throw InstanceTooLarge(fmt::format("literal enumeration over {} state sequences", count));
  std::vector<int> seq(H, 0);
  Scalar total = 0;
  while (true) {
    Scalar term = m.initial(seq[0]) * m.observation(H - 1, seq[H - 1], tau.obs[H - 1]);
    for (int h = 0; h + 1 < H; ++h)
      term *= m.observation(h, seq[h], tau.obs[h]) * m.transition(h, seq[h], tau.actions[h], seq[h + 1]);
    total += term;
    int pos = H - 1;
    while (pos >= 0 && ++seq[pos] == S) seq[pos--] = 0;
    if (pos < 0) break;
  }
  return total;
}

/// Environment part as e_{o_H}^T Z_H T_{H-1,a} diag(Z_{H-1}(o,.)) ... T_{1,a} diag(Z_1(o,.)) b1.
template <typename Scalar>
Scalar env_prob_matrix(const PomdpModelT<Scalar>& m, const Trajectory& tau) {
  check_trajectory(m, tau);
  using Vector = typename PomdpModelT<Scalar>::Vector;
  Vector v = m.initial;
  for (int h = 0; h + 1 < m.horizon; ++h) {
    const Vector z = m.observations[h].row(tau.obs[h]).transpose();
    v = m.transitions[h][tau.actions[h]] * (z.asDiagonal() * v);
  }
  return m.observations[m.horizon - 1].row(tau.obs[m.horizon - 1]).dot(v);
}

template <typename Scalar>
Scalar trajectory_prob(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi, const Trajectory& tau) {
  if (policy_weight(m, pi, tau) == 0) return Scalar(0);
  return env_prob_matrix(m, tau);
}

/// Law of trajectories under one policy; only positive-mass trajectories are stored.
template <typename Scalar>
struct TrajectoryDistributionT {
  int num_obs = 0;
  int num_actions = 0;
  int horizon = 0;
  std::map<Trajectory, Scalar> mass;

  Scalar total() const {
    Scalar t = 0;
    for (const auto& [tau, p] : mass) t += p;
    return t;
  }
  Scalar at(const Trajectory& tau) const {
    auto it = mass.find(tau);
    return it == mass.end() ? Scalar(0) : it->second;
  }
};

using TrajectoryDistribution = TrajectoryDistributionT<double>;

inline constexpr std::int64_t kDefaultEnumerationCap = 2'000'000;

/// Enumerates Pr^pi over trajectories by depth-first search over observation
/// histories, pruning zero-probability branches. The cap bounds visited nodes.
template <typename Scalar>
TrajectoryDistributionT<Scalar> enumerate_distribution(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi,
                                                       std::int64_t cap = kDefaultEnumerationCap) {
  using Vector = typename PomdpModelT<Scalar>::Vector;
  TrajectoryDistributionT<Scalar> dist{m.num_obs, m.num_actions, m.horizon, {}};
  Trajectory tau;
  std::int64_t visited = 0;
  std::function<void(int, const Vector&)> visit = [&](int h, const Vector& forward) {
    for (int o = 0; o < m.num_obs; ++o) {
      const Vector joint = m.observations[h].row(o).transpose().cwiseProduct(forward);
      const Scalar p = joint.sum();
      if (!(p > Scalar(0))) continue;
      if (++visited > cap) throw InstanceTooLarge(fmt::format("trajectory enumeration exceeds {} nodes", cap));
      tau.obs.push_back(o);
      const int a = pi.act(tau.obs, tau.actions);
      tau.actions.push_back(a);
      if (h + 1 == m.horizon) {
        dist.mass.emplace(tau, p);
      } else {
        visit(h + 1, m.transitions[h][a] * joint);
      }
      tau.obs.pop_back();
      tau.actions.pop_back();
    }
  };
  visit(0, m.initial);
  return dist;
}

/// Half the l1 distance between two trajectory laws on the same space.
template <typename Scalar>
Scalar tv_distance(const TrajectoryDistributionT<Scalar>& d1, const TrajectoryDistributionT<Scalar>& d2) {
  if (d1.num_obs != d2.num_obs || d1.num_actions != d2.num_actions || d1.horizon != d2.horizon)
    throw std::invalid_argument("tv_distance: distributions live on different trajectory spaces");
  Scalar l1 = 0;
  auto i = d1.mass.begin();
  auto j = d2.mass.begin();
  while (i != d1.mass.end() || j != d2.mass.end()) {
    if (j == d2.mass.end() || (i != d1.mass.end() && i->first < j->first)) {
      l1 += std::abs(i->second);
      ++i;
    } else if (i == d1.mass.end() || j->first < i->first) {
      l1 += std::abs(j->second);
      ++j;
    } else {
      l1 += std::abs(i->second - j->second);
      ++i;
      ++j;
    }
  }
  return std::min(Scalar(1), l1 / 2);
}

}  // namespace psrl
