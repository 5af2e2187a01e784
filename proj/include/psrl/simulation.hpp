#pragma once

// Bayes filtering, episode sampling and policy evaluation on a known model.

#include "psrl/errors.hpp"
#include "psrl/model.hpp"
#include "psrl/rng.hpp"

#include <cstdint>

namespace psrl {

/// Conditions a predicted state distribution at step `step` on observing `o` there.
template <typename Scalar>
BeliefT<Scalar> condition(const PomdpModelT<Scalar>& m, const BeliefT<Scalar>& predicted, int o) {
  BeliefT<Scalar> out{m.observations[predicted.step].row(o).transpose().cwiseProduct(predicted.probs), predicted.step};
  const Scalar total = out.probs.sum();
  if (!(total > Scalar(0)))
    throw ImpossibleObservation(fmt::format("observation {} has zero probability at step {}", o, predicted.step));
  out.probs /= total;
  return out;
}

/// Pushes a step-h state distribution through T_h(. | ., a).
template <typename Scalar>
BeliefT<Scalar> predict(const PomdpModelT<Scalar>& m, const BeliefT<Scalar>& b, int a) {
  if (b.step + 1 >= m.horizon) throw std::out_of_range("predict: no transition after the last step");
  return {m.transitions[b.step][a] * b.probs, b.step + 1};
}

/// b'(s') proportional to Z_{h+1}(o|s') sum_s T_h(s'|s,a) b(s).
template <typename Scalar>
BeliefT<Scalar> belief_update(const PomdpModelT<Scalar>& m, const BeliefT<Scalar>& b, int a, int o) {
  if (a < 0 || a >= m.num_actions || o < 0 || o >= m.num_obs) throw std::out_of_range("belief_update: index out of range");
  return condition(m, predict(m, b, a), o);
}

template <typename Scalar>
BeliefT<Scalar> prior_belief(const PomdpModelT<Scalar>& m) {
  return {m.initial, 0};
}

/// Draws one episode from Pr^pi_m.
template <typename Scalar>
Trajectory sample_episode(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi, Rng& rng) {
  Trajectory tau;
  tau.obs.reserve(m.horizon);
  tau.actions.reserve(m.horizon);
  auto draw_column = [&rng](const auto& col) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = col;
    return sample_categorical<Scalar>(std::span<const Scalar>(v.data(), v.size()), rng);
  };
  int s = draw_column(m.initial);
  for (int h = 0; h < m.horizon; ++h) {
    tau.obs.push_back(draw_column(m.observations[h].col(s)));
    const int a = pi.act(tau.obs, tau.actions);
    tau.actions.push_back(a);
    if (h + 1 < m.horizon) s = draw_column(m.transitions[h][a].col(s));
  }
  return tau;
}

inline constexpr std::int64_t kDefaultEvaluationCap = 100'000;

/// V^pi = sum_tau Pr^pi(tau) sum_h r_h(o_h, a_h), by depth-first search over
/// reachable observation histories. The cap bounds visited history nodes.
template <typename Scalar>
Scalar policy_value_exact(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi,
                          std::int64_t cap = kDefaultEvaluationCap) {
  using Vector = typename PomdpModelT<Scalar>::Vector;
  std::vector<int> obs, acts;
  std::int64_t visited = 0;
  Scalar value = 0;
  std::function<void(int, const Vector&)> visit = [&](int h, const Vector& forward) {
    for (int o = 0; o < m.num_obs; ++o) {
      const Vector joint = m.observations[h].row(o).transpose().cwiseProduct(forward);
      const Scalar p = joint.sum();
      if (!(p > Scalar(0))) continue;
      if (++visited > cap) throw InstanceTooLarge(fmt::format("history tree exceeds {} nodes", cap));
      obs.push_back(o);
      const int a = pi.act(obs, acts);
      value += p * m.reward(h, o, a);
      if (h + 1 < m.horizon) {
        acts.push_back(a);
        visit(h + 1, m.transitions[h][a] * joint);
        acts.pop_back();
      }
      obs.pop_back();
    }
  };
  visit(0, m.initial);
  return value;
}

struct McEstimate {
  double mean = 0;
  double std_error = 0;
};

/// Monte-Carlo mean episode return with its standard error.
template <typename Scalar>
McEstimate policy_value_mc(const PomdpModelT<Scalar>& m, const HistoryPolicy& pi, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("policy_value_mc: n must be >= 1");
  // Welford: a constant return gives an exactly zero spread.
  double mean = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    const Trajectory tau = sample_episode(m, pi, rng);
    double ret = 0;
    for (int h = 0; h < m.horizon; ++h) ret += static_cast<double>(m.reward(h, tau.obs[h], tau.actions[h]));
    const double delta = ret - mean;
    mean += delta / (i + 1);
    m2 += delta * (ret - mean);
  }
  McEstimate est;
  est.mean = mean;
  if (n > 1) est.std_error = std::sqrt(std::max(0.0, m2 / (n - 1)) / n);
  return est;
}

}  // namespace psrl
