#pragma once

// Tabular finite-horizon POMDP: (S, A, O, H, b1, T, Z, r) with per-step kernels.
//
// Indexing is zero-based throughout: steps h = 0..H-1, and transitions[h][a] maps
// the state at step h to the state at step h+1, so there are H-1 transition steps.
// Kernels are stored column-stochastic, matching the matrix form of the
// trajectory probability:
//   transitions[h][a](next, cur) = T_h(next | cur, a)     (S x S)
//   observations[h](o, s)        = Z_h(o | s)             (O x S)
//   rewards[h](o, a)             = r_h(o, a)              (O x A)

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace psrl {

template <typename Scalar>
struct PomdpModelT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int num_states = 0;
  int num_actions = 0;
  int num_obs = 0;
  int horizon = 0;
  Vector initial;
  std::vector<std::vector<Matrix>> transitions;
  std::vector<Matrix> observations;
  std::vector<Matrix> rewards;

  /// Allocates zero-filled kernels of the right shapes.
  static PomdpModelT zeros(int S, int A, int O, int H) {
    PomdpModelT m;
    m.num_states = S;
    m.num_actions = A;
    m.num_obs = O;
    m.horizon = H;
    m.initial = Vector::Zero(S);
    m.transitions.assign(H > 0 ? H - 1 : 0, std::vector<Matrix>(A, Matrix::Zero(S, S)));
    m.observations.assign(H, Matrix::Zero(O, S));
    m.rewards.assign(H, Matrix::Zero(O, A));
    return m;
  }

  Scalar transition(int h, int s, int a, int next) const { return transitions[h][a](next, s); }
  Scalar observation(int h, int s, int o) const { return observations[h](o, s); }
  Scalar reward(int h, int o, int a) const { return rewards[h](o, a); }

  template <typename Other>
  PomdpModelT<Other> cast() const {
    PomdpModelT<Other> m = PomdpModelT<Other>::zeros(num_states, num_actions, num_obs, horizon);
    m.initial = initial.template cast<Other>();
    for (std::size_t h = 0; h < transitions.size(); ++h)
      for (int a = 0; a < num_actions; ++a) m.transitions[h][a] = transitions[h][a].template cast<Other>();
    for (int h = 0; h < horizon; ++h) {
      m.observations[h] = observations[h].template cast<Other>();
      m.rewards[h] = rewards[h].template cast<Other>();
    }
    return m;
  }

  bool operator==(const PomdpModelT&) const = default;
};

using PomdpModel = PomdpModelT<double>;

/// One episode's observation/action record; both sequences have length H.
struct Trajectory {
  std::vector<int> obs;
  std::vector<int> actions;

  int horizon() const { return static_cast<int>(obs.size()); }

  /// Flat integer form (o1, a1, o2, a2, ...).
  std::vector<int> flatten() const {
    std::vector<int> flat;
    flat.reserve(obs.size() * 2);
    for (std::size_t h = 0; h < obs.size(); ++h) {
      flat.push_back(obs[h]);
      flat.push_back(actions[h]);
    }
    return flat;
  }

  static Trajectory unflatten(std::span<const int> flat) {
    if (flat.size() % 2 != 0) throw std::invalid_argument("trajectory: flat array must have even length");
    Trajectory t;
    for (std::size_t i = 0; i < flat.size(); i += 2) {
      t.obs.push_back(flat[i]);
      t.actions.push_back(flat[i + 1]);
    }
    return t;
  }

  auto operator<=>(const Trajectory&) const = default;
  bool operator==(const Trajectory&) const = default;
};

/// Deterministic history-dependent policy. `obs` holds o_1..o_h (length h), `actions`
/// holds a_1..a_{h-1} (length h-1); the return value is a_h.
class HistoryPolicy {
 public:
  virtual ~HistoryPolicy() = default;
  virtual int act(std::span<const int> obs, std::span<const int> actions) const = 0;
};

/// Plays a fixed action sequence regardless of observations.
class OpenLoopPolicy final : public HistoryPolicy {
 public:
  explicit OpenLoopPolicy(std::vector<int> plan) : plan_(std::move(plan)) {}
  int act(std::span<const int> obs, std::span<const int>) const override {
    const std::size_t h = obs.size() - 1;
    return h < plan_.size() ? plan_[h] : plan_.back();
  }

 private:
  std::vector<int> plan_;
};

/// Adapts a callable to the policy contract.
class FunctionPolicy final : public HistoryPolicy {
 public:
  using Fn = std::function<int(std::span<const int>, std::span<const int>)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  int act(std::span<const int> obs, std::span<const int> actions) const override { return fn_(obs, actions); }

 private:
  Fn fn_;
};

/// Distribution over states at a given step.
template <typename Scalar>
struct BeliefT {
  typename PomdpModelT<Scalar>::Vector probs;
  int step = 0;
};

using Belief = BeliefT<double>;

struct Violation {
  enum class Kind { kDimension, kNormalization, kNegative, kRewardRange };
  Kind kind;
  std::string message;
};

namespace detail {

template <typename Scalar, typename Derived>
void check_distribution(const Eigen::MatrixBase<Derived>& v, const std::string& where, std::vector<Violation>& out) {
  constexpr double kTol = 1e-12;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v(i) >= Scalar(0)) || !std::isfinite(static_cast<double>(v(i)))) {
      out.push_back({Violation::Kind::kNegative, fmt::format("{}: entry {} is {}", where, i, double(v(i)))});
      return;
    }
  }
  const double total = static_cast<double>(v.sum());
  if (std::abs(total - 1.0) > kTol)
    out.push_back({Violation::Kind::kNormalization, fmt::format("{}: sums to {}", where, total)});
}

}  // namespace detail

/// Lists every structural problem with `m`; an empty report means the model is valid.
template <typename Scalar>
std::vector<Violation> validate_model(const PomdpModelT<Scalar>& m) {
  std::vector<Violation> out;
  const int S = m.num_states, A = m.num_actions, O = m.num_obs, H = m.horizon;
  auto dim = [&](const std::string& msg) { out.push_back({Violation::Kind::kDimension, msg}); };
  if (S <= 0 || A <= 0 || O <= 0 || H <= 0) {
    dim(fmt::format("sizes must be positive (S={}, A={}, O={}, H={})", S, A, O, H));
    return out;
  }
  if (m.initial.size() != S) dim("initial distribution has wrong length");
  if (static_cast<int>(m.transitions.size()) != H - 1) dim("expected H-1 transition steps");
  if (static_cast<int>(m.observations.size()) != H) dim("expected H observation kernels");
  if (static_cast<int>(m.rewards.size()) != H) dim("expected H reward tables");
  if (!out.empty()) return out;

  detail::check_distribution<Scalar>(m.initial, "b1", out);
  for (int h = 0; h + 1 < H; ++h) {
    if (static_cast<int>(m.transitions[h].size()) != A) {
      dim(fmt::format("T[{}]: expected {} actions", h, A));
      continue;
    }
    for (int a = 0; a < A; ++a) {
      const auto& T = m.transitions[h][a];
      if (T.rows() != S || T.cols() != S) {
        dim(fmt::format("T[{}][{}]: expected {}x{}", h, a, S, S));
        continue;
      }
      for (int s = 0; s < S; ++s) detail::check_distribution<Scalar>(T.col(s), fmt::format("T[{}][s={}][a={}]", h, s, a), out);
    }
  }
  for (int h = 0; h < H; ++h) {
    const auto& Z = m.observations[h];
    if (Z.rows() != O || Z.cols() != S) {
      dim(fmt::format("Z[{}]: expected {}x{}", h, O, S));
    } else {
      for (int s = 0; s < S; ++s) detail::check_distribution<Scalar>(Z.col(s), fmt::format("Z[{}][s={}]", h, s), out);
    }
    const auto& r = m.rewards[h];
    if (r.rows() != O || r.cols() != A) {
      dim(fmt::format("r[{}]: expected {}x{}", h, O, A));
      continue;
    }
    for (int o = 0; o < O; ++o)
      for (int a = 0; a < A; ++a)
        if (!(r(o, a) >= Scalar(0) && r(o, a) <= Scalar(1)))
          out.push_back({Violation::Kind::kRewardRange,
                         fmt::format("r[{}][o={}][a={}] = {} outside [0,1]", h, o, a, double(r(o, a)))});
  }
  return out;
}

template <typename Scalar>
void check_trajectory(const PomdpModelT<Scalar>& m, const Trajectory& tau) {
  if (tau.horizon() != m.horizon || static_cast<int>(tau.actions.size()) != m.horizon)
    throw std::out_of_range(fmt::format("trajectory length {} does not match horizon {}", tau.horizon(), m.horizon));
  for (int h = 0; h < m.horizon; ++h) {
    if (tau.obs[h] < 0 || tau.obs[h] >= m.num_obs) throw std::out_of_range(fmt::format("observation index {} out of range", tau.obs[h]));
    if (tau.actions[h] < 0 || tau.actions[h] >= m.num_actions)
      throw std::out_of_range(fmt::format("action index {} out of range", tau.actions[h]));
  }
}

}  // namespace psrl
