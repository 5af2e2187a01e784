#include "psrl/environments.hpp"

#include <algorithm>
#include <cmath>

namespace psrl {

PomdpModel make_tiger(const TigerSpec& spec) {
  using namespace tiger;
  if (!(spec.theta >= 0 && spec.theta <= 0.5)) throw std::invalid_argument("tiger: theta must lie in [0, 0.5]");
  if (spec.horizon < 1) throw std::invalid_argument("tiger: horizon must be positive");
  if (!(spec.beta > 0 && spec.beta <= 1)) throw std::invalid_argument("tiger: beta must lie in (0, 1]");
  const int H = spec.horizon;
  PomdpModel m = PomdpModel::zeros(5, 3, 5, H);
  m.initial(kTigerLeft) = 0.5;
  m.initial(kTigerRight) = 0.5;

  for (int h = 0; h + 1 < H; ++h) {
    for (int a = 0; a < 3; ++a) {
      auto& T = m.transitions[h][a];
      T(kEnd, kEnd) = 1;
      T(kEnd, kDead) = 1;
      T(kEnd, kAlive) = 1;
    }
    m.transitions[h][kListen](kTigerLeft, kTigerLeft) = 1;
    m.transitions[h][kListen](kTigerRight, kTigerRight) = 1;
    m.transitions[h][kOpenLeft](kDead, kTigerLeft) = 1;
    m.transitions[h][kOpenLeft](kAlive, kTigerRight) = 1;
    m.transitions[h][kOpenRight](kDead, kTigerRight) = 1;
    m.transitions[h][kOpenRight](kAlive, kTigerLeft) = 1;
  }

  for (int h = 0; h < H; ++h) {
    auto& Z = m.observations[h];
    Z(kHearLeft, kTigerLeft) = 0.5 + spec.theta;
    Z(kHearRight, kTigerLeft) = 0.5 - spec.theta;
    Z(kHearRight, kTigerRight) = 0.5 + spec.theta;
    Z(kHearLeft, kTigerRight) = 0.5 - spec.theta;
    Z(kObsDead, kDead) = 1;
    Z(kObsAlive, kAlive) = 1;
    Z(kObsEnd, kEnd) = 1;

    // Step h here is step h+1 in one-based counting.
    const double now = std::pow(spec.beta, h), later = std::pow(spec.beta, h + 1);
    for (int o = 0; o < 5; ++o) {
      for (int a = 0; a < 3; ++a) {
        double raw = 0;
        if (o == kObsDead) raw -= 100 * now;
        if (o == kObsAlive) raw += 10 * now;
        if (a == kListen) raw -= later;
        m.rewards[h](o, a) = (raw - kTigerRewardScale.offset) / kTigerRewardScale.scale;
      }
    }
  }
  return m;
}

PomdpModel make_lock(const LockSpec& spec) {
  const int A = spec.num_actions, H = spec.horizon;
  if (A < 2 || H < 2) throw std::invalid_argument("lock: need at least 2 dials and horizon >= 2");
  if (!(spec.epsilon > 0 && spec.epsilon < 0.5)) throw std::invalid_argument("lock: epsilon must lie in (0, 1/2)");
  if (static_cast<int>(spec.secret.size()) != H - 1) throw std::invalid_argument("lock: secret must have length H-1");
  for (int a : spec.secret)
    if (a < 0 || a >= A) throw std::invalid_argument("lock: secret entry out of range");

  PomdpModel m = PomdpModel::zeros(2, A, 2, H);
  m.initial(0) = 1;
  for (int h = 0; h + 1 < H; ++h) {
    for (int a = 0; a < A; ++a) {
      m.transitions[h][a](a == spec.secret[h] ? 0 : 1, 0) = 1;
      m.transitions[h][a](1, 1) = 1;
    }
    m.observations[h].setConstant(0.5);
  }
  auto& Z = m.observations[H - 1];
  Z(0, 0) = 0.5 + spec.epsilon;
  Z(1, 0) = 0.5 - spec.epsilon;
  Z(0, 1) = 0.5;
  Z(1, 1) = 0.5;
  m.rewards[H - 1].row(0).setOnes();
  return m;
}

PomdpModel TigerFamily::instantiate(const Eigen::VectorXd& theta) const {
  check_bounds(theta);
  return make_tiger({theta(0), horizon_, beta_});
}

PomdpModel LockFamily::instantiate(const Eigen::VectorXd& theta) const {
  check_bounds(theta);
  LockSpec spec{num_actions_, horizon_, epsilon_, {}};
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (theta(i) != std::round(theta(i))) throw std::out_of_range("lock: secret components must be integers");
    spec.secret.push_back(static_cast<int>(theta(i)));
  }
  return make_lock(spec);
}

ModelListFamily::ModelListFamily(std::vector<PomdpModel> models) : models_(std::move(models)) {
  if (models_.empty()) throw std::invalid_argument("model list family: no models");
}

PomdpModel ModelListFamily::instantiate(const Eigen::VectorXd& theta) const {
  check_bounds(theta);
  if (theta(0) != std::round(theta(0))) throw std::out_of_range("model list family: index must be an integer");
  return models_[static_cast<std::size_t>(theta(0))];
}

std::vector<Eigen::VectorXd> linspace_grid(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("linspace_grid: count must be positive");
  std::vector<Eigen::VectorXd> grid;
  for (int i = 0; i < count; ++i) {
    const double x = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
    grid.push_back(Eigen::VectorXd::Constant(1, x));
  }
  return grid;
}

FamilyWithPrior tiger_family(int horizon, double beta, std::vector<Eigen::VectorXd> grid) {
  if (grid.empty()) throw std::invalid_argument("tiger_family: empty grid");
  auto fam = std::make_shared<TigerFamily>(horizon, beta);
  std::vector<double> w;
  for (const auto& theta : grid) {
    fam->check_bounds(theta);
    const double x = theta(0);
    // Unnormalized N(0.25, variance 0.25) density; zero outside [0.1, 0.5].
    w.push_back(x >= 0.1 - 1e-12 && x <= 0.5 + 1e-12 ? std::exp(-(x - 0.25) * (x - 0.25) / (2 * 0.25)) : 0.0);
  }
  return {fam, GridPosterior::from_weights(std::move(grid), w)};
}

FamilyWithPrior lock_family(int num_actions, int horizon, double epsilon) {
  if (std::pow(double(num_actions), double(horizon - 1)) > 1e4)
    throw std::invalid_argument("lock_family: more than 1e4 secret sequences");
  auto fam = std::make_shared<LockFamily>(num_actions, horizon, epsilon);
  std::vector<Eigen::VectorXd> grid;
  std::vector<int> digits(horizon - 1, 0);
  while (true) {
    Eigen::VectorXd theta(horizon - 1);
    for (int i = 0; i < horizon - 1; ++i) theta(i) = digits[i];
    grid.push_back(theta);
    int pos = horizon - 2;
    while (pos >= 0 && ++digits[pos] == num_actions) digits[pos--] = 0;
    if (pos < 0) break;
  }
  return {fam, GridPosterior::uniform(std::move(grid))};
}

Eigen::VectorXd random_simplex(int n, Rng& rng) {
  std::vector<double> cuts(n + 1);
  cuts[0] = 0;
  cuts[n] = 1;
  for (int i = 1; i < n; ++i) cuts[i] = uniform01(rng);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = cuts[i + 1] - cuts[i];
  return p / p.sum();
}

PomdpModel make_random(const RandomModelSpec& spec, std::uint64_t seed) {
  const int S = spec.num_states, A = spec.num_actions, O = spec.num_obs, H = spec.horizon;
  if (S < 1 || A < 1 || O < 1 || H < 1) throw std::invalid_argument("make_random: sizes must be positive");
  if (spec.identity_obs && O != S) throw std::invalid_argument("make_random: identity observations need O == S");
  if (spec.alpha_min && O < S) throw std::invalid_argument("make_random: alpha screening needs O >= S");
  Rng rng(seed);
  constexpr int kMaxTries = 10'000;
  for (int attempt = 0; attempt < kMaxTries; ++attempt) {
    PomdpModel m = PomdpModel::zeros(S, A, O, H);
    m.initial = random_simplex(S, rng);
    for (int h = 0; h + 1 < H; ++h)
      for (int a = 0; a < A; ++a)
        for (int s = 0; s < S; ++s) m.transitions[h][a].col(s) = random_simplex(S, rng);
    for (int h = 0; h < H; ++h) {
      if (spec.identity_obs) {
        m.observations[h].setIdentity();
      } else {
        for (int s = 0; s < S; ++s) m.observations[h].col(s) = random_simplex(O, rng);
      }
      for (int o = 0; o < O; ++o)
        for (int a = 0; a < A; ++a) m.rewards[h](o, a) = uniform01(rng);
    }
    if (!spec.alpha_min) return m;
    bool ok = true;
    for (int h = 0; h < H && ok; ++h) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.observations[h]);
      ok = svd.singularValues()(S - 1) >= *spec.alpha_min;
    }
    if (ok) return m;
  }
  throw std::runtime_error(fmt::format("make_random: no model with sigma_min >= {} after {} tries", *spec.alpha_min,
                                       kMaxTries));
}

}  // namespace psrl
