#pragma once

// Benchmark environments (finite-horizon Tiger, combination lock), their
// parameter families, and seeded random models.

#include "psrl/model.hpp"
#include "psrl/posterior.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace psrl {

namespace tiger {
enum State { kTigerLeft = 0, kTigerRight, kDead, kAlive, kEnd };
enum Action { kListen = 0, kOpenLeft, kOpenRight };
enum Obs { kHearLeft = 0, kHearRight, kObsDead, kObsAlive, kObsEnd };
}  // namespace tiger

struct TigerSpec {
  double theta = 0.3;
  int horizon = 10;
  double beta = 0.99;
};

/// Native per-step rewards lie in [-101, 10]; the model stores (raw + 101) / 111.
inline constexpr RewardScale kTigerRewardScale{111.0, -101.0};

PomdpModel make_tiger(const TigerSpec& spec);

struct LockSpec {
  int num_actions = 2;
  int horizon = 2;
  double epsilon = 0.25;
  std::vector<int> secret;  // length H-1, entries in [0, A)
};

PomdpModel make_lock(const LockSpec& spec);

class TigerFamily final : public ParamFamily {
 public:
  TigerFamily(int horizon, double beta) : horizon_(horizon), beta_(beta) {}
  std::string name() const override { return "tiger"; }
  int dim() const override { return 1; }
  Eigen::VectorXd lower() const override { return Eigen::VectorXd::Constant(1, 0.0); }
  Eigen::VectorXd upper() const override { return Eigen::VectorXd::Constant(1, 0.5); }
  PomdpModel instantiate(const Eigen::VectorXd& theta) const override;
  RewardScale reward_scale() const override { return kTigerRewardScale; }

 private:
  int horizon_;
  double beta_;
};

/// theta is the secret dial sequence, one integer-valued component per step.
class LockFamily final : public ParamFamily {
 public:
  LockFamily(int num_actions, int horizon, double epsilon)
      : num_actions_(num_actions), horizon_(horizon), epsilon_(epsilon) {}
  std::string name() const override { return "lock"; }
  int dim() const override { return horizon_ - 1; }
  Eigen::VectorXd lower() const override { return Eigen::VectorXd::Zero(horizon_ - 1); }
  Eigen::VectorXd upper() const override { return Eigen::VectorXd::Constant(horizon_ - 1, num_actions_ - 1); }
  PomdpModel instantiate(const Eigen::VectorXd& theta) const override;

 private:
  int num_actions_;
  int horizon_;
  double epsilon_;
};

/// theta = (i) selects the i-th of a fixed list of models.
class ModelListFamily final : public ParamFamily {
 public:
  explicit ModelListFamily(std::vector<PomdpModel> models);
  std::string name() const override { return "models"; }
  int dim() const override { return 1; }
  Eigen::VectorXd lower() const override { return Eigen::VectorXd::Zero(1); }
  Eigen::VectorXd upper() const override { return Eigen::VectorXd::Constant(1, double(models_.size() - 1)); }
  PomdpModel instantiate(const Eigen::VectorXd& theta) const override;

 private:
  std::vector<PomdpModel> models_;
};

struct FamilyWithPrior {
  std::shared_ptr<const ParamFamily> family;
  GridPosterior prior;
};

/// `count` evenly spaced points on [lo, hi].
std::vector<Eigen::VectorXd> linspace_grid(double lo, double hi, int count);

/// Prior proportional to the N(0.25, 0.25) density truncated to [0.1, 0.5].
FamilyWithPrior tiger_family(int horizon, double beta, std::vector<Eigen::VectorXd> grid);
/// Every secret sequence in lexicographic order, uniform prior.
FamilyWithPrior lock_family(int num_actions, int horizon, double epsilon);

struct RandomModelSpec {
  int num_states = 2;
  int num_actions = 2;
  int num_obs = 2;
  int horizon = 2;
  std::optional<double> alpha_min;  // reject until every Z_h has sigma_min >= alpha_min
  bool identity_obs = false;        // Z_h = I (needs O == S)
};

/// Uniform simplex rows by sorted uniform gaps; rewards uniform on [0,1].
PomdpModel make_random(const RandomModelSpec& spec, std::uint64_t seed);

/// Uniform draw from the probability simplex of dimension n.
Eigen::VectorXd random_simplex(int n, Rng& rng);

}  // namespace psrl
