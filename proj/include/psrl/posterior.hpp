#pragma once

// Parameter families, grid posteriors, quantized parameter sets and
// log-likelihood confidence sets.

#include "psrl/errors.hpp"
#include "psrl/model.hpp"
#include "psrl/rng.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

namespace psrl {

/// Affine map from the boxed [0,1] reward scale back to an environment's native
/// scale: raw episode return = scale * boxed return + offset * H.
struct RewardScale {
  double scale = 1.0;
  double offset = 0.0;

  double raw_return(double boxed, int horizon) const { return scale * boxed + offset * horizon; }
  double raw_difference(double boxed_diff) const { return scale * boxed_diff; }
};

/// theta -> model, with S, A, O, H and rewards fixed by the family.
class ParamFamily {
 public:
  virtual ~ParamFamily() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd lower() const = 0;
  virtual Eigen::VectorXd upper() const = 0;
  /// Throws std::out_of_range for theta outside the bounds.
  virtual PomdpModel instantiate(const Eigen::VectorXd& theta) const = 0;
  virtual RewardScale reward_scale() const { return {}; }

  void check_bounds(const Eigen::VectorXd& theta) const;
};

/// Discrete posterior over a fixed list of parameter points, stored as
/// normalized log-weights (logsumexp = 0). Zero weight is -infinity.
struct GridPosterior {
  std::vector<Eigen::VectorXd> points;
  std::vector<double> log_weights;

  /// Normalizes `weights`; throws on negative entries or zero total.
  static GridPosterior from_weights(std::vector<Eigen::VectorXd> points, const std::vector<double>& weights);
  static GridPosterior uniform(std::vector<Eigen::VectorXd> points);

  std::size_t size() const { return points.size(); }
  std::vector<double> weights() const;
};

/// log Pr^-_m(tau), or -infinity when the trajectory is impossible under m.
double log_env_prob(const PomdpModel& m, const Trajectory& tau);

/// Sum of log environment probabilities. The policy factor is left out: it does
/// not depend on theta and cancels in every posterior ratio and threshold.
double loglik(const PomdpModel& m, std::span<const Trajectory> data);
double loglik(const ParamFamily& fam, const Eigen::VectorXd& theta, std::span<const Trajectory> data);

/// Adds log Pr^-_{theta_i}(tau) to each log-weight and renormalizes.
/// Throws DataImpossible when every point gives tau zero probability.
GridPosterior posterior_update(const GridPosterior& post, const ParamFamily& fam, const Trajectory& tau);
/// Same, with models[i] the instantiation of post.points[i].
GridPosterior posterior_update(const GridPosterior& post, std::span<const PomdpModel> models, const Trajectory& tau);

/// Index of a grid point drawn with probability equal to its weight.
std::size_t posterior_sample(const GridPosterior& post, Rng& rng);

/// Rounds each probability vector up to multiples of eps_q/n and renormalizes,
/// n being the vector length. Entries already on that lattice are fixed points.
Eigen::VectorXd quantize_distribution(const Eigen::VectorXd& mu, double eps_q);
PomdpModel quantize_model(const PomdpModel& m, double eps_q);

struct QuantizedParamSet {
  double eps_q = 0;
  std::vector<PomdpModel> members;
  /// iota[i]: member index of the image of grid point i.
  std::vector<int> iota;
  /// Member index of the true parameter's image, when one was supplied.
  int star = -1;
};

/// (H S^2 A + H S O) log(max(S, O) / eps_q + 1).
double log_cardinality_bound(const PomdpModel& m, double eps_q);

/// Deduplicated quantized images of the grid; the image of theta_star is added
/// when it is not already present.
QuantizedParamSet build_quantized_set(std::span<const PomdpModel> grid_models, double eps_q,
                                      const PomdpModel* theta_star = nullptr);
QuantizedParamSet build_quantized_set(const ParamFamily& fam, std::span<const Eigen::VectorXd> grid, double eps_q,
                                      const Eigen::VectorXd* theta_star = nullptr);

struct ConfidenceSet {
  std::vector<int> members;
  double threshold = 0;
  double best = 0;
  std::vector<double> logliks;  // per member of the quantized set

  bool contains(int member) const;
};

/// Members whose log-likelihood is within log(K |set|) + 1 of the best member.
ConfidenceSet confidence_set(const QuantizedParamSet& qs, std::span<const Trajectory> data, int K);

/// Rows (k, index, theta_0.., weight); the header is written when `header` is set.
void write_posterior_csv(std::ostream& out, int episode, const GridPosterior& post, bool header);

}  // namespace psrl
