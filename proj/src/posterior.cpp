#include "psrl/posterior.hpp"

#include "psrl/trajectory_prob.hpp"

#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace psrl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void normalize_log(std::vector<double>& lw) {
  const double top = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(top)) throw DataImpossible("no grid point has positive weight");
  double sum = 0;
  for (double x : lw) sum += std::exp(x - top);
  const double log_total = top + std::log(sum);
  for (double& x : lw) x -= log_total;
}

}  // namespace

void ParamFamily::check_bounds(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) throw std::out_of_range(fmt::format("{}: parameter has dimension {}", name(), theta.size()));
  const Eigen::VectorXd lo = lower(), hi = upper();
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (!(theta(i) >= lo(i) && theta(i) <= hi(i)))
      throw std::out_of_range(fmt::format("{}: component {} = {} outside [{}, {}]", name(), i, theta(i), lo(i), hi(i)));
}

GridPosterior GridPosterior::from_weights(std::vector<Eigen::VectorXd> points, const std::vector<double>& weights) {
  if (points.empty()) throw std::invalid_argument("GridPosterior: empty grid");
  if (points.size() != weights.size()) throw std::invalid_argument("GridPosterior: weight count mismatch");
  GridPosterior post;
  post.points = std::move(points);
  for (double w : weights) {
    if (!(w >= 0)) throw std::invalid_argument("GridPosterior: negative weight");
    post.log_weights.push_back(w > 0 ? std::log(w) : kNegInf);
  }
  normalize_log(post.log_weights);
  return post;
}

GridPosterior GridPosterior::uniform(std::vector<Eigen::VectorXd> points) {
  const std::vector<double> w(points.size(), 1.0);
  return from_weights(std::move(points), w);
}

std::vector<double> GridPosterior::weights() const {
  std::vector<double> w;
  w.reserve(log_weights.size());
  for (double x : log_weights) w.push_back(std::exp(x));
  return w;
}

double log_env_prob(const PomdpModel& m, const Trajectory& tau) {
  const double p = env_prob_matrix(m, tau);
  return p > 0 ? std::log(p) : kNegInf;
}

double loglik(const PomdpModel& m, std::span<const Trajectory> data) {
  double total = 0;
  for (const Trajectory& tau : data) {
    total += log_env_prob(m, tau);
    if (total == kNegInf) break;
  }
  return total;
}

double loglik(const ParamFamily& fam, const Eigen::VectorXd& theta, std::span<const Trajectory> data) {
  return loglik(fam.instantiate(theta), data);
}

GridPosterior posterior_update(const GridPosterior& post, std::span<const PomdpModel> models, const Trajectory& tau) {
  if (models.size() != post.size()) throw std::invalid_argument("posterior_update: one model per grid point required");
  GridPosterior next = post;
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (next.log_weights[i] == kNegInf) continue;
    next.log_weights[i] += log_env_prob(models[i], tau);
  }
  try {
    normalize_log(next.log_weights);
  } catch (const DataImpossible&) {
    throw DataImpossible(fmt::format("trajectory [{}] has zero likelihood at every supported point",
                                     fmt::join(tau.flatten(), ",")));
  }
  return next;
}

GridPosterior posterior_update(const GridPosterior& post, const ParamFamily& fam, const Trajectory& tau) {
  std::vector<PomdpModel> models;
  models.reserve(post.size());
  for (const auto& theta : post.points) models.push_back(fam.instantiate(theta));
  return posterior_update(post, models, tau);
}

std::size_t posterior_sample(const GridPosterior& post, Rng& rng) {
  const std::vector<double> w = post.weights();
  return static_cast<std::size_t>(sample_categorical<double>(w, rng));
}

Eigen::VectorXd quantize_distribution(const Eigen::VectorXd& mu, double eps_q) {
  const double inv = std::round(1.0 / eps_q);
  if (!(eps_q > 0) || std::abs(inv - 1.0 / eps_q) > 1e-9)
    throw std::invalid_argument("quantize: 1/eps_q must be an integer");
  const double N = static_cast<double>(mu.size()) * inv;
  Eigen::VectorXd v(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double x = N * mu(i);
    const double r = std::round(x);
    v(i) = (std::abs(x - r) <= 1e-9 ? r : std::ceil(x)) / N;
  }
  return v / v.sum();
}

PomdpModel quantize_model(const PomdpModel& m, double eps_q) {
  PomdpModel q = m;
  q.initial = quantize_distribution(m.initial, eps_q);
  for (auto& step : q.transitions)
    for (auto& T : step)
      for (Eigen::Index s = 0; s < T.cols(); ++s) T.col(s) = quantize_distribution(T.col(s), eps_q);
  for (auto& Z : q.observations)
    for (Eigen::Index s = 0; s < Z.cols(); ++s) Z.col(s) = quantize_distribution(Z.col(s), eps_q);
  return q;
}

double log_cardinality_bound(const PomdpModel& m, double eps_q) {
  const double S = m.num_states, A = m.num_actions, O = m.num_obs, H = m.horizon;
  return (H * S * S * A + H * S * O) * std::log(std::max(S, O) / eps_q + 1);
}

QuantizedParamSet build_quantized_set(std::span<const PomdpModel> grid_models, double eps_q,
                                      const PomdpModel* theta_star) {
  if (grid_models.empty()) throw std::invalid_argument("build_quantized_set: empty grid");
  QuantizedParamSet qs;
  qs.eps_q = eps_q;
  auto insert = [&qs](PomdpModel q) {
    for (std::size_t j = 0; j < qs.members.size(); ++j)
      if (qs.members[j] == q) return static_cast<int>(j);
    qs.members.push_back(std::move(q));
    return static_cast<int>(qs.members.size()) - 1;
  };
  for (const PomdpModel& m : grid_models) qs.iota.push_back(insert(quantize_model(m, eps_q)));
  if (theta_star) qs.star = insert(quantize_model(*theta_star, eps_q));
  if (std::log(static_cast<double>(qs.members.size())) > log_cardinality_bound(grid_models.front(), eps_q))
    throw std::logic_error("quantized set exceeds its cardinality bound");
  return qs;
}

QuantizedParamSet build_quantized_set(const ParamFamily& fam, std::span<const Eigen::VectorXd> grid, double eps_q,
                                      const Eigen::VectorXd* theta_star) {
  std::vector<PomdpModel> models;
  models.reserve(grid.size());
  for (const auto& theta : grid) models.push_back(fam.instantiate(theta));
  if (!theta_star) return build_quantized_set(models, eps_q);
  const PomdpModel star = fam.instantiate(*theta_star);
  return build_quantized_set(models, eps_q, &star);
}

bool ConfidenceSet::contains(int member) const {
  return std::find(members.begin(), members.end(), member) != members.end();
}

ConfidenceSet confidence_set(const QuantizedParamSet& qs, std::span<const Trajectory> data, int K) {
  if (K < 1) throw std::invalid_argument("confidence_set: K must be >= 1");
  ConfidenceSet cs;
  cs.best = kNegInf;
  for (const PomdpModel& m : qs.members) {
    cs.logliks.push_back(loglik(m, data));
    cs.best = std::max(cs.best, cs.logliks.back());
  }
  cs.threshold = cs.best - std::log(static_cast<double>(K) * static_cast<double>(qs.members.size())) - 1.0;
  for (std::size_t j = 0; j < qs.members.size(); ++j)
    if (cs.logliks[j] >= cs.threshold) cs.members.push_back(static_cast<int>(j));
  return cs;
}

void write_posterior_csv(std::ostream& out, int episode, const GridPosterior& post, bool header) {
  const Eigen::Index d = post.points.empty() ? 0 : post.points.front().size();
  if (header) {
    out << "k,index";
    for (Eigen::Index i = 0; i < d; ++i) out << ",theta_" << i;
    out << ",weight\n";
  }
  const std::vector<double> w = post.weights();
  for (std::size_t i = 0; i < post.size(); ++i) {
    out << fmt::format("{},{}", episode, i);
    for (Eigen::Index c = 0; c < d; ++c) out << fmt::format(",{}", post.points[i](c));
    out << fmt::format(",{}\n", w[i]);
  }
}

}  // namespace psrl
