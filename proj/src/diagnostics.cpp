#include "psrl/diagnostics.hpp"

#include "psrl/errors.hpp"
#include "psrl/trajectory_prob.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace psrl {

RevealingReport check_revealing(const PomdpModel& m, double threshold) {
  RevealingReport r;
  r.threshold = threshold;
  const int S = m.num_states;
  if (m.num_obs < S) {
    r.overcomplete = true;
    return r;
  }
  r.alpha = std::numeric_limits<double>::infinity();
  for (int h = 0; h < m.horizon; ++h) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.observations[h], Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double smin = sv(S - 1);
    r.sigma_min.push_back(smin);
    r.alpha = std::min(r.alpha, smin);
    if (smin < kRankTolerance) {
      r.pinv_l1.push_back(std::numeric_limits<double>::infinity());
    } else {
      const Eigen::MatrixXd pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
      r.pinv_l1.push_back(pinv.cwiseAbs().colwise().sum().maxCoeff());
    }
  }
  r.pass = r.alpha >= threshold && r.alpha >= kRankTolerance;
  r.alpha_below_sqrt_s = r.alpha <= std::sqrt(double(S)) + 1e-12;
  if (r.pass)
    for (double n : r.pinv_l1)
      if (n > std::sqrt(double(S)) / r.alpha * (1 + 1e-10)) r.pinv_bounded = false;
  return r;
}

nlohmann::json to_json(const RevealingReport& r) {
  return {{"overcomplete", r.overcomplete}, {"sigma_min", r.sigma_min},
          {"pinv_l1", r.pinv_l1},          {"alpha", r.alpha},
          {"threshold", r.threshold},      {"pass", r.pass},
          {"alpha_below_sqrt_s", r.alpha_below_sqrt_s}, {"pinv_bounded", r.pinv_bounded}};
}

Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& Z) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() < Z.cols() || sv(sv.size() - 1) < kRankTolerance)
    throw std::domain_error("observation matrix is rank deficient");
  Eigen::MatrixXd pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  const double err = (pinv * Z - Eigen::MatrixXd::Identity(Z.cols(), Z.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw std::domain_error(fmt::format("pseudo-inverse residual {} exceeds 1e-10", err));
  return pinv;
}

Eigen::MatrixXd observable_operator(const PomdpModel& m, int h, int a, int o) {
  if (h < 0 || h + 1 >= m.horizon) throw std::out_of_range("observable_operator: needs a step with a successor");
  const Eigen::VectorXd z = m.observations[h].row(o).transpose();
  return m.observations[h + 1] * m.transitions[h][a] * z.asDiagonal() * left_inverse(m.observations[h]);
}

double env_prob_oop(const PomdpModel& m, const Trajectory& tau) {
  check_trajectory(m, tau);
  Eigen::VectorXd v = m.observations[0] * m.initial;
  for (int h = 0; h + 1 < m.horizon; ++h) v = observable_operator(m, h, tau.actions[h], tau.obs[h]) * v;
  return v(tau.obs[m.horizon - 1]);
}

nlohmann::json to_json(const CheckResult& r) {
  return {{"lhs", r.lhs}, {"rhs", r.rhs}, {"tolerance", r.tolerance}, {"pass", r.pass}};
}

namespace {

void require_distribution(const Eigen::VectorXd& p, const char* name) {
  if ((p.array() < 0).any() || std::abs(p.sum() - 1) > 1e-9)
    throw std::invalid_argument(fmt::format("hellinger_tv_check: {} is not a probability vector", name));
}

}  // namespace

CheckResult hellinger_tv_check(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("hellinger_tv_check: support sizes differ");
  require_distribution(p, "p");
  require_distribution(q, "q");
  CheckResult r;
  r.tolerance = 1e-12;
  r.lhs = (p.cwiseSqrt() - q.cwiseSqrt()).squaredNorm();
  const double tv = 0.5 * (p - q).lpNorm<1>();
  r.rhs = tv * tv;
  r.pass = r.lhs >= r.rhs - r.tolerance;
  return r;
}

double realized_beta(const std::vector<Eigen::VectorXd>& xs, const std::vector<Eigen::VectorXd>& ws) {
  double beta = 0;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    double acc = 0;
    for (std::size_t j = 0; j <= k; ++j) acc += std::pow(xs[j].dot(ws[k]), 2);
    beta = std::max(beta, acc);
  }
  return beta;
}

CheckResult index_change_check(const IndexChangeInstance& inst) {
  const std::size_t K = inst.xs.size();
  if (K == 0 || inst.ws.size() != K) throw std::invalid_argument("index_change_check: need K >= 1 matching pairs");
  if (!(inst.lambda > 0)) throw std::invalid_argument("index_change_check: lambda must be positive");
  const double d = double(inst.xs.front().size());
  for (std::size_t k = 0; k < K; ++k) {
    if (inst.xs[k].norm() > inst.g_x * (1 + 1e-12) || inst.ws[k].norm() > inst.g_w * (1 + 1e-12))
      throw OutOfScope(fmt::format("vector norm bound violated at k = {}", k + 1));
  }
  if (realized_beta(inst.xs, inst.ws) > inst.beta * (1 + 1e-12) + 1e-15)
    throw OutOfScope("sum_j (x_j^T w_k)^2 exceeds beta");
  CheckResult r;
  r.tolerance = 1e-9;
  for (std::size_t k = 0; k < K; ++k) r.lhs += std::abs(inst.xs[k].dot(inst.ws[k]));
  const double g2 = inst.g_w * inst.g_w * inst.g_x * inst.g_x;
  r.rhs = std::sqrt((inst.lambda + inst.beta) * d * double(K) * std::log1p(g2 * double(K) / (d * inst.lambda)));
  r.pass = r.lhs <= r.rhs + r.tolerance;
  return r;
}

CheckResult elliptical_potential_check(const std::vector<Eigen::VectorXd>& xs, double lambda) {
  if (xs.empty()) throw std::invalid_argument("elliptical_potential_check: need K >= 1");
  if (!(lambda > 0)) throw std::invalid_argument("elliptical_potential_check: lambda must be positive");
  const Eigen::Index d = xs.front().size();
  Eigen::MatrixXd V = lambda * Eigen::MatrixXd::Identity(d, d);
  CheckResult r;
  r.tolerance = 1e-9;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].norm() > 1 + 1e-12) throw OutOfScope(fmt::format("||x_{}||_2 exceeds 1", k + 1));
    V += xs[k] * xs[k].transpose();
    r.lhs += std::sqrt(std::max(0.0, xs[k].dot(V.ldlt().solve(xs[k]))));
  }
  const double K = double(xs.size());
  r.rhs = std::sqrt(double(d) * K * std::log1p(K / (double(d) * lambda)));
  r.pass = r.lhs <= r.rhs + r.tolerance;
  return r;
}

namespace {

double grouped_inner(const GroupedIndexChangeInstance& inst, std::size_t k, std::size_t j) {
  double total = 0;
  for (std::size_t l = 0; l < inst.ws[k].size(); ++l)
    for (const auto& w : inst.ws[k][l])
      for (const auto& x : inst.xs[j][l]) total += std::abs(w.dot(x));
  return total;
}

}  // namespace

double realized_beta(const GroupedIndexChangeInstance& inst) {
  double beta = 0;
  for (std::size_t k = 0; k < inst.ws.size(); ++k) {
    double acc = 0;
    for (std::size_t j = 0; j <= k; ++j) acc += std::pow(grouped_inner(inst, k, j), 2);
    beta = std::max(beta, acc);
  }
  return beta;
}

CheckResult grouped_index_change_check(const GroupedIndexChangeInstance& inst) {
  const std::size_t K = inst.ws.size();
  if (K == 0 || inst.xs.size() != K) throw std::invalid_argument("grouped_index_change_check: need K >= 1");
  const std::size_t L = inst.ws[0].size();
  if (L == 0 || inst.ws[0][0].empty() || inst.xs[0].size() != L || inst.xs[0][0].empty())
    throw std::invalid_argument("grouped_index_change_check: empty groups");
  const std::size_t M = inst.ws[0][0].size();
  const double d = double(inst.ws[0][0][0].size());
  for (std::size_t k = 0; k < K; ++k) {
    double gw = 0, gx = 0;
    for (const auto& group : inst.ws[k])
      for (const auto& w : group) gw += w.lpNorm<1>();
    for (const auto& group : inst.xs[k])
      for (const auto& x : group) gx += x.lpNorm<1>();
    if (gw > inst.g_w * (1 + 1e-12) || gx > inst.g_x * (1 + 1e-12))
      throw OutOfScope(fmt::format("l1 budget violated at k = {}", k + 1));
  }
  if (realized_beta(inst) > inst.beta * (1 + 1e-12) + 1e-15) throw OutOfScope("grouped precondition exceeds beta");
  CheckResult r;
  r.tolerance = 1e-9;
  for (std::size_t k = 0; k < K; ++k) r.lhs += grouped_inner(inst, k, k);
  const double g2 = inst.g_w * inst.g_w * inst.g_x * inst.g_x;
  r.rhs = std::sqrt((inst.lambda + inst.beta) * d * double(L) * double(M) * double(K) *
                    std::log1p(double(M) * g2 * double(K) / (d * double(L) * inst.lambda)));
  r.pass = r.lhs <= r.rhs + r.tolerance;
  return r;
}

nlohmann::json to_json(const Step1Report& r) {
  return {{"runs", r.runs},         {"passes", r.passes},   {"covered", r.covered},
          {"pass_rate", r.pass_rate}, {"coverage_rate", r.coverage_rate}, {"bound", r.bound},
          {"worst", r.worst},       {"set_size", r.set_size}};
}

Step1Report lemma_step1_check(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star,
                              int K, std::span<const std::uint64_t> seeds, const Planner& planner, double eps_q,
                              std::int64_t enumeration_cap, int jobs) {
  if (K < 1) throw std::invalid_argument("lemma_step1_check: K must be >= 1");
  const PomdpModel truth = fam.instantiate(theta_star);
  if (eps_q <= 0) eps_q = 1.0 / (2.0 * truth.horizon * K);
  std::vector<PomdpModel> grid_models;
  for (const auto& theta : prior.points) grid_models.push_back(fam.instantiate(theta));
  const QuantizedParamSet qs = build_quantized_set(grid_models, eps_q, &truth);

  Step1Report report;
  report.runs = static_cast<int>(seeds.size());
  report.set_size = qs.members.size();
  report.bound = 3 * std::log(double(K) * double(qs.members.size())) + 3;
  report.per_run_max.assign(seeds.size(), 0.0);
  std::vector<char> covered(seeds.size(), 0);

  LearnerOptions opts;
  opts.cache = std::make_shared<PlanCache>();
  parallel_for(static_cast<int>(seeds.size()), jobs, [&](int r) {
    Rng rng(seeds[r]);
    const LearningLog log = ps4pomdps_run(fam, prior, theta_star, K, planner, rng, opts);

    // TV^2 between member and truth under policy j, memoized per policy object.
    std::map<const HistoryPolicy*, std::vector<double>> tv2;
    auto tv2_for = [&](const HistoryPolicy* pi) -> const std::vector<double>& {
      auto it = tv2.find(pi);
      if (it != tv2.end()) return it->second;
      const auto ref = enumerate_distribution(truth, *pi, enumeration_cap);
      std::vector<double> row;
      for (const PomdpModel& member : qs.members) {
        const double tv = tv_distance(enumerate_distribution(member, *pi, enumeration_cap), ref);
        row.push_back(tv * tv);
      }
      return tv2.emplace(pi, std::move(row)).first->second;
    };

    std::vector<Trajectory> data;
    std::vector<double> prefix(qs.members.size(), 0.0);
    bool all_covered = true;
    double worst = 0;
    for (int k = 1; k <= K; ++k) {
      const ConfidenceSet cs = confidence_set(qs, data, K);
      if (!cs.contains(qs.star)) all_covered = false;
      const auto& row = tv2_for(log.episodes[k - 1].policy.get());
      for (std::size_t j = 0; j < prefix.size(); ++j) prefix[j] += row[j];
      for (int member : cs.members) worst = std::max(worst, prefix[member]);
      data.push_back(log.episodes[k - 1].trajectory);
    }
    report.per_run_max[r] = worst;
    covered[r] = all_covered;
  });

  for (std::size_t r = 0; r < seeds.size(); ++r) {
    report.worst = std::max(report.worst, report.per_run_max[r]);
    if (report.per_run_max[r] <= report.bound) ++report.passes;
    if (covered[r]) ++report.covered;
  }
  report.pass_rate = double(report.passes) / double(report.runs);
  report.coverage_rate = double(report.covered) / double(report.runs);
  return report;
}

}  // namespace psrl
