#pragma once

// Numerical checks of revealing conditions, observable operators, and the
// inequalities the regret analysis rests on.

#include "psrl/learner.hpp"
#include "psrl/model.hpp"
#include "psrl/posterior.hpp"

#include <json.hpp>

#include <cstdint>

namespace psrl {

/// Singular values below this count as zero.
inline constexpr double kRankTolerance = 1e-10;

struct RevealingReport {
  bool overcomplete = false;      // O < S: the check does not apply
  std::vector<double> sigma_min;  // per step
  std::vector<double> pinv_l1;    // per step; infinity when rank deficient
  double alpha = 0;               // min over steps
  double threshold = 0;
  bool pass = false;
  bool alpha_below_sqrt_s = true;  // alpha <= sqrt(S)
  bool pinv_bounded = true;        // when pass: ||Z_h^+||_1 <= sqrt(S) / alpha for all h
};

RevealingReport check_revealing(const PomdpModel& m, double threshold);
nlohmann::json to_json(const RevealingReport& r);

/// Moore-Penrose inverse by SVD. Throws std::domain_error when a singular value
/// falls below kRankTolerance or Z^+ Z is not the identity within 1e-10.
Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& Z);

/// B_h(a, o) = Z_{h+1} T_{h,a} diag(Z_h(o,.)) Z_h^+, an O x O matrix; needs h < H-1.
Eigen::MatrixXd observable_operator(const PomdpModel& m, int h, int a, int o);

/// Pr^-(tau) = e_{o_H}^T B_{H-1}(a_{H-1}, o_{H-1}) ... B_1(a_1, o_1) Z_1 b1.
double env_prob_oop(const PomdpModel& m, const Trajectory& tau);

struct CheckResult {
  double lhs = 0;
  double rhs = 0;
  double tolerance = 0;
  bool pass = false;
};
nlohmann::json to_json(const CheckResult& r);

/// lhs = sum (sqrt p - sqrt q)^2, rhs = TV(p, q)^2; passes when lhs >= rhs - 1e-12.
CheckResult hellinger_tv_check(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

struct IndexChangeInstance {
  std::vector<Eigen::VectorXd> xs;
  std::vector<Eigen::VectorXd> ws;
  double g_x = 1;
  double g_w = 1;
  double beta = 1;
  double lambda = 1;
};

/// sum_k |x_k^T w_k| <= sqrt((lambda + beta) d K log(1 + G_w^2 G_x^2 K / (d lambda))).
/// Throws OutOfScope unless every norm bound and sum_{j<=k} (x_j^T w_k)^2 <= beta hold.
CheckResult index_change_check(const IndexChangeInstance& inst);

/// sum_k sqrt(x_k^T V_k^{-1} x_k) <= sqrt(d K log(1 + K / (d lambda))), with
/// V_k = lambda I + sum_{j<=k} x_j x_j^T. Throws OutOfScope if some ||x_k||_2 > 1.
CheckResult elliptical_potential_check(const std::vector<Eigen::VectorXd>& xs, double lambda);

/// Grouped form: w[k][l][m], x[k][l][n] in R^d with l1 budgets G_w, G_x.
struct GroupedIndexChangeInstance {
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> ws;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> xs;
  double g_x = 1;
  double g_w = 1;
  double beta = 1;
  double lambda = 1;
};

/// sum_k sum_{l,m,n} |w_{k,l,m}^T x_{k,l,n}|
///   <= sqrt((lambda + beta) d L M K log(1 + M G_w^2 G_x^2 K / (d L lambda))).
CheckResult grouped_index_change_check(const GroupedIndexChangeInstance& inst);

/// The smallest beta that makes `inst` satisfy the index-change precondition.
double realized_beta(const std::vector<Eigen::VectorXd>& xs, const std::vector<Eigen::VectorXd>& ws);
double realized_beta(const GroupedIndexChangeInstance& inst);

struct Step1Report {
  int runs = 0;
  int passes = 0;          // runs whose worst confidence-set TV sum respects the bound
  int covered = 0;         // runs with the true parameter's image in every confidence set
  double pass_rate = 0;
  double coverage_rate = 0;
  double bound = 0;        // 3 log(K |set|) + 3
  double worst = 0;        // largest TV sum seen over all runs
  std::size_t set_size = 0;
  std::vector<double> per_run_max;
};
nlohmann::json to_json(const Step1Report& r);

/// For each seed: run the learner, then for k = 1..K form the confidence set from
/// the first k-1 trajectories and check, for every member, that
///   sum_{j<=k} TV(Pr^{pi_j}_member, Pr^{pi_j}_true)^2 <= 3 log(K |set|) + 3.
/// eps_q <= 0 selects 1 / (2 H K).
Step1Report lemma_step1_check(const ParamFamily& fam, const GridPosterior& prior, const Eigen::VectorXd& theta_star,
                              int K, std::span<const std::uint64_t> seeds, const Planner& planner, double eps_q = 0,
                              std::int64_t enumeration_cap = 2'000'000, int jobs = 1);

}  // namespace psrl
