#include "psrl/lp.hpp"

#include <limits>

namespace psrl::lp {

namespace {
constexpr double kPivotTol = 1e-12;
}

Solution maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& rhs) {
  const Eigen::Index m = A.rows(), n = A.cols();
  // Row 0..m-1: constraints with slack identity; row m: reduced costs.
  Eigen::MatrixXd tab = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  tab.block(0, 0, m, n) = A;
  tab.block(0, n, m, m).setIdentity();
  tab.col(n + m).head(m) = rhs;
  tab.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(m);
  for (Eigen::Index i = 0; i < m; ++i) basis[i] = n + i;

  while (true) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (tab(m, j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;

    Eigen::Index leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab(i, enter) <= kPivotTol) continue;
      const double ratio = tab(i, n + m) / tab(i, enter);
      if (ratio < best_ratio - kPivotTol || (ratio <= best_ratio + kPivotTol && leave >= 0 && basis[i] < basis[leave])) {
        if (ratio < best_ratio) best_ratio = ratio;
        leave = i;
      }
    }
    if (leave < 0) return {Status::kUnbounded, {}, std::numeric_limits<double>::infinity()};

    tab.row(leave) /= tab(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double factor = tab(i, enter);
      if (factor != 0.0) tab.row(i) -= factor * tab.row(leave);
    }
    basis[leave] = enter;
  }

  Solution sol;
  sol.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (basis[i] < n) sol.x(basis[i]) = tab(i, n + m);
  sol.objective = c.dot(sol.x);
  return sol;
}

std::optional<Witness> find_witness(const Eigen::VectorXd& alpha, const std::vector<Eigen::VectorXd>& others,
                                    double tol) {
  const Eigen::Index S = alpha.size();
  if (others.empty()) {
    Witness w{Eigen::VectorXd::Zero(S), std::numeric_limits<double>::infinity()};
    w.belief(0) = 1.0;
    return w;
  }
  // Variables (b_0..b_{S-1}, delta); the scale constraint sum(b) <= 1 replaces
  // sum(b) = 1, which is equivalent whenever the optimal margin is positive.
  const Eigen::Index m = static_cast<Eigen::Index>(others.size()) + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, S + 1);
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    A.row(i).head(S) = -(alpha - others[i]).transpose();
    A(i, S) = 1.0;
  }
  A.row(m - 1).head(S).setOnes();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(S + 1);
  c(S) = 1.0;
  const Solution sol = maximize(c, A, Eigen::VectorXd::Unit(m, m - 1));
  if (sol.status != Status::kOptimal) return std::nullopt;
  const double margin = sol.x(S);
  const double mass = sol.x.head(S).sum();
  if (!(margin > tol) || !(mass > 0)) return std::nullopt;
  return Witness{sol.x.head(S) / mass, margin / mass};
}

}  // namespace psrl::lp
