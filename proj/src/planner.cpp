#include "psrl/planner.hpp"

#include "psrl/lp.hpp"

#include <algorithm>
#include <limits>

namespace psrl {

namespace alpha {

namespace {

bool dominates(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double tol) {
  return ((u.array() + tol) >= v.array()).all();
}

// Lexicographic comparison used to break exact ties at a witness point.
bool lex_greater(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (u(i) != v(i)) return u(i) > v(i);
  }
  return false;
}

}  // namespace

std::vector<std::size_t> prune_pointwise(const std::vector<Eigen::VectorXd>& vs, double tol) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const bool covered =
        std::any_of(kept.begin(), kept.end(), [&](std::size_t k) { return dominates(vs[k], vs[i], tol); });
    if (covered) continue;
    std::erase_if(kept, [&](std::size_t k) { return dominates(vs[i], vs[k], 0.0); });
    kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<std::size_t> prune_lp(const std::vector<Eigen::VectorXd>& vs, double tol) {
  if (vs.size() <= 1) {
    std::vector<std::size_t> all(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) all[i] = i;
    return all;
  }
  const Eigen::Index S = vs.front().size();
  std::vector<std::size_t> frontier(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) frontier[i] = i;
  std::vector<std::size_t> winners;

  auto best_at = [&](const Eigen::VectorXd& b) {
    std::size_t best = frontier.front();
    double best_val = vs[best].dot(b);
    for (std::size_t idx : frontier) {
      const double val = vs[idx].dot(b);
      if (val > best_val + 1e-13 || (val >= best_val - 1e-13 && lex_greater(vs[idx], vs[best]))) {
        best = idx;
        best_val = std::max(best_val, val);
      }
    }
    return best;
  };
  auto promote = [&](std::size_t idx) {
    winners.push_back(idx);
    std::erase(frontier, idx);
  };

  for (Eigen::Index s = 0; s < S && !frontier.empty(); ++s) {
    const std::size_t best = best_at(Eigen::VectorXd::Unit(S, s));
    bool useful = true;
    for (std::size_t w : winners)
      if (vs[w](s) >= vs[best](s)) useful = false;
    if (useful) promote(best);
  }

  std::vector<Eigen::VectorXd> winner_vecs;
  for (std::size_t w : winners) winner_vecs.push_back(vs[w]);
  while (!frontier.empty()) {
    const std::size_t phi = frontier.front();
    const auto witness = lp::find_witness(vs[phi], winner_vecs, tol);
    if (!witness) {
      frontier.erase(frontier.begin());
      continue;
    }
    const std::size_t best = best_at(witness->belief);
    promote(best);
    winner_vecs.push_back(vs[best]);
  }
  std::sort(winners.begin(), winners.end());
  return winners;
}

std::vector<std::size_t> prune(const std::vector<Eigen::VectorXd>& vs, double pointwise_tol, double lp_tol) {
  const std::vector<std::size_t> first = prune_pointwise(vs, pointwise_tol);
  std::vector<Eigen::VectorXd> sub;
  sub.reserve(first.size());
  for (std::size_t i : first) sub.push_back(vs[i]);
  std::vector<std::size_t> out;
  for (std::size_t j : prune_lp(sub, lp_tol)) out.push_back(first[j]);
  return out;
}

}  // namespace alpha

std::size_t AlphaVectorSet::max_step_size() const {
  std::size_t n = 0;
  for (const auto& step : value) n = std::max(n, step.size());
  for (const auto& step : decision)
    for (const auto& set : step) n = std::max(n, set.size());
  return n;
}

nlohmann::json alpha_set_to_json(const AlphaVectorSet& set) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& step : set.decision) {
    nlohmann::json vectors = nlohmann::json::array();
    for (std::size_t o = 0; o < step.size(); ++o) {
      for (const AlphaVector& v : step[o]) {
        vectors.push_back({{"obs", o},
                           {"action", v.action},
                           {"values", std::vector<double>(v.values.data(), v.values.data() + v.values.size())}});
      }
    }
    out.push_back(std::move(vectors));
  }
  return out;
}

PlannerPolicy::PlannerPolicy(std::shared_ptr<const PomdpModel> model, std::shared_ptr<const AlphaVectorSet> alphas)
    : model_(std::move(model)), alphas_(std::move(alphas)) {}

Belief PlannerPolicy::belief(std::span<const int> obs, std::span<const int> actions) const {
  const PomdpModel& m = *model_;
  if (obs.empty() || static_cast<int>(obs.size()) > m.horizon || actions.size() + 1 < obs.size())
    throw std::out_of_range("PlannerPolicy: history length does not fit the horizon");
  const int h = static_cast<int>(obs.size()) - 1;
  Eigen::VectorXd cur = m.initial;
  Eigen::VectorXd marginal = m.initial;
  for (int t = 0; t <= h; ++t) {
    if (t > 0) {
      const int a = actions[t - 1];
      if (a < 0 || a >= m.num_actions) throw std::out_of_range("PlannerPolicy: action index out of range");
      cur = m.transitions[t - 1][a] * cur;
      marginal = m.transitions[t - 1][a] * marginal;
    }
    const int o = obs[t];
    if (o < 0 || o >= m.num_obs) throw std::out_of_range("PlannerPolicy: observation index out of range");
    const Eigen::VectorXd joint = m.observations[t].row(o).transpose().cwiseProduct(cur);
    const double p = joint.sum();
    cur = p > 0 ? Eigen::VectorXd(joint / p) : marginal;
  }
  return {cur, h};
}

int PlannerPolicy::act(std::span<const int> obs, std::span<const int> actions) const {
  const Belief b = belief(obs, actions);
  const auto& candidates = alphas_->decision[b.step][obs.back()];
  double best = -std::numeric_limits<double>::infinity();
  for (const AlphaVector& v : candidates) best = std::max(best, v.values.dot(b.probs));
  int action = std::numeric_limits<int>::max();
  for (const AlphaVector& v : candidates)
    if (v.values.dot(b.probs) >= best - 1e-12) action = std::min(action, v.action);
  return action;
}

AlphaSolution solve_alpha(const PomdpModel& m, const PlannerOptions& opts) {
  if (!(opts.epsilon >= 0)) throw std::invalid_argument("solve_alpha: epsilon must be nonnegative");
  const int S = m.num_states, A = m.num_actions, O = m.num_obs, H = m.horizon;
  const double step_tol = opts.epsilon / H;
  const std::size_t cap = opts.max_vectors_per_step;

  auto set = std::make_shared<AlphaVectorSet>();
  set->decision.resize(H);
  set->value.resize(H + 1);
  set->value[H] = {Eigen::VectorXd::Zero(S)};

  auto check_cap = [&](std::size_t n, int h) {
    if (n > cap) {
      const int done = H - 1 - h;
      throw PlanningBudgetExceeded(fmt::format("{} candidate vectors at step {} (cap {})", n, h, cap), done,
                                   done * step_tol);
    }
  };

  for (int h = H - 1; h >= 0; --h) {
    const auto& next = set->value[h + 1];
    std::vector<std::vector<Eigen::VectorXd>> weighted(O);
    set->decision[h].resize(O);
    check_cap(static_cast<std::size_t>(A) * next.size(), h);

    for (int o = 0; o < O; ++o) {
      std::vector<Eigen::VectorXd> cands;
      std::vector<int> labels;
      for (int a = 0; a < A; ++a) {
        for (const Eigen::VectorXd& beta : next) {
          Eigen::VectorXd lambda = Eigen::VectorXd::Constant(S, m.reward(h, o, a));
          if (h + 1 < H) lambda += m.transitions[h][a].transpose() * beta;
          cands.push_back(std::move(lambda));
          labels.push_back(a);
        }
      }
      auto& decision = set->decision[h][o];
      for (std::size_t i : alpha::prune(cands, step_tol / 2, opts.lp_tolerance))
        decision.push_back({cands[i], labels[i]});

      const Eigen::VectorXd z = m.observations[h].row(o).transpose();
      std::vector<Eigen::VectorXd> w;
      for (const AlphaVector& v : decision) w.push_back(z.cwiseProduct(v.values));
      for (std::size_t i : alpha::prune(w, 0.0, opts.lp_tolerance)) weighted[o].push_back(w[i]);
    }

    std::vector<Eigen::VectorXd> acc = weighted[0];
    for (int o = 1; o < O; ++o) {
      check_cap(acc.size() * weighted[o].size(), h);
      std::vector<Eigen::VectorXd> sums;
      sums.reserve(acc.size() * weighted[o].size());
      for (const auto& x : acc)
        for (const auto& y : weighted[o]) sums.push_back(x + y);
      const double tol = o + 1 == O ? step_tol / 2 : 0.0;
      std::vector<Eigen::VectorXd> pruned;
      for (std::size_t i : alpha::prune(sums, tol, opts.lp_tolerance)) pruned.push_back(std::move(sums[i]));
      acc = std::move(pruned);
    }
    if (O == 1) {
      std::vector<Eigen::VectorXd> pruned;
      for (std::size_t i : alpha::prune(acc, step_tol / 2, opts.lp_tolerance)) pruned.push_back(acc[i]);
      acc = std::move(pruned);
    }
    check_cap(acc.size(), h);
    set->value[h] = std::move(acc);
  }

  double value = -std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& v : set->value[0]) value = std::max(value, v.dot(m.initial));

  auto model = std::make_shared<const PomdpModel>(m);
  return {std::make_shared<const PlannerPolicy>(std::move(model), std::move(set)), value};
}

}  // namespace psrl
