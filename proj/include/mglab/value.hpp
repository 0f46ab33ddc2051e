#ifndef MGLAB_VALUE_HPP
#define MGLAB_VALUE_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/history.hpp"
#include "mglab/policy.hpp"

namespace mglab {

inline void check_sides(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu) {
  if (mu.side() != Side::kMax || mu.num_actions() != game.actions_max()) {
    throw PolicyFault("policy " + mu.canonical_id() + " is not a max-player policy for this game");
  }
  if (nu.side() != Side::kMin || nu.num_actions() != game.actions_min()) {
    throw PolicyFault("policy " + nu.canonical_id() + " is not a min-player policy for this game");
  }
}

namespace detail {

inline void checked_distribution(const GeneralPolicy& p, const History& tau, std::span<double> out) {
  p.distribution(tau, out);
  if (auto why = distribution_problem(out); !why.empty()) {
    throw PolicyFault("policy " + p.canonical_id() + " returned an invalid distribution at step " +
                      std::to_string(tau.step()) + ": " + why);
  }
}

class NodeBudget {
 public:
  explicit NodeBudget(std::size_t limit) : limit_(limit) {}
  void visit() {
    if (++visited_ > limit_) throw GuardExceeded("history nodes", limit_);
  }
  std::size_t visited() const { return visited_; }

 private:
  std::size_t limit_;
  std::size_t visited_ = 0;
};

}  // namespace detail

/// Plays one episode of mu x nu from the initial state.
inline Trajectory sample_episode(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu, Rng& rng) {
  check_sides(game, mu, nu);
  Trajectory traj;
  History tau(HistoryShape::of(game), game.initial_state());
  traj.states.push_back(game.initial_state());
  std::vector<double> pmax(static_cast<std::size_t>(game.actions_max()));
  std::vector<double> pmin(static_cast<std::size_t>(game.actions_min()));
  for (int h = 0; h < game.horizon(); ++h) {
    const int s = tau.current_state();
    detail::checked_distribution(mu, tau, pmax);
    detail::checked_distribution(nu, tau, pmin);
    const JointAction ja{static_cast<int>(sample_index(pmax, rng)), static_cast<int>(sample_index(pmin, rng))};
    const int next = static_cast<int>(sample_index(game.transition_row(h, s, ja.max, ja.min), rng));
    traj.actions.push_back(ja);
    traj.rewards.push_back(game.reward(h, s, ja.max, ja.min));
    traj.states.push_back(next);
    tau.push(ja, next);
  }
  return traj;
}

namespace detail {

inline double general_value_rec(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu,
                                History& tau, NodeBudget& budget) {
  budget.visit();
  const int h = tau.step();
  const int s = tau.current_state();
  std::vector<double> pmax(static_cast<std::size_t>(game.actions_max()));
  std::vector<double> pmin(static_cast<std::size_t>(game.actions_min()));
  checked_distribution(mu, tau, pmax);
  checked_distribution(nu, tau, pmin);
  const bool last = h + 1 == game.horizon();
  double v = 0.0;
  for (int a = 0; a < game.actions_max(); ++a) {
    if (pmax[static_cast<std::size_t>(a)] == 0.0) continue;
    for (int b = 0; b < game.actions_min(); ++b) {
      const double pj = pmax[static_cast<std::size_t>(a)] * pmin[static_cast<std::size_t>(b)];
      if (pj == 0.0) continue;
      double q = game.reward(h, s, a, b);
      if (!last) {
        auto row = game.transition_row(h, s, a, b);
        for (int n = 0; n < game.num_states(); ++n) {
          const double pn = row[static_cast<std::size_t>(n)];
          if (pn == 0.0) continue;
          tau.push({a, b}, n);
          q += pn * general_value_rec(game, mu, nu, tau, budget);
          tau.pop();
        }
      }
      v += pj * q;
    }
  }
  return v;
}

}  // namespace detail

/// Exact V_1^{mu x nu}(s_1) by backward induction over the joint-history tree.
/// Branches with zero probability are skipped; every visited prefix counts
/// against guards.history_nodes.
inline double exact_value_general(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu,
                                  const Guards& guards = {}) {
  check_sides(game, mu, nu);
  History tau(HistoryShape::of(game), game.initial_state());
  detail::NodeBudget budget(guards.history_nodes);
  return detail::general_value_rec(game, mu, nu, tau, budget);
}

/// V_1 for Markov policies by state-indexed backward induction.
inline double exact_value_markov(const MarkovGame& game, const MarkovPolicy& mu, const MarkovPolicy& nu) {
  check_sides(game, mu, nu);
  const int S = game.num_states();
  std::vector<double> next(static_cast<std::size_t>(S), 0.0), cur(static_cast<std::size_t>(S), 0.0);
  for (int h = game.horizon() - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < game.actions_max(); ++a) {
        const double pa = mu.prob(h, s, a);
        if (pa == 0.0) continue;
        for (int b = 0; b < game.actions_min(); ++b) {
          const double pb = nu.prob(h, s, b);
          if (pb == 0.0) continue;
          double q = game.reward(h, s, a, b);
          auto row = game.transition_row(h, s, a, b);
          for (int n = 0; n < S; ++n) q += row[static_cast<std::size_t>(n)] * next[static_cast<std::size_t>(n)];
          v += pa * pb * q;
        }
      }
      cur[static_cast<std::size_t>(s)] = v;
    }
    std::swap(cur, next);
  }
  return next[static_cast<std::size_t>(game.initial_state())];
}

/// Dispatches to the Markov path when both policies are Markov.
inline double exact_value(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu,
                          const Guards& guards = {}) {
  if (const auto* m = mu.as_markov()) {
    if (const auto* n = nu.as_markov()) return exact_value_markov(game, *m, *n);
  }
  return exact_value_general(game, mu, nu, guards);
}

/// Flat encoding of a full trajectory: s_1, a_max, a_min, s_2, ..., s_{H+1}.
using TrajectoryKey = std::vector<int>;
using TrajectoryLaw = std::map<TrajectoryKey, double>;

namespace detail {

inline void law_rec(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu, History& tau,
                    double prob, TrajectoryKey& key, TrajectoryLaw& law, NodeBudget& budget) {
  budget.visit();
  if (tau.length() == game.horizon() + 1) {
    law[key] += prob;
    return;
  }
  const int h = tau.step();
  const int s = tau.current_state();
  std::vector<double> pmax(static_cast<std::size_t>(game.actions_max()));
  std::vector<double> pmin(static_cast<std::size_t>(game.actions_min()));
  checked_distribution(mu, tau, pmax);
  checked_distribution(nu, tau, pmin);
  for (int a = 0; a < game.actions_max(); ++a) {
    for (int b = 0; b < game.actions_min(); ++b) {
      const double pj = pmax[static_cast<std::size_t>(a)] * pmin[static_cast<std::size_t>(b)];
      if (pj == 0.0) continue;
      auto row = game.transition_row(h, s, a, b);
      for (int n = 0; n < game.num_states(); ++n) {
        const double pn = row[static_cast<std::size_t>(n)];
        if (pn == 0.0) continue;
        key.insert(key.end(), {a, b, n});
        tau.push({a, b}, n);
        law_rec(game, mu, nu, tau, prob * pj * pn, key, law, budget);
        tau.pop();
        key.resize(key.size() - 3);
      }
    }
  }
}

}  // namespace detail

/// Exact distribution over complete trajectories of mu x nu (positive-probability atoms only).
inline TrajectoryLaw trajectory_law(const MarkovGame& game, const GeneralPolicy& mu, const GeneralPolicy& nu,
                                    const Guards& guards = {}) {
  check_sides(game, mu, nu);
  History tau(HistoryShape::of(game), game.initial_state());
  detail::NodeBudget budget(guards.history_nodes);
  TrajectoryLaw law;
  TrajectoryKey key{game.initial_state()};
  detail::law_rec(game, mu, nu, tau, 1.0, key, law, budget);
  return law;
}

}  // namespace mglab

#endif  // MGLAB_VALUE_HPP
