#ifndef MGLAB_BEST_RESPONSE_HPP
#define MGLAB_BEST_RESPONSE_HPP

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/history.hpp"
#include "mglab/policy.hpp"
#include "mglab/value.hpp"

namespace mglab {

/// Transition table and per-cell bonus used for evaluation, layered over a
/// game that supplies dimensions and rewards. Empty spans mean "the game's own
/// transitions" and "zero bonus".
struct ModelView {
  const MarkovGame* game = nullptr;
  std::span<const double> transitions;
  std::span<const double> bonus;

  ModelView(const MarkovGame& g, std::span<const double> t = {}, std::span<const double> b = {})
      : game(&g), transitions(t.empty() ? std::span<const double>(g.transitions()) : t), bonus(b) {
    if (transitions.size() != g.transitions().size()) throw Error("ModelView: transition table size mismatch");
    if (!bonus.empty() && bonus.size() != g.num_cells()) throw Error("ModelView: bonus table size mismatch");
  }

  std::span<const double> row(int h, int s, int a, int b) const {
    const auto S = static_cast<std::size_t>(game->num_states());
    return transitions.subspan(game->cell_index(h, s, a, b) * S, S);
  }
  double bonus_at(int h, int s, int a, int b) const {
    return bonus.empty() ? 0.0 : bonus[game->cell_index(h, s, a, b)];
  }
  /// Q ceiling at 0-based step h.
  double cap(int h) const { return static_cast<double>(game->horizon() - h); }
};

/// True when min{Q, H-h} can be active for some policy pair. When false,
/// clipped and unclipped recursions coincide.
inline bool clip_can_bind(const ModelView& m) {
  const MarkovGame& g = *m.game;
  double upper_next = 0.0;
  for (int h = g.horizon() - 1; h >= 0; --h) {
    double upper = 0.0;
    for (int s = 0; s < g.num_states(); ++s)
      for (int a = 0; a < g.actions_max(); ++a)
        for (int b = 0; b < g.actions_min(); ++b) {
          const double q = g.reward(h, s, a, b) + m.bonus_at(h, s, a, b) + upper_next;
          if (q > m.cap(h)) return true;
          upper = std::max(upper, q);
        }
    upper_next = upper;
  }
  return false;
}

struct BestResponse {
  std::shared_ptr<const DeterministicHistoryPolicy> policy;
  /// sum_i w_i * V^i.
  double value = 0.0;
  /// Per-opponent values of the returned policy (same order as the opponent list).
  std::vector<double> per_opponent;
};

namespace detail {

inline void check_opponents(const MarkovGame& g, std::span<const PolicyPtr> opponents) {
  if (opponents.empty()) throw Error("best response: empty opponent list");
  for (const auto& nu : opponents) {
    if (nu->side() != Side::kMin || nu->num_actions() != g.actions_min()) {
      throw PolicyFault("policy " + nu->canonical_id() + " is not a min-player policy for this game");
    }
  }
}

constexpr double kTieTolerance = 1e-12;

/// Scalar backward induction over the joint-history tree with unnormalized
/// posterior weights w_i * (likelihood of the history's min-player actions under nu_i).
class LinearMixtureSolver {
 public:
  LinearMixtureSolver(const ModelView& model, std::span<const PolicyPtr> opponents, const Guards& guards)
      : m_(model), g_(*model.game), opp_(opponents.begin(), opponents.end()), budget_(guards.history_nodes) {
    raw_.resize(static_cast<std::size_t>(g_.horizon()));
  }

  BestResponse solve(const MixedWeights& w) {
    History tau(HistoryShape::of(g_), g_.initial_state());
    std::vector<double> rho(w.w.begin(), w.w.end());
    const double value = rec(tau, rho);
    auto policy = std::make_shared<DeterministicHistoryPolicy>(Side::kMax, g_.horizon(), HistoryShape::of(g_),
                                                               g_.actions_max(), on_path(w));
    BestResponse br;
    br.policy = std::move(policy);
    br.value = value;
    return br;
  }

 private:
  double rec(History& tau, const std::vector<double>& rho) {
    budget_.visit();
    if (!tau.key_valid()) throw Error("best response: history key overflow");
    const int h = tau.step();
    const int s = tau.current_state();
    const std::size_t k = opp_.size();
    const auto Amin = static_cast<std::size_t>(g_.actions_min());
    std::vector<double> nu(k * Amin, 0.0);
    std::vector<double> mass(Amin, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (rho[i] == 0.0) continue;
      std::span<double> row(nu.data() + i * Amin, Amin);
      checked_distribution(*opp_[i], tau, row);
      for (std::size_t b = 0; b < Amin; ++b) mass[b] += rho[i] * row[b];
    }
    const bool last = h + 1 == g_.horizon();
    double best = 0.0;
    int best_action = 0;
    std::vector<double> child_rho(k);
    for (int a = 0; a < g_.actions_max(); ++a) {
      double v = 0.0;
      for (int b = 0; b < g_.actions_min(); ++b) {
        if (mass[static_cast<std::size_t>(b)] == 0.0) continue;
        v += mass[static_cast<std::size_t>(b)] * (g_.reward(h, s, a, b) + m_.bonus_at(h, s, a, b));
        if (last) continue;
        for (std::size_t i = 0; i < k; ++i) child_rho[i] = rho[i] * nu[i * Amin + static_cast<std::size_t>(b)];
        auto row = m_.row(h, s, a, b);
        for (int n = 0; n < g_.num_states(); ++n) {
          const double pn = row[static_cast<std::size_t>(n)];
          if (pn == 0.0) continue;
          tau.push({a, b}, n);
          v += pn * rec(tau, child_rho);
          tau.pop();
        }
      }
      if (a == 0 || v > best + kTieTolerance * (1.0 + std::abs(best))) {
        best = v;
        best_action = a;
      }
    }
    if (best_action != 0) raw_[static_cast<std::size_t>(h)][tau.key()] = best_action;
    return best;
  }

  // Keeps only the decisions at prefixes the chosen policy can reach.
  DeterministicHistoryPolicy::Decisions on_path(const MixedWeights& w) {
    DeterministicHistoryPolicy::Decisions out(static_cast<std::size_t>(g_.horizon()));
    History tau(HistoryShape::of(g_), g_.initial_state());
    std::vector<double> rho(w.w.begin(), w.w.end());
    walk(tau, rho, out);
    return out;
  }

  void walk(History& tau, const std::vector<double>& rho, DeterministicHistoryPolicy::Decisions& out) {
    const int h = tau.step();
    const auto level = static_cast<std::size_t>(h);
    int a = 0;
    if (auto it = raw_[level].find(tau.key()); it != raw_[level].end()) a = it->second;
    if (a != 0) out[level][tau.key()] = a;
    if (h + 1 == g_.horizon()) return;
    const std::size_t k = opp_.size();
    const auto Amin = static_cast<std::size_t>(g_.actions_min());
    std::vector<double> nu(k * Amin, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (rho[i] == 0.0) continue;
      opp_[i]->distribution(tau, std::span<double>(nu.data() + i * Amin, Amin));
    }
    std::vector<double> child_rho(k);
    for (int b = 0; b < g_.actions_min(); ++b) {
      bool any = false;
      for (std::size_t i = 0; i < k; ++i) {
        child_rho[i] = rho[i] * nu[i * Amin + static_cast<std::size_t>(b)];
        any = any || child_rho[i] != 0.0;
      }
      if (!any) continue;
      auto row = m_.row(h, tau.current_state(), a, b);
      for (int n = 0; n < g_.num_states(); ++n) {
        if (row[static_cast<std::size_t>(n)] == 0.0) continue;
        tau.push({a, b}, n);
        walk(tau, child_rho, out);
        tau.pop();
      }
    }
  }

  const ModelView& m_;
  const MarkovGame& g_;
  std::vector<PolicyPtr> opp_;
  NodeBudget budget_;
  std::vector<std::unordered_map<std::uint64_t, int>> raw_;
};

}  // namespace detail

/// Exact set of non-dominated per-opponent value vectors over all
/// deterministic general max-player policies, with clipping at H-h.
///
/// Every general policy's vector (V^1, ..., V^k) is weakly dominated by some
/// frontier entry, so for any weights w the best response is the frontier
/// entry maximizing w . v. Entries remember their decisions so the policy can
/// be rebuilt. Cost grows with the frontier size, bounded by
/// guards.frontier_entries.
class MixtureFrontier {
 public:
  MixtureFrontier(const ModelView& model, std::span<const PolicyPtr> opponents, const Guards& guards = {})
      : m_(model), g_(*model.game), opp_(opponents.begin(), opponents.end()), guards_(guards),
        budget_(guards.history_nodes) {
    detail::check_opponents(g_, opponents);
    nodes_.resize(static_cast<std::size_t>(g_.horizon()));
    History tau(HistoryShape::of(g_), g_.initial_state());
    std::vector<char> relevant(opp_.size(), 1);
    build(tau, relevant);
    root_ = &nodes_[0].at(tau.key());
  }

  std::size_t size() const { return root_->size(); }
  std::size_t num_opponents() const { return opp_.size(); }
  const std::vector<double>& values(std::size_t entry) const { return (*root_)[entry].v; }

  double score(std::size_t entry, std::span<const double> w) const {
    const auto& v = (*root_)[entry].v;
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) total += w[i] * v[i];
    return total;
  }

  /// First entry attaining the maximal weighted value.
  std::size_t argmax(std::span<const double> w) const {
    std::size_t best = 0;
    double best_score = score(0, w);
    for (std::size_t e = 1; e < root_->size(); ++e) {
      const double sc = score(e, w);
      if (sc > best_score + detail::kTieTolerance * (1.0 + std::abs(best_score))) {
        best_score = sc;
        best = e;
      }
    }
    return best;
  }

  std::shared_ptr<const DeterministicHistoryPolicy> policy(std::size_t entry) const {
    if (auto it = policies_.find(entry); it != policies_.end()) return it->second;
    DeterministicHistoryPolicy::Decisions decisions(static_cast<std::size_t>(g_.horizon()));
    History tau(HistoryShape::of(g_), g_.initial_state());
    materialize(tau, (*root_)[entry], decisions);
    auto p = std::make_shared<DeterministicHistoryPolicy>(Side::kMax, g_.horizon(), HistoryShape::of(g_),
                                                          g_.actions_max(), std::move(decisions));
    policies_.emplace(entry, p);
    return p;
  }

  BestResponse best_response(const MixedWeights& w) const {
    if (w.size() != opp_.size()) throw Error("best response: weight/opponent count mismatch");
    const std::size_t e = argmax(w.w);
    BestResponse br;
    br.policy = policy(e);
    br.value = score(e, w.w);
    br.per_opponent = values(e);
    return br;
  }

 private:
  struct Pick {
    std::int32_t slot;   // b * S + s'
    std::int32_t entry;  // index into the child's frontier
  };
  struct Entry {
    std::vector<double> v;
    int action = 0;
    std::vector<Pick> picks;
  };
  using Frontier = std::vector<Entry>;

  static bool dominates(const Entry& x, const Entry& y, const std::vector<char>& rel) {
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      if (rel[i] && x.v[i] < y.v[i] - detail::kTieTolerance) return false;
    }
    return true;
  }

  // Drops dominated entries; among equal vectors the earliest survives.
  void prune(Frontier& f, const std::vector<char>& rel) const {
    if (f.size() > guards_.frontier_entries) throw GuardExceeded("mixture frontier entries", guards_.frontier_entries);
    std::vector<char> keep(f.size(), 1);
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t j = 0; j < f.size() && keep[i]; ++j) {
        if (i == j || !keep[j]) continue;
        if (dominates(f[j], f[i], rel) && (j < i || !dominates(f[i], f[j], rel))) keep[i] = 0;
      }
    }
    Frontier out;
    out.reserve(f.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      if (keep[i]) out.push_back(std::move(f[i]));
    f = std::move(out);
  }

  Frontier minkowski(const Frontier& lhs, const Frontier& rhs, double scale, std::int32_t slot) const {
    if (lhs.size() * rhs.size() > guards_.frontier_entries) {
      throw GuardExceeded("mixture frontier entries", guards_.frontier_entries);
    }
    Frontier out;
    out.reserve(lhs.size() * rhs.size());
    for (const auto& x : lhs) {
      for (std::size_t j = 0; j < rhs.size(); ++j) {
        Entry e = x;
        for (std::size_t i = 0; i < e.v.size(); ++i) e.v[i] += scale * rhs[j].v[i];
        e.picks.push_back({slot, static_cast<std::int32_t>(j)});
        out.push_back(std::move(e));
      }
    }
    return out;
  }

  const Frontier& build(History& tau, const std::vector<char>& relevant) {
    budget_.visit();
    if (!tau.key_valid()) throw Error("best response: history key overflow");
    const int h = tau.step();
    const int s = tau.current_state();
    const std::size_t k = opp_.size();
    const auto Amin = static_cast<std::size_t>(g_.actions_min());
    const auto S = g_.num_states();
    std::vector<double> nu(k * Amin, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (!relevant[i]) continue;
      detail::checked_distribution(*opp_[i], tau, std::span<double>(nu.data() + i * Amin, Amin));
    }
    const bool last = h + 1 == g_.horizon();
    Frontier result;
    std::vector<char> rel_b(k);
    for (int a = 0; a < g_.actions_max(); ++a) {
      Frontier combos(1);
      combos[0].v.assign(k, 0.0);
      combos[0].action = a;
      for (int b = 0; b < g_.actions_min(); ++b) {
        bool any = false;
        for (std::size_t i = 0; i < k; ++i) {
          rel_b[i] = relevant[i] && nu[i * Amin + static_cast<std::size_t>(b)] > 0.0;
          any = any || rel_b[i];
        }
        if (!any) continue;
        const double base = g_.reward(h, s, a, b) + m_.bonus_at(h, s, a, b);
        Frontier q(1);
        q[0].v.assign(k, 0.0);
        for (std::size_t i = 0; i < k; ++i)
          if (rel_b[i]) q[0].v[i] = base;
        if (!last) {
          auto row = m_.row(h, s, a, b);
          for (int n = 0; n < S; ++n) {
            const double pn = row[static_cast<std::size_t>(n)];
            if (pn == 0.0) continue;
            tau.push({a, b}, n);
            const Frontier& child = build(tau, rel_b);
            tau.pop();
            q = minkowski(q, child, pn, b * S + n);
            prune(q, rel_b);
          }
        }
        const double cap = m_.cap(h);
        for (auto& e : q) {
          for (std::size_t i = 0; i < k; ++i) {
            if (rel_b[i]) {
              e.v[i] = std::min(e.v[i], cap) * nu[i * Amin + static_cast<std::size_t>(b)];
            }
          }
        }
        prune(q, rel_b);
        Frontier next;
        next.reserve(combos.size() * q.size());
        for (const auto& c : combos) {
          for (const auto& e : q) {
            Entry x = c;
            for (std::size_t i = 0; i < k; ++i) x.v[i] += e.v[i];
            x.picks.insert(x.picks.end(), e.picks.begin(), e.picks.end());
            next.push_back(std::move(x));
          }
        }
        combos = std::move(next);
        prune(combos, relevant);
      }
      for (auto& c : combos) result.push_back(std::move(c));
    }
    prune(result, relevant);
    auto& slot = nodes_[static_cast<std::size_t>(h)][tau.key()];
    slot = std::move(result);
    return slot;
  }

  void materialize(History& tau, const Entry& e, DeterministicHistoryPolicy::Decisions& out) const {
    const int h = tau.step();
    if (e.action != 0) out[static_cast<std::size_t>(h)][tau.key()] = e.action;
    const int S = g_.num_states();
    for (const Pick& p : e.picks) {
      const int b = p.slot / S;
      const int n = p.slot % S;
      tau.push({e.action, b}, n);
      const Frontier& child = nodes_[static_cast<std::size_t>(h + 1)].at(tau.key());
      materialize(tau, child[static_cast<std::size_t>(p.entry)], out);
      tau.pop();
    }
  }

  ModelView m_;
  const MarkovGame& g_;
  std::vector<PolicyPtr> opp_;
  Guards guards_;
  detail::NodeBudget budget_;
  std::vector<std::unordered_map<std::uint64_t, Frontier>> nodes_;
  const Frontier* root_ = nullptr;
  mutable std::unordered_map<std::size_t, std::shared_ptr<const DeterministicHistoryPolicy>> policies_;
};

/// Value of mu against each opponent under the model, with the same clipping
/// as the best-response computation.
inline std::vector<double> clipped_values(const ModelView& model, const GeneralPolicy& mu,
                                          std::span<const PolicyPtr> opponents, const Guards& guards = {});

/// Best deterministic general max-player policy against the mixture
/// sum_i w_i nu_i, maximizing sum_i w_i V^{mu x nu_i} under the model view
/// (Q clipped at H-h per opponent). Ties go to the lowest action index.
inline BestResponse best_response_to_mixture(const ModelView& model, std::span<const PolicyPtr> opponents,
                                             const MixedWeights& w, const Guards& guards = {}) {
  const MarkovGame& g = *model.game;
  detail::check_opponents(g, opponents);
  if (w.size() != opponents.size()) throw Error("best response: weight/opponent count mismatch");
  if (!w.valid(1e-9)) throw Error("best response: weights are not a distribution");
  for (double b : model.bonus) {
    if (b < 0.0) throw Error("best response: negative bonus");
  }
  if (!clip_can_bind(model)) {
    detail::LinearMixtureSolver solver(model, opponents, guards);
    BestResponse br = solver.solve(w);
    br.per_opponent = clipped_values(model, *br.policy, opponents, guards);
    return br;
  }
  MixtureFrontier frontier(model, opponents, guards);
  return frontier.best_response(w);
}

inline BestResponse best_response_to_mixture(const MarkovGame& game, std::span<const PolicyPtr> opponents,
                                             const MixedWeights& w, std::span<const double> model_transitions = {},
                                             std::span<const double> bonus = {}, const Guards& guards = {}) {
  return best_response_to_mixture(ModelView(game, model_transitions, bonus), opponents, w, guards);
}

namespace detail {

inline double clipped_value_rec(const ModelView& m, const GeneralPolicy& mu, const GeneralPolicy& nu, History& tau,
                                NodeBudget& budget, nlohmann::json* trace = nullptr) {
  budget.visit();
  const MarkovGame& g = *m.game;
  const int h = tau.step();
  const int s = tau.current_state();
  std::vector<double> pmax(static_cast<std::size_t>(g.actions_max()));
  std::vector<double> pmin(static_cast<std::size_t>(g.actions_min()));
  checked_distribution(mu, tau, pmax);
  checked_distribution(nu, tau, pmin);
  const bool last = h + 1 == g.horizon();
  double v = 0.0;
  for (int a = 0; a < g.actions_max(); ++a) {
    if (pmax[static_cast<std::size_t>(a)] == 0.0) continue;
    for (int b = 0; b < g.actions_min(); ++b) {
      const double pj = pmax[static_cast<std::size_t>(a)] * pmin[static_cast<std::size_t>(b)];
      if (pj == 0.0) continue;
      double q = g.reward(h, s, a, b) + m.bonus_at(h, s, a, b);
      if (!last) {
        auto row = m.row(h, s, a, b);
        for (int n = 0; n < g.num_states(); ++n) {
          if (row[static_cast<std::size_t>(n)] == 0.0) continue;
          tau.push({a, b}, n);
          q += row[static_cast<std::size_t>(n)] * clipped_value_rec(m, mu, nu, tau, budget, trace);
          tau.pop();
        }
      }
      v += pj * std::min(q, m.cap(h));
    }
  }
  if (trace != nullptr) trace->push_back({{"step", h}, {"state", s}, {"key", tau.key()}, {"value", v}});
  return v;
}

}  // namespace detail

inline std::vector<double> clipped_values(const ModelView& model, const GeneralPolicy& mu,
                                          std::span<const PolicyPtr> opponents, const Guards& guards) {
  std::vector<double> out;
  out.reserve(opponents.size());
  for (const auto& nu : opponents) {
    History tau(HistoryShape::of(*model.game), model.game->initial_state());
    detail::NodeBudget budget(guards.history_nodes);
    out.push_back(detail::clipped_value_rec(model, mu, *nu, tau, budget));
  }
  return out;
}

}  // namespace mglab

#endif  // MGLAB_BEST_RESPONSE_HPP
