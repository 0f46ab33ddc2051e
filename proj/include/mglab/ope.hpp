#ifndef MGLAB_OPE_HPP
#define MGLAB_OPE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mglab/best_response.hpp"
#include "mglab/common.hpp"
#include "mglab/estimation.hpp"
#include "mglab/game.hpp"
#include "mglab/policy.hpp"

namespace mglab {

/// Empirical transitions plus per-cell bonuses over a game's known rewards.
/// Immutable; snapshot_id() identifies the tables.
class OptimisticModel {
 public:
  OptimisticModel(const MarkovGame& game, const Counters& counters, const BonusConfig& cfg)
      : game_(game), transitions_(counters.empirical_transitions()), bonus_(bonus_table(counters, game, cfg)) {
    StructuralHash hash;
    hash.add(std::string_view("counters")).add(counters.fingerprint()).add(cfg.c).add(cfg.delta).add(cfg.K);
    id_ = hash.value();
  }

  /// Explicit tables; an empty bonus means zero bonus.
  OptimisticModel(const MarkovGame& game, std::vector<double> transitions, std::vector<double> bonus)
      : game_(game), transitions_(std::move(transitions)), bonus_(std::move(bonus)) {
    if (transitions_.size() != game_.transitions().size()) throw Error("OptimisticModel: transition table size");
    if (bonus_.empty()) bonus_.assign(game_.num_cells(), 0.0);
    if (bonus_.size() != game_.num_cells()) throw Error("OptimisticModel: bonus table size");
    StructuralHash hash;
    hash.add(std::string_view("tables"));
    for (double p : transitions_) hash.add(p);
    for (double b : bonus_) hash.add(b);
    id_ = hash.value();
  }

  const MarkovGame& game() const { return game_; }
  const std::vector<double>& transitions() const { return transitions_; }
  const std::vector<double>& bonuses() const { return bonus_; }
  ModelView view() const { return ModelView(game_, transitions_, bonus_); }
  std::uint64_t snapshot_id() const { return id_; }

 private:
  MarkovGame game_;
  std::vector<double> transitions_;
  std::vector<double> bonus_;
  std::uint64_t id_ = 0;
};

/// Optimistic value of mu x nu: history-indexed backward induction under P-hat
/// with r + beta added and Q clipped at the remaining horizon H-h. When trace is non-null, one
/// {step, state, key, value} record per visited prefix is appended to it.
inline double ope_evaluate_general(const OptimisticModel& model, const GeneralPolicy& mu, const GeneralPolicy& nu,
                                   const Guards& guards = {}, nlohmann::json* trace = nullptr) {
  check_sides(model.game(), mu, nu);
  History tau(HistoryShape::of(model.game()), model.game().initial_state());
  detail::NodeBudget budget(guards.history_nodes);
  return detail::clipped_value_rec(model.view(), mu, nu, tau, budget, trace);
}

/// Same recursion indexed by (h, s) for Markov pairs.
inline double ope_evaluate_markov(const OptimisticModel& model, const MarkovPolicy& mu, const MarkovPolicy& nu) {
  const MarkovGame& g = model.game();
  check_sides(g, mu, nu);
  const ModelView m = model.view();
  const int S = g.num_states();
  std::vector<double> next(static_cast<std::size_t>(S), 0.0), cur(static_cast<std::size_t>(S), 0.0);
  for (int h = g.horizon() - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double v = 0.0;
      for (int a = 0; a < g.actions_max(); ++a) {
        const double pa = mu.prob(h, s, a);
        if (pa == 0.0) continue;
        for (int b = 0; b < g.actions_min(); ++b) {
          const double pb = nu.prob(h, s, b);
          if (pb == 0.0) continue;
          double q = g.reward(h, s, a, b) + m.bonus_at(h, s, a, b);
          auto row = m.row(h, s, a, b);
          for (int n = 0; n < S; ++n) q += row[static_cast<std::size_t>(n)] * next[static_cast<std::size_t>(n)];
          v += pa * pb * std::min(q, m.cap(h));
        }
      }
      cur[static_cast<std::size_t>(s)] = v;
    }
    std::swap(cur, next);
  }
  return next[static_cast<std::size_t>(g.initial_state())];
}

inline double ope_evaluate(const OptimisticModel& model, const GeneralPolicy& mu, const GeneralPolicy& nu,
                           const Guards& guards = {}) {
  if (const auto* m = mu.as_markov()) {
    if (const auto* n = nu.as_markov()) return ope_evaluate_markov(model, *m, *n);
  }
  return ope_evaluate_general(model, mu, nu, guards);
}

/// Denominator m = ceil(2k / epsilon) of the composition grid.
inline std::uint64_t cover_denominator(std::size_t k, double epsilon) {
  if (k == 0) throw ConfigError("simplex cover: k must be positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("simplex cover: epsilon must lie in (0, 1]");
  // The small slack keeps ceil(2k / (1/K)) at 2kK despite rounding in 1/K.
  return static_cast<std::uint64_t>(std::ceil(2.0 * static_cast<double>(k) / epsilon - 1e-9));
}

/// C(m + k - 1, k - 1), saturating at uint64 max.
inline std::uint64_t cover_size(std::size_t k, std::uint64_t m) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  // Multiplicative formula over r = k - 1; each partial product is itself a binomial.
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i < k; ++i) {
    const std::uint64_t factor = m + i;
    if (result > kMax / factor) return kMax;
    result = result * factor / i;
  }
  return result;
}

struct SimplexCover {
  std::size_t k = 0;
  std::uint64_t m = 0;
  std::vector<MixedWeights> points;
};

namespace detail {

/// Calls fn(counts) for every composition of m into k parts, in lexicographic order.
template <typename Fn>
void for_each_composition(std::size_t k, std::uint64_t m, Fn&& fn) {
  std::vector<std::uint64_t> c(k, 0);
  c[k - 1] = m;
  while (true) {
    fn(std::span<const std::uint64_t>(c));
    if (k == 1) return;
    // Next composition: find the rightmost non-last position that can grow.
    std::size_t i = k - 1;
    while (i > 0 && c[i] == 0) --i;
    if (i == 0) return;
    const std::uint64_t tail = c[i];
    c[i] = 0;
    ++c[i - 1];
    c[k - 1] = tail - 1;
  }
}

}  // namespace detail

/// All points of the simplex with coordinates in (1/m)Z, m = ceil(2k/eps);
/// every w in the simplex is within l1 distance eps of one of them.
inline SimplexCover simplex_cover(std::size_t k, double epsilon, const Guards& guards = {}) {
  SimplexCover cover;
  cover.k = k;
  cover.m = cover_denominator(k, epsilon);
  const std::uint64_t n = cover_size(k, cover.m);
  if (n > guards.cover_points) {
    throw GuardExceeded("simplex cover points C(m+k-1,k-1) with k=" + std::to_string(k) +
                            ", m=" + std::to_string(cover.m) + " (epsilon or k infeasible at this scale)",
                        guards.cover_points);
  }
  cover.points.reserve(static_cast<std::size_t>(n));
  const double md = static_cast<double>(cover.m);
  detail::for_each_composition(k, cover.m, [&](std::span<const std::uint64_t> c) {
    MixedWeights w;
    w.w.reserve(k);
    for (auto x : c) w.w.push_back(static_cast<double>(x) / md);
    cover.points.push_back(std::move(w));
  });
  return cover;
}

/// l1 distance from w to the nearest grid point with denominator m (largest-remainder rounding is optimal).
inline double distance_to_grid(std::span<const double> w, std::uint64_t m) {
  const std::size_t k = w.size();
  const double md = static_cast<double>(m);
  std::vector<std::int64_t> counts(k);
  std::vector<std::pair<double, std::size_t>> remainders(k);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double x = w[i] * md;
    counts[i] = static_cast<std::int64_t>(std::floor(x));
    assigned += counts[i];
    remainders[i] = {x - std::floor(x), i};
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(m) - assigned; ++r) {
    ++counts[remainders[static_cast<std::size_t>(r) % k].second];
  }
  double d = 0.0;
  for (std::size_t i = 0; i < k; ++i) d += std::abs(w[i] - static_cast<double>(counts[i]) / md);
  return d;
}

inline BestResponse optimistic_mixture_best_response(const OptimisticModel& model, std::span<const PolicyPtr> opponents,
                                                     const MixedWeights& w, const Guards& guards = {}) {
  return best_response_to_mixture(model.view(), opponents, w, guards);
}

enum class CoverTraversal {
  /// Walks the grid row by row against a precomputed frontier, bisecting
  /// each row; never materializes the cover.
  kImplicit,
  /// Materializes the cover and solves one mixture best response per point.
  kExplicit,
};

namespace detail {

inline std::vector<PolicyPtr> obr_explicit(const OptimisticModel& model, std::span<const PolicyPtr> psi,
                                           double epsilon, const Guards& guards) {
  const SimplexCover cover = simplex_cover(psi.size(), epsilon, guards);
  std::vector<PolicyPtr> out;
  std::unordered_set<std::string> seen;
  for (const auto& w : cover.points) {
    auto br = optimistic_mixture_best_response(model, psi, w, guards);
    if (seen.insert(br.policy->canonical_id()).second) out.push_back(br.policy);
  }
  return out;
}

inline std::vector<PolicyPtr> obr_implicit(const MixtureFrontier& frontier, std::size_t k, double epsilon,
                                           const Guards& guards) {
  const std::uint64_t m = cover_denominator(k, epsilon);
  const double md = static_cast<double>(m);
  std::set<std::size_t> entries;
  if (k == 1) {
    entries.insert(frontier.argmax(std::vector<double>{1.0}));
  } else {
    // Rows fix the first k-2 coordinates; the last two vary along a segment,
    // on which the first-maximizer regions are intervals.
    const std::uint64_t rows = cover_size(k - 1, m);
    if (rows > guards.cover_points) {
      throw GuardExceeded("simplex cover rows C(m+k-2,k-2) with k=" + std::to_string(k) + ", m=" + std::to_string(m),
                          guards.cover_points);
    }
    std::vector<double> w(k);
    for_each_composition(k - 1, m, [&](std::span<const std::uint64_t> c) {
      // c[0..k-3] are the fixed coordinates; c[k-2] is the remainder split between the last two.
      for (std::size_t i = 0; i + 2 < k; ++i) w[i] = static_cast<double>(c[i]) / md;
      const std::uint64_t rest = c[k - 2];
      auto point = [&](std::uint64_t j) {
        w[k - 2] = static_cast<double>(j) / md;
        w[k - 1] = static_cast<double>(rest - j) / md;
        return frontier.argmax(w);
      };
      struct Span {
        std::uint64_t lo, hi;
        std::size_t e_lo, e_hi;
      };
      std::vector<Span> stack{{0, rest, point(0), point(rest)}};
      while (!stack.empty()) {
        Span sp = stack.back();
        stack.pop_back();
        entries.insert(sp.e_lo);
        entries.insert(sp.e_hi);
        if (sp.e_lo == sp.e_hi || sp.hi - sp.lo <= 1) continue;
        const std::uint64_t mid = sp.lo + (sp.hi - sp.lo) / 2;
        const std::size_t e_mid = point(mid);
        stack.push_back({mid, sp.hi, e_mid, sp.e_hi});
        stack.push_back({sp.lo, mid, sp.e_lo, e_mid});
      }
    });
  }
  std::vector<PolicyPtr> out;
  std::unordered_set<std::string> seen;
  for (std::size_t e : entries) {
    auto p = frontier.policy(e);
    if (seen.insert(p->canonical_id()).second) out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// One optimistic mixture best response per point of the eps-cover of the
/// simplex over psi, deduplicated by canonical id.
///
/// The implicit traversal returns the same set as the explicit scan up to
/// order (sorted by frontier entry rather than by first grid point). It is
/// exact when the first-maximizer regions are convex, which holds because
/// each is an intersection of half-spaces in w.
inline std::vector<PolicyPtr> optimistic_best_response_set(const OptimisticModel& model,
                                                           std::span<const PolicyPtr> psi, double epsilon,
                                                           const Guards& guards = {},
                                                           CoverTraversal traversal = CoverTraversal::kImplicit) {
  if (psi.empty()) throw Error("optimistic best response set: empty opponent list");
  if (traversal == CoverTraversal::kExplicit) return detail::obr_explicit(model, psi, epsilon, guards);
  try {
    MixtureFrontier frontier(model.view(), psi, guards);
    return detail::obr_implicit(frontier, psi.size(), epsilon, guards);
  } catch (const GuardExceeded& e) {
    if (e.bound() != "mixture frontier entries" || clip_can_bind(model.view())) throw;
  }
  return detail::obr_explicit(model, psi, epsilon, guards);
}

inline std::vector<PolicyPtr> optimistic_best_response_set(const MarkovGame& game, const Counters& lazy,
                                                           const BonusConfig& cfg, std::span<const PolicyPtr> psi,
                                                           double epsilon, const Guards& guards = {}) {
  return optimistic_best_response_set(OptimisticModel(game, lazy, cfg), psi, epsilon, guards);
}

}  // namespace mglab

#endif  // MGLAB_OPE_HPP
