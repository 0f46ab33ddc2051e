#ifndef MGLAB_VERIFY_HPP
#define MGLAB_VERIFY_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/ope.hpp"
#include "mglab/policy.hpp"
#include "mglab/reductions/lmdp.hpp"
#include "mglab/reductions/pomdp.hpp"
#include "mglab/reductions/sat.hpp"
#include "mglab/value.hpp"

namespace mglab {

struct PropertyResult {
  std::string suite;
  std::string name;
  bool pass = true;
  std::size_t checks = 0;
  std::string counterexample;  // JSON dump of the first failure
};

struct VerifyOptions {
  /// 0 selects each suite's default trial count.
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  /// Fault injection: the optimism suite negates its bonus.
  bool negative_bonus = false;
  /// Extra formulas for the sat suite, on top of the built-in ones.
  std::vector<CnfFormula> formulas;
  Guards guards = Guards::from_env();
};

inline const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites{"ope", "optimism", "cover", "pomdp", "lmdp", "sat"};
  return suites;
}

namespace detail {

class Property {
 public:
  Property(std::string suite, std::string name) { r_.suite = std::move(suite), r_.name = std::move(name); }

  /// Records one check; the first failing one keeps its dump.
  void check(bool ok, const std::function<nlohmann::json()>& dump) {
    ++r_.checks;
    if (ok || !r_.pass) return;
    r_.pass = false;
    r_.counterexample = dump().dump();
  }
  PropertyResult result() const { return r_; }

 private:
  PropertyResult r_;
};

inline std::size_t trials_or(const VerifyOptions& o, std::size_t fallback) { return o.trials ? o.trials : fallback; }

inline MarkovGame small_random_game(Rng& rng) {
  auto pick = [&](int hi) { return 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(hi)); };
  return random_game(pick(3), pick(2), pick(2), pick(3), rng);
}

/// Half Markov, half history-dependent; a quarter of each is deterministic.
inline PolicyPtr random_policy(const MarkovGame& g, Side side, Rng& rng) {
  const int A = side == Side::kMax ? g.actions_max() : g.actions_min();
  const bool det = rng() % 4 == 0;
  if (rng() % 2 == 0) return random_markov_policy(side, g.horizon(), g.num_states(), A, rng, det);
  return std::make_shared<RandomHistoryPolicy>(side, HistoryShape::of(g), A, rng(), det);
}

inline nlohmann::json describe_pair(const MarkovGame& g, const GeneralPolicy& mu, const GeneralPolicy& nu) {
  nlohmann::json j{{"game", game_to_json(g)}, {"mu", mu.canonical_id()}, {"nu", nu.canonical_id()}};
  if (mu.as_markov()) j["mu"] = policy_to_json(mu);
  if (nu.as_markov()) j["nu"] = policy_to_json(nu);
  return j;
}

inline std::vector<PropertyResult> suite_ope(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/ope"));
  Property equiv("ope", "ope equals exact value when P-hat = P and bonus = 0");
  Property collapse("ope", "Markov and history-indexed recursions agree");
  for (std::size_t t = 0; t < trials_or(o, 50); ++t) {
    const MarkovGame g = small_random_game(rng);
    const OptimisticModel model(g, g.transitions(), {});
    for (int i = 0; i < 10; ++i) {
      auto mu = random_policy(g, Side::kMax, rng);
      auto nu = random_policy(g, Side::kMin, rng);
      const double ope = ope_evaluate_general(model, *mu, *nu, o.guards);
      const double exact = exact_value_general(g, *mu, *nu, o.guards);
      equiv.check(std::abs(ope - exact) <= 1e-9, [&] {
        auto j = describe_pair(g, *mu, *nu);
        j["ope"] = ope, j["exact"] = exact;
        return j;
      });
    }
    for (int i = 0; i < 2; ++i) {
      // Random tables with a nonzero bonus so the clip can matter.
      std::vector<double> P = g.transitions(), bonus(g.num_cells());
      for (std::size_t c = 0; c < g.num_cells(); ++c) {
        random_distribution(std::span<double>(P.data() + c * g.num_states(), static_cast<std::size_t>(g.num_states())), rng);
        bonus[c] = uniform01(rng) * g.horizon();
      }
      const OptimisticModel perturbed(g, std::move(P), std::move(bonus));
      auto mu = random_markov_policy(Side::kMax, g.horizon(), g.num_states(), g.actions_max(), rng);
      auto nu = random_markov_policy(Side::kMin, g.horizon(), g.num_states(), g.actions_min(), rng);
      const double by_state = ope_evaluate_markov(perturbed, *mu->as_markov(), *nu->as_markov());
      const double by_history = ope_evaluate_general(perturbed, *mu, *nu, o.guards);
      collapse.check(std::abs(by_state - by_history) <= 1e-12, [&] {
        auto j = describe_pair(g, *mu, *nu);
        j["markov"] = by_state, j["general"] = by_history;
        return j;
      });
    }
  }
  return {equiv.result(), collapse.result()};
}

/// Model with P-hat a random perturbation of P and bonus H * |P-hat - P|_1 per cell.
inline OptimisticModel perturbed_model(const MarkovGame& g, Rng& rng, bool negative_bonus) {
  const int S = g.num_states();
  std::vector<double> P = g.transitions(), bonus(g.num_cells(), 0.0), noise(static_cast<std::size_t>(S));
  const double lambda = uniform01(rng);
  for (std::size_t c = 0; c < g.num_cells(); ++c) {
    random_distribution(noise, rng);
    double l1 = 0.0;
    for (int n = 0; n < S; ++n) {
      double& p = P[c * S + n];
      const double q = (1.0 - lambda) * p + lambda * noise[static_cast<std::size_t>(n)];
      l1 += std::abs(q - p);
      p = q;
    }
    bonus[c] = g.horizon() * l1;
    if (negative_bonus) bonus[c] = -bonus[c] - 0.1;
  }
  return OptimisticModel(g, std::move(P), std::move(bonus));
}

inline std::vector<PropertyResult> suite_optimism(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/optimism"));
  Property optimism("optimism", "ope with bonus H*|P-hat - P|_1 is at least the exact value");
  for (std::size_t t = 0; t < trials_or(o, 50); ++t) {
    const MarkovGame g = small_random_game(rng);
    const OptimisticModel model = perturbed_model(g, rng, o.negative_bonus);
    for (int i = 0; i < 10; ++i) {
      auto mu = random_policy(g, Side::kMax, rng);
      auto nu = random_policy(g, Side::kMin, rng);
      const double ope = ope_evaluate(model, *mu, *nu, o.guards);
      const double exact = exact_value(g, *mu, *nu, o.guards);
      optimism.check(ope >= exact - 1e-9, [&] {
        auto j = describe_pair(g, *mu, *nu);
        j["ope"] = ope, j["exact"] = exact;
        j["model_transitions"] = model.transitions();
        j["bonus"] = model.bonuses();
        return j;
      });
    }
  }
  return {optimism.result()};
}

inline std::vector<PropertyResult> suite_cover(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/cover"));
  Property sound("cover", "random simplex points lie within eps of the grid");
  Property shape("cover", "grid points are on the simplex and number C(m+k-1, k-1)");
  for (std::size_t k : {2u, 3u}) {
    for (double eps : {0.5, 0.1}) {
      const SimplexCover cover = simplex_cover(k, eps, o.guards);
      shape.check(cover.points.size() == cover_size(k, cover.m), [&] {
        return nlohmann::json{{"k", k}, {"eps", eps}, {"points", cover.points.size()}};
      });
      for (const auto& p : cover.points) {
        shape.check(p.valid(1e-12), [&] { return nlohmann::json{{"k", k}, {"eps", eps}, {"point", p.w}}; });
      }
      std::vector<double> w(k);
      for (std::size_t t = 0; t < trials_or(o, 1000); ++t) {
        random_distribution(w, rng);
        double best = 2.0;
        for (const auto& p : cover.points) {
          double d = 0.0;
          for (std::size_t i = 0; i < k; ++i) d += std::abs(w[i] - p.w[i]);
          best = std::min(best, d);
        }
        sound.check(best <= eps, [&] {
          return nlohmann::json{{"k", k}, {"eps", eps}, {"m", cover.m}, {"w", w}, {"distance", best}};
        });
      }
    }
  }
  return {sound.result(), shape.result()};
}

/// History-dependent POMDP policy: a Dirichlet draw seeded by the history.
inline PomdpPolicy random_pomdp_policy(std::uint64_t seed) {
  return [seed](const std::vector<int>& obs, const std::vector<int>& acts, std::span<double> out) {
    std::uint64_t h = seed;
    for (int o : obs) h = splitmix64(h ^ static_cast<std::uint64_t>(o + 1));
    for (int a : acts) h = splitmix64(h ^ static_cast<std::uint64_t>(a + 101));
    Rng rng(h);
    random_distribution(out, rng);
  };
}

inline LmdpPolicy random_lmdp_policy(std::uint64_t seed) {
  return [seed](const std::vector<int>& states, const std::vector<int>& acts, const std::vector<int>& rewards,
                std::span<double> out) {
    std::uint64_t h = seed;
    for (int s : states) h = splitmix64(h ^ static_cast<std::uint64_t>(s + 1));
    for (int a : acts) h = splitmix64(h ^ static_cast<std::uint64_t>(a + 101));
    for (int r : rewards) h = splitmix64(h ^ static_cast<std::uint64_t>(r + 1001));
    Rng rng(h);
    random_distribution(out, rng);
  };
}

/// Compares two laws key by key (missing keys count as probability 0).
inline double law_distance(const std::map<std::vector<int>, double>& a, const std::map<std::vector<int>, double>& b) {
  double worst = 0.0;
  for (const auto& [k, p] : a) {
    auto it = b.find(k);
    worst = std::max(worst, std::abs(p - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, p] : b)
    if (!a.contains(k)) worst = std::max(worst, p);
  return worst;
}

inline nlohmann::json law_json(const std::map<std::vector<int>, double>& law) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [k, p] : law) j.push_back({k, p});
  return j;
}

inline std::vector<PropertyResult> suite_pomdp(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/pomdp"));
  Property law("pomdp", "game trajectory law equals the POMDP law");
  Property sizes("pomdp", "reduced game has OA+O states, O opponent actions, horizon 2H");
  for (std::size_t t = 0; t < trials_or(o, 20); ++t) {
    auto pick = [&](int hi) { return 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(hi)); };
    const Pomdp p = random_pomdp(pick(3), pick(2), pick(3), pick(3), rng);
    const PomdpReduction red = pomdp_to_mg(p);
    const int O = p.num_observations, A = p.num_actions;
    sizes.check(red.game.num_states() == O * A + O && red.game.actions_max() == A && red.game.actions_min() == O &&
                    red.game.horizon() == 2 * p.horizon,
                [&] { return pomdp_to_json(p); });
    const std::uint64_t seed = rng();
    const PomdpPolicy pi = random_pomdp_policy(seed);
    const auto expected = pomdp_trajectory_law(p, pi);
    std::map<std::vector<int>, double> got;
    for (const auto& [k, prob] : trajectory_law(red.game, *red.learner_policy(pi, "pi-" + hex64(seed)), *red.adversary,
                                                o.guards)) {
      got[red.pomdp_key(k)] += prob;
    }
    const double d = law_distance(expected, got);
    law.check(d <= 1e-9, [&] {
      return nlohmann::json{{"pomdp", pomdp_to_json(p)}, {"policy_seed", seed}, {"max_diff", d},
                            {"pomdp_law", law_json(expected)}, {"game_law", law_json(got)}};
    });
  }
  return {law.result(), sizes.result()};
}

inline std::vector<PropertyResult> suite_lmdp(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/lmdp"));
  Property law("lmdp", "game trajectory law under the component mixture equals the LMDP law");
  Property sizes("lmdp", "reduced game has SA+S states, 2S opponent actions, horizon 2H");
  for (std::size_t t = 0; t < trials_or(o, 20); ++t) {
    auto pick = [&](int hi) { return 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(hi)); };
    const Lmdp l = random_lmdp(pick(3), pick(2), pick(3), pick(3), rng);
    const LmdpReduction red = lmdp_to_mg(l);
    const int S = l.num_states, A = l.num_actions;
    sizes.check(red.game.num_states() == S * A + S && red.game.actions_max() == A &&
                    red.game.actions_min() == 2 * S && red.game.horizon() == 2 * l.horizon &&
                    red.opponents.size() == l.q.size(),
                [&] { return lmdp_to_json(l); });
    const std::uint64_t seed = rng();
    const LmdpPolicy pi = random_lmdp_policy(seed);
    const auto expected = lmdp_trajectory_law(l, pi);
    const PolicyPtr mu = red.learner_policy(pi, "pi-" + hex64(seed));
    std::map<std::vector<int>, double> got;
    for (std::size_t c = 0; c < red.opponents.size(); ++c) {
      for (const auto& [k, prob] : trajectory_law(red.game, *mu, *red.opponents[c], o.guards)) {
        got[red.lmdp_key(k)] += red.q[c] * prob;
      }
    }
    const double d = law_distance(expected, got);
    law.check(d <= 1e-9, [&] {
      return nlohmann::json{{"lmdp", lmdp_to_json(l)}, {"policy_seed", seed}, {"max_diff", d},
                            {"lmdp_law", law_json(expected)}, {"game_law", law_json(got)}};
    });
  }
  return {law.result(), sizes.result()};
}

inline const std::vector<std::string>& builtin_formulas() {
  static const std::vector<std::string> f{
      "p cnf 1 1\n1 1 1 0\n",
      "p cnf 2 4\n1 2 2 0\n-1 2 2 0\n1 -2 -2 0\n-1 -2 -2 0\n",
      "p cnf 3 3\n1 -2 3 0\n-1 2 -3 0\n2 3 1 0\n",
      "p cnf 4 4\n1 2 -3 0\n-1 -4 2 0\n3 4 -2 0\n-1 -2 -3 0\n",
  };
  return f;
}

/// Cells (h, s) reachable under some joint action sequence.
inline std::vector<std::pair<int, int>> reachable_cells(const MarkovGame& g) {
  std::vector<char> cur(static_cast<std::size_t>(g.num_states()), 0);
  cur[static_cast<std::size_t>(g.initial_state())] = 1;
  std::vector<std::pair<int, int>> cells;
  for (int h = 0; h < g.horizon(); ++h) {
    std::vector<char> next(cur.size(), 0);
    for (int s = 0; s < g.num_states(); ++s) {
      if (!cur[static_cast<std::size_t>(s)]) continue;
      cells.emplace_back(h, s);
      for (int a = 0; a < g.actions_max(); ++a)
        for (int b = 0; b < g.actions_min(); ++b)
          for (int n = 0; n < g.num_states(); ++n)
            if (g.transition(h, s, a, b, n) > 0.0) next[static_cast<std::size_t>(n)] = 1;
    }
    cur = std::move(next);
  }
  return cells;
}

/// Deterministic Markov max-player policies for the sat suite: all of them
/// when within the guard, otherwise every assignment of the reachable cells
/// with several random fills of the unreachable ones.
inline std::vector<PolicyPtr> sat_candidate_policies(const MarkovGame& g, const Guards& guards, Rng& rng) {
  try {
    return all_deterministic_markov(Side::kMax, g.horizon(), g.num_states(), 2, guards.markov_candidates);
  } catch (const GuardExceeded&) {
  }
  const auto cells = reachable_cells(g);
  if (cells.size() >= 20) throw GuardExceeded("sat suite reachable assignments", std::size_t{1} << 20);
  std::vector<PolicyPtr> out;
  std::vector<int> acts(static_cast<std::size_t>(g.horizon()) * g.num_states());
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << cells.size()); ++bits) {
    for (int fill = 0; fill < 4; ++fill) {
      for (int& a : acts) a = static_cast<int>(rng() & 1);
      for (std::size_t i = 0; i < cells.size(); ++i) {
        acts[static_cast<std::size_t>(cells[i].first * g.num_states() + cells[i].second)] =
            static_cast<int>((bits >> i) & 1);
      }
      out.push_back(std::make_shared<MarkovPolicy>(
          MarkovPolicy::deterministic(Side::kMax, g.horizon(), g.num_states(), 2, acts)));
    }
  }
  return out;
}

/// The assignment a deterministic Markov policy encodes: x_i is its action at (step i-1, s_i).
inline std::vector<int> encoded_assignment(const SatReduction& red, const MarkovPolicy& mu) {
  std::vector<int> x(static_cast<std::size_t>(red.num_vars));
  for (int i = 0; i < red.num_vars; ++i) x[static_cast<std::size_t>(i)] = mu.prob(i, i, 1) > 0.5 ? 1 : 0;
  return x;
}

inline std::vector<PropertyResult> suite_sat(const VerifyOptions& o) {
  Rng rng(derive_seed(o.seed, "verify/sat"));
  Property identity("sat", "V(mu, nu_j) is 0/1 and equals satisfaction of clause j");
  Property optimum("sat", "best mean clause value equals the brute-force max-sat fraction");
  std::vector<CnfFormula> formulas = o.formulas;
  for (const auto& text : builtin_formulas()) formulas.push_back(parse_dimacs(text));
  for (std::size_t t = 0; t < trials_or(o, 20); ++t) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 4);
    formulas.push_back(random_3cnf(n, m, rng));
  }
  auto formula_json = [](const CnfFormula& f) { return nlohmann::json{{"num_vars", f.num_vars}, {"clauses", f.clauses}}; };
  for (const auto& f : formulas) {
    const SatReduction red = sat_to_mg(f);
    const double m = static_cast<double>(f.clauses.size());
    double best_mean = 0.0;
    for (const auto& mu : sat_candidate_policies(red.game, o.guards, rng)) {
      const auto x = encoded_assignment(red, *mu->as_markov());
      double mean = 0.0;
      for (std::size_t j = 0; j < f.clauses.size(); ++j) {
        const double v = exact_value(red.game, *mu, *red.clause_policies[j], o.guards);
        const double sat = clause_satisfied(f.clauses[j], x) ? 1.0 : 0.0;
        identity.check(v == sat, [&] {
          return nlohmann::json{{"formula", formula_json(f)}, {"mu", policy_to_json(*mu)}, {"clause", j},
                                {"value", v}, {"satisfied", sat}};
        });
        mean += v / m;
      }
      best_mean = std::max(best_mean, mean);
    }
    int best_count = 0;
    {
      std::vector<int> x(static_cast<std::size_t>(f.num_vars));
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << f.num_vars); ++bits) {
        for (int i = 0; i < f.num_vars; ++i) x[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1);
        int count = 0;
        for (const auto& c : f.clauses) count += clause_satisfied(c, x) ? 1 : 0;
        best_count = std::max(best_count, count);
      }
    }
    optimum.check(std::abs(best_mean - best_count / m) <= 1e-12, [&] {
      return nlohmann::json{{"formula", formula_json(f)}, {"best_mean", best_mean}, {"max_sat", best_count}};
    });
  }
  return {identity.result(), optimum.result()};
}

}  // namespace detail

/// Runs one suite by name, or every suite for "all".
inline std::vector<PropertyResult> run_verify_suite(const std::string& suite, const VerifyOptions& opt) {
  if (suite == "all") {
    std::vector<PropertyResult> out;
    for (const auto& s : verify_suites()) {
      auto r = run_verify_suite(s, opt);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }
  if (suite == "ope") return detail::suite_ope(opt);
  if (suite == "optimism") return detail::suite_optimism(opt);
  if (suite == "cover") return detail::suite_cover(opt);
  if (suite == "pomdp") return detail::suite_pomdp(opt);
  if (suite == "lmdp") return detail::suite_lmdp(opt);
  if (suite == "sat") return detail::suite_sat(opt);
  throw ConfigError("verify: unknown suite '" + suite + "'");
}

/// One line per property; failures are followed by their counterexample.
inline bool print_verify_report(std::ostream& out, const std::vector<PropertyResult>& results) {
  bool ok = true;
  for (const auto& r : results) {
    out << (r.pass ? "PASS" : "FAIL") << "  [" << r.suite << "] " << r.name << " (" << r.checks << " checks)\n";
    if (!r.pass) out << "  counterexample: " << r.counterexample << '\n';
    ok = ok && r.pass;
  }
  return ok;
}

}  // namespace mglab

#endif  // MGLAB_VERIFY_HPP
