#ifndef MGLAB_REDUCTIONS_SAT_HPP
#define MGLAB_REDUCTIONS_SAT_HPP

#include <array>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/learners.hpp"
#include "mglab/opponents.hpp"
#include "mglab/policy.hpp"
#include "mglab/value.hpp"

namespace mglab {

/// 3-CNF formula; literal +i is x_i, -i is not x_i (1-based).
struct CnfFormula {
  int num_vars = 0;
  std::vector<std::array<int, 3>> clauses;

  void validate() const {
    if (num_vars < 1) throw ParseError("cnf: at least one variable required");
    if (clauses.empty()) throw ParseError("cnf: at least one clause required");
    for (const auto& c : clauses)
      for (int lit : c)
        if (lit == 0 || std::abs(lit) > num_vars) throw ParseError("cnf: literal " + std::to_string(lit) + " out of range");
  }
};

/// Whether setting x_{var} = value makes clause c true (var is 1-based).
inline bool literal_sets_true(const std::array<int, 3>& c, int var, int value) {
  for (int lit : c)
    if (std::abs(lit) == var && (lit > 0) == (value == 1)) return true;
  return false;
}

inline bool clause_satisfied(const std::array<int, 3>& c, const std::vector<int>& assignment) {
  for (int lit : c) {
    const int v = assignment[static_cast<std::size_t>(std::abs(lit) - 1)];
    if ((lit > 0) == (v == 1)) return true;
  }
  return false;
}

/// Parses DIMACS CNF ("p cnf n m" header, clauses terminated by 0). Every
/// clause must have exactly three literals.
inline CnfFormula parse_dimacs(std::istream& in) {
  CnfFormula f;
  std::string line;
  bool header = false;
  std::size_t declared = 0;
  std::vector<int> current;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == 'c') continue;
    if (first == "%") break;
    if (first == "p") {
      std::string fmt;
      long long n = -1, m = -1;
      if (header || !(ls >> fmt >> n >> m) || fmt != "cnf" || n < 1 || m < 1) {
        throw ParseError("dimacs: malformed header '" + line + "'");
      }
      std::string extra;
      if (ls >> extra) throw ParseError("dimacs: malformed header '" + line + "'");
      f.num_vars = static_cast<int>(n);
      declared = static_cast<std::size_t>(m);
      header = true;
      continue;
    }
    if (!header) throw ParseError("dimacs: clause before header");
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      char* end = nullptr;
      const long v = std::strtol(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0') throw ParseError("dimacs: bad token '" + tok + "'");
      if (v == 0) {
        if (current.size() != 3) {
          throw ParseError("dimacs: clause " + std::to_string(f.clauses.size() + 1) + " has " +
                           std::to_string(current.size()) + " literals, expected 3");
        }
        f.clauses.push_back({current[0], current[1], current[2]});
        current.clear();
      } else {
        current.push_back(static_cast<int>(v));
      }
    }
  }
  if (!header) throw ParseError("dimacs: missing 'p cnf' header");
  if (!current.empty()) throw ParseError("dimacs: unterminated clause");
  if (f.clauses.size() != declared) {
    throw ParseError("dimacs: header declares " + std::to_string(declared) + " clauses, found " +
                     std::to_string(f.clauses.size()));
  }
  f.validate();
  return f;
}

inline CnfFormula parse_dimacs(const std::string& text) {
  std::istringstream in(text);
  return parse_dimacs(in);
}

inline CnfFormula random_3cnf(int num_vars, int num_clauses, Rng& rng) {
  CnfFormula f{num_vars, {}};
  for (int j = 0; j < num_clauses; ++j) {
    std::array<int, 3> c{};
    for (int& lit : c) {
      lit = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(num_vars));
      if (rng() >> 63) lit = -lit;
    }
    f.clauses.push_back(c);
  }
  return f;
}

/// Game encoding a 3-CNF formula: states s_1..s_n (indices 0..n-1), T = n,
/// F = n+1; H = n; max actions {0,1} (the value of x_i at s_i); min actions
/// are clause indices. From s_i, a clause made true by x_i = a moves to T,
/// otherwise to s_{i+1} (F after s_n); T and F absorb. The last step pays 1
/// in T, and in s_n when x_n = a satisfies the clause, so that V^{mu, nu_j}
/// is exactly the satisfaction of clause j by mu's assignment.
struct SatReduction {
  MarkovGame game;
  std::vector<PolicyPtr> clause_policies;  // nu_j plays clause j everywhere
  int num_vars = 0;

  int state_true() const { return num_vars; }
  int state_false() const { return num_vars + 1; }

  /// Deterministic Markov policy with mu_h(s_i) = x_i for every step h.
  PolicyPtr assignment_policy(const std::vector<int>& assignment) const {
    const int S = game.num_states();
    std::vector<int> acts(static_cast<std::size_t>(game.horizon()) * S, 0);
    for (int h = 0; h < game.horizon(); ++h)
      for (int i = 0; i < num_vars; ++i) acts[static_cast<std::size_t>(h * S + i)] = assignment[static_cast<std::size_t>(i)];
    return std::make_shared<MarkovPolicy>(MarkovPolicy::deterministic(Side::kMax, game.horizon(), S, 2, acts));
  }
};

inline SatReduction sat_to_mg(const CnfFormula& f) {
  f.validate();
  const int n = f.num_vars;
  const int m = static_cast<int>(f.clauses.size());
  SatReduction red;
  red.num_vars = n;
  red.game = MarkovGame(n + 2, 2, m, n, 0);
  MarkovGame& g = red.game;
  const int T = n, F = n + 1;
  for (int h = 0; h < n; ++h)
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < m; ++j) {
        const bool last = h + 1 == n;
        for (int i = 0; i < n; ++i) {
          const bool sat = literal_sets_true(f.clauses[static_cast<std::size_t>(j)], i + 1, a);
          g.set_next(h, i, a, j, sat ? T : (i + 1 < n ? i + 1 : F));
          if (last && i == n - 1 && sat) g.reward(h, i, a, j) = 1.0;
        }
        g.set_next(h, T, a, j, T);
        g.set_next(h, F, a, j, F);
        if (last) g.reward(h, T, a, j) = 1.0;
      }
  for (int j = 0; j < m; ++j) {
    red.clause_policies.push_back(
        std::make_shared<MarkovPolicy>(MarkovPolicy::constant(Side::kMin, n, n + 2, m, j)));
  }
  return red;
}

/// A satisfying assignment if one exists, else one maximizing the number of satisfied clauses.
inline std::vector<int> best_assignment(const CnfFormula& f) {
  std::vector<int> best, x(static_cast<std::size_t>(f.num_vars), 0);
  int best_count = -1;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << f.num_vars); ++bits) {
    for (int i = 0; i < f.num_vars; ++i) x[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1);
    int count = 0;
    for (const auto& c : f.clauses) count += clause_satisfied(c, x) ? 1 : 0;
    if (count > best_count) {
      best_count = count;
      best = x;
    }
  }
  return best;
}

/// One deterministic assignment policy per element of {0,1}^n, in binary order.
inline std::vector<PolicyPtr> all_assignment_policies(const SatReduction& red, std::size_t guard) {
  if (red.num_vars >= 63 || (std::uint64_t{1} << red.num_vars) > guard) {
    throw GuardExceeded("assignment policies 2^n", guard);
  }
  std::vector<PolicyPtr> out;
  std::vector<int> x(static_cast<std::size_t>(red.num_vars));
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << red.num_vars); ++bits) {
    for (int i = 0; i < red.num_vars; ++i) x[static_cast<std::size_t>(i)] = static_cast<int>((bits >> i) & 1);
    out.push_back(red.assignment_policy(x));
  }
  return out;
}

struct SatDecision {
  bool satisfiable = false;
  double total_reward = 0.0;
  std::uint64_t episodes = 0;
  double threshold = 0.0;
};

/// R > (1 - 1/(2m)) T.
inline bool sat_threshold_decision(double R, std::uint64_t T, std::size_t m) {
  return R > (1.0 - 1.0 / (2.0 * static_cast<double>(m))) * static_cast<double>(T);
}

/// Runs the learner for T episodes against nu_j with j ~ Unif([m]) drawn
/// independently each episode and applies the threshold to the realized total reward.
inline SatDecision sat_decision_experiment(const SatReduction& red, Learner& learner, std::uint64_t T,
                                           std::uint64_t seed) {
  if (T < 1) throw ConfigError("sat experiment: T must be at least 1");
  Rng learner_rng(derive_seed(seed, "learner"));
  Rng env_rng(derive_seed(seed, "environment"));
  FiniteClassSampler opponent(red.clause_policies, std::nullopt, derive_seed(seed, "opponent"));
  SatDecision d;
  d.episodes = T;
  CompensatedSum R;
  for (std::uint64_t k = 1; k <= T; ++k) {
    PolicyPtr mu = learner.select(learner_rng);
    PolicyPtr nu = opponent.choose(OpponentView{k, {}, {}});
    Trajectory traj = sample_episode(red.game, *mu, *nu, env_rng);
    R.add(traj.total_reward());
    learner.update(nu, traj);
  }
  d.total_reward = R.value();
  d.threshold = (1.0 - 1.0 / (2.0 * static_cast<double>(red.clause_policies.size()))) * static_cast<double>(T);
  d.satisfiable = sat_threshold_decision(d.total_reward, T, red.clause_policies.size());
  return d;
}

}  // namespace mglab

#endif  // MGLAB_REDUCTIONS_SAT_HPP
