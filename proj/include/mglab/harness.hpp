#ifndef MGLAB_HARNESS_HPP
#define MGLAB_HARNESS_HPP

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mglab/best_response.hpp"
#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/learners.hpp"
#include "mglab/opponents.hpp"
#include "mglab/policy.hpp"
#include "mglab/value.hpp"

namespace mglab {

struct EpisodeRecord {
  std::uint64_t episode = 0;
  std::string learner_policy_id;
  std::string opponent_policy_id;
  double realized_return = 0.0;
  double exact_value = 0.0;
  bool restart = false;
  std::size_t psi_size = 0;
  double eta = 0.0;
  std::int64_t micros = 0;
};

struct RunOptions {
  std::uint64_t episodes = 1;
  std::uint64_t seed = 0;
  /// Wall-clock micros per episode; off by default so outputs are byte-reproducible.
  bool record_timing = false;
  Guards guards = Guards::from_env();
};

struct RunResult {
  std::vector<EpisodeRecord> records;
  std::vector<PolicyPtr> revealed;  // nu^1..nu^K
  std::vector<PolicyPtr> played;    // mu^1..mu^K
};

/// Caches exact V^{mu x nu} on the true game keyed by the id pair.
class ExactValueCache {
 public:
  ExactValueCache(const MarkovGame& game, Guards guards) : game_(game), guards_(guards) {}
  double operator()(const GeneralPolicy& mu, const GeneralPolicy& nu) {
    std::string key = mu.canonical_id();
    key.push_back('|');
    key += nu.canonical_id();
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double v = exact_value(game_, mu, nu, guards_);
    cache_.emplace(std::move(key), v);
    return v;
  }

 private:
  const MarkovGame& game_;
  Guards guards_;
  std::unordered_map<std::string, double> cache_;
};

/// Raised from run_experiment with the episode at which a guard tripped.
class EpisodeGuardExceeded : public GuardExceeded {
 public:
  EpisodeGuardExceeded(const GuardExceeded& e, std::uint64_t episode)
      : GuardExceeded(e.bound() + " at episode " + std::to_string(episode), e.limit()), episode_(episode) {}
  std::uint64_t episode() const { return episode_; }

 private:
  std::uint64_t episode_;
};

/// The episode protocol. Per episode: the learner draws mu^k, the opponent
/// draws nu^k from a view that excludes mu^k, the episode is sampled, nu^k is
/// revealed to the learner, and the exact value V^{mu^k x nu^k} is recorded
/// for accounting only.
inline RunResult run_experiment(const MarkovGame& game, Learner& learner, Opponent& opponent, const RunOptions& opt) {
  if (opt.episodes < 1) throw ConfigError("run: K must be at least 1");
  Rng learner_rng(derive_seed(opt.seed, "learner"));
  Rng env_rng(derive_seed(opt.seed, "environment"));
  ExactValueCache values(game, opt.guards);
  RunResult out;
  std::vector<Trajectory> past;
  out.records.reserve(opt.episodes);
  for (std::uint64_t k = 1; k <= opt.episodes; ++k) {
    const auto start = std::chrono::steady_clock::now();
    try {
      PolicyPtr mu = learner.select(learner_rng);
      PolicyPtr nu = opponent.choose(OpponentView{k, past, out.revealed});
      Trajectory traj = sample_episode(game, *mu, *nu, env_rng);
      learner.update(nu, traj);
      EpisodeRecord rec;
      rec.episode = k;
      rec.learner_policy_id = mu->canonical_id();
      rec.opponent_policy_id = nu->canonical_id();
      rec.realized_return = traj.total_reward();
      rec.exact_value = values(*mu, *nu);
      rec.restart = learner.restarted();
      rec.psi_size = learner.psi_size();
      rec.eta = learner.eta();
      if (opt.record_timing) {
        rec.micros = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start)
                         .count();
      }
      out.records.push_back(std::move(rec));
      out.revealed.push_back(std::move(nu));
      out.played.push_back(std::move(mu));
      past.push_back(std::move(traj));
    } catch (const GuardExceeded& e) {
      throw EpisodeGuardExceeded(e, k);
    }
  }
  return out;
}

/// Running best deterministic Markov policy in hindsight over a growing
/// list of revealed opponents. Candidates are enumerated once in lexicographic
/// order; per-opponent value columns are cached by opponent id.
class MarkovHindsight {
 public:
  MarkovHindsight(const MarkovGame& game, const Guards& guards = {})
      : game_(game),
        guards_(guards),
        candidates_(all_deterministic_markov(Side::kMax, game.horizon(), game.num_states(), game.actions_max(),
                                             guards.markov_candidates)),
        totals_(candidates_.size()) {}

  void add(const GeneralPolicy& nu) {
    auto it = columns_.find(nu.canonical_id());
    if (it == columns_.end()) {
      std::vector<double> col(candidates_.size());
      for (std::size_t i = 0; i < candidates_.size(); ++i) col[i] = exact_value(game_, *candidates_[i], nu, guards_);
      it = columns_.emplace(nu.canonical_id(), std::move(col)).first;
    }
    for (std::size_t i = 0; i < candidates_.size(); ++i) totals_[i].add(it->second[i]);
    ++count_;
  }

  /// Index of the best candidate (lowest on ties) and its total.
  std::pair<std::size_t, double> best() const {
    std::size_t arg = 0;
    double top = totals_[0].value();
    for (std::size_t i = 1; i < totals_.size(); ++i) {
      if (totals_[i].value() > top) {
        top = totals_[i].value();
        arg = i;
      }
    }
    return {arg, top};
  }

  const std::vector<PolicyPtr>& candidates() const { return candidates_; }
  std::size_t count() const { return count_; }

 private:
  const MarkovGame& game_;
  Guards guards_;
  std::vector<PolicyPtr> candidates_;
  std::vector<CompensatedSum> totals_;
  std::unordered_map<std::string, std::vector<double>> columns_;
  std::size_t count_ = 0;
};

struct HindsightResult {
  PolicyPtr policy;
  double total = 0.0;
};

inline HindsightResult hindsight_best_markov(const MarkovGame& game, std::span<const PolicyPtr> revealed,
                                             const Guards& guards = {}) {
  MarkovHindsight h(game, guards);
  for (const auto& nu : revealed) h.add(*nu);
  auto [arg, total] = h.best();
  return {h.candidates()[arg], total};
}

/// Best general policy in hindsight: the best response to the empirical
/// mixture of revealed opponents (identical ids merged with their counts),
/// scaled by the number of episodes.
inline HindsightResult hindsight_best_general(const MarkovGame& game, std::span<const PolicyPtr> revealed,
                                              const Guards& guards = {}) {
  if (revealed.empty()) throw Error("hindsight: no revealed opponents");
  std::vector<PolicyPtr> unique;
  std::vector<double> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& nu : revealed) {
    auto [it, inserted] = index.emplace(nu->canonical_id(), unique.size());
    if (inserted) {
      unique.push_back(nu);
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
  }
  const double k = static_cast<double>(revealed.size());
  MixedWeights w;
  for (double c : counts) w.w.push_back(c / k);
  auto br = best_response_to_mixture(ModelView(game), unique, w, guards);
  // Recompute the total from per-opponent values to avoid the 1/k rounding.
  const auto values = clipped_values(ModelView(game), *br.policy, unique, guards);
  CompensatedSum total;
  for (std::size_t i = 0; i < unique.size(); ++i) total.add(counts[i] * values[i]);
  return {br.policy, total.value()};
}

namespace detail {

/// Value of a zero-sum matrix game (row player maximizes) by optimistic
/// multiplicative-weights self-play with averaged strategies.
inline double matrix_game_value(const std::vector<double>& M, int rows, int cols, double tol) {
  double lo = M[0], hi = M[0];
  for (double v : M) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-15) return lo;
  const double range = hi - lo;
  auto at = [&](int a, int b) { return (M[static_cast<std::size_t>(a) * cols + b] - lo) / range; };
  const auto R = static_cast<std::size_t>(rows), C = static_cast<std::size_t>(cols);
  std::vector<double> Gx(R, 0.0), Gy(C, 0.0), gx(R, 0.0), gy(C, 0.0), x(R), y(C), xs(R, 0.0), ys(C, 0.0);
  const double eta = 0.5;
  constexpr std::uint64_t kCap = 5'000'000;
  for (std::uint64_t t = 1; t <= kCap; ++t) {
    auto play = [&](std::vector<double>& p, const std::vector<double>& G, const std::vector<double>& g, double sign) {
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < p.size(); ++i) top = std::max(top, sign * eta * (G[i] + g[i]));
      double total = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(sign * eta * (G[i] + g[i]) - top);
        total += p[i];
      }
      for (double& v : p) v /= total;
    };
    play(x, Gx, gx, 1.0);
    play(y, Gy, gy, -1.0);
    for (int a = 0; a < rows; ++a) {
      double v = 0.0;
      for (int b = 0; b < cols; ++b) v += at(a, b) * y[static_cast<std::size_t>(b)];
      gx[static_cast<std::size_t>(a)] = v;
      Gx[static_cast<std::size_t>(a)] += v;
    }
    for (int b = 0; b < cols; ++b) {
      double v = 0.0;
      for (int a = 0; a < rows; ++a) v += at(a, b) * x[static_cast<std::size_t>(a)];
      gy[static_cast<std::size_t>(b)] = v;
      Gy[static_cast<std::size_t>(b)] += v;
    }
    for (std::size_t i = 0; i < R; ++i) xs[i] += x[i];
    for (std::size_t i = 0; i < C; ++i) ys[i] += y[i];
    if (t % 64 != 0) continue;
    double upper = -std::numeric_limits<double>::infinity(), lower = std::numeric_limits<double>::infinity();
    for (int a = 0; a < rows; ++a) {
      double v = 0.0;
      for (int b = 0; b < cols; ++b) v += at(a, b) * ys[static_cast<std::size_t>(b)] / static_cast<double>(t);
      upper = std::max(upper, v);
    }
    for (int b = 0; b < cols; ++b) {
      double v = 0.0;
      for (int a = 0; a < rows; ++a) v += at(a, b) * xs[static_cast<std::size_t>(a)] / static_cast<double>(t);
      lower = std::min(lower, v);
    }
    if ((upper - lower) * range <= tol) return lo + range * 0.5 * (upper + lower);
  }
  throw Error("nash_value: self-play did not reach the duality-gap tolerance");
}

}  // namespace detail

/// V*_1(s_1) by backward induction, solving each stage matrix game to duality gap <= tol.
inline double nash_value(const MarkovGame& game, double tol = 1e-4) {
  const int S = game.num_states(), A = game.actions_max(), B = game.actions_min();
  std::vector<double> next(static_cast<std::size_t>(S), 0.0), cur(static_cast<std::size_t>(S));
  std::vector<double> M(static_cast<std::size_t>(A) * B);
  for (int h = game.horizon() - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a)
        for (int b = 0; b < B; ++b) {
          double q = game.reward(h, s, a, b);
          auto row = game.transition_row(h, s, a, b);
          for (int n = 0; n < S; ++n) q += row[static_cast<std::size_t>(n)] * next[static_cast<std::size_t>(n)];
          M[static_cast<std::size_t>(a) * B + b] = q;
        }
      cur[static_cast<std::size_t>(s)] = detail::matrix_game_value(M, A, B, tol / game.horizon());
    }
    std::swap(cur, next);
  }
  return next[static_cast<std::size_t>(game.initial_state())];
}

struct RegretRow {
  std::uint64_t k = 0;
  std::optional<double> regret_markov;
  std::optional<double> regret_general;
  std::optional<double> nash_gap;
  double cumulative_exact = 0.0;
  double cumulative_realized = 0.0;
  /// Markov-baseline regret measured against realized returns instead of exact values.
  std::optional<double> regret_markov_realized;
};

struct RegretOptions {
  bool markov = true;
  bool general = false;
  /// Compute the general baseline at every k instead of at checkpoints.
  bool general_every_k = false;
  /// Extra general-baseline checkpoints besides powers of two and K.
  std::vector<std::uint64_t> extra_checkpoints;
  std::optional<double> nash;
  Guards guards = Guards::from_env();
};

inline std::set<std::uint64_t> general_checkpoints(std::uint64_t K, const std::vector<std::uint64_t>& extra) {
  std::set<std::uint64_t> out;
  for (std::uint64_t p = 1; p <= K; p *= 2) out.insert(p);
  out.insert(K);
  for (auto e : extra)
    if (e >= 1 && e <= K) out.insert(e);
  return out;
}

/// Regret(k) = best baseline total over the first k revealed opponents minus
/// sum_{t<=k} V^{mu^t x nu^t}, for every k. The general column is filled at
/// checkpoints (or every k); nash_gap is k V* - sum_t V^t.
inline std::vector<RegretRow> regret_curves(const MarkovGame& game, const RunResult& run, const RegretOptions& opt) {
  const std::uint64_t K = run.records.size();
  std::vector<RegretRow> rows;
  rows.reserve(K);
  std::optional<MarkovHindsight> markov;
  if (opt.markov) markov.emplace(game, opt.guards);
  const auto checkpoints = general_checkpoints(K, opt.extra_checkpoints);
  CompensatedSum exact, realized;
  for (std::uint64_t k = 1; k <= K; ++k) {
    const auto& rec = run.records[k - 1];
    exact.add(rec.exact_value);
    realized.add(rec.realized_return);
    RegretRow row;
    row.k = k;
    row.cumulative_exact = exact.value();
    row.cumulative_realized = realized.value();
    if (markov) {
      markov->add(*run.revealed[k - 1]);
      const double best = markov->best().second;
      row.regret_markov = best - exact.value();
      row.regret_markov_realized = best - realized.value();
    }
    if (opt.general && (opt.general_every_k || checkpoints.contains(k))) {
      auto prefix = std::span<const PolicyPtr>(run.revealed).first(k);
      row.regret_general = hindsight_best_general(game, prefix, opt.guards).total - exact.value();
    }
    if (opt.nash) row.nash_gap = static_cast<double>(k) * *opt.nash - exact.value();
    rows.push_back(row);
  }
  return rows;
}

/// Regret against an explicit baseline list: max_mu sum_t V^{mu x nu^t} - sum_t V^t at k = K.
inline double regret_against(const MarkovGame& game, const RunResult& run, std::span<const PolicyPtr> baseline,
                             const Guards& guards = {}) {
  if (baseline.empty()) throw Error("regret: empty baseline");
  ExactValueCache values(game, guards);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& mu : baseline) {
    CompensatedSum total;
    for (const auto& nu : run.revealed) total.add(values(*mu, *nu));
    best = std::max(best, total.value());
  }
  CompensatedSum played;
  for (const auto& rec : run.records) played.add(rec.exact_value);
  return best - played.value();
}

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_episode_csv(std::ostream& out, const std::vector<EpisodeRecord>& records) {
  out << "episode,learner_policy_id,opponent_policy_id,realized_return,exact_value,restart,psi_size,eta,micros\n";
  for (const auto& r : records) {
    out << r.episode << ',' << r.learner_policy_id << ',' << r.opponent_policy_id << ','
        << format_double(r.realized_return) << ',' << format_double(r.exact_value) << ',' << (r.restart ? 1 : 0)
        << ',' << r.psi_size << ',' << format_double(r.eta) << ',' << r.micros << '\n';
  }
}

inline void write_regret_csv(std::ostream& out, const std::vector<RegretRow>& rows) {
  out << "k,regret_markov,regret_general,nash_gap\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.k << ',' << cell(r.regret_markov) << ',' << cell(r.regret_general) << ',' << cell(r.nash_gap) << '\n';
  }
}

/// Realized-return companion series: k, cumulative realized, cumulative exact, realized-return Markov regret.
inline void write_realized_csv(std::ostream& out, const std::vector<RegretRow>& rows) {
  out << "k,cumulative_realized,cumulative_exact,regret_markov_realized\n";
  for (const auto& r : rows) {
    out << r.k << ',' << format_double(r.cumulative_realized) << ',' << format_double(r.cumulative_exact) << ','
        << (r.regret_markov_realized ? format_double(*r.regret_markov_realized) : std::string()) << '\n';
  }
}

}  // namespace mglab

#endif  // MGLAB_HARNESS_HPP
