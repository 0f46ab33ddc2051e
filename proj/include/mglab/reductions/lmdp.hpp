#ifndef MGLAB_REDUCTIONS_LMDP_HPP
#define MGLAB_REDUCTIONS_LMDP_HPP

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/history.hpp"
#include "mglab/opponents.hpp"
#include "mglab/policy.hpp"
#include "mglab/value.hpp"

namespace mglab {

/// L MDPs sharing (S, A, H) and a fixed start state, with binary rewards;
/// component t is drawn from q before each episode.
struct Lmdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  int initial_state = 0;
  std::vector<double> q;                       // [t]
  std::vector<std::vector<double>> transition; // [t][h][s][a][s']
  std::vector<std::vector<double>> reward;     // [t][h][s][a], in {0,1}

  int num_latent() const { return static_cast<int>(q.size()); }
  double P(int t, int h, int s, int a, int n) const {
    return transition[static_cast<std::size_t>(t)]
                     [((static_cast<std::size_t>(h) * num_states + s) * num_actions + a) * num_states + n];
  }
  double r(int t, int h, int s, int a) const {
    return reward[static_cast<std::size_t>(t)][(static_cast<std::size_t>(h) * num_states + s) * num_actions + a];
  }

  void validate() const {
    if (num_states < 1 || num_actions < 1 || horizon < 1 || q.empty()) {
      throw ConfigError("LMDP: dimensions must be positive");
    }
    if (initial_state < 0 || initial_state >= num_states) throw ConfigError("LMDP: initial state out of range");
    if (auto why = distribution_problem(q, 1e-12); !why.empty()) throw ConfigError("LMDP: q is not a distribution: " + why);
    const std::size_t cells = static_cast<std::size_t>(horizon) * num_states * num_actions;
    if (transition.size() != q.size() || reward.size() != q.size()) throw ConfigError("LMDP: component count mismatch");
    for (std::size_t t = 0; t < q.size(); ++t) {
      if (transition[t].size() != cells * num_states || reward[t].size() != cells) {
        throw ConfigError("LMDP: table size mismatch");
      }
      for (std::size_t c = 0; c < cells; ++c) {
        std::span<const double> row(transition[t].data() + c * num_states, static_cast<std::size_t>(num_states));
        if (auto why = distribution_problem(row, 1e-12); !why.empty()) {
          throw ConfigError("LMDP: transition row is not a distribution: " + why);
        }
        if (reward[t][c] != 0.0 && reward[t][c] != 1.0) throw ConfigError("LMDP: rewards must be binary");
      }
    }
  }
};

inline Lmdp lmdp_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"num_states", "num_actions", "horizon", "initial_state", "q", "transition", "reward"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ParseError("lmdp: unknown key '" + key + "'");
  }
  Lmdp l;
  try {
    l.num_states = j.at("num_states").get<int>();
    l.num_actions = j.at("num_actions").get<int>();
    l.horizon = j.at("horizon").get<int>();
    l.initial_state = j.value("initial_state", 0);
    l.q = j.at("q").get<std::vector<double>>();
    l.transition = j.at("transition").get<std::vector<std::vector<double>>>();
    l.reward = j.at("reward").get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("lmdp: ") + e.what());
  }
  try {
    l.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return l;
}

inline nlohmann::json lmdp_to_json(const Lmdp& l) {
  return {{"num_states", l.num_states}, {"num_actions", l.num_actions}, {"horizon", l.horizon},
          {"initial_state", l.initial_state}, {"q", l.q}, {"transition", l.transition}, {"reward", l.reward}};
}

inline Lmdp random_lmdp(int states, int actions, int latent, int horizon, Rng& rng) {
  Lmdp l{states, actions, horizon, 0, {}, {}, {}};
  double total = 0.0;
  for (int t = 0; t < latent; ++t) {
    l.q.push_back(-std::log(1.0 - uniform01(rng)));
    total += l.q.back();
  }
  for (double& x : l.q) x /= total;
  const std::size_t cells = static_cast<std::size_t>(horizon) * states * actions;
  for (int t = 0; t < latent; ++t) {
    std::vector<double> P, R;
    for (std::size_t c = 0; c < cells; ++c) {
      double row_total = 0.0;
      const std::size_t start = P.size();
      for (int n = 0; n < states; ++n) {
        P.push_back(-std::log(1.0 - uniform01(rng)));
        row_total += P.back();
      }
      for (std::size_t i = start; i < P.size(); ++i) P[i] /= row_total;
      R.push_back(static_cast<double>(rng() >> 63));
    }
    l.transition.push_back(std::move(P));
    l.reward.push_back(std::move(R));
  }
  return l;
}

/// An LMDP policy: action distribution given s_1..s_h, a_1..a_{h-1}, r_1..r_{h-1}.
using LmdpPolicy = std::function<void(const std::vector<int>& states, const std::vector<int>& actions,
                                      const std::vector<int>& rewards, std::span<double> out)>;

/// Exact law of (s_1, a_1, r_1, ..., s_H, a_H, r_H, s_{H+1}).
inline std::map<std::vector<int>, double> lmdp_trajectory_law(const Lmdp& l, const LmdpPolicy& policy) {
  std::map<std::vector<int>, double> law;
  std::vector<int> states{l.initial_state}, actions, rewards;
  std::vector<int> key{l.initial_state};
  std::function<void(int, int, double)> rec = [&](int t, int h, double prob) {
    if (h == l.horizon) {
      law[key] += prob;
      return;
    }
    const int s = states.back();
    std::vector<double> dist(static_cast<std::size_t>(l.num_actions));
    policy(states, actions, rewards, dist);
    for (int a = 0; a < l.num_actions; ++a) {
      const double pa = dist[static_cast<std::size_t>(a)];
      if (pa == 0.0) continue;
      const int rw = static_cast<int>(l.r(t, h, s, a));
      for (int n = 0; n < l.num_states; ++n) {
        const double pn = l.P(t, h, s, a, n);
        if (pn == 0.0) continue;
        states.push_back(n);
        actions.push_back(a);
        rewards.push_back(rw);
        key.insert(key.end(), {a, rw, n});
        rec(t, h + 1, prob * pa * pn);
        key.resize(key.size() - 3);
        rewards.pop_back();
        actions.pop_back();
        states.pop_back();
      }
    }
  };
  for (int t = 0; t < l.num_latent(); ++t) {
    if (l.q[static_cast<std::size_t>(t)] > 0.0) rec(t, 0, l.q[static_cast<std::size_t>(t)]);
  }
  return law;
}

/// Game simulating an LMDP: base state s in [0, S); augmented (s, a) =
/// S + s*A + a; opponent action b = 2 s' + r' in [0, 2S); horizon 2H.
/// Step 2h (0-based) moves s -> (s, a) without reward; step 2h+1 moves
/// (s, a) -> s' with reward r', both read off the opponent's action.
struct LmdpReduction {
  MarkovGame game;
  std::vector<PolicyPtr> opponents;  // one Markov policy per latent component
  std::vector<double> q;
  int num_states = 0;
  int num_actions = 0;

  int augmented(int s, int a) const { return num_states + s * num_actions + a; }

  PolicyPtr learner_policy(LmdpPolicy policy, std::string id) const {
    const int A = num_actions;
    return std::make_shared<FunctionPolicy>(
        Side::kMax, A, std::move(id), [policy](const History& tau, std::span<double> out) {
          std::fill(out.begin(), out.end(), 0.0);
          if (tau.step() % 2 == 1) {
            out[0] = 1.0;
            return;
          }
          std::vector<int> states, actions, rewards;
          auto st = tau.states();
          auto ac = tau.actions();
          for (std::size_t i = 0; i < st.size(); i += 2) states.push_back(st[i]);
          for (std::size_t i = 0; i < ac.size(); i += 2) actions.push_back(ac[i].max);
          for (std::size_t i = 1; i < ac.size(); i += 2) rewards.push_back(ac[i].min % 2);
          policy(states, actions, rewards, out);
        });
  }

  /// Maps a flat game trajectory key to (s_1, a_1, r_1, ..., s_{H+1}).
  std::vector<int> lmdp_key(const TrajectoryKey& k) const {
    std::vector<int> out{k[0]};
    const std::size_t H = static_cast<std::size_t>(game.horizon() / 2);
    for (std::size_t h = 0; h < H; ++h) {
      const int b = k[6 * h + 5];  // opponent action at step 2h+1
      out.insert(out.end(), {k[6 * h + 1], b % 2, b / 2});
    }
    return out;
  }
};

inline LmdpReduction lmdp_to_mg(const Lmdp& l) {
  l.validate();
  const int S = l.num_states, A = l.num_actions, H = l.horizon;
  LmdpReduction red;
  red.num_states = S;
  red.num_actions = A;
  red.q = l.q;
  red.game = MarkovGame(S * A + S, A, 2 * S, 2 * H, l.initial_state);
  MarkovGame& g = red.game;
  for (int t = 0; t < 2 * H; ++t)
    for (int s = 0; s < g.num_states(); ++s)
      for (int a = 0; a < A; ++a)
        for (int b = 0; b < 2 * S; ++b) {
          const bool base = s < S;
          if (t % 2 == 0 && base) {
            g.set_next(t, s, a, b, red.augmented(s, a));
          } else if (t % 2 == 1 && !base) {
            g.set_next(t, s, a, b, b / 2);
            g.reward(t, s, a, b) = static_cast<double>(b % 2);
          } else {
            g.set_next(t, s, a, b, s);  // unreachable
          }
        }
  const int states = g.num_states();
  for (int c = 0; c < l.num_latent(); ++c) {
    std::vector<double> table(static_cast<std::size_t>(2 * H) * states * 2 * S, 0.0);
    auto row = [&](int t, int s) { return table.data() + (static_cast<std::size_t>(t) * states + s) * 2 * S; };
    for (int t = 0; t < 2 * H; ++t)
      for (int s = 0; s < states; ++s) {
        double* out = row(t, s);
        if (t % 2 == 1 && s >= S) {
          const int base = (s - S) / A, a = (s - S) % A;
          const int rw = static_cast<int>(l.r(c, t / 2, base, a));
          for (int n = 0; n < S; ++n) out[2 * n + rw] = l.P(c, t / 2, base, a, n);
        } else {
          out[0] = 1.0;
        }
      }
    red.opponents.push_back(std::make_shared<MarkovPolicy>(Side::kMin, 2 * H, states, 2 * S, std::move(table)));
  }
  return red;
}

/// Draws the component t ~ q each episode and plays its Markov policy.
inline OpponentPtr make_lmdp_adversary(const LmdpReduction& red, std::uint64_t seed) {
  return make_finite_class_sampler(red.opponents, MixedWeights{red.q}, seed);
}

}  // namespace mglab

#endif  // MGLAB_REDUCTIONS_LMDP_HPP
