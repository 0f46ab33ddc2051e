#ifndef MGLAB_REDUCTIONS_POMDP_HPP
#define MGLAB_REDUCTIONS_POMDP_HPP

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
#include "mglab/policy.hpp"
#include "mglab/value.hpp"

namespace mglab {

/// Finite-horizon POMDP whose rewards are carried by observations.
///
/// Hidden state x_1 ~ initial; o_h ~ emission[h][x_h]; after action a_h,
/// x_{h+1} ~ transition[h][x_h][a_h] (h < H-1). The return is
/// sum_h observation_reward[o_h]. The first observation must be the same for
/// every possible x_1, since the simulating game has a fixed start state.
struct Pomdp {
  int num_hidden = 0;
  int num_actions = 0;
  int num_observations = 0;
  int horizon = 0;
  std::vector<double> initial;            // [x]
  std::vector<double> transition;         // [h][x][a][x'], h < H-1
  std::vector<double> emission;           // [h][x][o]
  std::vector<double> observation_reward; // [o], in [0,1]

  double T(int h, int x, int a, int y) const {
    return transition[((static_cast<std::size_t>(h) * num_hidden + x) * num_actions + a) * num_hidden + y];
  }
  double E(int h, int x, int o) const {
    return emission[(static_cast<std::size_t>(h) * num_hidden + x) * num_observations + o];
  }

  /// The common first observation.
  int initial_observation() const {
    int first = -1;
    for (int x = 0; x < num_hidden; ++x) {
      if (initial[static_cast<std::size_t>(x)] == 0.0) continue;
      for (int o = 0; o < num_observations; ++o) {
        if (E(0, x, o) == 0.0) continue;
        if (E(0, x, o) != 1.0 || (first != -1 && first != o)) {
          throw ConfigError("POMDP: the first observation must be deterministic");
        }
        first = o;
      }
    }
    if (first < 0) throw ConfigError("POMDP: no initial observation");
    return first;
  }

  void validate() const {
    if (num_hidden < 1 || num_actions < 1 || num_observations < 1 || horizon < 1) {
      throw ConfigError("POMDP: dimensions must be positive");
    }
    const auto H = static_cast<std::size_t>(horizon);
    if (initial.size() != static_cast<std::size_t>(num_hidden) ||
        transition.size() != (H - 1) * num_hidden * num_actions * num_hidden ||
        emission.size() != H * num_hidden * num_observations ||
        observation_reward.size() != static_cast<std::size_t>(num_observations)) {
      throw ConfigError("POMDP: table size mismatch");
    }
    auto rows = [](std::span<const double> t, std::size_t width, const char* what) {
      for (std::size_t i = 0; i < t.size(); i += width) {
        if (auto why = distribution_problem(t.subspan(i, width), 1e-12); !why.empty()) {
          throw ConfigError(std::string("POMDP: ") + what + " row is not a distribution: " + why);
        }
      }
    };
    rows(initial, initial.size(), "initial");
    rows(transition, static_cast<std::size_t>(num_hidden), "transition");
    rows(emission, static_cast<std::size_t>(num_observations), "emission");
    for (double r : observation_reward) {
      if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("POMDP: observation reward outside [0,1]");
    }
    initial_observation();
  }
};

inline Pomdp pomdp_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"num_hidden", "num_actions", "num_observations", "horizon",
                                "initial", "transition", "emission", "observation_reward"};
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ParseError("pomdp: unknown key '" + key + "'");
  }
  Pomdp p;
  try {
    p.num_hidden = j.at("num_hidden").get<int>();
    p.num_actions = j.at("num_actions").get<int>();
    p.num_observations = j.at("num_observations").get<int>();
    p.horizon = j.at("horizon").get<int>();
    p.initial = j.at("initial").get<std::vector<double>>();
    p.transition = j.at("transition").get<std::vector<double>>();
    p.emission = j.at("emission").get<std::vector<double>>();
    p.observation_reward = j.at("observation_reward").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pomdp: ") + e.what());
  }
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what());
  }
  return p;
}

inline nlohmann::json pomdp_to_json(const Pomdp& p) {
  return {{"num_hidden", p.num_hidden},       {"num_actions", p.num_actions},
          {"num_observations", p.num_observations}, {"horizon", p.horizon},
          {"initial", p.initial},             {"transition", p.transition},
          {"emission", p.emission},           {"observation_reward", p.observation_reward}};
}

/// Random POMDP with Dirichlet(1) rows, a deterministic first observation
/// and rewards in [0,1].
inline Pomdp random_pomdp(int hidden, int actions, int observations, int horizon, Rng& rng) {
  Pomdp p{hidden, actions, observations, horizon, {}, {}, {}, {}};
  auto dirichlet = [&](std::vector<double>& out, int n) {
    double total = 0.0;
    const std::size_t start = out.size();
    for (int i = 0; i < n; ++i) {
      out.push_back(-std::log(1.0 - uniform01(rng)));
      total += out.back();
    }
    for (std::size_t i = start; i < out.size(); ++i) out[i] /= total;
  };
  dirichlet(p.initial, hidden);
  for (int h = 0; h + 1 < horizon; ++h)
    for (int x = 0; x < hidden; ++x)
      for (int a = 0; a < actions; ++a) dirichlet(p.transition, hidden);
  for (int x = 0; x < hidden; ++x)
    for (int o = 0; o < observations; ++o) p.emission.push_back(o == 0 ? 1.0 : 0.0);
  for (int h = 1; h < horizon; ++h)
    for (int x = 0; x < hidden; ++x) dirichlet(p.emission, observations);
  for (int o = 0; o < observations; ++o) p.observation_reward.push_back(uniform01(rng));
  return p;
}

/// Two hidden states (good = 0, bad = 1), four actions, observations
/// {0: no reward, 1: reward}. The agent stays in the good state only while it
/// plays the seeded special sequence a*_1..a*_{H-1}; both states emit
/// observation 0 before step H, and at step H the good state emits 1.
inline Pomdp hard_pomdp_combination_lock(int horizon, std::uint64_t seed, std::vector<int>* special = nullptr) {
  if (horizon < 2) throw ConfigError("combination lock: horizon must be at least 2");
  Rng rng(seed);
  std::vector<int> seq(static_cast<std::size_t>(horizon - 1));
  for (int& a : seq) a = static_cast<int>(rng() >> 62);
  Pomdp p{2, 4, 2, horizon, {1.0, 0.0}, {}, {}, {0.0, 1.0}};
  for (int h = 0; h + 1 < horizon; ++h)
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 4; ++a) {
        const bool good = x == 0 && a == seq[static_cast<std::size_t>(h)];
        p.transition.push_back(good ? 1.0 : 0.0);
        p.transition.push_back(good ? 0.0 : 1.0);
      }
  for (int h = 0; h < horizon; ++h)
    for (int x = 0; x < 2; ++x) {
      const bool reward = h + 1 == horizon && x == 0;
      p.emission.push_back(reward ? 0.0 : 1.0);
      p.emission.push_back(reward ? 1.0 : 0.0);
    }
  if (special) *special = seq;
  return p;
}

/// A POMDP policy: action distribution given o_1..o_h and a_1..a_{h-1}.
using PomdpPolicy =
    std::function<void(const std::vector<int>& observations, const std::vector<int>& actions, std::span<double> out)>;

/// Exact law of (o_1, a_1, ..., o_H, a_H) under a POMDP policy.
inline std::map<std::vector<int>, double> pomdp_trajectory_law(const Pomdp& p, const PomdpPolicy& policy) {
  std::map<std::vector<int>, double> law;
  std::vector<int> obs, acts, key;
  // belief holds the joint probability of (history, x_h).
  std::function<void(int, const std::vector<double>&)> rec = [&](int h, const std::vector<double>& joint) {
    for (int o = 0; o < p.num_observations; ++o) {
      std::vector<double> with_o(static_cast<std::size_t>(p.num_hidden));
      double mass = 0.0;
      for (int x = 0; x < p.num_hidden; ++x) {
        with_o[static_cast<std::size_t>(x)] = joint[static_cast<std::size_t>(x)] * p.E(h, x, o);
        mass += with_o[static_cast<std::size_t>(x)];
      }
      if (mass == 0.0) continue;
      obs.push_back(o);
      std::vector<double> dist(static_cast<std::size_t>(p.num_actions));
      policy(obs, acts, dist);
      for (int a = 0; a < p.num_actions; ++a) {
        const double q = dist[static_cast<std::size_t>(a)];
        if (q == 0.0) continue;
        acts.push_back(a);
        key.insert(key.end(), {o, a});
        if (h + 1 == p.horizon) {
          law[key] += mass * q;
        } else {
          std::vector<double> next(static_cast<std::size_t>(p.num_hidden), 0.0);
          for (int x = 0; x < p.num_hidden; ++x)
            for (int y = 0; y < p.num_hidden; ++y)
              next[static_cast<std::size_t>(y)] += with_o[static_cast<std::size_t>(x)] * q * p.T(h, x, a, y);
          rec(h + 1, next);
        }
        key.resize(key.size() - 2);
        acts.pop_back();
      }
      obs.pop_back();
    }
  };
  rec(0, p.initial);
  return law;
}

/// Game simulating a POMDP, with the state/action conventions:
/// base state o in [0, O); augmented state (o, a) = O + o*A + a; horizon 2H.
/// Steps 2h (0-based) belong to the learner (base state -> (o, a), reward
/// R(o)); steps 2h+1 belong to the opponent, whose action is the next
/// observation. Irrelevant actions are fixed at 0.
struct PomdpReduction {
  MarkovGame game;
  PolicyPtr adversary;
  int num_observations = 0;
  int num_actions = 0;

  int augmented(int o, int a) const { return num_observations + o * num_actions + a; }

  /// POMDP history (o_1..o_h, a_1..a_{h-1}) read off a game prefix at a learner step.
  void pomdp_history(const History& tau, std::vector<int>& obs, std::vector<int>& acts) const {
    obs.clear();
    acts.clear();
    auto states = tau.states();
    auto actions = tau.actions();
    for (std::size_t t = 0; t < states.size(); t += 2) obs.push_back(states[t]);
    for (std::size_t t = 0; t < actions.size(); t += 2) acts.push_back(actions[t].max);
  }

  /// Game policy playing the POMDP policy on learner steps and 0 elsewhere.
  PolicyPtr learner_policy(PomdpPolicy policy, std::string id) const {
    const PomdpReduction self = *this;
    return std::make_shared<FunctionPolicy>(
        Side::kMax, num_actions, std::move(id), [self, policy](const History& tau, std::span<double> out) {
          std::fill(out.begin(), out.end(), 0.0);
          if (tau.step() % 2 == 1) {
            out[0] = 1.0;
            return;
          }
          std::vector<int> obs, acts;
          self.pomdp_history(tau, obs, acts);
          policy(obs, acts, out);
        });
  }

  /// Maps a flat game trajectory key to the POMDP key (o_1, a_1, ..., o_H, a_H).
  std::vector<int> pomdp_key(const TrajectoryKey& k) const {
    std::vector<int> out;
    const std::size_t H = static_cast<std::size_t>(game.horizon() / 2);
    for (std::size_t h = 0; h < H; ++h) {
      out.push_back(k[6 * h]);      // base state at step 2h
      out.push_back(k[6 * h + 1]);  // learner action at step 2h
    }
    return out;
  }
};

inline PomdpReduction pomdp_to_mg(const Pomdp& p) {
  p.validate();
  const int O = p.num_observations, A = p.num_actions, H = p.horizon;
  PomdpReduction red;
  red.num_observations = O;
  red.num_actions = A;
  red.game = MarkovGame(O * A + O, A, O, 2 * H, p.initial_observation());
  MarkovGame& g = red.game;
  for (int t = 0; t < 2 * H; ++t)
    for (int s = 0; s < g.num_states(); ++s)
      for (int a = 0; a < A; ++a)
        for (int b = 0; b < O; ++b) {
          const bool base = s < O;
          if (t % 2 == 0 && base) {
            g.set_next(t, s, a, b, red.augmented(s, a));
            g.reward(t, s, a, b) = p.observation_reward[static_cast<std::size_t>(s)];
          } else if (t % 2 == 1 && !base) {
            g.set_next(t, s, a, b, b);
          } else {
            g.set_next(t, s, a, b, s);  // unreachable
          }
        }

  StructuralHash hash;
  hash.add(std::string_view("pomdp")).add(O).add(A).add(H).add(p.num_hidden);
  for (const auto* t : {&p.initial, &p.transition, &p.emission, &p.observation_reward})
    for (double v : *t) hash.add(v);
  const Pomdp copy = p;
  red.adversary = std::make_shared<FunctionPolicy>(
      Side::kMin, O, "pomdp-" + hex64(hash.value()), [copy](const History& tau, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const int t = tau.step();
        const int h = t / 2;  // the opponent reveals o_{h+2} (0-based o[h+1])
        if (t % 2 == 0 || h + 1 >= copy.horizon) {
          out[0] = 1.0;
          return;
        }
        std::vector<int> obs, acts;
        auto states = tau.states();
        auto actions = tau.actions();
        for (std::size_t i = 0; i < states.size(); i += 2) obs.push_back(states[i]);
        for (std::size_t i = 0; i < actions.size(); i += 2) acts.push_back(actions[i].max);
        // Forward filter over hidden states.
        std::vector<double> belief(copy.initial);
        for (int i = 0; i <= h; ++i) {
          for (int x = 0; x < copy.num_hidden; ++x) belief[static_cast<std::size_t>(x)] *= copy.E(i, x, obs[static_cast<std::size_t>(i)]);
          std::vector<double> next(static_cast<std::size_t>(copy.num_hidden), 0.0);
          for (int x = 0; x < copy.num_hidden; ++x)
            for (int y = 0; y < copy.num_hidden; ++y)
              next[static_cast<std::size_t>(y)] +=
                  belief[static_cast<std::size_t>(x)] * copy.T(i, x, acts[static_cast<std::size_t>(i)], y);
          belief = std::move(next);
        }
        double total = 0.0;
        for (int o = 0; o < copy.num_observations; ++o) {
          double q = 0.0;
          for (int y = 0; y < copy.num_hidden; ++y) q += belief[static_cast<std::size_t>(y)] * copy.E(h + 1, y, o);
          out[static_cast<std::size_t>(o)] = q;
          total += q;
        }
        if (total == 0.0) {
          std::fill(out.begin(), out.end(), 1.0 / copy.num_observations);
          return;
        }
        for (double& q : out) q /= total;
      });
  return red;
}

/// The adversary of the reduction, played every episode.
inline PolicyPtr make_pomdp_adversary(const PomdpReduction& red) { return red.adversary; }

}  // namespace mglab

#endif  // MGLAB_REDUCTIONS_POMDP_HPP
