#ifndef MGLAB_GAME_HPP
#define MGLAB_GAME_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"

namespace mglab {

/// Tabular two-player zero-sum Markov game with a fixed start state.
///
/// Steps are 0-based in this API: step h in [0, H). Rewards go to the max
/// player and lie in [0,1]. Transitions are stored densely as
/// P[h][s][a_max][a_min][s'].
class MarkovGame {
 public:
  MarkovGame() = default;
  MarkovGame(int num_states, int actions_max, int actions_min, int horizon, int initial_state = 0)
      : num_states_(num_states),
        actions_max_(actions_max),
        actions_min_(actions_min),
        horizon_(horizon),
        initial_state_(initial_state) {
    if (num_states < 1 || actions_max < 1 || actions_min < 1 || horizon < 1) {
      throw Error("MarkovGame: dimensions must be positive");
    }
    if (initial_state < 0 || initial_state >= num_states) {
      throw Error("MarkovGame: initial state out of range");
    }
    rewards_.assign(num_cells(), 0.0);
    transitions_.assign(num_cells() * static_cast<std::size_t>(num_states), 0.0);
  }

  int num_states() const { return num_states_; }
  int actions_max() const { return actions_max_; }
  int actions_min() const { return actions_min_; }
  int horizon() const { return horizon_; }
  int initial_state() const { return initial_state_; }
  int num_joint_actions() const { return actions_max_ * actions_min_; }

  /// Number of (h, s, a_max, a_min) cells.
  std::size_t num_cells() const {
    return static_cast<std::size_t>(horizon_) * num_states_ * actions_max_ * actions_min_;
  }

  std::size_t cell_index(int h, int s, int a, int b) const {
    return ((static_cast<std::size_t>(h) * num_states_ + s) * actions_max_ + a) * actions_min_ + b;
  }

  double reward(int h, int s, int a, int b) const { return rewards_[cell_index(h, s, a, b)]; }
  double& reward(int h, int s, int a, int b) { return rewards_[cell_index(h, s, a, b)]; }

  double transition(int h, int s, int a, int b, int next) const {
    return transitions_[cell_index(h, s, a, b) * num_states_ + next];
  }
  double& transition(int h, int s, int a, int b, int next) {
    return transitions_[cell_index(h, s, a, b) * num_states_ + next];
  }

  std::span<const double> transition_row(int h, int s, int a, int b) const {
    return {transitions_.data() + cell_index(h, s, a, b) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }
  std::span<double> transition_row(int h, int s, int a, int b) {
    return {transitions_.data() + cell_index(h, s, a, b) * num_states_,
            static_cast<std::size_t>(num_states_)};
  }

  /// Sets a deterministic transition.
  void set_next(int h, int s, int a, int b, int next) {
    auto row = transition_row(h, s, a, b);
    std::fill(row.begin(), row.end(), 0.0);
    row[static_cast<std::size_t>(next)] = 1.0;
  }

  const std::vector<double>& transitions() const { return transitions_; }
  std::vector<double>& transitions() { return transitions_; }
  const std::vector<double>& rewards() const { return rewards_; }
  std::vector<double>& rewards() { return rewards_; }

  bool same_shape(const MarkovGame& o) const {
    return num_states_ == o.num_states_ && actions_max_ == o.actions_max_ &&
           actions_min_ == o.actions_min_ && horizon_ == o.horizon_;
  }

 private:
  int num_states_ = 0;
  int actions_max_ = 0;
  int actions_min_ = 0;
  int horizon_ = 0;
  int initial_state_ = 0;
  std::vector<double> rewards_;
  std::vector<double> transitions_;
};

struct Violation {
  std::string kind;  // "row_sum", "negative_probability", "reward_range"
  int h = 0, s = 0, a = 0, b = 0;
  double value = 0.0;

  std::string describe() const {
    std::ostringstream os;
    os << kind << " at (h=" << h << ", s=" << s << ", a=" << a << ", b=" << b << "): " << value;
    return os.str();
  }
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_game(const MarkovGame& g, double tol = 1e-12) {
  ValidationReport report;
  for (int h = 0; h < g.horizon(); ++h)
    for (int s = 0; s < g.num_states(); ++s)
      for (int a = 0; a < g.actions_max(); ++a)
        for (int b = 0; b < g.actions_min(); ++b) {
          double total = 0.0;
          for (double p : g.transition_row(h, s, a, b)) {
            if (!(p >= 0.0)) report.violations.push_back({"negative_probability", h, s, a, b, p});
            total += p;
          }
          if (!(std::abs(total - 1.0) <= tol)) {
            report.violations.push_back({"row_sum", h, s, a, b, total});
          }
          const double r = g.reward(h, s, a, b);
          if (!(r >= 0.0 && r <= 1.0)) report.violations.push_back({"reward_range", h, s, a, b, r});
        }
  return report;
}

/// Serializes as {num_states, actions_max, actions_min, horizon, initial_state,
/// transitions[h][s][a_max][a_min][s'], rewards[h][s][a_max][a_min]}.
inline nlohmann::json game_to_json(const MarkovGame& g) {
  using nlohmann::json;
  json transitions = json::array();
  json rewards = json::array();
  for (int h = 0; h < g.horizon(); ++h) {
    json th = json::array(), rh = json::array();
    for (int s = 0; s < g.num_states(); ++s) {
      json ts = json::array(), rs = json::array();
      for (int a = 0; a < g.actions_max(); ++a) {
        json ta = json::array(), ra = json::array();
        for (int b = 0; b < g.actions_min(); ++b) {
          auto row = g.transition_row(h, s, a, b);
          ta.push_back(std::vector<double>(row.begin(), row.end()));
          ra.push_back(g.reward(h, s, a, b));
        }
        ts.push_back(std::move(ta));
        rs.push_back(std::move(ra));
      }
      th.push_back(std::move(ts));
      rh.push_back(std::move(rs));
    }
    transitions.push_back(std::move(th));
    rewards.push_back(std::move(rh));
  }
  return json{{"num_states", g.num_states()},       {"actions_max", g.actions_max()},
              {"actions_min", g.actions_min()},     {"horizon", g.horizon()},
              {"initial_state", g.initial_state()}, {"transitions", std::move(transitions)},
              {"rewards", std::move(rewards)}};
}

namespace detail {

inline const nlohmann::json& require_array(const nlohmann::json& j, std::size_t n, const std::string& where) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(where + ": expected array of length " + std::to_string(n));
  }
  return j;
}

}  // namespace detail

/// Parses and validates a game document; throws ParseError on any schema or validity problem.
inline MarkovGame game_from_json(const nlohmann::json& j) {
  static const char* kKeys[] = {"num_states", "actions_max", "actions_min", "horizon",
                                "initial_state", "transitions", "rewards"};
  if (!j.is_object()) throw ParseError("game: expected object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ParseError("game: unknown key '" + key + "'");
  }
  for (const char* k : kKeys) {
    if (!j.contains(k)) throw ParseError(std::string("game: missing key '") + k + "'");
  }
  MarkovGame g;
  try {
    g = MarkovGame(j.at("num_states").get<int>(), j.at("actions_max").get<int>(),
                   j.at("actions_min").get<int>(), j.at("horizon").get<int>(),
                   j.at("initial_state").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("game: ") + e.what());
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  using detail::require_array;
  const auto S = static_cast<std::size_t>(g.num_states());
  const auto& T = require_array(j.at("transitions"), static_cast<std::size_t>(g.horizon()), "transitions");
  const auto& R = require_array(j.at("rewards"), static_cast<std::size_t>(g.horizon()), "rewards");
  try {
    for (int h = 0; h < g.horizon(); ++h) {
      require_array(T[h], S, "transitions[h]");
      require_array(R[h], S, "rewards[h]");
      for (int s = 0; s < g.num_states(); ++s) {
        require_array(T[h][s], static_cast<std::size_t>(g.actions_max()), "transitions[h][s]");
        require_array(R[h][s], static_cast<std::size_t>(g.actions_max()), "rewards[h][s]");
        for (int a = 0; a < g.actions_max(); ++a) {
          require_array(T[h][s][a], static_cast<std::size_t>(g.actions_min()), "transitions[h][s][a]");
          require_array(R[h][s][a], static_cast<std::size_t>(g.actions_min()), "rewards[h][s][a]");
          for (int b = 0; b < g.actions_min(); ++b) {
            const auto& row = require_array(T[h][s][a][b], S, "transitions[h][s][a][b]");
            for (int n = 0; n < g.num_states(); ++n) g.transition(h, s, a, b, n) = row[n].get<double>();
            g.reward(h, s, a, b) = R[h][s][a][b].get<double>();
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("game: ") + e.what());
  }
  auto report = validate_game(g);
  if (!report.ok()) throw ParseError("game: " + report.violations.front().describe());
  return g;
}

/// Random game with Dirichlet(1) transition rows and uniform rewards.
inline MarkovGame random_game(int num_states, int actions_max, int actions_min, int horizon, Rng& rng) {
  MarkovGame g(num_states, actions_max, actions_min, horizon, 0);
  for (int h = 0; h < horizon; ++h)
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < actions_max; ++a)
        for (int b = 0; b < actions_min; ++b) {
          auto row = g.transition_row(h, s, a, b);
          double total = 0.0;
          for (double& p : row) {
            p = -std::log(1.0 - uniform01(rng));
            total += p;
          }
          for (double& p : row) p /= total;
          g.reward(h, s, a, b) = uniform01(rng);
        }
  return g;
}

/// Copy of the game with every transition row replaced by the uniform law.
/// Learners receive this view: rewards are known, dynamics are not.
inline MarkovGame reward_only_view(const MarkovGame& g) {
  MarkovGame view = g;
  std::fill(view.transitions().begin(), view.transitions().end(), 1.0 / g.num_states());
  return view;
}

}  // namespace mglab

#endif  // MGLAB_GAME_HPP
