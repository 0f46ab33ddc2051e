#ifndef MGLAB_ESTIMATION_HPP
#define MGLAB_ESTIMATION_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/game.hpp"
#include "mglab/history.hpp"

namespace mglab {

/// Visitation counts N_h(s,a,b) and N_h(s,a,b,s').
class Counters {
 public:
  Counters() = default;
  explicit Counters(const MarkovGame& g)
      : num_states_(g.num_states()),
        actions_max_(g.actions_max()),
        actions_min_(g.actions_min()),
        horizon_(g.horizon()),
        visits_(g.num_cells(), 0),
        next_(g.num_cells() * static_cast<std::size_t>(g.num_states()), 0) {}

  int num_states() const { return num_states_; }
  int horizon() const { return horizon_; }
  std::size_t num_cells() const { return visits_.size(); }

  std::size_t cell_index(int h, int s, int a, int b) const {
    return ((static_cast<std::size_t>(h) * num_states_ + s) * actions_max_ + a) * actions_min_ + b;
  }

  std::uint64_t visits(int h, int s, int a, int b) const { return visits_[cell_index(h, s, a, b)]; }
  std::uint64_t visits(std::size_t cell) const { return visits_[cell]; }
  std::uint64_t next_visits(int h, int s, int a, int b, int n) const {
    return next_[cell_index(h, s, a, b) * num_states_ + n];
  }

  void record(int h, int s, JointAction ja, int next) {
    check_range(h, s, ja, next);
    const std::size_t cell = cell_index(h, s, ja.max, ja.min);
    ++visits_[cell];
    ++next_[cell * num_states_ + next];
  }

  /// Increments every (h, s_h, a_h) and (h, s_h, a_h, s_{h+1}) on the trajectory.
  void update(const Trajectory& traj) {
    if (traj.horizon() != horizon_ || traj.states.size() != static_cast<std::size_t>(horizon_ + 1)) {
      throw Error("Counters::update: trajectory length does not match the horizon");
    }
    for (int h = 0; h < horizon_; ++h) {
      record(h, traj.states[static_cast<std::size_t>(h)], traj.actions[static_cast<std::size_t>(h)],
             traj.states[static_cast<std::size_t>(h + 1)]);
    }
  }

  /// N(s,a,s')/N(s,a), or uniform when the cell is unvisited.
  void empirical_row(int h, int s, int a, int b, std::span<double> out) const {
    const std::size_t cell = cell_index(h, s, a, b);
    const std::uint64_t n = visits_[cell];
    for (int t = 0; t < num_states_; ++t) {
      out[static_cast<std::size_t>(t)] =
          n == 0 ? 1.0 / num_states_ : static_cast<double>(next_[cell * num_states_ + t]) / static_cast<double>(n);
    }
  }

  /// Full P-hat table laid out like MarkovGame::transitions().
  std::vector<double> empirical_transitions() const {
    std::vector<double> out(next_.size());
    for (int h = 0; h < horizon_; ++h)
      for (int s = 0; s < num_states_; ++s)
        for (int a = 0; a < actions_max_; ++a)
          for (int b = 0; b < actions_min_; ++b) {
            empirical_row(h, s, a, b, std::span<double>(out.data() + cell_index(h, s, a, b) * num_states_,
                                                        static_cast<std::size_t>(num_states_)));
          }
    return out;
  }

  /// Sets counts directly; used by tests to inject a chosen model.
  void set(int h, int s, int a, int b, std::span<const std::uint64_t> next_counts) {
    const std::size_t cell = cell_index(h, s, a, b);
    std::uint64_t total = 0;
    for (int t = 0; t < num_states_; ++t) {
      next_[cell * num_states_ + t] = next_counts[static_cast<std::size_t>(t)];
      total += next_counts[static_cast<std::size_t>(t)];
    }
    visits_[cell] = total;
  }

  /// Structural fingerprint; changes whenever any count changes.
  std::uint64_t fingerprint() const {
    StructuralHash hash;
    hash.add(num_states_).add(actions_max_).add(actions_min_).add(horizon_);
    for (std::uint64_t v : next_) hash.add(v);
    return hash.value();
  }

  nlohmann::json to_json() const {
    return {{"num_states", num_states_}, {"actions_max", actions_max_}, {"actions_min", actions_min_},
            {"horizon", horizon_},       {"next", next_}};
  }

  static Counters from_json(const nlohmann::json& j) {
    Counters c;
    try {
      c.num_states_ = j.at("num_states").get<int>();
      c.actions_max_ = j.at("actions_max").get<int>();
      c.actions_min_ = j.at("actions_min").get<int>();
      c.horizon_ = j.at("horizon").get<int>();
      c.next_ = j.at("next").get<std::vector<std::uint64_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("counters: ") + e.what());
    }
    const std::size_t cells = static_cast<std::size_t>(c.horizon_) * c.num_states_ * c.actions_max_ * c.actions_min_;
    if (c.next_.size() != cells * static_cast<std::size_t>(c.num_states_)) throw ParseError("counters: size mismatch");
    c.visits_.assign(cells, 0);
    for (std::size_t cell = 0; cell < cells; ++cell)
      for (int t = 0; t < c.num_states_; ++t) c.visits_[cell] += c.next_[cell * c.num_states_ + t];
    return c;
  }

  friend bool operator==(const Counters&, const Counters&) = default;

 private:
  void check_range(int h, int s, JointAction ja, int next) const {
    if (h < 0 || h >= horizon_ || s < 0 || s >= num_states_ || next < 0 || next >= num_states_ || ja.max < 0 ||
        ja.max >= actions_max_ || ja.min < 0 || ja.min >= actions_min_) {
      throw Error("Counters: index out of range");
    }
  }

  int num_states_ = 0;
  int actions_max_ = 0;
  int actions_min_ = 0;
  int horizon_ = 0;
  std::vector<std::uint64_t> visits_;
  std::vector<std::uint64_t> next_;
};

inline std::vector<double> empirical_transition(const Counters& counters, int h, int s, JointAction ja) {
  std::vector<double> out(static_cast<std::size_t>(counters.num_states()));
  counters.empirical_row(h, s, ja.max, ja.min, out);
  return out;
}

/// Bonus parameters bound to one game's dimensions.
struct BonusConfig {
  double c = 1.0;
  double delta = 0.05;
  std::uint64_t K = 1;

  /// iota = c * ln(S * A * H * K / delta) with A = |A_max| * |A_min|.
  double iota(const MarkovGame& g) const {
    const double v = c * std::log(static_cast<double>(g.num_states()) * g.num_joint_actions() * g.horizon() *
                                  static_cast<double>(K) / delta);
    if (!(v > 0.0)) throw ConfigError("bonus: iota must be positive");
    return v;
  }
};

/// beta(n) = sqrt(H^2 S iota / max(n, 1)).
inline double bonus(std::uint64_t n, int horizon, int num_states, double iota) {
  const double denom = static_cast<double>(n < 1 ? 1 : n);
  return std::sqrt(static_cast<double>(horizon) * horizon * num_states * iota / denom);
}

inline double bonus(std::uint64_t n, const MarkovGame& g, const BonusConfig& cfg) {
  return bonus(n, g.horizon(), g.num_states(), cfg.iota(g));
}

/// Per-cell bonus table beta(N_h(s,a,b)).
inline std::vector<double> bonus_table(const Counters& counters, const MarkovGame& g, const BonusConfig& cfg) {
  const double iota = cfg.iota(g);
  std::vector<double> out(counters.num_cells());
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    out[cell] = bonus(counters.visits(cell), g.horizon(), g.num_states(), iota);
  }
  return out;
}

/// True iff some cell visited by traj has N >= 2 N^lazy. N must already include traj.
inline bool doubling_check(const Counters& N, const Counters& lazy, const Trajectory& traj) {
  for (int h = 0; h < traj.horizon(); ++h) {
    const auto& ja = traj.actions[static_cast<std::size_t>(h)];
    const int s = traj.states[static_cast<std::size_t>(h)];
    if (N.visits(h, s, ja.max, ja.min) >= 2 * lazy.visits(h, s, ja.max, ja.min)) return true;
  }
  return false;
}

}  // namespace mglab

#endif  // MGLAB_ESTIMATION_HPP
