#ifndef MGLAB_HISTORY_HPP
#define MGLAB_HISTORY_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mglab/common.hpp"
#include "mglab/game.hpp"

namespace mglab {

/// Dimensions needed to index history prefixes.
struct HistoryShape {
  int num_states = 1;
  int actions_max = 1;
  int actions_min = 1;

  static HistoryShape of(const MarkovGame& g) { return {g.num_states(), g.actions_max(), g.actions_min()}; }
  std::uint64_t branching() const {
    return static_cast<std::uint64_t>(num_states) * actions_max * actions_min;
  }
  friend bool operator==(const HistoryShape&, const HistoryShape&) = default;
};

/// Number of distinct prefixes with `length` states; saturates at uint64 max.
inline std::uint64_t prefixes_at_length(const HistoryShape& shape, int length) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t n = static_cast<std::uint64_t>(shape.num_states);
  for (int i = 1; i < length; ++i) {
    if (n > kMax / shape.branching()) return kMax;
    n *= shape.branching();
  }
  return n;
}

/// History prefix tau_h = (s_1, a_1, ..., s_h), with a mixed-radix key that
/// identifies it among all prefixes of the same length.
class History {
 public:
  History(const HistoryShape& shape, int initial_state) : shape_(shape) {
    states_.push_back(initial_state);
    keys_.push_back(static_cast<std::uint64_t>(initial_state));
  }

  /// Number of states in the prefix; the 0-based step index is length() - 1.
  int length() const { return static_cast<int>(states_.size()); }
  int step() const { return length() - 1; }
  int current_state() const { return states_.back(); }
  std::span<const int> states() const { return states_; }
  std::span<const JointAction> actions() const { return actions_; }
  const HistoryShape& shape() const { return shape_; }

  /// Key of the prefix among prefixes of the same length. Valid only while
  /// key_valid() holds (no overflow of the mixed-radix index).
  std::uint64_t key() const { return keys_.back(); }
  bool key_valid() const { return overflow_depth_ == 0; }

  void push(JointAction a, int next_state) {
    const std::uint64_t prev = keys_.back();
    const std::uint64_t b = shape_.branching();
    std::uint64_t k = 0;
    if (overflow_depth_ > 0 || prev > (std::numeric_limits<std::uint64_t>::max() - b) / b) {
      ++overflow_depth_;
    } else {
      k = ((prev * shape_.actions_max + a.max) * shape_.actions_min + a.min) * shape_.num_states + next_state;
    }
    states_.push_back(next_state);
    actions_.push_back(a);
    keys_.push_back(k);
  }

  void pop() {
    states_.pop_back();
    actions_.pop_back();
    keys_.pop_back();
    if (overflow_depth_ > 0) --overflow_depth_;
  }

 private:
  HistoryShape shape_;
  std::vector<int> states_;
  std::vector<JointAction> actions_;
  std::vector<std::uint64_t> keys_;
  int overflow_depth_ = 0;
};

/// One played episode: H+1 states (the last is the post-horizon state), H joint actions, H rewards.
struct Trajectory {
  std::vector<int> states;
  std::vector<JointAction> actions;
  std::vector<double> rewards;

  int horizon() const { return static_cast<int>(actions.size()); }

  double total_reward() const {
    double r = 0.0;
    for (double x : rewards) r += x;
    return r;
  }

  /// Prefix with `length` states (1 <= length <= H+1).
  History prefix(const HistoryShape& shape, int length) const {
    History tau(shape, states.at(0));
    for (int t = 0; t + 1 < length; ++t) tau.push(actions.at(static_cast<std::size_t>(t)), states.at(static_cast<std::size_t>(t + 1)));
    return tau;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace mglab

#endif  // MGLAB_HISTORY_HPP
