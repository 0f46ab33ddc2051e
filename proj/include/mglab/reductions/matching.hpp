#ifndef MGLAB_REDUCTIONS_MATCHING_HPP
#define MGLAB_REDUCTIONS_MATCHING_HPP

#include "mglab/common.hpp"
#include "mglab/game.hpp"

namespace mglab {

/// One state, binary actions for both players, reward 1[a = b] at the last step only.
inline MarkovGame matching_game(int horizon) {
  if (horizon < 1) throw ConfigError("matching game: horizon must be positive");
  MarkovGame g(1, 2, 2, horizon, 0);
  for (int h = 0; h < horizon; ++h)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        g.set_next(h, 0, a, b, 0);
        g.reward(h, 0, a, b) = (h + 1 == horizon && a == b) ? 1.0 : 0.0;
      }
  return g;
}

/// One-step game with payoff 0.5 + 0.5 * (win - loss) for the max player:
/// actions are rock, paper, scissors on both sides.
inline MarkovGame rock_paper_scissors() {
  MarkovGame g(1, 3, 3, 1, 0);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      g.set_next(0, 0, a, b, 0);
      const int diff = (a - b + 3) % 3;  // 1: a beats b, 2: b beats a
      g.reward(0, 0, a, b) = diff == 0 ? 0.5 : (diff == 1 ? 1.0 : 0.0);
    }
  return g;
}

}  // namespace mglab

#endif  // MGLAB_REDUCTIONS_MATCHING_HPP
