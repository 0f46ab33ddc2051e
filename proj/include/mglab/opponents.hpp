#ifndef MGLAB_OPPONENTS_HPP
#define MGLAB_OPPONENTS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mglab/common.hpp"
#include "mglab/history.hpp"
#include "mglab/policy.hpp"

namespace mglab {

/// What an adversary may look at when choosing nu^k: the episode index,
/// past realized trajectories and its own past policies. The learner's
/// current policy is not part of it, so simultaneity holds by construction.
struct OpponentView {
  std::uint64_t episode = 1;  // 1-based index of the episode being chosen for
  std::span<const Trajectory> past_trajectories;
  std::span<const PolicyPtr> own_past_policies;
};

class Opponent {
 public:
  virtual ~Opponent() = default;
  virtual std::string kind() const = 0;
  virtual PolicyPtr choose(const OpponentView& view) = 0;
};

using OpponentPtr = std::unique_ptr<Opponent>;

namespace detail {

inline void require_min_policy(const PolicyPtr& p, const char* who) {
  if (!p) throw ConfigError(std::string(who) + ": null policy");
  if (p->side() != Side::kMin) throw ConfigError(std::string(who) + ": policy " + p->canonical_id() + " is not a min-player policy");
}

}  // namespace detail

class FixedOpponent final : public Opponent {
 public:
  explicit FixedOpponent(PolicyPtr policy) : policy_(std::move(policy)) {
    detail::require_min_policy(policy_, "fixed opponent");
  }
  std::string kind() const override { return "fixed"; }
  PolicyPtr choose(const OpponentView&) override { return policy_; }

 private:
  PolicyPtr policy_;
};

/// Draws nu^k i.i.d. from a weighted finite class.
class FiniteClassSampler final : public Opponent {
 public:
  FiniteClassSampler(std::vector<PolicyPtr> policies, std::optional<MixedWeights> weights, std::uint64_t seed)
      : policies_(std::move(policies)), rng_(seed) {
    if (policies_.empty()) throw ConfigError("finite class opponent: empty policy list");
    for (const auto& p : policies_) detail::require_min_policy(p, "finite class opponent");
    weights_ = weights ? *weights : MixedWeights::uniform(policies_.size());
    if (weights_.size() != policies_.size() || !weights_.valid(1e-9)) {
      throw ConfigError("finite class opponent: weights must be a distribution over the class");
    }
  }
  std::string kind() const override { return "finite_class"; }
  PolicyPtr choose(const OpponentView&) override { return policies_[sample_index(weights_.w, rng_)]; }
  const std::vector<PolicyPtr>& policies() const { return policies_; }

 private:
  std::vector<PolicyPtr> policies_;
  MixedWeights weights_;
  Rng rng_;
};

inline OpponentPtr make_finite_class_sampler(std::vector<PolicyPtr> policies, std::optional<MixedWeights> weights,
                                             std::uint64_t seed) {
  return std::make_unique<FiniteClassSampler>(std::move(policies), std::move(weights), seed);
}

/// Plays `first` for episodes 1..switch_after and `second` afterwards.
class SwitcherOpponent final : public Opponent {
 public:
  SwitcherOpponent(PolicyPtr first, PolicyPtr second, std::uint64_t switch_after)
      : first_(std::move(first)), second_(std::move(second)), switch_after_(switch_after) {
    detail::require_min_policy(first_, "switcher opponent");
    detail::require_min_policy(second_, "switcher opponent");
  }
  std::string kind() const override { return "switcher"; }
  PolicyPtr choose(const OpponentView& view) override { return view.episode <= switch_after_ ? first_ : second_; }

 private:
  PolicyPtr first_, second_;
  std::uint64_t switch_after_;
};

/// Round-robin over a list: episode k plays policies[(k-1) mod n].
class CycleOpponent final : public Opponent {
 public:
  explicit CycleOpponent(std::vector<PolicyPtr> policies) : policies_(std::move(policies)) {
    if (policies_.empty()) throw ConfigError("cycle opponent: empty policy list");
    for (const auto& p : policies_) detail::require_min_policy(p, "cycle opponent");
  }
  std::string kind() const override { return "cycle"; }
  PolicyPtr choose(const OpponentView& view) override {
    return policies_[static_cast<std::size_t>((view.episode - 1) % policies_.size())];
  }

 private:
  std::vector<PolicyPtr> policies_;
};

/// Policy for the one-state binary game that plays bits[h] at step h.
/// The id is "bits-" followed by the bit string.
inline PolicyPtr bit_string_policy(const std::vector<int>& bits) {
  std::string id = "bits-";
  for (int b : bits) id.push_back(b ? '1' : '0');
  return std::make_shared<MarkovPolicy>(
      MarkovPolicy::deterministic(Side::kMin, static_cast<int>(bits.size()), 1, 2, bits, id));
}

/// Each episode, a fresh uniformly random bit string b_1..b_H played as a
/// deterministic policy in the matching game.
class MatchingMemoryAdversary final : public Opponent {
 public:
  MatchingMemoryAdversary(int horizon, std::uint64_t seed) : horizon_(horizon), rng_(seed) {
    if (horizon < 1) throw ConfigError("matching-memory adversary: horizon must be positive");
  }
  std::string kind() const override { return "matching_memory"; }
  PolicyPtr choose(const OpponentView&) override {
    std::vector<int> bits(static_cast<std::size_t>(horizon_));
    for (int& b : bits) b = static_cast<int>(rng_() >> 63);
    return bit_string_policy(bits);
  }
  int horizon() const { return horizon_; }

 private:
  int horizon_;
  Rng rng_;
};

inline OpponentPtr make_matching_memory_adversary(int horizon, std::uint64_t seed) {
  return std::make_unique<MatchingMemoryAdversary>(horizon, seed);
}

}  // namespace mglab

#endif  // MGLAB_OPPONENTS_HPP
