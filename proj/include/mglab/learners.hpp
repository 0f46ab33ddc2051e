#ifndef MGLAB_LEARNERS_HPP
#define MGLAB_LEARNERS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/estimation.hpp"
#include "mglab/game.hpp"
#include "mglab/ope.hpp"
#include "mglab/policy.hpp"

namespace mglab {

/// softmax(eta * G) with max-subtraction.
inline std::vector<double> exp_weights_distribution(std::span<const double> G, double eta) {
  if (G.empty()) throw Error("exp_weights_distribution: empty value vector");
  double top = -std::numeric_limits<double>::infinity();
  for (double g : G) {
    if (!std::isfinite(g)) throw Error("exp_weights_distribution: non-finite value");
    top = std::max(top, eta * g);
  }
  std::vector<double> p(G.size());
  double total = 0.0;
  for (std::size_t i = 0; i < G.size(); ++i) {
    p[i] = std::exp(eta * G[i] - top);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

/// Hedge over a finite policy list with compensated cumulative gains.
class ExpWeights {
 public:
  ExpWeights() = default;
  explicit ExpWeights(std::vector<PolicyPtr> policies) { reset(std::move(policies)); }

  void reset(std::vector<PolicyPtr> policies) {
    if (policies.empty()) throw Error("ExpWeights: empty policy class");
    policies_ = std::move(policies);
    gains_.assign(policies_.size(), CompensatedSum{});
    p_.assign(policies_.size(), 1.0 / static_cast<double>(policies_.size()));
  }

  std::size_t size() const { return policies_.size(); }
  const std::vector<PolicyPtr>& policies() const { return policies_; }
  const std::vector<double>& distribution() const { return p_; }

  std::vector<double> gains() const {
    std::vector<double> g(gains_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = gains_[i].value();
    return g;
  }

  void add_gain(std::size_t i, double v) { gains_[i].add(v); }
  void reweight(double eta) { p_ = exp_weights_distribution(gains(), eta); }
  std::size_t sample(Rng& rng) const { return sample_index(p_, rng); }

  nlohmann::json gains_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& g : gains_) out.push_back({g.raw_sum(), g.compensation()});
    return out;
  }
  void restore_gains(const nlohmann::json& j, double eta) {
    if (j.size() != gains_.size()) throw ParseError("checkpoint: gain vector size mismatch");
    for (std::size_t i = 0; i < gains_.size(); ++i) gains_[i].restore(j[i][0].get<double>(), j[i][1].get<double>());
    reweight(eta);
  }

 private:
  std::vector<PolicyPtr> policies_;
  std::vector<CompensatedSum> gains_;
  std::vector<double> p_;
};

/// Learner side of the episode protocol.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string kind() const = 0;
  /// Draws this episode's policy.
  virtual PolicyPtr select(Rng& rng) = 0;
  /// Feeds back the revealed opponent policy and the played trajectory.
  virtual void update(const PolicyPtr& revealed, const Trajectory& traj) = 0;
  /// Rate used in the most recent update.
  virtual double eta() const { return 0.0; }
  /// Whether the most recent update restarted the learner.
  virtual bool restarted() const { return false; }
  virtual std::size_t psi_size() const { return 0; }
  virtual std::size_t restarts() const { return 0; }
  virtual nlohmann::json checkpoint() const = 0;
};

using PolicyResolver = std::function<PolicyPtr(const std::string& id)>;

namespace detail {

inline nlohmann::json policy_list_json(const std::vector<PolicyPtr>& list) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : list) {
    nlohmann::json e{{"id", p->canonical_id()}};
    try {
      e["policy"] = policy_to_json(*p);
    } catch (const Error&) {
      // Non-table policies are resolved by id on restore.
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<PolicyPtr> policy_list_from_json(const nlohmann::json& j, const PolicyResolver& resolve) {
  std::vector<PolicyPtr> out;
  for (const auto& e : j) {
    const auto id = e.at("id").get<std::string>();
    PolicyPtr p;
    if (e.contains("policy")) {
      p = policy_from_json(e.at("policy"));
    } else if (resolve) {
      p = resolve(id);
    }
    if (!p || p->canonical_id() != id) throw ParseError("checkpoint: cannot restore policy " + id);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

/// Plays one policy forever.
class FixedPolicyLearner final : public Learner {
 public:
  explicit FixedPolicyLearner(PolicyPtr policy) : policy_(std::move(policy)) {
    if (!policy_ || policy_->side() != Side::kMax) throw ConfigError("fixed learner needs a max-player policy");
  }
  std::string kind() const override { return "fixed"; }
  PolicyPtr select(Rng&) override { return policy_; }
  void update(const PolicyPtr&, const Trajectory&) override {}
  nlohmann::json checkpoint() const override {
    return {{"kind", kind()}, {"policy", detail::policy_list_json({policy_})}};
  }

 private:
  PolicyPtr policy_;
};

/// Exponential weights over a fixed class with optimistic full-information
/// gains: each episode every mu in the class is credited with
/// OPE(N, beta, mu x nu^k) under the counters from before the episode, then
/// p is recomputed from the whole cumulative sum with
/// eta_k = sqrt(ln|class| / (k H^2)).
class OpExp3 final : public Learner {
 public:
  OpExp3(const MarkovGame& game, std::vector<PolicyPtr> baseline, BonusConfig cfg, Guards guards = {})
      : game_(reward_only_view(game)), cfg_(cfg), guards_(guards), counters_(game), weights_(std::move(baseline)) {
    for (const auto& mu : weights_.policies()) {
      if (mu->side() != Side::kMax || mu->num_actions() != game.actions_max()) {
        throw ConfigError("OP-EXP3: baseline policy " + mu->canonical_id() + " is not a max-player policy");
      }
    }
  }

  std::string kind() const override { return "opexp3"; }

  PolicyPtr select(Rng& rng) override { return weights_.policies()[weights_.sample(rng)]; }

  void update(const PolicyPtr& revealed, const Trajectory& traj) override {
    ++k_;
    const OptimisticModel model(game_, counters_, cfg_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      weights_.add_gain(i, ope_evaluate(model, *weights_.policies()[i], *revealed, guards_));
    }
    eta_ = rate();
    weights_.reweight(eta_);
    counters_.update(traj);
  }

  double eta() const override { return eta_; }
  const ExpWeights& weights() const { return weights_; }
  const Counters& counters() const { return counters_; }
  std::uint64_t episodes() const { return k_; }

  nlohmann::json checkpoint() const override {
    return {{"kind", kind()},
            {"k", k_},
            {"phi", detail::policy_list_json(weights_.policies())},
            {"gains", weights_.gains_json()},
            {"counters", counters_.to_json()}};
  }

  void restore(const nlohmann::json& j) {
    try {
      k_ = j.at("k").get<std::uint64_t>();
      counters_ = Counters::from_json(j.at("counters"));
      weights_.reset(detail::policy_list_from_json(j.at("phi"), {}));
      eta_ = k_ == 0 ? 0.0 : rate();
      weights_.restore_gains(j.at("gains"), eta_);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("checkpoint: ") + e.what());
    }
  }

 private:
  double rate() const {
    const double H = game_.horizon();
    return std::sqrt(std::log(static_cast<double>(weights_.size())) / (static_cast<double>(k_) * H * H));
  }

  MarkovGame game_;
  BonusConfig cfg_;
  Guards guards_;
  Counters counters_;
  ExpWeights weights_;
  std::uint64_t k_ = 0;
  double eta_ = 0.0;
};

/// Exponential weights over an adaptively rebuilt class. OPE uses the lazy
/// counters; gains accumulate from the last restart m; eta follows
/// sqrt(|Psi| ln K / ((k - m) H^2)). A restart (new opponent id, or a visited
/// cell whose count reached twice its lazy value) syncs the lazy counters,
/// adds the opponent to Psi, and rebuilds the class as the optimistic best
/// responses over an eps-cover of mixtures of Psi.
class AdaptiveOpExp3 final : public Learner {
 public:
  AdaptiveOpExp3(const MarkovGame& game, BonusConfig cfg, double epsilon, std::uint64_t budget, Guards guards = {})
      : game_(reward_only_view(game)),
        cfg_(cfg),
        epsilon_(epsilon),
        budget_(budget),
        guards_(guards),
        counters_(game),
        lazy_(game) {
    if (budget_ < 1) throw ConfigError("Adaptive OP-EXP3: K must be at least 1");
    cover_denominator(1, epsilon_);  // validates epsilon
    weights_.reset({std::make_shared<MarkovPolicy>(
        MarkovPolicy::uniform(Side::kMax, game.horizon(), game.num_states(), game.actions_max()))});
  }

  std::string kind() const override { return "adaptive"; }

  PolicyPtr select(Rng& rng) override { return weights_.policies()[weights_.sample(rng)]; }

  void update(const PolicyPtr& revealed, const Trajectory& traj) override {
    ++k_;
    restarted_ = false;
    if (!model_) model_.emplace(game_, lazy_, cfg_);
    for (std::size_t i = 0; i < weights_.size(); ++i) weights_.add_gain(i, lazy_value(*weights_.policies()[i], *revealed));
    eta_ = rate();
    weights_.reweight(eta_);
    counters_.update(traj);
    const bool new_opponent = !psi_ids_.contains(revealed->canonical_id());
    if (new_opponent || doubling_check(counters_, lazy_, traj)) restart(revealed, new_opponent);
  }

  double eta() const override { return eta_; }
  bool restarted() const override { return restarted_; }
  std::size_t psi_size() const override { return psi_.size(); }
  std::size_t restarts() const override { return restarts_; }
  std::uint64_t last_restart() const { return m_; }
  const ExpWeights& weights() const { return weights_; }
  const std::vector<PolicyPtr>& psi() const { return psi_; }
  const Counters& counters() const { return counters_; }
  const Counters& lazy_counters() const { return lazy_; }

  nlohmann::json checkpoint() const override {
    return {{"kind", kind()},
            {"k", k_},
            {"m", m_},
            {"restarts", restarts_},
            {"phi", detail::policy_list_json(weights_.policies())},
            {"gains", weights_.gains_json()},
            {"psi", detail::policy_list_json(psi_)},
            {"counters", counters_.to_json()},
            {"lazy", lazy_.to_json()}};
  }

  /// Restores a checkpoint; ids of non-serializable opponents go through resolve.
  void restore(const nlohmann::json& j, const PolicyResolver& resolve = {}) {
    try {
      k_ = j.at("k").get<std::uint64_t>();
      m_ = j.at("m").get<std::uint64_t>();
      restarts_ = j.at("restarts").get<std::size_t>();
      counters_ = Counters::from_json(j.at("counters"));
      lazy_ = Counters::from_json(j.at("lazy"));
      psi_ = detail::policy_list_from_json(j.at("psi"), resolve);
      psi_ids_.clear();
      for (const auto& p : psi_) psi_ids_.insert(p->canonical_id());
      weights_.reset(detail::policy_list_from_json(j.at("phi"), {}));
      eta_ = k_ > m_ ? rate() : 0.0;
      weights_.restore_gains(j.at("gains"), eta_);
      model_.reset();
      memo_.clear();
      restarted_ = false;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("checkpoint: ") + e.what());
    }
  }

 private:
  double rate() const {
    const double H = game_.horizon();
    const double num = static_cast<double>(psi_.size()) * std::log(static_cast<double>(budget_));
    return std::sqrt(num / (static_cast<double>(k_ - m_) * H * H));
  }

  // OPE under the frozen lazy model, memoized by (snapshot, mu id, nu id).
  double lazy_value(const GeneralPolicy& mu, const GeneralPolicy& nu) {
    const std::string key = hex64(model_->snapshot_id()) + "|" + mu.canonical_id() + "|" + nu.canonical_id();
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const double v = ope_evaluate(*model_, mu, nu, guards_);
    memo_.emplace(key, v);
    return v;
  }

  void restart(const PolicyPtr& revealed, bool new_opponent) {
    lazy_ = counters_;
    if (new_opponent) {
      psi_.push_back(revealed);
      psi_ids_.insert(revealed->canonical_id());
    }
    m_ = k_;
    model_.emplace(game_, lazy_, cfg_);
    memo_.clear();
    weights_.reset(optimistic_best_response_set(*model_, psi_, epsilon_, guards_));
    ++restarts_;
    restarted_ = true;
  }

  MarkovGame game_;
  BonusConfig cfg_;
  double epsilon_;
  std::uint64_t budget_;
  Guards guards_;
  Counters counters_;
  Counters lazy_;
  std::optional<OptimisticModel> model_;
  std::unordered_map<std::string, double> memo_;
  ExpWeights weights_;
  std::vector<PolicyPtr> psi_;
  std::unordered_set<std::string> psi_ids_;
  std::uint64_t k_ = 0;
  std::uint64_t m_ = 0;
  std::size_t restarts_ = 0;
  double eta_ = 0.0;
  bool restarted_ = false;
};

}  // namespace mglab

#endif  // MGLAB_LEARNERS_HPP
