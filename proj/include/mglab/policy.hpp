#ifndef MGLAB_POLICY_HPP
#define MGLAB_POLICY_HPP

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/history.hpp"

namespace mglab {

class MarkovPolicy;

/// A possibly history-dependent policy for one player.
///
/// canonical_id() is the policy identity used by the revealed-policy
/// protocol: two policies are treated as the same iff their ids match.
/// Policies built here derive the id from a structural hash of everything
/// that determines their decisions.
class GeneralPolicy {
 public:
  GeneralPolicy(Side side, int num_actions, std::string id)
      : side_(side), num_actions_(num_actions), id_(std::move(id)) {}
  virtual ~GeneralPolicy() = default;

  /// Writes the action distribution at prefix tau into out (size num_actions()).
  virtual void distribution(const History& tau, std::span<double> out) const = 0;

  /// Non-null when the policy depends only on (step, current state).
  virtual const MarkovPolicy* as_markov() const { return nullptr; }

  Side side() const { return side_; }
  int num_actions() const { return num_actions_; }
  const std::string& canonical_id() const { return id_; }

 protected:
  void set_id(std::string id) { id_ = std::move(id); }

 private:
  Side side_;
  int num_actions_;
  std::string id_;
};

using PolicyPtr = std::shared_ptr<const GeneralPolicy>;

/// Per-step, per-state action distributions.
class MarkovPolicy final : public GeneralPolicy {
 public:
  MarkovPolicy(Side side, int horizon, int num_states, int num_actions, std::vector<double> table,
               std::optional<std::string> id = std::nullopt)
      : GeneralPolicy(side, num_actions, ""),
        horizon_(horizon),
        num_states_(num_states),
        table_(std::move(table)) {
    if (table_.size() != static_cast<std::size_t>(horizon) * num_states * num_actions) {
      throw Error("MarkovPolicy: table size mismatch");
    }
    for (int h = 0; h < horizon_; ++h)
      for (int s = 0; s < num_states_; ++s) {
        if (auto why = distribution_problem(row(h, s), 1e-12); !why.empty()) {
          throw PolicyFault("MarkovPolicy: row (h=" + std::to_string(h) + ", s=" + std::to_string(s) +
                            ") is not a distribution: " + why);
        }
      }
    if (id) {
      set_id(*id);
    } else {
      StructuralHash hash;
      hash.add(std::string_view("markov")).add(static_cast<int>(side)).add(horizon).add(num_states).add(num_actions);
      for (double p : table_) hash.add(p);
      set_id("mk-" + hex64(hash.value()));
    }
  }

  static MarkovPolicy uniform(Side side, int horizon, int num_states, int num_actions) {
    return MarkovPolicy(side, horizon, num_states, num_actions,
                        std::vector<double>(static_cast<std::size_t>(horizon) * num_states * num_actions,
                                            1.0 / num_actions));
  }

  /// actions[h * num_states + s] is the action played at (h, s).
  static MarkovPolicy deterministic(Side side, int horizon, int num_states, int num_actions,
                                    std::span<const int> actions, std::optional<std::string> id = std::nullopt) {
    std::vector<double> table(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      table[i * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(actions[i])] = 1.0;
    }
    return MarkovPolicy(side, horizon, num_states, num_actions, std::move(table), std::move(id));
  }

  static MarkovPolicy constant(Side side, int horizon, int num_states, int num_actions, int action) {
    std::vector<int> acts(static_cast<std::size_t>(horizon) * num_states, action);
    return deterministic(side, horizon, num_states, num_actions, acts);
  }

  void distribution(const History& tau, std::span<double> out) const override {
    auto r = row(tau.step(), tau.current_state());
    std::copy(r.begin(), r.end(), out.begin());
  }
  const MarkovPolicy* as_markov() const override { return this; }

  std::span<const double> row(int h, int s) const {
    return {table_.data() + (static_cast<std::size_t>(h) * num_states_ + s) * num_actions(),
            static_cast<std::size_t>(num_actions())};
  }
  double prob(int h, int s, int a) const { return row(h, s)[static_cast<std::size_t>(a)]; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  const std::vector<double>& table() const { return table_; }

 private:
  int horizon_;
  int num_states_;
  std::vector<double> table_;
};

/// Deterministic history-indexed policy; prefixes without an entry play action 0.
class DeterministicHistoryPolicy final : public GeneralPolicy {
 public:
  /// decisions[length - 1] maps a prefix key to its action.
  using Decisions = std::vector<std::unordered_map<std::uint64_t, int>>;

  DeterministicHistoryPolicy(Side side, int horizon, HistoryShape shape, int num_actions, Decisions decisions)
      : GeneralPolicy(side, num_actions, ""), horizon_(horizon), shape_(shape), decisions_(std::move(decisions)) {
    decisions_.resize(static_cast<std::size_t>(horizon));
    StructuralHash hash;
    hash.add(std::string_view("dethist")).add(static_cast<int>(side)).add(horizon).add(num_actions);
    hash.add(shape.num_states).add(shape.actions_max).add(shape.actions_min);
    for (std::size_t level = 0; level < decisions_.size(); ++level) {
      std::vector<std::pair<std::uint64_t, int>> sorted;
      for (const auto& [key, action] : decisions_[level]) {
        if (action < 0 || action >= num_actions) throw PolicyFault("DeterministicHistoryPolicy: action out of range");
        if (action != 0) sorted.emplace_back(key, action);
      }
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [key, action] : sorted) hash.add(static_cast<std::uint64_t>(level)).add(key).add(action);
    }
    set_id("dh-" + hex64(hash.value()));
  }

  int action_at(const History& tau) const {
    if (!tau.key_valid()) throw Error("DeterministicHistoryPolicy: history key overflow");
    const auto& level = decisions_.at(static_cast<std::size_t>(tau.step()));
    auto it = level.find(tau.key());
    return it == level.end() ? 0 : it->second;
  }

  void distribution(const History& tau, std::span<double> out) const override {
    std::fill(out.begin(), out.end(), 0.0);
    out[static_cast<std::size_t>(action_at(tau))] = 1.0;
  }

  int horizon() const { return horizon_; }
  const HistoryShape& shape() const { return shape_; }
  const Decisions& decisions() const { return decisions_; }

 private:
  int horizon_;
  HistoryShape shape_;
  Decisions decisions_;
};

/// Pseudo-random history-dependent policy: the distribution at each prefix is
/// a deterministic function of (seed, prefix). Useful as a test opponent and
/// as a source of random general policies without materializing tables.
class RandomHistoryPolicy final : public GeneralPolicy {
 public:
  RandomHistoryPolicy(Side side, HistoryShape shape, int num_actions, std::uint64_t seed, bool deterministic = false)
      : GeneralPolicy(side, num_actions, ""), shape_(shape), seed_(seed), deterministic_(deterministic) {
    StructuralHash hash;
    hash.add(std::string_view("randhist")).add(static_cast<int>(side)).add(num_actions).add(seed);
    hash.add(shape.num_states).add(shape.actions_max).add(shape.actions_min).add(static_cast<int>(deterministic));
    set_id("rh-" + hex64(hash.value()));
  }

  void distribution(const History& tau, std::span<double> out) const override {
    if (!tau.key_valid()) throw Error("RandomHistoryPolicy: history key overflow");
    Rng rng(splitmix64(seed_ ^ splitmix64(tau.key() * 131 + static_cast<std::uint64_t>(tau.length()))));
    if (deterministic_) {
      std::fill(out.begin(), out.end(), 0.0);
      out[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(num_actions()))] = 1.0;
      return;
    }
    double total = 0.0;
    for (double& p : out) {
      p = -std::log(1.0 - uniform01(rng));
      total += p;
    }
    for (double& p : out) p /= total;
  }

 private:
  HistoryShape shape_;
  std::uint64_t seed_;
  bool deterministic_;
};

/// Policy backed by a callable. The caller supplies the canonical id.
class FunctionPolicy final : public GeneralPolicy {
 public:
  using Fn = std::function<void(const History&, std::span<double>)>;
  FunctionPolicy(Side side, int num_actions, std::string id, Fn fn)
      : GeneralPolicy(side, num_actions, std::move(id)), fn_(std::move(fn)) {}
  void distribution(const History& tau, std::span<double> out) const override { fn_(tau, out); }

 private:
  Fn fn_;
};

/// Markov policy with Dirichlet(1) rows, or uniformly random actions when deterministic.
inline PolicyPtr random_markov_policy(Side side, int horizon, int num_states, int num_actions, Rng& rng,
                                      bool deterministic = false) {
  std::vector<double> table(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0);
  const std::size_t A = static_cast<std::size_t>(num_actions);
  for (std::size_t row = 0; row < table.size(); row += A) {
    if (deterministic) {
      table[row + rng() % A] = 1.0;
    } else {
      random_distribution(std::span<double>(table.data() + row, A), rng);
    }
  }
  return std::make_shared<MarkovPolicy>(side, horizon, num_states, num_actions, std::move(table));
}

/// Weights over a finite policy list.
struct MixedWeights {
  std::vector<double> w;

  static MixedWeights uniform(std::size_t k) { return {std::vector<double>(k, 1.0 / static_cast<double>(k))}; }
  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }
  bool valid(double tol = 1e-12) const { return !w.empty() && distribution_problem(w, tol).empty(); }
};

/// All deterministic Markov policies in lexicographic order of their (h, s)-major action tables.
inline std::vector<PolicyPtr> all_deterministic_markov(Side side, int horizon, int num_states, int num_actions,
                                                       std::size_t guard) {
  const int cells = horizon * num_states;
  std::size_t count = 1;
  for (int i = 0; i < cells; ++i) {
    if (count > guard / static_cast<std::size_t>(num_actions)) {
      throw GuardExceeded("deterministic Markov policies |A|^(S*H)", guard);
    }
    count *= static_cast<std::size_t>(num_actions);
  }
  if (count > guard) throw GuardExceeded("deterministic Markov policies |A|^(S*H)", guard);
  std::vector<PolicyPtr> out;
  out.reserve(count);
  std::vector<int> digits(static_cast<std::size_t>(cells), 0);
  for (std::size_t n = 0; n < count; ++n) {
    out.push_back(std::make_shared<MarkovPolicy>(
        MarkovPolicy::deterministic(side, horizon, num_states, num_actions, digits)));
    for (int i = cells - 1; i >= 0; --i) {
      if (++digits[static_cast<std::size_t>(i)] < num_actions) break;
      digits[static_cast<std::size_t>(i)] = 0;
    }
  }
  return out;
}

/// JSON form of the table-backed policies; other kinds are not serializable.
inline nlohmann::json policy_to_json(const GeneralPolicy& p) {
  using nlohmann::json;
  if (const auto* m = p.as_markov()) {
    return json{{"type", "markov"},
                {"side", to_string(m->side())},
                {"horizon", m->horizon()},
                {"num_states", m->num_states()},
                {"num_actions", m->num_actions()},
                {"table", m->table()},
                {"id", m->canonical_id()}};
  }
  if (const auto* d = dynamic_cast<const DeterministicHistoryPolicy*>(&p)) {
    json entries = json::array();
    for (std::size_t level = 0; level < d->decisions().size(); ++level) {
      std::vector<std::pair<std::uint64_t, int>> sorted(d->decisions()[level].begin(), d->decisions()[level].end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [key, action] : sorted) entries.push_back({level, key, action});
    }
    return json{{"type", "deterministic_history"},
                {"side", to_string(d->side())},
                {"horizon", d->horizon()},
                {"shape", {d->shape().num_states, d->shape().actions_max, d->shape().actions_min}},
                {"num_actions", d->num_actions()},
                {"decisions", std::move(entries)}};
  }
  throw Error("policy " + p.canonical_id() + " is not serializable");
}

inline Side side_from_string(const std::string& s) {
  if (s == "max") return Side::kMax;
  if (s == "min") return Side::kMin;
  throw ParseError("unknown side '" + s + "'");
}

inline PolicyPtr policy_from_json(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    const Side side = side_from_string(j.at("side").get<std::string>());
    if (type == "markov") {
      std::optional<std::string> id;
      if (j.contains("id")) id = j.at("id").get<std::string>();
      return std::make_shared<MarkovPolicy>(side, j.at("horizon").get<int>(), j.at("num_states").get<int>(),
                                            j.at("num_actions").get<int>(), j.at("table").get<std::vector<double>>(),
                                            id);
    }
    if (type == "deterministic_history") {
      const auto shape = j.at("shape").get<std::vector<int>>();
      if (shape.size() != 3) throw ParseError("deterministic_history: shape must have 3 entries");
      const int horizon = j.at("horizon").get<int>();
      DeterministicHistoryPolicy::Decisions decisions(static_cast<std::size_t>(horizon));
      for (const auto& e : j.at("decisions")) {
        decisions.at(e.at(0).get<std::size_t>())[e.at(1).get<std::uint64_t>()] = e.at(2).get<int>();
      }
      return std::make_shared<DeterministicHistoryPolicy>(side, horizon, HistoryShape{shape[0], shape[1], shape[2]},
                                                          j.at("num_actions").get<int>(), std::move(decisions));
    }
    throw ParseError("unknown policy type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("policy: ") + e.what());
  }
}

}  // namespace mglab

#endif  // MGLAB_POLICY_HPP
