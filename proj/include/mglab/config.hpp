#ifndef MGLAB_CONFIG_HPP
#define MGLAB_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mglab/common.hpp"
#include "mglab/estimation.hpp"
#include "mglab/game.hpp"
#include "mglab/harness.hpp"
#include "mglab/learners.hpp"
#include "mglab/opponents.hpp"
#include "mglab/policy.hpp"
#include "mglab/reductions/lmdp.hpp"
#include "mglab/reductions/matching.hpp"
#include "mglab/reductions/pomdp.hpp"
#include "mglab/reductions/sat.hpp"

namespace mglab {

inline constexpr const char* kManifestFormat = "mglab-manifest/1";
inline constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

namespace detail {

inline void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Everything built from a config: the true game and the two players.
struct Experiment {
  MarkovGame game;
  std::unique_ptr<Learner> learner;
  std::unique_ptr<Opponent> opponent;
  RunOptions run;
  RegretOptions regret;
  /// Policies the opponent side of a reduction needs (POMDP adversary, LMDP components).
  std::vector<PolicyPtr> reduction_opponents;
  std::optional<MixedWeights> reduction_weights;
};

/// Builds one policy for `side` from a policy spec:
///   {"type": "constant", "action": a}
///   {"type": "uniform"}
///   {"type": "random_markov", "seed": s, "deterministic": bool}
///   {"type": "markov" | "deterministic_history", ...serialized policy...}
inline PolicyPtr policy_from_spec(const json& spec, const MarkovGame& g, Side side) {
  const std::string where = "policy";
  const int A = side == Side::kMax ? g.actions_max() : g.actions_min();
  const auto type = detail::get<std::string>(spec, "type", where);
  if (type == "constant") {
    detail::allow_keys(spec, where, {"type", "action"});
    const int a = detail::get<int>(spec, "action", where);
    if (a < 0 || a >= A) throw ConfigError("policy: action out of range");
    return std::make_shared<MarkovPolicy>(MarkovPolicy::constant(side, g.horizon(), g.num_states(), A, a));
  }
  if (type == "uniform") {
    detail::allow_keys(spec, where, {"type"});
    return std::make_shared<MarkovPolicy>(MarkovPolicy::uniform(side, g.horizon(), g.num_states(), A));
  }
  if (type == "random_markov") {
    detail::allow_keys(spec, where, {"type", "seed", "deterministic"});
    Rng rng(detail::get<std::uint64_t>(spec, "seed", where));
    return random_markov_policy(side, g.horizon(), g.num_states(), A, rng,
                                detail::get_or<bool>(spec, "deterministic", false, where));
  }
  if (type == "markov" || type == "deterministic_history") {
    PolicyPtr p;
    try {
      p = policy_from_json(spec);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    if (p->side() != side || p->num_actions() != A) throw ConfigError("policy: side or action count mismatch");
    return p;
  }
  throw ConfigError("policy: unknown type '" + type + "'");
}

inline std::vector<PolicyPtr> policies_from_spec(const json& list, const MarkovGame& g, Side side,
                                                 const std::string& where) {
  if (!list.is_array() || list.empty()) throw ConfigError(where + ": expected a non-empty array of policies");
  std::vector<PolicyPtr> out;
  for (const auto& spec : list) out.push_back(policy_from_spec(spec, g, side));
  return out;
}

/// Game spec kinds: inline, file, random, matching, rps, pomdp, combination_lock, lmdp, sat.
inline MarkovGame game_from_spec(const json& spec, const std::filesystem::path& base, std::uint64_t master_seed,
                                 Experiment* exp = nullptr) {
  const std::string where = "game";
  const auto kind = detail::get<std::string>(spec, "kind", where);
  auto parse_game = [](const json& j) {
    try {
      return game_from_json(j);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  };
  if (kind == "inline") {
    detail::allow_keys(spec, where, {"kind", "spec"});
    return parse_game(spec.at("spec"));
  }
  if (kind == "file") {
    detail::allow_keys(spec, where, {"kind", "path"});
    return parse_game(detail::read_json_file(detail::resolve(base, detail::get<std::string>(spec, "path", where))));
  }
  if (kind == "random") {
    detail::allow_keys(spec, where, {"kind", "num_states", "actions_max", "actions_min", "horizon", "seed"});
    Rng rng(detail::get_or<std::uint64_t>(spec, "seed", derive_seed(master_seed, "game"), where));
    return random_game(detail::get<int>(spec, "num_states", where), detail::get<int>(spec, "actions_max", where),
                       detail::get<int>(spec, "actions_min", where), detail::get<int>(spec, "horizon", where), rng);
  }
  if (kind == "matching") {
    detail::allow_keys(spec, where, {"kind", "horizon"});
    return matching_game(detail::get<int>(spec, "horizon", where));
  }
  if (kind == "rps") {
    detail::allow_keys(spec, where, {"kind"});
    return rock_paper_scissors();
  }
  if (kind == "pomdp" || kind == "combination_lock") {
    Pomdp p;
    if (kind == "pomdp") {
      detail::allow_keys(spec, where, {"kind", "path", "spec"});
      try {
        p = pomdp_from_json(spec.contains("path")
                                ? detail::read_json_file(detail::resolve(base, detail::get<std::string>(spec, "path", where)))
                                : spec.at("spec"));
      } catch (const ParseError& e) {
        throw ConfigError(e.what());
      }
    } else {
      detail::allow_keys(spec, where, {"kind", "horizon", "seed"});
      p = hard_pomdp_combination_lock(detail::get<int>(spec, "horizon", where),
                                      detail::get_or<std::uint64_t>(spec, "seed", derive_seed(master_seed, "game"), where));
    }
    auto red = pomdp_to_mg(p);
    if (exp) exp->reduction_opponents = {red.adversary};
    return red.game;
  }
  if (kind == "lmdp") {
    detail::allow_keys(spec, where, {"kind", "path", "spec"});
    Lmdp l;
    try {
      l = lmdp_from_json(spec.contains("path")
                             ? detail::read_json_file(detail::resolve(base, detail::get<std::string>(spec, "path", where)))
                             : spec.at("spec"));
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
    auto red = lmdp_to_mg(l);
    if (exp) {
      exp->reduction_opponents = red.opponents;
      exp->reduction_weights = MixedWeights{red.q};
    }
    return red.game;
  }
  if (kind == "sat") {
    detail::allow_keys(spec, where, {"kind", "dimacs", "dimacs_text"});
    std::string text;
    if (spec.contains("dimacs_text")) {
      text = detail::get<std::string>(spec, "dimacs_text", where);
    } else {
      text = detail::read_text_file(detail::resolve(base, detail::get<std::string>(spec, "dimacs", where)));
    }
    CnfFormula f;
    try {
      f = parse_dimacs(text);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
    auto red = sat_to_mg(f);
    if (exp) {
      exp->reduction_opponents = red.clause_policies;
      exp->reduction_weights = MixedWeights::uniform(red.clause_policies.size());
    }
    return red.game;
  }
  throw ConfigError("game: unknown kind '" + kind + "'");
}

inline BonusConfig bonus_from_spec(const json& spec, std::uint64_t K, const std::string& where) {
  BonusConfig cfg;
  cfg.c = detail::get_or<double>(spec, "c", 1.0, where);
  cfg.delta = detail::get_or<double>(spec, "delta", 0.05, where);
  cfg.K = K;
  if (!(cfg.c > 0.0)) throw ConfigError(where + ": c must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError(where + ": delta must lie in (0,1)");
  return cfg;
}

/// Learner kinds: opexp3 (baseline "markov_deterministic" or an explicit
/// policy list), adaptive (epsilon defaults to 1/K), fixed.
inline std::unique_ptr<Learner> learner_from_spec(const json& spec, const MarkovGame& g, std::uint64_t K,
                                                  const Guards& guards) {
  const std::string where = "learner";
  const auto kind = detail::get<std::string>(spec, "kind", where);
  if (kind == "opexp3") {
    detail::allow_keys(spec, where, {"kind", "baseline", "c", "delta"});
    std::vector<PolicyPtr> phi;
    const json baseline = spec.value("baseline", json("markov_deterministic"));
    if (baseline.is_string()) {
      if (baseline.get<std::string>() != "markov_deterministic") {
        throw ConfigError("learner.baseline: expected \"markov_deterministic\" or a policy list");
      }
      phi = all_deterministic_markov(Side::kMax, g.horizon(), g.num_states(), g.actions_max(), guards.markov_candidates);
    } else {
      phi = policies_from_spec(baseline, g, Side::kMax, "learner.baseline");
    }
    return std::make_unique<OpExp3>(g, std::move(phi), bonus_from_spec(spec, K, where), guards);
  }
  if (kind == "adaptive") {
    detail::allow_keys(spec, where, {"kind", "epsilon", "c", "delta"});
    const double eps = detail::get_or<double>(spec, "epsilon", 1.0 / static_cast<double>(K), where);
    return std::make_unique<AdaptiveOpExp3>(g, bonus_from_spec(spec, K, where), eps, K, guards);
  }
  if (kind == "fixed") {
    detail::allow_keys(spec, where, {"kind", "policy"});
    return std::make_unique<FixedPolicyLearner>(policy_from_spec(spec.at("policy"), g, Side::kMax));
  }
  throw ConfigError("learner: unknown kind '" + kind + "'");
}

/// Opponent kinds: fixed_markov, finite_class, switcher, cycle,
/// matching_memory, pomdp, lmdp, sat_clauses. The opponent's stream seed is
/// derived from the master seed unless the spec gives one.
inline std::unique_ptr<Opponent> opponent_from_spec(const json& spec, const Experiment& exp, std::uint64_t master_seed) {
  const std::string where = "opponent";
  const MarkovGame& g = exp.game;
  const auto kind = detail::get<std::string>(spec, "kind", where);
  const std::uint64_t seed = detail::get_or<std::uint64_t>(spec, "seed", derive_seed(master_seed, "opponent"), where);
  if (kind == "fixed_markov") {
    detail::allow_keys(spec, where, {"kind", "policy", "seed"});
    return std::make_unique<FixedOpponent>(policy_from_spec(spec.at("policy"), g, Side::kMin));
  }
  if (kind == "finite_class") {
    detail::allow_keys(spec, where, {"kind", "policies", "weights", "seed"});
    auto list = policies_from_spec(spec.at("policies"), g, Side::kMin, "opponent.policies");
    std::optional<MixedWeights> w;
    if (spec.contains("weights")) w = MixedWeights{detail::get<std::vector<double>>(spec, "weights", where)};
    return make_finite_class_sampler(std::move(list), w, seed);
  }
  if (kind == "switcher") {
    detail::allow_keys(spec, where, {"kind", "first", "second", "switch_after", "seed"});
    return std::make_unique<SwitcherOpponent>(policy_from_spec(spec.at("first"), g, Side::kMin),
                                              policy_from_spec(spec.at("second"), g, Side::kMin),
                                              detail::get<std::uint64_t>(spec, "switch_after", where));
  }
  if (kind == "cycle") {
    detail::allow_keys(spec, where, {"kind", "policies", "seed"});
    return std::make_unique<CycleOpponent>(policies_from_spec(spec.at("policies"), g, Side::kMin, "opponent.policies"));
  }
  if (kind == "matching_memory") {
    detail::allow_keys(spec, where, {"kind", "seed"});
    if (g.num_states() != 1 || g.actions_max() != 2 || g.actions_min() != 2) {
      throw ConfigError("opponent: matching_memory needs the matching game");
    }
    return make_matching_memory_adversary(g.horizon(), seed);
  }
  if (kind == "pomdp") {
    detail::allow_keys(spec, where, {"kind", "seed"});
    if (exp.reduction_opponents.size() != 1 || exp.reduction_weights) {
      throw ConfigError("opponent: pomdp needs a pomdp or combination_lock game");
    }
    return std::make_unique<FixedOpponent>(exp.reduction_opponents.front());
  }
  if (kind == "lmdp" || kind == "sat_clauses") {
    detail::allow_keys(spec, where, {"kind", "seed"});
    if (!exp.reduction_weights) throw ConfigError("opponent: " + kind + " needs an lmdp or sat game");
    return make_finite_class_sampler(exp.reduction_opponents, exp.reduction_weights, seed);
  }
  throw ConfigError("opponent: unknown kind '" + kind + "'");
}

/// Top-level config keys: game, learner, opponent, episodes, seed, baseline,
/// checkpoints, general_every_k, nash, record_timing, guards.
inline Experiment build_experiment(const json& cfg, const std::filesystem::path& base, std::uint64_t seed) {
  detail::allow_keys(cfg, "config", {"game", "learner", "opponent", "episodes", "seed", "baseline", "checkpoints",
                                     "general_every_k", "nash", "record_timing", "guards"});
  Experiment exp;
  exp.run.seed = seed;
  exp.run.episodes = detail::get<std::uint64_t>(cfg, "episodes", "config");
  if (exp.run.episodes < 1) throw ConfigError("config: episodes must be at least 1");
  exp.run.record_timing = detail::get_or<bool>(cfg, "record_timing", false, "config");
  Guards guards = Guards::from_env();
  if (cfg.contains("guards")) {
    const auto& gj = cfg.at("guards");
    detail::allow_keys(gj, "guards", {"history_nodes", "cover_points", "markov_candidates", "frontier_entries"});
    guards.history_nodes = detail::get_or<std::size_t>(gj, "history_nodes", guards.history_nodes, "guards");
    guards.cover_points = detail::get_or<std::size_t>(gj, "cover_points", guards.cover_points, "guards");
    guards.markov_candidates = detail::get_or<std::size_t>(gj, "markov_candidates", guards.markov_candidates, "guards");
    guards.frontier_entries = detail::get_or<std::size_t>(gj, "frontier_entries", guards.frontier_entries, "guards");
  }
  exp.run.guards = guards;
  exp.regret.guards = guards;
  exp.game = game_from_spec(cfg.at("game"), base, seed, &exp);
  exp.learner = learner_from_spec(cfg.at("learner"), exp.game, exp.run.episodes, guards);
  exp.opponent = opponent_from_spec(cfg.at("opponent"), exp, seed);

  const auto baseline = detail::get_or<std::vector<std::string>>(cfg, "baseline", {"markov"}, "config");
  exp.regret.markov = false;
  exp.regret.general = false;
  for (const auto& b : baseline) {
    if (b == "markov") {
      exp.regret.markov = true;
    } else if (b == "general") {
      exp.regret.general = true;
    } else {
      throw ConfigError("config.baseline: unknown baseline '" + b + "'");
    }
  }
  exp.regret.extra_checkpoints = detail::get_or<std::vector<std::uint64_t>>(cfg, "checkpoints", {}, "config");
  exp.regret.general_every_k = detail::get_or<bool>(cfg, "general_every_k", false, "config");
  if (detail::get_or<bool>(cfg, "nash", true, "config")) exp.regret.nash = nash_value(exp.game);
  return exp;
}

/// Copy of the config with every file the game spec names inlined, so that
/// a manifest carrying it is reproducible on its own.
inline json self_contained_config(const json& cfg, const std::filesystem::path& base) {
  json out = cfg;
  if (!out.is_object() || !out.contains("game") || !out["game"].is_object()) return out;
  json& game = out["game"];
  const std::string kind = game.value("kind", "");
  if (kind == "file" && game.contains("path")) {
    game = {{"kind", "inline"}, {"spec", detail::read_json_file(detail::resolve(base, game["path"].get<std::string>()))}};
  } else if ((kind == "pomdp" || kind == "lmdp") && game.contains("path")) {
    game = {{"kind", kind}, {"spec", detail::read_json_file(detail::resolve(base, game["path"].get<std::string>()))}};
  } else if (kind == "sat" && game.contains("dimacs")) {
    game = {{"kind", "sat"}, {"dimacs_text", detail::read_text_file(detail::resolve(base, game["dimacs"].get<std::string>()))}};
  }
  return out;
}

inline std::string config_hash(const json& cfg) { return hex64(fnv1a(cfg.dump())); }

inline json make_manifest(const json& cfg, std::uint64_t seed) {
  return {{"format", kManifestFormat},
          {"version", kVersion},
          {"seed", seed},
          {"config_hash", config_hash(cfg)},
          {"config", cfg},
          {"outputs", {"episodes.csv", "regret.csv", "realized.csv"}}};
}

/// A document is either a config or a manifest wrapping one; returns the
/// config and, for manifests, the recorded seed.
inline std::pair<json, std::optional<std::uint64_t>> unwrap_manifest(const json& doc) {
  if (doc.is_object() && doc.contains("format")) {
    if (doc.at("format") != kManifestFormat) throw ConfigError("manifest: unsupported format");
    detail::allow_keys(doc, "manifest", {"format", "version", "seed", "config_hash", "config", "outputs"});
    const json cfg = doc.at("config");
    if (doc.contains("config_hash") && doc.at("config_hash") != config_hash(cfg)) {
      throw ConfigError("manifest: config hash mismatch");
    }
    return {cfg, detail::get<std::uint64_t>(doc, "seed", "manifest")};
  }
  return {doc, std::nullopt};
}

struct ExperimentOutputs {
  RunResult run;
  std::vector<RegretRow> regret;
  json manifest;
};

/// Runs a config and writes episodes.csv, regret.csv, realized.csv and manifest.json into out_dir.
inline ExperimentOutputs execute_experiment(const json& cfg, const std::filesystem::path& base, std::uint64_t seed,
                                            const std::filesystem::path& out_dir) {
  Experiment exp = build_experiment(cfg, base, seed);
  ExperimentOutputs out;
  out.run = run_experiment(exp.game, *exp.learner, *exp.opponent, exp.run);
  out.regret = regret_curves(exp.game, out.run, exp.regret);
  out.manifest = make_manifest(cfg, seed);
  std::filesystem::create_directories(out_dir);
  auto write = [&](const char* name, auto&& fn) {
    std::ofstream f(out_dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (out_dir / name).string());
    fn(f);
  };
  write("episodes.csv", [&](std::ostream& f) { write_episode_csv(f, out.run.records); });
  write("regret.csv", [&](std::ostream& f) { write_regret_csv(f, out.regret); });
  write("realized.csv", [&](std::ostream& f) { write_realized_csv(f, out.regret); });
  write("manifest.json", [&](std::ostream& f) { f << out.manifest.dump(2) << '\n'; });
  return out;
}

}  // namespace mglab

#endif  // MGLAB_CONFIG_HPP
