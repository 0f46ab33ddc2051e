// mglab command-line front end.
//
// Exit codes: 0 success, 1 verification failure, 2 config or parse error,
// 3 enumeration guard exceeded, 4 any other runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mglab/mglab.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;
constexpr int kExitRuntime = 4;

namespace fs = std::filesystem;
using nlohmann::json;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string baseline;
  unsigned parallel = 1;
};

int cmd_run(const RunArgs& args) {
  const fs::path config_path(args.config);
  json doc = mglab::detail::read_json_file(config_path);
  auto [cfg, manifest_seed] = mglab::unwrap_manifest(doc);
  const fs::path base = config_path.parent_path();
  cfg = mglab::self_contained_config(cfg, base);
  if (!args.baseline.empty()) {
    if (args.baseline != "markov" && args.baseline != "general") {
      throw mglab::ConfigError("--baseline must be markov or general");
    }
    cfg["baseline"] = json::array({args.baseline});
  }
  std::uint64_t seed = 0;
  if (args.seed) {
    seed = *args.seed;
  } else if (manifest_seed) {
    seed = *manifest_seed;
  } else if (cfg.contains("seed")) {
    seed = mglab::detail::get<std::uint64_t>(cfg, "seed", "config");
  }
  // Fail on schema problems before doing any work.
  mglab::Experiment probe = mglab::build_experiment(cfg, base, seed);
  (void)probe;

  if (args.parallel <= 1) {
    auto out = mglab::execute_experiment(cfg, base, seed, args.out);
    std::cout << "wrote " << out.run.records.size() << " episodes to " << args.out << '\n';
    return kExitOk;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(args.parallel);
  for (unsigned i = 0; i < args.parallel; ++i) {
    workers.emplace_back([&, i] {
      try {
        mglab::execute_experiment(cfg, base, seed + i, fs::path(args.out) / ("seed-" + std::to_string(seed + i)));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::cout << "wrote " << args.parallel << " runs to " << args.out << '\n';
  return kExitOk;
}

struct VerifyArgs {
  std::string suite = "all";
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  bool negative_bonus = false;
  std::vector<std::string> dimacs;
};

int cmd_verify(const VerifyArgs& args) {
  mglab::VerifyOptions opt;
  opt.trials = args.trials;
  opt.seed = args.seed;
  opt.negative_bonus = args.negative_bonus;
  for (const auto& path : args.dimacs) opt.formulas.push_back(mglab::parse_dimacs(mglab::detail::read_text_file(path)));
  const auto results = mglab::run_verify_suite(args.suite, opt);
  return mglab::print_verify_report(std::cout, results) ? kExitOk : kExitVerifyFailed;
}

int cmd_cover(std::size_t k, double eps, const std::string& format) {
  const auto cover = mglab::simplex_cover(k, eps);
  if (format == "json") {
    json points = json::array();
    for (const auto& p : cover.points) points.push_back(p.w);
    std::cout << json{{"k", cover.k}, {"m", cover.m}, {"epsilon", eps}, {"points", points}}.dump() << '\n';
    return kExitOk;
  }
  std::cout << "# k=" << cover.k << " m=" << cover.m << " points=" << cover.points.size() << '\n';
  for (const auto& p : cover.points) {
    for (std::size_t i = 0; i < p.size(); ++i) std::cout << (i ? "," : "") << mglab::format_double(p[i]);
    std::cout << '\n';
  }
  return kExitOk;
}

struct SatArgs {
  std::string dimacs;
  std::string learner = "oracle";
  std::uint64_t episodes = 100;
  std::uint64_t seed = 0;
};

int cmd_sat(const SatArgs& args) {
  const mglab::CnfFormula f = mglab::parse_dimacs(mglab::detail::read_text_file(args.dimacs));
  const mglab::SatReduction red = mglab::sat_to_mg(f);
  std::unique_ptr<mglab::Learner> learner;
  if (args.learner == "oracle") {
    learner = std::make_unique<mglab::FixedPolicyLearner>(red.assignment_policy(mglab::best_assignment(f)));
  } else if (args.learner == "opexp3") {
    learner = std::make_unique<mglab::OpExp3>(red.game, mglab::all_assignment_policies(red, mglab::Guards{}.markov_candidates),
                                              mglab::BonusConfig{1.0, 0.05, args.episodes});
  } else {
    throw mglab::ConfigError("--learner must be oracle or opexp3");
  }
  const auto d = mglab::sat_decision_experiment(red, *learner, args.episodes, args.seed);
  std::cout << (d.satisfiable ? "True" : "False") << '\n'
            << "R/T = " << mglab::format_double(d.total_reward) << "/" << d.episodes
            << " threshold = " << mglab::format_double(d.threshold) << '\n';
  return kExitOk;
}

int cmd_inspect(const std::string& path) {
  const fs::path p(path);
  json doc = mglab::detail::read_json_file(p);
  if (doc.is_object() && doc.contains("transitions")) {
    mglab::MarkovGame g = mglab::game_from_json(doc);
    std::cout << "game: S=" << g.num_states() << " A_max=" << g.actions_max() << " A_min=" << g.actions_min()
              << " H=" << g.horizon() << " s0=" << g.initial_state() << '\n'
              << "nash value: " << mglab::format_double(mglab::nash_value(g)) << '\n';
    return kExitOk;
  }
  auto [cfg, manifest_seed] = mglab::unwrap_manifest(doc);
  const std::uint64_t seed = manifest_seed.value_or(cfg.value("seed", std::uint64_t{0}));
  mglab::Experiment exp = mglab::build_experiment(cfg, p.parent_path(), seed);
  const auto& g = exp.game;
  std::cout << (manifest_seed ? "manifest" : "config") << " hash " << mglab::config_hash(cfg) << " seed " << seed << '\n'
            << "game: S=" << g.num_states() << " A_max=" << g.actions_max() << " A_min=" << g.actions_min()
            << " H=" << g.horizon() << '\n'
            << "learner: " << exp.learner->kind() << "  opponent: " << exp.opponent->kind()
            << "  episodes: " << exp.run.episodes << '\n';
  if (exp.regret.nash) std::cout << "nash value: " << mglab::format_double(*exp.regret.nash) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online learning in Markov games against unknown opponents"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a config or manifest");
  run_cmd->add_option("--config", run.config, "Config or manifest JSON")->required();
  run_cmd->add_option("--seed", run.seed, "Master seed (overrides the config or manifest)");
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--baseline", run.baseline, "markov or general");
  run_cmd->add_option("--parallel", run.parallel, "Run N seed variants concurrently")->check(CLI::PositiveNumber);

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run invariant suites");
  verify_cmd->add_option("--suite", verify.suite, "ope|optimism|cover|pomdp|lmdp|sat|all")
      ->check(CLI::IsMember({"ope", "optimism", "cover", "pomdp", "lmdp", "sat", "all"}));
  verify_cmd->add_option("--trials", verify.trials, "Trials per property (0 = suite default)");
  verify_cmd->add_option("--seed", verify.seed, "Seed");
  verify_cmd->add_flag("--inject-negative-bonus", verify.negative_bonus, "Fault injection for the optimism suite");
  verify_cmd->add_option("--dimacs", verify.dimacs, "Extra DIMACS formulas for the sat suite");

  std::size_t cover_k = 2;
  double cover_eps = 0.5;
  std::string cover_format = "csv";
  auto* cover_cmd = app.add_subcommand("cover", "Print the epsilon-cover grid of the simplex");
  cover_cmd->add_option("--k", cover_k, "Simplex dimension")->check(CLI::PositiveNumber);
  cover_cmd->add_option("--eps", cover_eps, "Cover radius (l1)");
  cover_cmd->add_option("--format", cover_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  SatArgs sat;
  auto* sat_cmd = app.add_subcommand("sat", "Decide a 3-CNF formula through the game reduction");
  sat_cmd->add_option("--dimacs", sat.dimacs, "DIMACS CNF file")->required();
  sat_cmd->add_option("--learner", sat.learner, "oracle or opexp3");
  sat_cmd->add_option("--episodes", sat.episodes, "Episodes T")->check(CLI::PositiveNumber);
  sat_cmd->add_option("--seed", sat.seed, "Seed");

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a game, config or manifest");
  inspect_cmd->add_option("path", inspect_path, "JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*verify_cmd) return cmd_verify(verify);
    if (*cover_cmd) return cmd_cover(cover_k, cover_eps, cover_format);
    if (*sat_cmd) return cmd_sat(sat);
    if (*inspect_cmd) return cmd_inspect(inspect_path);
  } catch (const mglab::GuardExceeded& e) {
    std::cerr << e.what() << '\n';
    return kExitGuard;
  } catch (const mglab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mglab::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
