#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "mglab/mglab.hpp"
#include "oracles.hpp"

using namespace mglab;

TEST(Matching, OnlyTheLastStepPays) {
  MarkovGame g = matching_game(4);
  auto nu = bit_string_policy({1, 0, 1, 1});
  auto match = std::make_shared<MarkovPolicy>(MarkovPolicy::constant(Side::kMax, 4, 1, 2, 1));
  auto miss = std::make_shared<MarkovPolicy>(MarkovPolicy::constant(Side::kMax, 4, 1, 2, 0));
  EXPECT_DOUBLE_EQ(exact_value(g, *match, *nu), 1.0);
  EXPECT_DOUBLE_EQ(exact_value(g, *miss, *nu), 0.0);
  EXPECT_EQ(nu->canonical_id(), "bits-1011");
}

TEST(Matching, RockPaperScissorsIsShiftedZeroSum) {
  MarkovGame g = rock_paper_scissors();
  EXPECT_DOUBLE_EQ(g.reward(0, 0, 1, 0), 1.0);  // paper beats rock
  EXPECT_DOUBLE_EQ(g.reward(0, 0, 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(g.reward(0, 0, 2, 2), 0.5);
  EXPECT_NEAR(nash_value(g), 0.5, 1e-4);
}

TEST(Pomdp, RejectsMalformedModels) {
  Rng rng(1);
  Pomdp p = random_pomdp(2, 2, 2, 2, rng);
  auto j = pomdp_to_json(p);
  EXPECT_NO_THROW(pomdp_from_json(j));
  j["extra"] = 0;
  EXPECT_THROW(pomdp_from_json(j), ParseError);
  Pomdp bad = p;
  bad.emission[0] = 0.5;  // step-0 emission no longer a fixed observation or a distribution
  EXPECT_THROW(pomdp_to_mg(bad), Error);
}

TEST(Pomdp, ReductionPreservesValue) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    Pomdp p = random_pomdp(2, 2, 2, 2, rng);
    auto red = pomdp_to_mg(p);
    const std::uint64_t seed = rng();
    auto pi = detail::random_pomdp_policy(seed);
    // Expected sum of R(o_h) over the POMDP law.
    double expected = 0.0;
    for (const auto& [key, prob] : pomdp_trajectory_law(p, pi))
      for (std::size_t h = 0; h < key.size(); h += 2) expected += prob * p.observation_reward[key[h]];
    auto mu = red.learner_policy(pi, "pi");
    EXPECT_NEAR(exact_value(red.game, *mu, *red.adversary), expected, 1e-12);
    EXPECT_NEAR(oracle::value(red.game, *mu, *red.adversary), expected, 1e-12);
  }
}

TEST(Pomdp, CombinationLockRewardsOnlyTheSpecialSequence) {
  std::vector<int> special;
  Pomdp p = hard_pomdp_combination_lock(3, 7, &special);
  ASSERT_EQ(special.size(), 2u);  // the last action is free
  special.push_back(0);
  EXPECT_EQ(p.num_actions, 4);
  auto red = pomdp_to_mg(p);
  auto open_loop = [&](const std::vector<int>& seq) {
    return red.learner_policy(
        [seq](const std::vector<int>& obs, const std::vector<int>&, std::span<double> out) {
          std::fill(out.begin(), out.end(), 0.0);
          out[static_cast<std::size_t>(seq[obs.size() - 1])] = 1.0;
        },
        "seq");
  };
  const double best = exact_value(red.game, *open_loop(special), *red.adversary);
  EXPECT_GT(best, 0.0);
  std::vector<int> other = special;
  other.front() = (other.front() + 1) % 4;
  EXPECT_LT(exact_value(red.game, *open_loop(other), *red.adversary), best);
}

TEST(Lmdp, ReductionPreservesValueAndRejectsNonBinaryRewards) {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    Lmdp l = random_lmdp(2, 2, 2, 2, rng);
    auto red = lmdp_to_mg(l);
    auto pi = detail::random_lmdp_policy(rng());
    double expected = 0.0;
    for (const auto& [key, prob] : lmdp_trajectory_law(l, pi))
      for (std::size_t h = 0; h + 1 < key.size(); h += 3) expected += prob * key[h + 2];
    auto mu = red.learner_policy(pi, "pi");
    double mixed = 0.0;
    for (std::size_t c = 0; c < red.opponents.size(); ++c) mixed += red.q[c] * exact_value(red.game, *mu, *red.opponents[c]);
    EXPECT_NEAR(mixed, expected, 1e-12);
  }
  Lmdp l = random_lmdp(2, 2, 2, 2, rng);
  l.reward[0][0] = 0.5;
  EXPECT_THROW(lmdp_to_mg(l), ConfigError);
}

TEST(Sat, ParsesDimacsAndRejectsBadInput) {
  auto f = parse_dimacs("c comment\np cnf 3 2\n1 -2 3 0\n-1 2\n3 0\n");
  EXPECT_EQ(f.num_vars, 3);
  ASSERT_EQ(f.clauses.size(), 2u);
  EXPECT_EQ(f.clauses[1][2], 3);
  EXPECT_THROW(parse_dimacs("p cnf x 2\n"), ParseError);
  EXPECT_THROW(parse_dimacs("1 2 3 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 3 1\n1 2 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 3 2\n1 2 3 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 3 1\n1 2 4 0\n"), ParseError);
  EXPECT_THROW(parse_dimacs("p cnf 3 1\n1 2 3\n"), ParseError);
}

TEST(Sat, ThresholdArithmetic) {
  EXPECT_TRUE(sat_threshold_decision(80.0, 100, 2));   // 80 > 75
  EXPECT_FALSE(sat_threshold_decision(75.0, 100, 2));  // strict
  EXPECT_FALSE(sat_threshold_decision(70.0, 100, 2));
}

TEST(Sat, GadgetShape) {
  auto f = parse_dimacs("p cnf 3 2\n1 2 3 0\n-1 -2 -3 0\n");
  auto red = sat_to_mg(f);
  EXPECT_EQ(red.game.num_states(), 5);
  EXPECT_EQ(red.game.horizon(), 3);
  EXPECT_EQ(red.game.actions_max(), 2);
  EXPECT_EQ(red.game.actions_min(), 2);
  EXPECT_TRUE(validate_game(red.game).ok());
}

TEST(Sat, OracleLearnerDecidesSatisfiableFormula) {
  auto f = parse_dimacs("p cnf 1 1\n1 1 1 0\n");
  auto red = sat_to_mg(f);
  FixedPolicyLearner oracle(red.assignment_policy(best_assignment(f)));
  auto d = sat_decision_experiment(red, oracle, 50, 1);
  EXPECT_TRUE(d.satisfiable);
  EXPECT_DOUBLE_EQ(d.total_reward, 50.0);
}

TEST(Sat, UnsatisfiableFormulaIsRejectedByTheOracle) {
  // All four sign patterns over x1, x2: no assignment satisfies more than 3 of 4.
  auto f = parse_dimacs("p cnf 2 4\n1 2 2 0\n-1 2 2 0\n1 -2 -2 0\n-1 -2 -2 0\n");
  auto red = sat_to_mg(f);
  FixedPolicyLearner oracle(red.assignment_policy(best_assignment(f)));
  auto d = sat_decision_experiment(red, oracle, 400, 5);
  EXPECT_NEAR(d.total_reward / 400.0, 0.75, 0.07);
  EXPECT_FALSE(d.satisfiable);
}

TEST(Verify, EverySuitePasses) {
  VerifyOptions opt;
  opt.seed = 123;
  opt.trials = 10;
  for (const auto& r : run_verify_suite("all", opt)) EXPECT_TRUE(r.pass) << r.suite << ": " << r.name << "\n" << r.counterexample;
}

TEST(Verify, NegativeBonusFaultIsCaught) {
  VerifyOptions opt;
  opt.negative_bonus = true;
  auto results = run_verify_suite("optimism", opt);
  ASSERT_EQ(results.size(), 1u);
  EXPECT_FALSE(results[0].pass);
  auto dump = nlohmann::json::parse(results[0].counterexample);
  EXPECT_LT(dump.at("ope").get<double>(), dump.at("exact").get<double>());
}
