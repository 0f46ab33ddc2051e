#include <gtest/gtest.h>

#include <cmath>

#include "mglab/mglab.hpp"
#include "oracles.hpp"

using namespace mglab;

TEST(Counters, EmpiricalRowsAndUniformFallback) {
  MarkovGame g(3, 1, 1, 1, 0);
  Counters c(g);
  auto row = empirical_transition(c, 0, 0, {0, 0});
  for (double p : row) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  c.record(0, 0, {0, 0}, 2);
  c.record(0, 0, {0, 0}, 2);
  c.record(0, 0, {0, 0}, 1);
  row = empirical_transition(c, 0, 0, {0, 0});
  EXPECT_DOUBLE_EQ(row[0], 0.0);
  EXPECT_DOUBLE_EQ(row[1], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(row[2], 2.0 / 3.0);
  EXPECT_EQ(c.visits(0, 0, 0, 0), 3u);
}

TEST(Counters, UpdateRejectsWrongLength) {
  MarkovGame g(2, 1, 1, 2, 0);
  Counters c(g);
  Trajectory t;
  t.states = {0, 1};
  t.actions = {{0, 0}};
  t.rewards = {0.0};
  EXPECT_THROW(c.update(t), Error);
}

TEST(Counters, JsonRoundTrip) {
  Rng rng(1);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  Counters c(g);
  auto mu = random_markov_policy(Side::kMax, 2, 2, 2, rng);
  auto nu = random_markov_policy(Side::kMin, 2, 2, 2, rng);
  for (int i = 0; i < 20; ++i) c.update(sample_episode(g, *mu, *nu, rng));
  Counters back = Counters::from_json(c.to_json());
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.fingerprint(), c.fingerprint());
}

TEST(Bonus, MatchesFormulaAndDecreases) {
  MarkovGame g(3, 2, 2, 4, 0);
  BonusConfig cfg{1.0, 0.05, 1000};
  const double iota = std::log(3.0 * 4.0 * 4.0 * 1000.0 / 0.05);
  EXPECT_NEAR(cfg.iota(g), iota, 1e-12);
  EXPECT_NEAR(bonus(0, g, cfg), std::sqrt(16.0 * 3.0 * iota), 1e-12);
  EXPECT_NEAR(bonus(1, g, cfg), std::sqrt(16.0 * 3.0 * iota), 1e-12);
  EXPECT_NEAR(bonus(9, g, cfg), std::sqrt(16.0 * 3.0 * iota / 9.0), 1e-12);
  for (std::uint64_t n = 1; n < 100; ++n) EXPECT_GT(bonus(n, g, cfg), bonus(n + 1, g, cfg));
}

// With i.i.d. draws from P, |P-hat - P|_1 <= beta(n)/H for every cell in at
// least 1 - 2 delta of the trials.
TEST(Bonus, ConcentrationHoldsStatistically) {
  Rng rng(2024);
  MarkovGame g = random_game(3, 2, 2, 2, rng);
  const BonusConfig cfg{1.0, 0.05, 100};
  const int S = g.num_states();
  int good = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    bool all = true;
    for (std::size_t cell = 0; cell < g.num_cells(); ++cell) {
      const std::uint64_t n = 1 + rng() % 50;
      std::span<const double> P(g.transitions().data() + cell * S, static_cast<std::size_t>(S));
      std::vector<double> counts(static_cast<std::size_t>(S), 0.0);
      for (std::uint64_t i = 0; i < n; ++i) counts[sample_index(P, rng)] += 1.0;
      double l1 = 0.0;
      for (int t = 0; t < S; ++t) l1 += std::abs(counts[t] / static_cast<double>(n) - P[t]);
      all = all && l1 <= bonus(n, g, cfg) / g.horizon();
    }
    good += all ? 1 : 0;
  }
  EXPECT_GE(good, static_cast<int>(1000 * (1.0 - 2 * cfg.delta)));
}

TEST(Doubling, FiresWhenAVisitedCellDoubles) {
  MarkovGame g(1, 1, 1, 1, 0);
  Counters lazy(g), N(g);
  Trajectory t;
  t.states = {0, 0};
  t.actions = {{0, 0}};
  t.rewards = {0.0};
  N.update(t);
  EXPECT_TRUE(doubling_check(N, lazy, t));  // 1 >= 2*0
  lazy = N;
  N.update(t);
  EXPECT_TRUE(doubling_check(N, lazy, t));  // 2 >= 2*1
  lazy = N;
  N.update(t);
  EXPECT_FALSE(doubling_check(N, lazy, t));  // 3 < 4
}

TEST(Ope, EqualsExactValueUnderTrueModel) {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    MarkovGame g = random_game(1 + t % 3, 2, 2, 1 + t % 3, rng);
    Counters c(g);
    // Counts proportional to P on a fine grid are not exact; inject P directly instead.
    const OptimisticModel model(g, g.transitions(), {});
    RandomHistoryPolicy mu(Side::kMax, HistoryShape::of(g), 2, rng());
    auto nu = random_markov_policy(Side::kMin, g.horizon(), g.num_states(), 2, rng);
    EXPECT_NEAR(ope_evaluate(model, mu, *nu), oracle::value(g, mu, *nu), 1e-12);
  }
}

TEST(Ope, InjectedCountersGiveExactModel) {
  // Rows with dyadic probabilities are reproduced exactly by integer counts.
  MarkovGame g(2, 1, 1, 2, 0);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 2; ++s) {
      auto row = g.transition_row(h, s, 0, 0);
      row[0] = 0.25;
      row[1] = 0.75;
      g.reward(h, s, 0, 0) = s == 0 ? 0.2 : 0.9;
    }
  Counters c(g);
  for (int h = 0; h < 2; ++h)
    for (int s = 0; s < 2; ++s) {
      const std::uint64_t counts[] = {1, 3};
      c.set(h, s, 0, 0, counts);
    }
  EXPECT_EQ(c.empirical_transitions(), g.transitions());
  const OptimisticModel model(g, c.empirical_transitions(), {});
  auto mu = std::make_shared<MarkovPolicy>(MarkovPolicy::uniform(Side::kMax, 2, 2, 1));
  auto nu = std::make_shared<MarkovPolicy>(MarkovPolicy::uniform(Side::kMin, 2, 2, 1));
  EXPECT_NEAR(ope_evaluate(model, *mu, *nu), 0.2 + 0.25 * 0.2 + 0.75 * 0.9, 1e-15);
}

TEST(Ope, MatchesClippedOracleWithBonus) {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    MarkovGame g = random_game(2, 2, 2, 3, rng);
    Counters c(g);
    auto mu0 = random_markov_policy(Side::kMax, 3, 2, 2, rng);
    auto nu0 = random_markov_policy(Side::kMin, 3, 2, 2, rng);
    for (int e = 0; e < t; ++e) c.update(sample_episode(g, *mu0, *nu0, rng));
    const BonusConfig cfg{0.05, 0.05, 100};
    const OptimisticModel model(g, c, cfg);
    RandomHistoryPolicy mu(Side::kMax, HistoryShape::of(g), 2, rng());
    const double ref = oracle::clipped(g, model.transitions(), model.bonuses(), mu, *nu0);
    EXPECT_NEAR(ope_evaluate(model, mu, *nu0), ref, 1e-12);
    EXPECT_LE(ope_evaluate(model, mu, *nu0), 3.0 + 1e-12);
  }
}

TEST(Ope, FullBonusSaturatesAtHorizon) {
  Rng rng(4);
  MarkovGame g = random_game(2, 2, 2, 3, rng);
  Counters c(g);
  const OptimisticModel model(g, c, BonusConfig{1.0, 0.05, 10});
  auto mu = random_markov_policy(Side::kMax, 3, 2, 2, rng);
  auto nu = random_markov_policy(Side::kMin, 3, 2, 2, rng);
  EXPECT_DOUBLE_EQ(ope_evaluate(model, *mu, *nu), 3.0);
}

TEST(Ope, TraceRecordsEveryPrefix) {
  Rng rng(6);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  const OptimisticModel model(g, g.transitions(), {});
  RandomHistoryPolicy mu(Side::kMax, HistoryShape::of(g), 2, 1);
  RandomHistoryPolicy nu(Side::kMin, HistoryShape::of(g), 2, 2);
  nlohmann::json trace = nlohmann::json::array();
  const double v = ope_evaluate_general(model, mu, nu, {}, &trace);
  ASSERT_FALSE(trace.empty());
  bool root = false;
  for (const auto& rec : trace)
    if (rec.at("step") == 0) {
      root = true;
      EXPECT_DOUBLE_EQ(rec.at("value").get<double>(), v);
    }
  EXPECT_TRUE(root);
}

TEST(Cover, DenominatorAndSize) {
  EXPECT_EQ(cover_denominator(2, 0.5), 8u);
  EXPECT_EQ(cover_denominator(3, 0.1), 60u);
  EXPECT_EQ(cover_denominator(3, 0.3), 20u);  // 2*3/0.3 is 20 up to rounding
  for (std::size_t k : {1u, 2u, 3u, 4u})
    for (double eps : {1.0, 0.5, 0.25}) {
      const auto cover = simplex_cover(k, eps);
      EXPECT_EQ(static_cast<double>(cover.points.size()), oracle::binomial(cover.m + k - 1, k - 1));
      std::set<std::vector<double>> unique;
      for (const auto& p : cover.points) unique.insert(p.w);
      EXPECT_EQ(unique.size(), cover.points.size());
    }
}

TEST(Cover, GuardIsRaisedNotSilentlyTruncated) {
  Guards guards;
  guards.cover_points = 1000;
  EXPECT_THROW(simplex_cover(4, 0.05, guards), GuardExceeded);
}

TEST(Cover, RoundingDistanceMatchesBruteForce) {
  Rng rng(12);
  for (std::size_t k : {2u, 3u}) {
    const auto cover = simplex_cover(k, 0.5);
    std::vector<double> w(k);
    for (int t = 0; t < 200; ++t) {
      random_distribution(w, rng);
      double best = 10.0;
      for (const auto& p : cover.points) {
        double d = 0.0;
        for (std::size_t i = 0; i < k; ++i) d += std::abs(w[i] - p.w[i]);
        best = std::min(best, d);
      }
      EXPECT_NEAR(distance_to_grid(w, cover.m), best, 1e-12);
      EXPECT_LE(best, 0.5);
    }
  }
}
