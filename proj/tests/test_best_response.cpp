#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mglab/mglab.hpp"
#include "oracles.hpp"

using namespace mglab;

namespace {

std::vector<PolicyPtr> random_opponents(const MarkovGame& g, std::size_t k, Rng& rng) {
  std::vector<PolicyPtr> out;
  for (std::size_t i = 0; i < k; ++i) {
    if (i % 2 == 0) {
      out.push_back(random_markov_policy(Side::kMin, g.horizon(), g.num_states(), g.actions_min(), rng));
    } else {
      out.push_back(std::make_shared<RandomHistoryPolicy>(Side::kMin, HistoryShape::of(g), g.actions_min(), rng()));
    }
  }
  return out;
}

std::vector<double> random_weights(std::size_t k, Rng& rng) {
  std::vector<double> w(k);
  random_distribution(w, rng);
  return w;
}

}  // namespace

TEST(BestResponse, MatchesBruteForceWithoutBonus) {
  Rng rng(101);
  for (int t = 0; t < 25; ++t) {
    MarkovGame g = random_game(1 + t % 2, 2, 2, 1 + t % 2, rng);
    auto opp = random_opponents(g, 1 + t % 3, rng);
    auto w = random_weights(opp.size(), rng);
    const BestResponse br = best_response_to_mixture(g, opp, MixedWeights{w});
    const double ref = oracle::best_mixture_value(g, g.transitions(), std::vector<double>(g.num_cells(), 0.0), opp, w);
    EXPECT_NEAR(br.value, ref, 1e-12);
    double mixed = 0.0;
    for (std::size_t i = 0; i < opp.size(); ++i) {
      const double v = oracle::value(g, *br.policy, *opp[i]);
      EXPECT_NEAR(br.per_opponent[i], v, 1e-12);
      mixed += w[i] * v;
    }
    EXPECT_NEAR(mixed, br.value, 1e-12);
  }
}

// With bonuses large enough for the clip to bind, the mixture objective is
// no longer linear in the continuation values; the frontier path must still
// agree with exhaustive search.
TEST(BestResponse, MatchesBruteForceWhenClipBinds) {
  Rng rng(202);
  int binding = 0;
  for (int t = 0; t < 25; ++t) {
    MarkovGame g = random_game(2, 2, 2, 2, rng);
    std::vector<double> P = g.transitions(), bonus(g.num_cells());
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      random_distribution(std::span<double>(P.data() + c * 2, 2), rng);
      bonus[c] = uniform01(rng) * 1.5;
    }
    binding += clip_can_bind(ModelView(g, P, bonus)) ? 1 : 0;
    auto opp = random_opponents(g, 2 + t % 2, rng);
    auto w = random_weights(opp.size(), rng);
    const BestResponse br = best_response_to_mixture(g, opp, MixedWeights{w}, P, bonus);
    EXPECT_NEAR(br.value, oracle::best_mixture_value(g, P, bonus, opp, w), 1e-12);
    for (std::size_t i = 0; i < opp.size(); ++i) {
      EXPECT_NEAR(br.per_opponent[i], oracle::clipped(g, P, bonus, *br.policy, *opp[i]), 1e-12);
    }
  }
  EXPECT_GT(binding, 10);
}

TEST(BestResponse, SingleMarkovOpponentGivesMarkovOptimum) {
  Rng rng(9);
  MarkovGame g = random_game(2, 2, 2, 3, rng);
  auto nu = random_markov_policy(Side::kMin, 3, 2, 2, rng);
  const std::vector<PolicyPtr> opp{nu};
  const BestResponse br = best_response_to_mixture(g, opp, MixedWeights{{1.0}});
  double best = 0.0;
  for (const auto& mu : all_deterministic_markov(Side::kMax, 3, 2, 2, 1000)) best = std::max(best, oracle::value(g, *mu, *nu));
  EXPECT_NEAR(br.value, best, 1e-12);
}

TEST(BestResponse, RejectsBadInputs) {
  Rng rng(1);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  auto opp = random_opponents(g, 2, rng);
  EXPECT_THROW(best_response_to_mixture(g, opp, MixedWeights{{0.5, 0.6}}), Error);
  EXPECT_THROW(best_response_to_mixture(g, opp, MixedWeights{{1.0}}), Error);
  std::vector<double> bonus(g.num_cells(), 0.0);
  bonus[0] = -0.1;
  EXPECT_THROW(best_response_to_mixture(g, opp, MixedWeights{{0.5, 0.5}}, {}, bonus), Error);
}

TEST(BestResponse, PolicyIdsAreStableAcrossCalls) {
  Rng rng(3);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  auto opp = random_opponents(g, 2, rng);
  auto a = best_response_to_mixture(g, opp, MixedWeights{{0.3, 0.7}});
  auto b = best_response_to_mixture(g, opp, MixedWeights{{0.3, 0.7}});
  EXPECT_EQ(a.policy->canonical_id(), b.policy->canonical_id());
}

TEST(Frontier, EveryPolicyIsWeaklyDominated) {
  Rng rng(44);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  std::vector<double> P = g.transitions(), bonus(g.num_cells(), 0.6);
  auto opp = random_opponents(g, 3, rng);
  MixtureFrontier frontier(ModelView(g, P, bonus), opp);
  oracle::for_each_deterministic_policy(g, [&](const oracle::TablePolicy& mu) {
    std::vector<double> v;
    for (const auto& nu : opp) v.push_back(oracle::clipped(g, P, bonus, mu, *nu));
    bool dominated = false;
    for (std::size_t e = 0; e < frontier.size() && !dominated; ++e) {
      bool all = true;
      for (std::size_t i = 0; i < v.size(); ++i) all = all && frontier.values(e)[i] >= v[i] - 1e-12;
      dominated = all;
    }
    EXPECT_TRUE(dominated);
  });
}

TEST(ObrSet, ImplicitMatchesExplicitScan) {
  Rng rng(55);
  int binding = 0, linear = 0;
  for (int t = 0; t < 12; ++t) {
    MarkovGame g = random_game(2, 2, 2, 2, rng);
    std::vector<double> P = g.transitions(), bonus(g.num_cells());
    for (std::size_t c = 0; c < g.num_cells(); ++c) {
      random_distribution(std::span<double>(P.data() + c * 2, 2), rng);
      bonus[c] = uniform01(rng) * (t < 6 ? 1.0 : 0.02);
    }
    if (t >= 9) {
      // Rewards in [0, 1/2] keep every Q below its cap.
      for (int h = 0; h < 2; ++h)
        for (int s = 0; s < 2; ++s)
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) g.reward(h, s, a, b) *= 0.45;
    }
    const OptimisticModel model(g, P, bonus);
    auto psi = random_opponents(g, 2 + t % 2, rng);
    const double eps = t % 2 ? 0.25 : 0.5;
    auto imp = optimistic_best_response_set(model, psi, eps, {}, CoverTraversal::kImplicit);
    auto exp = optimistic_best_response_set(model, psi, eps, {}, CoverTraversal::kExplicit);
    std::set<std::string> a, b;
    for (const auto& p : imp) a.insert(p->canonical_id());
    for (const auto& p : exp) b.insert(p->canonical_id());
    if (clip_can_bind(model.view())) {
      ++binding;
      EXPECT_EQ(a, b);
    } else {
      // Without binding, the scalar solver may break exact ties differently;
      // compare the achieved mixture values over the cover instead.
      ++linear;
      for (const auto& w : simplex_cover(psi.size(), eps).points) {
        double best_a = -1.0, best_b = -1.0;
        for (const auto& p : imp) {
          auto v = clipped_values(model.view(), *p, psi);
          double s = 0.0;
          for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
          best_a = std::max(best_a, s);
        }
        for (const auto& p : exp) {
          auto v = clipped_values(model.view(), *p, psi);
          double s = 0.0;
          for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
          best_b = std::max(best_b, s);
        }
        EXPECT_NEAR(best_a, best_b, 1e-12);
      }
    }
  }
  EXPECT_GT(binding, 0);
  EXPECT_GT(linear, 0);
}

TEST(ObrSet, ContainsABestResponseForEveryCoverPoint) {
  Rng rng(66);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  const OptimisticModel model(g, g.transitions(), std::vector<double>(g.num_cells(), 0.4));
  auto psi = random_opponents(g, 3, rng);
  auto set = optimistic_best_response_set(model, psi, 0.5);
  for (const auto& w : simplex_cover(3, 0.5).points) {
    const double target = optimistic_mixture_best_response(model, psi, w).value;
    double best = -1.0;
    for (const auto& p : set) {
      auto v = clipped_values(model.view(), *p, psi);
      best = std::max(best, w[0] * v[0] + w[1] * v[1] + w[2] * v[2]);
    }
    EXPECT_NEAR(best, target, 1e-12);
  }
}

TEST(ObrSet, FineCoverStaysTractable) {
  // eps = 1/K with K = 2000 and three opponents: the explicit grid would hold
  // about 7e8 points; the implicit traversal only walks its rows.
  Rng rng(77);
  MarkovGame g = random_game(2, 2, 2, 2, rng);
  const OptimisticModel model(g, g.transitions(), std::vector<double>(g.num_cells(), 0.3));
  auto psi = random_opponents(g, 3, rng);
  auto set = optimistic_best_response_set(model, psi, 1.0 / 2000.0);
  EXPECT_GE(set.size(), 1u);
}
