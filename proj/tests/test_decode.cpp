#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "cvrplab/decode.hpp"
#include "cvrplab/errors.hpp"
#include "cvrplab/neural.hpp"
#include "cvrplab/oracle.hpp"
#include "cvrplab/policy.hpp"
#include "test_util.hpp"

using namespace cvrplab;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kDraws = 10000;

template <class Select>
std::vector<double> frequencies(std::size_t size, Select select) {
  std::vector<double> f(size, 0.0);
  for (int i = 0; i < kDraws; ++i) f[static_cast<std::size_t>(select())] += 1.0 / kDraws;
  return f;
}

DecodeConfig with_strategy(Strategy s, std::uint64_t seed = 0) {
  DecodeConfig c;
  c.strategy = s;
  c.seed = seed;
  return c;
}

// Sum of log p over the steps after the forced start, recomputed from scratch.
double replay_logprob(const Policy& policy, const Instance& inst, const std::vector<int>& tokens, bool smoothed) {
  auto bound = policy.bind(inst);
  DecodeState s = DecodeState::initial(inst);
  apply_action(inst, s, tokens[1]);
  double total = 0.0;
  for (std::size_t k = 2; k < tokens.size(); ++k) {
    const auto p = softmax(bound->step(s, feasible_mask(inst, s)).scores)[static_cast<std::size_t>(tokens[k])];
    total += std::log(smoothed ? p + kBeamSmoothing : p);
    apply_action(inst, s, tokens[k]);
  }
  return total;
}

}  // namespace

TEST(Mask, FreshStateMasksOnlyTheDepot) {
  const Instance inst = testutil::random_instance(6, 1);
  const auto mask = feasible_mask(inst, DecodeState::initial(inst));
  EXPECT_EQ(mask[0], 0);
  for (int c = 1; c <= 6; ++c) EXPECT_EQ(mask[static_cast<std::size_t>(c)], 1);
}

TEST(Mask, EmptyVehicleCanOnlyReturn) {
  const Instance inst("full", {0, 0}, {{1, 0}, {0, 1}, {1, 1}}, {5, 5, 1}, 5);
  DecodeState s = DecodeState::initial(inst);
  apply_action(inst, s, 1);
  EXPECT_EQ(s.remaining_load, 0.0);
  EXPECT_EQ(feasible_mask(inst, s), (std::vector<char>{1, 0, 0, 0}));
  EXPECT_THROW(apply_action(inst, s, 2), PreconditionError);
  apply_action(inst, s, 0);
  EXPECT_EQ(feasible_mask(inst, s), (std::vector<char>{0, 0, 1, 1}));
}

TEST(Mask, TerminalState) {
  const Instance inst("t", {0, 0}, {{1, 0}}, {1}, 5);
  DecodeState s = DecodeState::initial(inst);
  apply_action(inst, s, 1);
  EXPECT_FALSE(s.complete());
  apply_action(inst, s, 0);
  EXPECT_TRUE(s.complete());
  EXPECT_EQ(s.partial, (std::vector<int>{0, 1, 0}));
}

TEST(Strategy, NamesRoundTrip) {
  for (auto s : {Strategy::argmax, Strategy::softmax_sample, Strategy::gumbel_softmax, Strategy::epsilon_greedy,
                 Strategy::beam})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_FALSE(parse_strategy("nucleus"));
}

TEST(SelectArgmax, Examples) {
  const std::vector<double> p{std::log(0.1), std::log(0.7), std::log(0.2)};
  EXPECT_EQ(select_argmax(p), 1);
  EXPECT_EQ(select_argmax(std::vector<double>{0.5, 0.5, 0.5}), 0);
  EXPECT_EQ(select_argmax(std::vector<double>{kNegInf, 0.5, 0.5}), 1);
  EXPECT_THROW(select_argmax(std::vector<double>{kNegInf, kNegInf}), DeadEndError);
}

TEST(SelectGumbel, SmallTemperatureAgreesWithArgmax) {
  Rng rng(1);
  const std::vector<double> z{0.1, 0.4, 0.3, kNegInf};
  const auto f = frequencies(4, [&] { return select_gumbel(z, 1e-4, rng); });
  EXPECT_GT(f[1], 0.999);
  EXPECT_EQ(f[3], 0.0);
  EXPECT_THROW(select_gumbel(z, 0.0, rng), PreconditionError);
}

TEST(SelectGumbel, UnitTemperatureMatchesSoftmax) {
  Rng a(2), b(3);
  const std::vector<double> z{0.3, -1.0, 1.2, kNegInf, 0.0};
  const auto fg = frequencies(5, [&] { return select_gumbel(z, 1.0, a); });
  const auto fs = frequencies(5, [&] { return select_softmax(z, b); });
  double tv = 0;
  for (std::size_t i = 0; i < 5; ++i) tv += 0.5 * std::abs(fg[i] - fs[i]);
  EXPECT_LT(tv, 0.02);
}

TEST(SelectGumbel, LargeTemperatureIsNearlyUniform) {
  Rng rng(4);
  const std::vector<double> z{2.0, kNegInf, 0.0, -2.0};
  const auto f = frequencies(4, [&] { return select_gumbel(z, 1e6, rng); });
  for (std::size_t i : {0u, 2u, 3u}) EXPECT_NEAR(f[i], 1.0 / 3, 0.02);
  EXPECT_EQ(f[1], 0.0);
}

TEST(SelectSoftmax, ClosedFormFrequencies) {
  Rng rng(5);
  const auto uniform = frequencies(3, [&] { return select_softmax(std::vector<double>{0, 0, 0}, rng); });
  for (double f : uniform) EXPECT_NEAR(f, 1.0 / 3, 0.02);
  const auto two = frequencies(2, [&] { return select_softmax(std::vector<double>{std::log(2.0), 0}, rng); });
  EXPECT_NEAR(two[0], 2.0 / 3, 0.02);
  const auto masked = frequencies(3, [&] { return select_softmax(std::vector<double>{0, kNegInf, 1}, rng); });
  EXPECT_EQ(masked[1], 0.0);
  // huge logits stay finite thanks to max subtraction
  EXPECT_EQ(select_softmax(std::vector<double>{1000, kNegInf}, rng), 0);
}

TEST(SelectEpsilonGreedy, ClosedFormFrequencies) {
  Rng rng(6);
  const std::vector<double> z{1.0, 0.0};
  const auto half = frequencies(2, [&] { return select_epsilon_greedy(z, 0.5, rng); });
  EXPECT_NEAR(half[0], 0.75, 0.02);
  const std::vector<double> z3{1.0, kNegInf, 0.0, -1.0};
  const auto all = frequencies(4, [&] { return select_epsilon_greedy(z3, 1.0, rng); });
  for (std::size_t i : {0u, 2u, 3u}) EXPECT_NEAR(all[i], 1.0 / 3, 0.02);
  EXPECT_EQ(all[1], 0.0);
  EXPECT_THROW(select_epsilon_greedy(z, 1.5, rng), PreconditionError);
}

TEST(SelectEpsilonGreedy, ZeroEpsilonIsArgmax) {
  const DistanceHeuristicPolicy policy;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = testutil::tight_instance(15, seed);
    auto eps = with_strategy(Strategy::epsilon_greedy, seed);
    eps.epsilon = 0.0;
    const auto a = pomo_rollout(policy, inst, 15, eps);
    const auto b = pomo_rollout(policy, inst, 15, with_strategy(Strategy::argmax));
    for (std::size_t i = 0; i < 15; ++i) EXPECT_EQ(a.trajectories[i].tokens, b.trajectories[i].tokens);
  }
}

TEST(Rollout, EveryStrategyIsFeasibleOverTenThousandRollouts) {
  const DistanceHeuristicPolicy distance(0.05);
  const NeuralPolicy neural(std::make_shared<const PolicyParams>(PolicyParams::init(testutil::small_shape(), 1)));
  int rollouts = 0;
  for (std::uint64_t seed = 0; rollouts < 10000; ++seed) {
    const Instance inst = testutil::tight_instance(5 + static_cast<int>(seed % 20), seed);
    for (auto s : {Strategy::argmax, Strategy::softmax_sample, Strategy::gumbel_softmax, Strategy::epsilon_greedy}) {
      const Policy& policy = seed % 4 == 0 ? static_cast<const Policy&>(neural) : distance;
      auto cfg = with_strategy(s, seed);
      cfg.epsilon = 0.3;
      for (const auto& t : pomo_rollout(policy, inst, inst.size(), cfg).trajectories) {
        ASSERT_TRUE(check_feasible(inst, t.solution)) << to_string(s);
        ASSERT_EQ(t.tokens.front(), 0);
        ASSERT_EQ(t.tokens.back(), 0);
        ++rollouts;
      }
    }
  }
}

TEST(Rollout, LogprobMatchesRecomputation) {
  const NeuralPolicy policy(std::make_shared<const PolicyParams>(PolicyParams::init(testutil::small_shape(), 2)));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = testutil::tight_instance(8, seed);
    for (const auto& t : pomo_rollout(policy, inst, 8, with_strategy(Strategy::softmax_sample, seed)).trajectories)
      EXPECT_NEAR(t.logprob, replay_logprob(policy, inst, t.tokens, false), 1e-6);
  }
}

TEST(Rollout, FreeStartScoresTheFirstChoice) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = testutil::random_instance(6, 3);
  auto bound = policy.bind(inst);
  Rng rng(0);
  const auto t = rollout(*bound, inst, std::nullopt, DecodeConfig{}, rng);
  EXPECT_EQ(t.start, 0);
  const auto first = softmax(bound->step(DecodeState::initial(inst), feasible_mask(inst, DecodeState::initial(inst))).scores);
  EXPECT_NEAR(t.logprob, std::log(first[static_cast<std::size_t>(t.tokens[1])]) + replay_logprob(policy, inst, t.tokens, false),
              1e-9);
}

TEST(Pomo, SingleStartIsGreedyFromCustomerOne) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = testutil::tight_instance(12, 4);
  const auto r = pomo_rollout(policy, inst, 1, DecodeConfig{});
  ASSERT_EQ(r.trajectories.size(), 1u);
  Rng rng(0);
  const auto plain = rollout(*policy.bind(inst), inst, 1, DecodeConfig{}, rng);
  EXPECT_EQ(r.trajectories[0].tokens, plain.tokens);
  EXPECT_EQ(r.trajectories[0].tokens[1], 1);
}

TEST(Pomo, BestIsTheMinimumAndSizeIsChecked) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = testutil::tight_instance(9, 5);
  const auto r = pomo_rollout(policy, inst, 9, with_strategy(Strategy::softmax_sample, 5));
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    EXPECT_EQ(r.trajectories[i].start, static_cast<int>(i) + 1);
    EXPECT_LE(r.best_trajectory().solution.cost, r.trajectories[i].solution.cost);
  }
  EXPECT_THROW(pomo_rollout(policy, inst, 10, DecodeConfig{}), PreconditionError);
  EXPECT_THROW(pomo_rollout(policy, inst, 0, DecodeConfig{}), PreconditionError);
}

TEST(Pomo, AllStartsArgmaxAgainstOracle) {
  const DistanceHeuristicPolicy policy;
  int optimal = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Instance inst = testutil::tight_instance(3 + static_cast<int>(seed % 5), seed);
    const double opt = testutil::dp_optimum(inst);
    const double best = pomo_rollout(policy, inst, inst.size(), DecodeConfig{}).best_trajectory().solution.cost;
    const double single = pomo_rollout(policy, inst, 1, DecodeConfig{}).best_trajectory().solution.cost;
    EXPECT_LE(best, single);
    EXPECT_GE(best, opt - 1e-9);
    if (best <= opt + 1e-9) ++optimal;
    ++total;
  }
  RecordProperty("optimal_fraction", std::to_string(optimal) + "/" + std::to_string(total));
}

TEST(Beam, WidthOneIsArgmax) {
  const DistanceHeuristicPolicy distance;
  const NeuralPolicy neural(std::make_shared<const PolicyParams>(PolicyParams::init(testutil::small_shape(), 3)));
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Instance inst = testutil::tight_instance(10, seed);
    const Policy& policy = seed % 2 ? static_cast<const Policy&>(neural) : distance;
    const auto beam = beam_search(policy, inst, 10, 1);
    const auto greedy = pomo_rollout(policy, inst, 10, DecodeConfig{});
    ASSERT_EQ(beam.beams.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(beam.beams[i].tokens, greedy.trajectories[i].tokens);
  }
}

TEST(Beam, ScoreIsSmoothedLogprobAfterStart) {
  const NeuralPolicy policy(std::make_shared<const PolicyParams>(PolicyParams::init(testutil::small_shape(), 4)));
  const Instance inst = testutil::tight_instance(7, 6);
  for (const auto& b : beam_search(policy, inst, 7, 3).beams) {
    EXPECT_TRUE(check_feasible(inst, b.solution));
    EXPECT_NEAR(b.logprob, replay_logprob(policy, inst, b.tokens, true), 1e-6);
  }
}

TEST(Beam, SaturatingWidthFindsEnumeratedMaximum) {
  const NeuralPolicy policy(std::make_shared<const PolicyParams>(PolicyParams::init(testutil::small_shape(), 5)));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = testutil::tight_instance(4 + static_cast<int>(seed % 2), seed);
    const auto all = enumerate_trajectories(policy, inst);
    const auto beam = beam_search(policy, inst, inst.size(), static_cast<int>(all.size()));
    for (int s = 1; s <= inst.size(); ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& t : all)
        if (t.tokens[1] == s) best = std::max(best, t.logprob_after_start);
      double found = -std::numeric_limits<double>::infinity();
      for (const auto& b : beam.beams)
        if (b.start == s) found = std::max(found, b.logprob);
      EXPECT_NEAR(found, best, 1e-9);
    }
  }
}

TEST(Beam, MaxLogprobIsMonotoneInWidth) {
  const DistanceHeuristicPolicy policy(0.2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = testutil::tight_instance(6, seed);
    const auto all = enumerate_trajectories(policy, inst);
    double previous = -std::numeric_limits<double>::infinity();
    for (int width : {1, 2, 4, 8, static_cast<int>(all.size())}) {
      const auto r = beam_search(policy, inst, 1, width);
      const double best = r.beams[r.max_logprob].logprob;
      EXPECT_GE(best, previous - 1e-12) << "seed " << seed << " width " << width;
      previous = best;
    }
  }
}

TEST(Beam, DecodeDispatchReturnsBestPerStart) {
  const DistanceHeuristicPolicy policy;
  const Instance inst = testutil::tight_instance(8, 7);
  auto cfg = with_strategy(Strategy::beam);
  cfg.pomo_size = 8;
  cfg.beam_size = 3;
  const auto r = decode(policy, inst, cfg);
  ASSERT_EQ(r.trajectories.size(), 8u);
  EXPECT_EQ(r.best_trajectory().solution.cost, beam_search(policy, inst, 8, 3).best_trajectory().solution.cost);
  EXPECT_THROW(beam_search(policy, inst, 8, 0), PreconditionError);
}
