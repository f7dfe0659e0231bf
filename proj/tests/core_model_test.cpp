#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "recloop/core_model.hpp"
#include "support/scripted_rng.hpp"

namespace recloop {
namespace {

using testing::ScriptedRng;

ModelParams base_params() { return validate_params(0.15, 0.70, 0.15, 0.30, 0.05); }

SystemState state(std::uint64_t rp, std::uint64_t cp, std::uint64_t rm, std::uint64_t cm,
                  double x = 0.0) {
  return {rp + rm, rp, rm, cp, cm, x};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(ValidateParams, AcceptsTypicalParameters) {
  const ModelParams p = base_params();
  EXPECT_DOUBLE_EQ(p.alpha(), 0.15);
  EXPECT_DOUBLE_EQ(p.beta(), 0.70);
  EXPECT_DOUBLE_EQ(p.gamma(), 0.15);
  EXPECT_DOUBLE_EQ(p.prejudice(), 0.30);
  EXPECT_DOUBLE_EQ(p.epsilon(), 0.05);
}

TEST(ValidateParams, RejectsBadInput) {
  EXPECT_EQ(code_of([] { validate_params(0.3, 0.3, 0.3, 0.0, 0.05); }),
            ErrorCode::NonSimplexWeights);
  EXPECT_EQ(code_of([] { validate_params(0.15, 0.70, 0.15, 1.5, 0.05); }),
            ErrorCode::OutOfRangePrejudice);
  EXPECT_EQ(code_of([] { validate_params(0.15, 0.70, 0.15, 0.3, 0.7); }),
            ErrorCode::OutOfRangeEpsilon);
  EXPECT_EQ(code_of([] { validate_params(-0.1, 1.0, 0.1, 0.0, 0.05); }),
            ErrorCode::NonSimplexWeights);
  EXPECT_EQ(code_of([] { validate_params(NAN, 0.5, 0.5, 0.0, 0.05); }),
            ErrorCode::NonSimplexWeights);
  EXPECT_EQ(code_of([] { validate_params(0.2, 0.7, 0.1, NAN, 0.05); }),
            ErrorCode::OutOfRangePrejudice);
  EXPECT_EQ(code_of([] { validate_params(0.2, 0.7, 0.1, 0.0, -0.01); }),
            ErrorCode::OutOfRangeEpsilon);
}

TEST(ValidateParams, EdgesAdmitted) {
  EXPECT_NO_THROW(validate_params(0.0, 1.0, 0.0, -1.0, 0.0));
  EXPECT_NO_THROW(validate_params(1.0, 0.0, 0.0, 1.0, 0.5));
  EXPECT_NO_THROW(validate_params(0.2, 0.7, 0.1 + 5e-13, 0.0, 0.05));
  EXPECT_THROW(validate_params(0.2, 0.7, 0.1 + 1e-11, 0.0, 0.05), Error);
}

TEST(ValidateParams, ErrorCarriesField) {
  try {
    validate_params(0.15, 0.70, 0.15, 0.3, 0.7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "epsilon");
  }
}

TEST(Interest, Examples) {
  EXPECT_DOUBLE_EQ(interest(0.5, Position::Plus), 0.75);
  EXPECT_DOUBLE_EQ(interest(0.0, Position::Plus), 0.5);
  EXPECT_DOUBLE_EQ(interest(0.0, Position::Minus), 0.5);
  EXPECT_DOUBLE_EQ(interest(1.0, Position::Plus), 1.0);
  EXPECT_DOUBLE_EQ(interest(-1.0, Position::Plus), 0.0);
  static_assert(interest(1.0, Position::Minus) == 0.0);
}

TEST(UpdateOpinion, Examples) {
  const ModelParams p = base_params();
  EXPECT_NEAR(update_opinion(p, 0.30, Position::Plus), 0.405, 1e-15);
  EXPECT_NEAR(update_opinion(p, 0.30, Position::Minus), 0.105, 1e-15);
  const ModelParams memory = validate_params(0.0, 1.0, 0.0, 0.4, 0.05);
  for (double x : {-1.0, -0.3, 0.0, 0.77, 1.0}) {
    EXPECT_EQ(update_opinion(memory, x, Position::Plus), x);
    EXPECT_EQ(update_opinion(memory, x, Position::Minus), x);
  }
}

TEST(RatioDifferenceSign, Examples) {
  EXPECT_TRUE(ratio_difference_sign(state(4, 3, 2, 1)) > 0);
  EXPECT_TRUE(ratio_difference_sign(state(2, 1, 4, 2)) == 0);
  EXPECT_TRUE(ratio_difference_sign(state(1, 0, 1, 1)) < 0);
}

TEST(RatioDifferenceSign, TieThatFloatsMiss) {
  // 1/3 and 3/9 compare equal, and so do the cross products 1*9 and 3*3.
  EXPECT_TRUE(ratio_difference_sign(state(3, 1, 9, 3)) == 0);
  EXPECT_TRUE(ratio_difference_sign(state(49, 7, 7, 1)) == 0);
}

TEST(RatioDifferenceSign, RequiresBothArms) {
  EXPECT_EQ(code_of([] { ratio_difference_sign(state(0, 0, 2, 1)); }),
            ErrorCode::CountersNotInitialized);
  EXPECT_EQ(code_of([] { ratio_difference_sign(state(2, 1, 0, 0)); }),
            ErrorCode::CountersNotInitialized);
}

TEST(Recommend, StepFunctionValues) {
  EXPECT_DOUBLE_EQ(plus_probability(std::strong_ordering::greater, 0.05), 0.95);
  EXPECT_DOUBLE_EQ(plus_probability(std::strong_ordering::less, 0.05), 0.05);
  EXPECT_DOUBLE_EQ(plus_probability(std::strong_ordering::equal, 0.05), 0.5);
  EXPECT_DOUBLE_EQ(plus_probability(std::strong_ordering::greater, 0.5), 0.5);
}

TEST(Recommend, ThresholdsOnScriptedDraws) {
  const SystemState up = state(4, 3, 2, 1);
  ScriptedRng below({ScriptedRng::for_uniform(0.9499)});
  EXPECT_EQ(recommend(up, 0.05, below), Position::Plus);
  EXPECT_EQ(below.consumed(), 1u);
  ScriptedRng above({ScriptedRng::for_uniform(0.9501)});
  EXPECT_EQ(recommend(up, 0.05, above), Position::Minus);

  const SystemState down = state(1, 0, 1, 1);
  ScriptedRng low({ScriptedRng::for_uniform(0.0499)});
  EXPECT_EQ(recommend(down, 0.05, low), Position::Plus);
  ScriptedRng high({ScriptedRng::for_uniform(0.0501)});
  EXPECT_EQ(recommend(down, 0.05, high), Position::Minus);
}

TEST(Recommend, EmpiricalFrequencies) {
  Rng rng(11);
  constexpr int kDraws = 100000;
  struct Case {
    SystemState s;
    double eps;
    double expected_plus;
  };
  const std::array<Case, 4> cases{{{state(4, 3, 2, 1), 0.05, 0.95},
                                   {state(2, 1, 4, 2), 0.05, 0.5},
                                   {state(1, 0, 1, 1), 0.5, 0.5},
                                   {state(4, 3, 2, 1), 0.5, 0.5}}};
  for (const Case& c : cases) {
    int plus = 0;
    for (int i = 0; i < kDraws; ++i) plus += recommend(c.s, c.eps, rng) == Position::Plus;
    EXPECT_NEAR(plus / double(kDraws), c.expected_plus, 0.005);
  }
}

TEST(SampleClick, CertainAndImpossible) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(sample_click(1.0, rng));
    EXPECT_FALSE(sample_click(0.0, rng));
  }
  // The largest representable draw is still below 1.
  ScriptedRng top({~std::uint64_t{0}});
  EXPECT_TRUE(sample_click(1.0, top));
}

TEST(SampleClick, LawOfLargeNumbers) {
  Rng rng(5);
  constexpr int kDraws = 100000;
  int clicks = 0;
  for (int i = 0; i < kDraws; ++i) clicks += sample_click(0.75, rng);
  EXPECT_NEAR(clicks / double(kDraws), 0.75, 0.005);
}

TEST(Initialize, BothArmsOnce) {
  const ModelParams p = base_params();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Initialization init = initialize(p, rng);
    EXPECT_EQ(init.state.t, 2u);
    EXPECT_EQ(init.state.rho_plus, 1u);
    EXPECT_EQ(init.state.rho_minus, 1u);
    EXPECT_NE(init.outcomes[0].position, init.outcomes[1].position);
  }
}

TEST(Initialize, FrozenOpinion) {
  const ModelParams p = validate_params(0.0, 1.0, 0.0, 0.4, 0.05);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    EXPECT_EQ(initialize(p, rng).state.opinion, 0.4);
  }
}

TEST(Initialize, OpinionAfterBothOrders) {
  // By hand: x1 = 0.045 + 0.21 + 0.15 = 0.405, x2 = 0.045 + 0.2835 - 0.15.
  const ModelParams p = base_params();
  ScriptedRng plus_first({ScriptedRng::for_uniform(0.1), ScriptedRng::for_uniform(0.99),
                          ScriptedRng::for_uniform(0.99)});
  const Initialization a = initialize(p, plus_first);
  EXPECT_EQ(a.outcomes[0].position, Position::Plus);
  EXPECT_NEAR(a.outcomes[0].new_opinion, 0.405, 1e-15);
  EXPECT_NEAR(a.state.opinion, 0.1785, 1e-15);
  EXPECT_EQ(plus_first.consumed(), 3u);

  // x1 = 0.045 + 0.21 - 0.15 = 0.105, x2 = 0.045 + 0.0735 + 0.15.
  ScriptedRng minus_first({ScriptedRng::for_uniform(0.6), ScriptedRng::for_uniform(0.99),
                           ScriptedRng::for_uniform(0.99)});
  const Initialization b = initialize(p, minus_first);
  EXPECT_EQ(b.outcomes[0].position, Position::Minus);
  EXPECT_NEAR(b.state.opinion, 0.2685, 1e-15);
}

TEST(Initialize, ClicksUseOpinionBeforeUpdate) {
  // Interest of +1 at x(0) = 0.3 is 0.65; of -1 at x(1) = 0.405 is 0.2975.
  const ModelParams p = base_params();
  ScriptedRng rng({ScriptedRng::for_uniform(0.1), ScriptedRng::for_uniform(0.6499),
                   ScriptedRng::for_uniform(0.2974)});
  const Initialization init = initialize(p, rng);
  EXPECT_TRUE(init.outcomes[0].clicked);
  EXPECT_TRUE(init.outcomes[1].clicked);
  EXPECT_EQ(init.state.c_plus, 1u);
  EXPECT_EQ(init.state.c_minus, 1u);

  ScriptedRng miss({ScriptedRng::for_uniform(0.1), ScriptedRng::for_uniform(0.6501),
                    ScriptedRng::for_uniform(0.2976)});
  const Initialization none = initialize(p, miss);
  EXPECT_EQ(none.state.c_plus + none.state.c_minus, 0u);
}

TEST(Initialize, OrderIsEquiprobable) {
  const ModelParams p = base_params();
  Rng rng(17);
  constexpr int kRuns = 100000;
  int plus_first = 0;
  for (int i = 0; i < kRuns; ++i) plus_first += initialize(p, rng).outcomes[0].position == Position::Plus;
  EXPECT_NEAR(plus_first / double(kRuns), 0.5, 0.005);
}

TEST(Step, FullyGreedyAlignedUser) {
  const ModelParams p = validate_params(0.0, 0.0, 1.0, 1.0, 0.0);
  const SystemState s = state(4, 3, 2, 1, 1.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Transition tr = step(s, p, rng);
    EXPECT_EQ(tr.outcome.position, Position::Plus);
    EXPECT_TRUE(tr.outcome.clicked);
    EXPECT_EQ(tr.state.rho_plus, 5u);
    EXPECT_EQ(tr.state.c_plus, 4u);
    EXPECT_EQ(tr.state.rho_minus, 2u);
    EXPECT_EQ(tr.state.c_minus, 1u);
  }
}

TEST(Step, ConservesCounters) {
  const ModelParams p = base_params();
  const SystemState s = state(4, 3, 2, 1, 0.2);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Transition tr = step(s, p, rng);
    EXPECT_EQ(tr.state.t, s.t + 1);
    EXPECT_EQ(tr.state.rho_plus + tr.state.rho_minus, s.t + 1);
    EXPECT_LE(tr.state.c_plus, tr.state.rho_plus);
    EXPECT_LE(tr.state.c_minus, tr.state.rho_minus);
  }
}

TEST(Step, OpinionMovesEvenWithoutClick) {
  const ModelParams p = base_params();
  // Plus recommended (0.1 < 0.95), click draw 0.99 misses interest 0.6.
  ScriptedRng rng({ScriptedRng::for_uniform(0.1), ScriptedRng::for_uniform(0.99)});
  const Transition tr = step(state(4, 3, 2, 1, 0.2), p, rng);
  EXPECT_FALSE(tr.outcome.clicked);
  EXPECT_NEAR(tr.state.opinion, 0.045 + 0.14 + 0.15, 1e-15);
  EXPECT_EQ(rng.consumed(), 2u);
}

TEST(Step, FourCaseFrequencies) {
  const ModelParams p = base_params();
  const SystemState s = state(4, 3, 2, 1, 0.2);
  // Independent table: P(+) = 0.95, g(0.2,+1) = 0.6, g(0.2,-1) = 0.4.
  // Cases: (+, click), (+, no click), (-, click), (-, no click).
  const double expected[4] = {0.95 * 0.6, 0.95 * 0.4, 0.05 * 0.4, 0.05 * 0.6};
  int counts[4] = {0, 0, 0, 0};
  Rng rng(23);
  constexpr int kSteps = 100000;
  for (int i = 0; i < kSteps; ++i) {
    const StepOutcome o = step(s, p, rng).outcome;
    const int k = (o.position == Position::Plus ? 0 : 2) + (o.clicked ? 0 : 1);
    ++counts[k];
  }
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(counts[k] / double(kSteps), expected[k], 0.005) << k;
}

TEST(Step, ReplayIsDeterministic) {
  const ModelParams p = base_params();
  Rng a(99), b(99);
  SystemState sa = initialize(p, a).state, sb = initialize(p, b).state;
  for (int i = 0; i < 500; ++i) {
    sa = step(sa, p, a).state;
    sb = step(sb, p, b).state;
  }
  EXPECT_EQ(sa, sb);
}

}  // namespace
}  // namespace recloop
