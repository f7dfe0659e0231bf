#pragma once

// One user with an affine opinion update and a confirmation-biased click
// model, in closed loop with a 2-epsilon-greedy recommender over two
// binary positions.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

#include "recloop/error.hpp"
#include "recloop/rng.hpp"

namespace recloop {

inline constexpr double kWeightSumTolerance = 1e-12;

enum class Position : int { Minus = -1, Plus = +1 };

constexpr double value(Position w) noexcept { return static_cast<double>(static_cast<int>(w)); }
constexpr Position opposite(Position w) noexcept {
  return w == Position::Plus ? Position::Minus : Position::Plus;
}

/// Opinion weights (prejudice, memory, new information), the prejudice
/// itself and the exploration rate. Only obtainable through
/// validate_params, so a held value always satisfies its invariants.
class ModelParams {
 public:
  constexpr double alpha() const noexcept { return alpha_; }
  constexpr double beta() const noexcept { return beta_; }
  constexpr double gamma() const noexcept { return gamma_; }
  constexpr double prejudice() const noexcept { return prejudice_; }
  constexpr double epsilon() const noexcept { return epsilon_; }

  ModelParams with_prejudice(double u) const;
  ModelParams with_epsilon(double eps) const;

  friend ModelParams validate_params(double alpha, double beta, double gamma, double prejudice,
                                     double epsilon);
  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelParams(double a, double b, double g, double u, double e)
      : alpha_(a), beta_(b), gamma_(g), prejudice_(u), epsilon_(e) {}

  double alpha_;
  double beta_;
  double gamma_;
  double prejudice_;
  double epsilon_;
};

/// Rejects, never renormalizes. NaN inputs fail every range check.
inline ModelParams validate_params(double alpha, double beta, double gamma, double prejudice,
                                   double epsilon) {
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0) ||
      !(std::abs(alpha + beta + gamma - 1.0) <= kWeightSumTolerance)) {
    throw Error(ErrorCode::NonSimplexWeights,
                "alpha, beta, gamma must be non-negative and sum to 1 (got " +
                    std::to_string(alpha) + ", " + std::to_string(beta) + ", " +
                    std::to_string(gamma) + ")",
                "weights");
  }
  if (!(prejudice >= -1.0 && prejudice <= 1.0)) {
    throw Error(ErrorCode::OutOfRangePrejudice, "prejudice must lie in [-1, 1]", "prejudice");
  }
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) {
    throw Error(ErrorCode::OutOfRangeEpsilon, "epsilon must lie in [0, 0.5]", "epsilon");
  }
  return ModelParams(alpha, beta, gamma, prejudice, epsilon);
}

inline ModelParams ModelParams::with_prejudice(double u) const {
  return validate_params(alpha_, beta_, gamma_, u, epsilon_);
}

inline ModelParams ModelParams::with_epsilon(double eps) const {
  return validate_params(alpha_, beta_, gamma_, prejudice_, eps);
}

/// x(t) = [rho+, rho-, c+, c-, opinion] at step t. rho counts recommendations
/// per position, c counts the clicks they received.
struct SystemState {
  std::uint64_t t = 0;
  std::uint64_t rho_plus = 0;
  std::uint64_t rho_minus = 0;
  std::uint64_t c_plus = 0;
  std::uint64_t c_minus = 0;
  double opinion = 0.0;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

struct StepOutcome {
  Position position = Position::Plus;
  bool clicked = false;
  double new_opinion = 0.0;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

struct Transition {
  SystemState state;
  StepOutcome outcome;
};

/// Click probability of a user holding `opinion` shown an item at `position`.
constexpr double interest(double opinion, Position position) noexcept {
  return 0.5 + 0.5 * opinion * value(position);
}

constexpr double update_opinion(const ModelParams& p, double opinion, Position position) noexcept {
  return p.alpha() * p.prejudice() + p.beta() * opinion + p.gamma() * value(position);
}

/// Sign of c+/rho+ - c-/rho-, decided on integers: c+ * rho- <=> c- * rho+.
/// Exact on ties. Counts must stay below 2^32 for the products to fit.
inline std::strong_ordering ratio_difference_sign(const SystemState& s) {
  if (s.rho_plus == 0 || s.rho_minus == 0) {
    throw Error(ErrorCode::CountersNotInitialized,
                "both positions must have been recommended at least once");
  }
  return s.c_plus * s.rho_minus <=> s.c_minus * s.rho_plus;
}

/// Modified step function: probability of recommending +1 given sign(Delta).
constexpr double plus_probability(std::strong_ordering delta_sign, double epsilon) noexcept {
  if (delta_sign > 0) return 1.0 - epsilon;
  if (delta_sign < 0) return epsilon;
  return 0.5;
}

/// One uniform draw.
template <Uniform64Generator G>
Position recommend(const SystemState& state, double epsilon, G& rng) {
  const double p_plus = plus_probability(ratio_difference_sign(state), epsilon);
  return uniform01(rng) < p_plus ? Position::Plus : Position::Minus;
}

/// One uniform draw; true with probability exactly `probability`.
template <Uniform64Generator G>
bool sample_click(double probability, G& rng) {
  return uniform01(rng) < probability;
}

namespace detail {

// Opinion update and counter bookkeeping for a realized (position, click).
constexpr Transition advance(const SystemState& s, const ModelParams& p, Position position,
                             bool clicked) noexcept {
  Transition out{s, {position, clicked, update_opinion(p, s.opinion, position)}};
  out.state.t += 1;
  out.state.opinion = out.outcome.new_opinion;
  if (position == Position::Plus) {
    out.state.rho_plus += 1;
    out.state.c_plus += clicked ? 1 : 0;
  } else {
    out.state.rho_minus += 1;
    out.state.c_minus += clicked ? 1 : 0;
  }
  return out;
}

}  // namespace detail

struct Initialization {
  SystemState state;
  std::array<StepOutcome, 2> outcomes;
};

/// Steps t = 0 and t = 1: both positions are shown once in random order,
/// starting from opinion(0) = prejudice. Draw order: the order draw
/// (+1 first when the draw is below 1/2), then the click draw of each step.
template <Uniform64Generator G>
Initialization initialize(const ModelParams& p, G& rng) {
  const Position first = uniform01(rng) < 0.5 ? Position::Plus : Position::Minus;
  SystemState s{};
  s.opinion = p.prejudice();
  Initialization init{};
  std::array<Position, 2> order{first, opposite(first)};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const bool clicked = sample_click(interest(s.opinion, order[k]), rng);
    const Transition tr = detail::advance(s, p, order[k], clicked);
    s = tr.state;
    init.outcomes[k] = tr.outcome;
  }
  init.state = s;
  return init;
}

/// Draw order per step: recommendation, then click. The click is sampled at
/// the pre-step opinion; the opinion moves toward the shown position whether
/// or not it was clicked.
template <Uniform64Generator G>
Transition step(const SystemState& state, const ModelParams& p, G& rng) {
  const Position position = recommend(state, p.epsilon(), rng);
  const bool clicked = sample_click(interest(state.opinion, position), rng);
  return detail::advance(state, p, position, clicked);
}

}  // namespace recloop
