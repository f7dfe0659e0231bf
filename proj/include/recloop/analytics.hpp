#pragma once

// Closed-form long-run quantities of the closed loop, conditioned on the
// sign of the click-ratio difference staying positive (Up) or negative
// (Down). All functions are pure.

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "recloop/core_model.hpp"

namespace recloop {

enum class Majority { Up, Down };

constexpr std::string_view to_string(Majority m) noexcept { return m == Majority::Up ? "up" : "down"; }
constexpr double sign_of(Majority m) noexcept { return m == Majority::Up ? 1.0 : -1.0; }

/// A: only Down trajectories are self-consistent, C: only Up, B: both.
enum class Regime { A, B, C };

constexpr std::string_view to_string(Regime r) noexcept {
  switch (r) {
    case Regime::A: return "A";
    case Regime::B: return "B";
    case Regime::C: return "C";
  }
  return "?";
}

namespace detail {

inline void require_positive_mass(const ModelParams& p) {
  if (!(p.alpha() + p.gamma() > 0.0)) {
    throw Error(ErrorCode::DegenerateWeights,
                "alpha + gamma = 0: the opinion stays at the prejudice and has no limit formula");
  }
}

constexpr double exploitation(const ModelParams& p) noexcept { return 1.0 - 2.0 * p.epsilon(); }

}  // namespace detail

/// (alpha u +- gamma (1 - 2 eps)) / (alpha + gamma).
inline double asymptotic_opinion(const ModelParams& p, Majority m) {
  detail::require_positive_mass(p);
  return (p.alpha() * p.prejudice() + sign_of(m) * p.gamma() * detail::exploitation(p)) /
         (p.alpha() + p.gamma());
}

/// Gap between the Up and Down limits; does not involve the prejudice.
inline double discrepancy(const ModelParams& p) {
  detail::require_positive_mass(p);
  return 2.0 * p.gamma() / (p.alpha() + p.gamma()) * detail::exploitation(p);
}

/// Long-run growth rates of the four counters, each divided by t.
struct AsymptoticRates {
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  double c_plus = 0.0;
  double c_minus = 0.0;
};

namespace detail {

// Rates when the opinion settles at `limit` and +1 is shown with
// probability `plus_share`.
constexpr AsymptoticRates rates_at(double plus_share, double limit) noexcept {
  return {plus_share, 1.0 - plus_share, 0.5 * plus_share * (1.0 + limit),
          0.5 * (1.0 - plus_share) * (1.0 - limit)};
}

}  // namespace detail

/// Down is the direct analogue of Up: +1 is shown at rate eps instead of 1 - eps.
inline AsymptoticRates asymptotic_rates(const ModelParams& p, Majority m) {
  const double limit = asymptotic_opinion(p, m);
  const double plus_share = m == Majority::Up ? 1.0 - p.epsilon() : p.epsilon();
  return detail::rates_at(plus_share, limit);
}

inline double asymptotic_ctr(const ModelParams& p, Majority m) {
  return 0.5 + sign_of(m) * 0.5 * detail::exploitation(p) * asymptotic_opinion(p, m);
}

/// ctr(Up) - ctr(Down).
inline double ctr_difference(const ModelParams& p) {
  detail::require_positive_mass(p);
  return p.alpha() / (p.alpha() + p.gamma()) * p.prejudice() * detail::exploitation(p);
}

/// Prejudice magnitude separating the regimes, (gamma / alpha)(1 - 2 eps).
inline double regime_threshold(const ModelParams& p) {
  if (!(p.alpha() > 0.0)) {
    throw Error(ErrorCode::AlphaZero, "alpha = 0: every prejudice lies in regime B");
  }
  return p.gamma() / p.alpha() * detail::exploitation(p);
}

/// Boundary prejudices belong to B.
inline Regime regime(const ModelParams& p) {
  const double threshold = regime_threshold(p);
  if (p.prejudice() < -threshold) return Regime::A;
  if (p.prejudice() > threshold) return Regime::C;
  return Regime::B;
}

/// Unweighted mean of the two asymptotic CTRs at zero prejudice,
/// 1/2 + (1 - 2 eps) discrepancy / 4.
inline double mean_ctr_from_discrepancy(const ModelParams& p) {
  return 0.5 + 0.25 * detail::exploitation(p) * discrepancy(p);
}

/// Shift of the asymptotic opinion relative to the eps = 1/2 recommender.
inline double opinion_distortion(const ModelParams& p, Majority m) {
  detail::require_positive_mass(p);
  return sign_of(m) * p.gamma() / (p.alpha() + p.gamma()) * detail::exploitation(p);
}

/// CTR gained over the eps = 1/2 recommender.
inline double ctr_gain(const ModelParams& p, Majority m) {
  detail::require_positive_mass(p);
  const double mass = p.alpha() + p.gamma();
  const double k = detail::exploitation(p);
  return sign_of(m) * 0.5 * p.alpha() / mass * p.prejudice() * k + 0.5 * p.gamma() / mass * k * k;
}

/// CTR gain as a function of opinion distortion alone; eps has been
/// eliminated, so only alpha, gamma and the prejudice enter.
inline double gain_from_distortion(const ModelParams& p, double distortion) {
  if (!(p.gamma() > 0.0)) {
    throw Error(ErrorCode::GammaZero, "gamma = 0: the opinion distortion is identically zero");
  }
  return 0.5 * (p.alpha() / p.gamma()) * p.prejudice() * distortion +
         0.5 * ((p.alpha() + p.gamma()) / p.gamma()) * distortion * distortion;
}

/// Every closed-form quantity for one parameter set. Degenerate weights do
/// not throw here: they set a flag and carry the frozen-opinion values
/// instead (alpha + gamma = 0 pins the opinion at the prejudice).
struct OracleReport {
  double asymptotic_opinion_up = 0.0;
  double asymptotic_opinion_down = 0.0;
  double discrepancy = 0.0;
  AsymptoticRates rates_up;
  AsymptoticRates rates_down;
  double ctr_up = 0.0;
  double ctr_down = 0.0;
  double ctr_difference = 0.0;
  double mean_ctr = 0.0;
  Regime regime = Regime::B;
  double regime_threshold = 0.0;  // +inf reported as 0 with alpha_zero set
  double opinion_distortion_up = 0.0;
  double opinion_distortion_down = 0.0;
  double ctr_gain_up = 0.0;
  double ctr_gain_down = 0.0;

  bool degenerate_weights = false;  // alpha + gamma = 0
  bool alpha_zero = false;          // regime threshold infinite
  bool gamma_zero = false;          // gain_from_distortion undefined

  using Value = std::variant<double, std::string, bool>;
  /// Flat key/value view, in a fixed order.
  std::vector<std::pair<std::string, Value>> to_key_values() const;
};

inline OracleReport oracle_report(const ModelParams& p) {
  OracleReport r;
  r.degenerate_weights = !(p.alpha() + p.gamma() > 0.0);
  r.alpha_zero = !(p.alpha() > 0.0);
  r.gamma_zero = !(p.gamma() > 0.0);
  const double k = detail::exploitation(p);

  if (r.degenerate_weights) {
    const double u = p.prejudice();
    r.asymptotic_opinion_up = u;
    r.asymptotic_opinion_down = u;
    r.discrepancy = 0.0;
    r.rates_up = detail::rates_at(1.0 - p.epsilon(), u);
    r.rates_down = detail::rates_at(p.epsilon(), u);
    r.ctr_up = 0.5 + 0.5 * k * u;
    r.ctr_down = 0.5 - 0.5 * k * u;
    r.ctr_difference = k * u;
    r.mean_ctr = 0.5;
    r.opinion_distortion_up = 0.0;
    r.opinion_distortion_down = 0.0;
    r.ctr_gain_up = 0.5 * k * u;
    r.ctr_gain_down = -0.5 * k * u;
  } else {
    r.asymptotic_opinion_up = asymptotic_opinion(p, Majority::Up);
    r.asymptotic_opinion_down = asymptotic_opinion(p, Majority::Down);
    r.discrepancy = discrepancy(p);
    r.rates_up = asymptotic_rates(p, Majority::Up);
    r.rates_down = asymptotic_rates(p, Majority::Down);
    r.ctr_up = asymptotic_ctr(p, Majority::Up);
    r.ctr_down = asymptotic_ctr(p, Majority::Down);
    r.ctr_difference = ctr_difference(p);
    r.mean_ctr = mean_ctr_from_discrepancy(p);
    r.opinion_distortion_up = opinion_distortion(p, Majority::Up);
    r.opinion_distortion_down = opinion_distortion(p, Majority::Down);
    r.ctr_gain_up = ctr_gain(p, Majority::Up);
    r.ctr_gain_down = ctr_gain(p, Majority::Down);
  }
  if (!r.alpha_zero) {
    r.regime = regime(p);
    r.regime_threshold = regime_threshold(p);
  }
  return r;
}

inline std::vector<std::pair<std::string, OracleReport::Value>> OracleReport::to_key_values() const {
  return {
      {"asymptotic_opinion_up", asymptotic_opinion_up},
      {"asymptotic_opinion_down", asymptotic_opinion_down},
      {"discrepancy", discrepancy},
      {"rate_rho_plus_up", rates_up.rho_plus},
      {"rate_rho_minus_up", rates_up.rho_minus},
      {"rate_c_plus_up", rates_up.c_plus},
      {"rate_c_minus_up", rates_up.c_minus},
      {"rate_rho_plus_down", rates_down.rho_plus},
      {"rate_rho_minus_down", rates_down.rho_minus},
      {"rate_c_plus_down", rates_down.c_plus},
      {"rate_c_minus_down", rates_down.c_minus},
      {"ctr_up", ctr_up},
      {"ctr_down", ctr_down},
      {"ctr_difference", ctr_difference},
      {"mean_ctr", mean_ctr},
      {"regime", std::string(to_string(regime))},
      {"regime_threshold", regime_threshold},
      {"opinion_distortion_up", opinion_distortion_up},
      {"opinion_distortion_down", opinion_distortion_down},
      {"ctr_gain_up", ctr_gain_up},
      {"ctr_gain_down", ctr_gain_down},
      {"degenerate_weights", degenerate_weights},
      {"alpha_zero", alpha_zero},
      {"gamma_zero", gamma_zero},
  };
}

}  // namespace recloop
