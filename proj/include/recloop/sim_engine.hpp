#pragma once

#include <cstdint>
#include <vector>

#include "recloop/analytics.hpp"
#include "recloop/core_model.hpp"
#include "recloop/rng.hpp"

namespace recloop {

/// Row for time t (1 <= t <= tmax). `position` and `clicked` are the events
/// of step t - 1; every other column is the state or running metric at t.
struct SeriesRow {
  std::uint64_t t = 0;
  Position position = Position::Plus;
  bool clicked = false;
  double opinion = 0.0;
  std::uint64_t rho_plus = 0;
  std::uint64_t rho_minus = 0;
  std::uint64_t c_plus = 0;
  std::uint64_t c_minus = 0;
  double ctr = 0.0;
  double avg_opinion = 0.0;   // mean of x(0..t-1)
  double avg_position = 0.0;  // mean of w(0..t-1)

  friend bool operator==(const SeriesRow&, const SeriesRow&) = default;
};

enum class SeriesMode { Full, MetricsOnly };

struct TrajectoryRecord {
  ModelParams params;
  std::uint64_t seed = 0;
  std::uint64_t tmax = 0;
  std::vector<SeriesRow> series;  // empty in MetricsOnly mode
  SystemState final_state;
  double ctr = 0.0;
  double avg_opinion = 0.0;
  double avg_position = 0.0;

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

inline constexpr std::uint64_t kMaxTmax = std::uint64_t{1} << 32;

/// Initialization followed by tmax - 2 steps, all from one stream seeded
/// with `seed`.
inline TrajectoryRecord run_trajectory(const ModelParams& params, std::uint64_t tmax,
                                       std::uint64_t seed, SeriesMode mode = SeriesMode::Full) {
  if (tmax < 2) throw Error(ErrorCode::TmaxTooSmall, "tmax must be at least 2", "tmax");
  if (tmax > kMaxTmax) throw Error(ErrorCode::InvalidArgument, "tmax must not exceed 2^32", "tmax");

  Rng rng(seed);
  TrajectoryRecord rec{params, seed, tmax, {}, {}, 0.0, 0.0, 0.0};
  if (mode == SeriesMode::Full) rec.series.reserve(static_cast<std::size_t>(tmax));

  double opinion_sum = 0.0;
  std::int64_t position_sum = 0;
  auto record = [&](const SystemState& before, const Transition& tr) {
    opinion_sum += before.opinion;
    position_sum += static_cast<int>(tr.outcome.position);
    if (mode != SeriesMode::Full) return;
    const SystemState& s = tr.state;
    const auto t = static_cast<double>(s.t);
    rec.series.push_back({s.t, tr.outcome.position, tr.outcome.clicked, s.opinion, s.rho_plus,
                          s.rho_minus, s.c_plus, s.c_minus,
                          static_cast<double>(s.c_plus + s.c_minus) / t, opinion_sum / t,
                          static_cast<double>(position_sum) / t});
  };

  const Initialization init = initialize(params, rng);
  SystemState s{};
  s.opinion = params.prejudice();
  for (const StepOutcome& o : init.outcomes) {
    const Transition tr = detail::advance(s, params, o.position, o.clicked);
    record(s, tr);
    s = tr.state;
  }
  while (s.t < tmax) {
    const Transition tr = step(s, params, rng);
    record(s, tr);
    s = tr.state;
  }

  const auto t = static_cast<double>(tmax);
  rec.final_state = s;
  rec.ctr = static_cast<double>(s.c_plus + s.c_minus) / t;
  rec.avg_opinion = opinion_sum / t;
  rec.avg_position = static_cast<double>(position_sum) / t;
  return rec;
}

/// Sign of the time-averaged position; a zero average falls back to the
/// sign of the final click-ratio difference, then to Up.
inline Majority classify_majority(double avg_position, const SystemState& final_state) {
  if (avg_position > 0.0) return Majority::Up;
  if (avg_position < 0.0) return Majority::Down;
  if (final_state.rho_plus > 0 && final_state.rho_minus > 0 &&
      ratio_difference_sign(final_state) < 0) {
    return Majority::Down;
  }
  return Majority::Up;
}

inline Majority classify_majority(const TrajectoryRecord& rec) {
  return classify_majority(rec.avg_position, rec.final_state);
}

}  // namespace recloop
