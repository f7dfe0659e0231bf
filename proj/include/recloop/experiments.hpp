#pragma once

// Ensemble studies over the closed loop: independent trajectories per
// parameter set, prejudice and exploration-rate sweeps, and sweeps over the
// simplex of opinion weights.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iterator>
#include <optional>
#include <thread>
#include <vector>

#include "recloop/analytics.hpp"
#include "recloop/sim_engine.hpp"

namespace recloop {

struct ExecutionOptions {
  unsigned threads = 0;  // 0 = hardware concurrency
};

namespace detail {

/// Runs fn(i) for i in [0, n) on a pool of threads. Work is handed out by an
/// atomic counter; callers write results by index.
template <class Fn>
void parallel_for(std::size_t n, ExecutionOptions opts, Fn&& fn) {
  unsigned threads = opts.threads != 0 ? opts.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

/// End-of-run values of one ensemble member.
struct TrajectoryFinal {
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
  Majority majority = Majority::Up;
  double avg_opinion = 0.0;
  double avg_position = 0.0;
  double ctr = 0.0;
  SystemState final_state;
};

struct Moments {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
};

template <class Range, class Proj>
Moments moments_of(const Range& items, Proj proj) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& it : items) {
    sum += proj(it);
    ++n;
  }
  if (n == 0) return {};
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& it : items) {
    const double d = proj(it) - mean;
    ss += d * d;
  }
  return {mean, n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0};
}

/// Aggregates over the trajectories sharing one majority.
struct GroupStats {
  std::size_t count = 0;
  Moments avg_opinion;
  Moments ctr;
  AsymptoticRates rates;  // mean of counter / tmax over the group
};

struct EnsembleSummary {
  ModelParams params;
  std::size_t n_trajectories = 0;
  std::uint64_t tmax = 0;
  std::uint64_t base_seed = 0;
  std::vector<TrajectoryFinal> finals;  // index order
  double up_fraction = 0.0;
  Moments avg_opinion;
  Moments ctr;
  std::optional<GroupStats> up;  // absent when no trajectory has that majority
  std::optional<GroupStats> down;
  OracleReport oracle;

  const std::optional<GroupStats>& group(Majority m) const { return m == Majority::Up ? up : down; }
};

inline std::optional<GroupStats> group_stats(const std::vector<TrajectoryFinal>& finals,
                                             Majority m, std::uint64_t tmax) {
  std::vector<TrajectoryFinal> members;
  std::copy_if(finals.begin(), finals.end(), std::back_inserter(members),
               [m](const TrajectoryFinal& f) { return f.majority == m; });
  if (members.empty()) return std::nullopt;
  const auto t = static_cast<double>(tmax);
  GroupStats g;
  g.count = members.size();
  g.avg_opinion = moments_of(members, [](const auto& f) { return f.avg_opinion; });
  g.ctr = moments_of(members, [](const auto& f) { return f.ctr; });
  g.rates.rho_plus = moments_of(members, [t](const auto& f) { return f.final_state.rho_plus / t; }).mean;
  g.rates.rho_minus = moments_of(members, [t](const auto& f) { return f.final_state.rho_minus / t; }).mean;
  g.rates.c_plus = moments_of(members, [t](const auto& f) { return f.final_state.c_plus / t; }).mean;
  g.rates.c_minus = moments_of(members, [t](const auto& f) { return f.final_state.c_minus / t; }).mean;
  return g;
}

/// Trajectory i uses seed derive_seed(base_seed, i).
inline EnsembleSummary run_ensemble(const ModelParams& params, std::size_t n, std::uint64_t tmax,
                                    std::uint64_t base_seed, ExecutionOptions opts = {}) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "an ensemble needs at least one trajectory", "n");
  if (tmax < 2) throw Error(ErrorCode::TmaxTooSmall, "tmax must be at least 2", "tmax");

  EnsembleSummary s{params, n, tmax, base_seed, std::vector<TrajectoryFinal>(n), 0.0, {}, {},
                    std::nullopt, std::nullopt, oracle_report(params)};
  detail::parallel_for(n, opts, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(base_seed, i);
    const TrajectoryRecord rec = run_trajectory(params, tmax, seed, SeriesMode::MetricsOnly);
    s.finals[i] = {i,       seed,        classify_majority(rec), rec.avg_opinion, rec.avg_position,
                   rec.ctr, rec.final_state};
  });

  const auto ups = std::count_if(s.finals.begin(), s.finals.end(),
                                 [](const TrajectoryFinal& f) { return f.majority == Majority::Up; });
  s.up_fraction = static_cast<double>(ups) / static_cast<double>(n);
  s.avg_opinion = moments_of(s.finals, [](const auto& f) { return f.avg_opinion; });
  s.ctr = moments_of(s.finals, [](const auto& f) { return f.ctr; });
  s.up = group_stats(s.finals, Majority::Up, tmax);
  s.down = group_stats(s.finals, Majority::Down, tmax);
  return s;
}

/// u in {-1.0, -0.9, ..., 1.0}.
inline std::vector<double> default_prejudice_grid() {
  std::vector<double> grid;
  for (int k = -10; k <= 10; ++k) grid.push_back(k / 10.0);
  return grid;
}

/// Exploration rates of the distortion/gain study; 0.5 is the baseline.
inline std::vector<double> default_epsilon_grid() {
  return {0.001, 0.0025, 0.005, 0.0075, 0.01, 0.025, 0.05, 0.075, 0.1,
          0.15,  0.2,    0.25,  0.3,    0.35, 0.4,   0.45,  0.5};
}

/// One ensemble per prejudice; ensemble i draws from base seed
/// derive_seed(base_seed, i).
inline std::vector<EnsembleSummary> prejudice_sweep(double alpha, double beta, double gamma,
                                                    double epsilon, const std::vector<double>& prejudices,
                                                    std::size_t n, std::uint64_t tmax,
                                                    std::uint64_t base_seed, ExecutionOptions opts = {}) {
  if (prejudices.empty()) {
    throw Error(ErrorCode::InvalidArgument, "prejudice list is empty", "prejudices");
  }
  std::vector<ModelParams> params;
  for (double u : prejudices) params.push_back(validate_params(alpha, beta, gamma, u, epsilon));
  std::vector<EnsembleSummary> out;
  out.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(run_ensemble(params[i], n, tmax, derive_seed(base_seed, i), opts));
  }
  return out;
}

/// Per-trajectory (distortion, gain) relative to the sample averages of the
/// eps = 1/2 ensemble.
struct DistortionGainPoint {
  double epsilon = 0.0;
  std::uint64_t index = 0;
  Majority majority = Majority::Up;
  double distortion = 0.0;
  double gain = 0.0;
  double predicted_gain = 0.0;  // gain_from_distortion(distortion)
};

struct EpsilonRow {
  double epsilon = 0.0;
  EnsembleSummary ensemble;
  double analytic_distortion_up = 0.0;
  double analytic_distortion_down = 0.0;
  double analytic_gain_up = 0.0;
  double analytic_gain_down = 0.0;
};

struct EpsilonSweep {
  double baseline_avg_opinion = 0.0;  // sample mean of avg_opinion at eps = 1/2
  double baseline_ctr = 0.0;          // sample mean of ctr at eps = 1/2
  std::vector<EpsilonRow> rows;
  std::vector<DistortionGainPoint> points;
};

inline EpsilonSweep epsilon_sweep(double alpha, double beta, double gamma, double prejudice,
                                  const std::vector<double>& epsilons, std::size_t n,
                                  std::uint64_t tmax, std::uint64_t base_seed,
                                  ExecutionOptions opts = {}) {
  const auto baseline_it = std::find(epsilons.begin(), epsilons.end(), 0.5);
  if (baseline_it == epsilons.end()) {
    throw Error(ErrorCode::MissingBaseline, "the epsilon list must contain 0.5", "epsilons");
  }
  std::vector<ModelParams> params;
  for (double e : epsilons) params.push_back(validate_params(alpha, beta, gamma, prejudice, e));

  EpsilonSweep sweep;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ModelParams& p = params[i];
    const OracleReport o = oracle_report(p);
    sweep.rows.push_back({p.epsilon(), run_ensemble(p, n, tmax, derive_seed(base_seed, i), opts),
                          o.opinion_distortion_up, o.opinion_distortion_down, o.ctr_gain_up,
                          o.ctr_gain_down});
  }
  const EnsembleSummary& base =
      sweep.rows[static_cast<std::size_t>(baseline_it - epsilons.begin())].ensemble;
  sweep.baseline_avg_opinion = base.avg_opinion.mean;
  sweep.baseline_ctr = base.ctr.mean;

  const bool has_relation = gamma > 0.0;
  for (const EpsilonRow& row : sweep.rows) {
    for (const TrajectoryFinal& f : row.ensemble.finals) {
      const double d = f.avg_opinion - sweep.baseline_avg_opinion;
      sweep.points.push_back({row.epsilon, f.index, f.majority, d, f.ctr - sweep.baseline_ctr,
                              has_relation ? gain_from_distortion(row.ensemble.params, d) : 0.0});
    }
  }
  return sweep;
}

struct SimplexPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// The 66 points of the 2-simplex with coordinates in {0, 0.1, ..., 1}.
inline std::vector<SimplexPoint> simplex_grid() {
  std::vector<SimplexPoint> grid;
  for (int a = 0; a <= 10; ++a) {
    for (int g = 0; g <= 10 - a; ++g) {
      grid.push_back({a / 10.0, (10 - a - g) / 10.0, g / 10.0});
    }
  }
  return grid;
}

/// Uniform on the simplex: three unit exponentials, normalized.
template <Uniform64Generator G>
std::vector<SimplexPoint> sample_simplex(G& rng, std::size_t count) {
  std::vector<SimplexPoint> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    const double e1 = -std::log1p(-uniform01(rng));
    const double e2 = -std::log1p(-uniform01(rng));
    const double e3 = -std::log1p(-uniform01(rng));
    const double total = e1 + e2 + e3;
    if (total > 0.0) pts.push_back({e1 / total, e2 / total, e3 / total});
  }
  return pts;
}

struct SimplexRow {
  SimplexPoint point;
  bool random = false;  // false for grid points
  EnsembleSummary ensemble;
};

inline constexpr std::size_t kSimplexRandomPoints = 50;

/// Grid points first, then the random points. The random points are drawn
/// from stream derive_seed(base_seed, 0); ensemble k uses base seed
/// derive_seed(base_seed, k + 1).
inline std::vector<SimplexRow> simplex_sweep(double prejudice, double epsilon, std::size_t n,
                                             std::uint64_t tmax, std::uint64_t base_seed,
                                             std::size_t random_points = kSimplexRandomPoints,
                                             ExecutionOptions opts = {}) {
  std::vector<SimplexRow> rows;
  Rng point_rng(derive_seed(base_seed, 0));
  std::vector<SimplexPoint> pts = simplex_grid();
  const std::size_t grid_size = pts.size();
  for (const SimplexPoint& pt : sample_simplex(point_rng, random_points)) pts.push_back(pt);

  std::vector<ModelParams> params;
  for (const SimplexPoint& pt : pts) {
    params.push_back(validate_params(pt.alpha, pt.beta, pt.gamma, prejudice, epsilon));
  }
  rows.reserve(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    rows.push_back({pts[k], k >= grid_size,
                    run_ensemble(params[k], n, tmax, derive_seed(base_seed, k + 1), opts)});
  }
  return rows;
}

}  // namespace recloop
