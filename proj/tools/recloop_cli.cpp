// Command-line front end: one subcommand per run mode.
//
// Exit status: 0 success, 2 parse error (malformed flags or config file),
// 3 validation error, 4 a field required by the mode is missing, 5 I/O
// error, 6 any other library error, 1 unexpected failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recloop/experiments.hpp"
#include "recloop/io.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kParse = 2,
  kValidation = 3,
  kModeFieldMissing = 4,
  kIo = 5,
  kOtherError = 6,
};

int exit_code_for(recloop::ErrorCode code) {
  using recloop::ErrorCode;
  switch (code) {
    case ErrorCode::ParseError: return kParse;
    case ErrorCode::ValidationError:
    case ErrorCode::NonSimplexWeights:
    case ErrorCode::OutOfRangePrejudice:
    case ErrorCode::OutOfRangeEpsilon:
    case ErrorCode::TmaxTooSmall:
    case ErrorCode::MissingBaseline: return kValidation;
    case ErrorCode::ModeFieldMissing: return kModeFieldMissing;
    case ErrorCode::IoError: return kIo;
    default: return kOtherError;
  }
}

struct Flags {
  std::optional<std::string> config;
  recloop::ConfigLayer layer;
  std::vector<double> prejudices;
  std::vector<double> epsilons;
  std::optional<std::string> format;
  bool no_series = false;
};

void add_run_options(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON config file; flags override its values");
  sub.add_option("--alpha", f.layer.alpha, "weight of the prejudice");
  sub.add_option("--beta", f.layer.beta, "weight of the previous opinion");
  sub.add_option("--gamma", f.layer.gamma, "weight of the recommended position");
  sub.add_option("--prejudice", f.layer.prejudice, "prejudice u in [-1, 1]");
  sub.add_option("--epsilon", f.layer.epsilon, "exploration rate in [0, 0.5]");
  sub.add_option("--tmax", f.layer.tmax, "steps per trajectory (>= 2)");
  sub.add_option("--n", f.layer.n, "trajectories per ensemble");
  sub.add_option("--seed", f.layer.seed, "base seed (required for ensemble modes)");
  sub.add_option("--out", f.layer.out, "output path, '-' for stdout");
  sub.add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub.add_flag("--no-series", f.no_series, "drop per-step / per-trajectory rows");
  sub.add_option("--threads", f.layer.threads, "worker threads, 0 = all cores");
  sub.add_option("--prejudices", f.prejudices, "comma-separated prejudice grid")->delimiter(',');
  sub.add_option("--epsilons", f.epsilons, "comma-separated exploration rates")->delimiter(',');
  sub.add_option("--random-points", f.layer.random_points, "random simplex points");
}

void run(const recloop::RunConfig& cfg) {
  using namespace recloop;
  const ExecutionOptions exec{cfg.threads};
  OutputSink sink(cfg.out);
  std::ostream& os = sink.stream();
  switch (cfg.mode) {
    case Mode::Simulate: {
      const auto mode = cfg.series ? SeriesMode::Full : SeriesMode::MetricsOnly;
      const TrajectoryRecord rec = run_trajectory(cfg.model_params(), cfg.tmax, cfg.seed, mode);
      if (cfg.series) {
        emit_trajectory(rec, cfg.format, os);
      } else {
        emit_trajectory_summary(rec, cfg.format, os);
      }
      break;
    }
    case Mode::Ensemble:
      emit_ensemble(run_ensemble(cfg.model_params(), cfg.n, cfg.tmax, cfg.seed, exec), cfg.format,
                    os, cfg.series);
      break;
    case Mode::SweepPrejudice:
      emit_prejudice_sweep(prejudice_sweep(*cfg.alpha, *cfg.beta, *cfg.gamma, *cfg.epsilon,
                                           cfg.prejudices, cfg.n, cfg.tmax, cfg.seed, exec),
                           cfg.format, os, cfg.series);
      break;
    case Mode::SweepEpsilon:
      emit_epsilon_sweep(epsilon_sweep(*cfg.alpha, *cfg.beta, *cfg.gamma, *cfg.prejudice,
                                       cfg.epsilons, cfg.n, cfg.tmax, cfg.seed, exec),
                         cfg.format, os, cfg.series);
      break;
    case Mode::SweepSimplex:
      emit_simplex_sweep(simplex_sweep(*cfg.prejudice, *cfg.epsilon, cfg.n, cfg.tmax, cfg.seed,
                                       cfg.random_points, exec),
                         cfg.format, os);
      break;
    case Mode::Oracle: {
      const ModelParams p = cfg.model_params();
      emit_oracle(p, oracle_report(p), cfg.format, os);
      break;
    }
  }
  sink.close();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop opinion / 2-epsilon-greedy recommender simulator"};
  app.require_subcommand(1);

  Flags flags;
  std::vector<std::pair<CLI::App*, recloop::Mode>> subs;
  for (recloop::Mode m : {recloop::Mode::Simulate, recloop::Mode::Ensemble,
                          recloop::Mode::SweepPrejudice, recloop::Mode::SweepEpsilon,
                          recloop::Mode::SweepSimplex, recloop::Mode::Oracle}) {
    CLI::App* sub = app.add_subcommand(std::string(recloop::to_string(m)));
    add_run_options(*sub, flags);
    subs.emplace_back(sub, m);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    for (const auto& [sub, mode] : subs) {
      if (sub->parsed()) flags.layer.mode = mode;
    }
    if (!flags.prejudices.empty()) flags.layer.prejudices = flags.prejudices;
    if (!flags.epsilons.empty()) flags.layer.epsilons = flags.epsilons;
    if (flags.format) flags.layer.format = recloop::parse_format(*flags.format);
    if (flags.no_series) flags.layer.series = false;

    std::optional<std::filesystem::path> file;
    if (flags.config) file = *flags.config;
    const recloop::RunConfig cfg = recloop::parse_config(file, flags.layer);
    run(cfg);
  } catch (const recloop::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kOk;
}
