#pragma once

// Run configuration and serialization.
//
// A configuration is assembled from up to two layers (a JSON file, then
// command-line flags; later layers win) and validated as a whole. Results
// are written as CSV or JSON. Floating-point values in CSV carry 17
// significant digits; JSON numbers use the shortest representation that
// parses back to the same double.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "recloop/analytics.hpp"
#include "recloop/core_model.hpp"
#include "recloop/experiments.hpp"
#include "recloop/sim_engine.hpp"

namespace recloop {

enum class Mode { Simulate, Ensemble, SweepPrejudice, SweepEpsilon, SweepSimplex, Oracle };
enum class OutputFormat { Csv, Json };

constexpr std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::Simulate: return "simulate";
    case Mode::Ensemble: return "ensemble";
    case Mode::SweepPrejudice: return "sweep-prejudice";
    case Mode::SweepEpsilon: return "sweep-epsilon";
    case Mode::SweepSimplex: return "sweep-simplex";
    case Mode::Oracle: return "oracle";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(std::string_view s) {
  for (Mode m : {Mode::Simulate, Mode::Ensemble, Mode::SweepPrejudice, Mode::SweepEpsilon,
                 Mode::SweepSimplex, Mode::Oracle}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  return std::nullopt;
}

/// One source of settings. Every field is optional; unset fields fall
/// through to the previous layer or to the defaults.
struct ConfigLayer {
  std::optional<Mode> mode;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> prejudice;
  std::optional<double> epsilon;
  std::optional<std::uint64_t> tmax;
  std::optional<std::uint64_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> random_points;
  std::optional<unsigned> threads;
  std::optional<std::vector<double>> prejudices;
  std::optional<std::vector<double>> epsilons;
  std::optional<std::string> out;
  std::optional<OutputFormat> format;
  std::optional<bool> series;
};

/// A validated configuration. Model parameters that the mode sweeps over
/// (or does not use) are left unset.
struct RunConfig {
  Mode mode = Mode::Simulate;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::optional<double> prejudice;
  std::optional<double> epsilon;
  std::uint64_t tmax = 1000;
  std::uint64_t n = 1000;
  std::uint64_t seed = 0;
  std::uint64_t random_points = kSimplexRandomPoints;
  unsigned threads = 0;
  std::vector<double> prejudices;
  std::vector<double> epsilons;
  std::string out = "-";
  OutputFormat format = OutputFormat::Csv;
  bool series = true;

  /// All five model parameters; only valid for simulate, ensemble and oracle.
  ModelParams model_params() const {
    return validate_params(*alpha, *beta, *gamma, *prejudice, *epsilon);
  }
};

/// 17 significant digits, locale-independent; enough to recover the double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "bad value for '" + key + "': " + e.what(), key);
  }
}

inline double json_number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, "'" + key + "' must be a number", key);
  return j.get<double>();
}

inline std::uint64_t json_count(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::ParseError, "'" + key + "' must be a non-negative integer", key);
  }
  return j.get<std::uint64_t>();
}

inline std::vector<double> json_numbers(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "'" + key + "' must be an array", key);
  std::vector<double> v;
  for (const auto& x : j) v.push_back(json_number(x, key));
  return v;
}

template <class T>
void overlay(std::optional<T>& dst, const std::optional<T>& src) {
  if (src) dst = src;
}

}  // namespace detail

/// Parses a JSON object of settings. Unknown keys are errors.
inline ConfigLayer parse_config_layer(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");

  ConfigLayer c;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") {
      const auto m = parse_mode(detail::json_get<std::string>(v, key));
      if (!m) throw Error(ErrorCode::ParseError, "unknown mode", key);
      c.mode = m;
    } else if (key == "alpha") {
      c.alpha = detail::json_number(v, key);
    } else if (key == "beta") {
      c.beta = detail::json_number(v, key);
    } else if (key == "gamma") {
      c.gamma = detail::json_number(v, key);
    } else if (key == "prejudice") {
      c.prejudice = detail::json_number(v, key);
    } else if (key == "epsilon") {
      c.epsilon = detail::json_number(v, key);
    } else if (key == "tmax") {
      c.tmax = detail::json_count(v, key);
    } else if (key == "n") {
      c.n = detail::json_count(v, key);
    } else if (key == "seed") {
      c.seed = detail::json_count(v, key);
    } else if (key == "random_points") {
      c.random_points = detail::json_count(v, key);
    } else if (key == "threads") {
      c.threads = static_cast<unsigned>(detail::json_count(v, key));
    } else if (key == "prejudices") {
      c.prejudices = detail::json_numbers(v, key);
    } else if (key == "epsilons") {
      c.epsilons = detail::json_numbers(v, key);
    } else if (key == "out") {
      c.out = detail::json_get<std::string>(v, key);
    } else if (key == "format") {
      const auto f = parse_format(detail::json_get<std::string>(v, key));
      if (!f) throw Error(ErrorCode::ParseError, "format must be csv or json", key);
      c.format = f;
    } else if (key == "series") {
      c.series = detail::json_get<bool>(v, key);
    } else {
      throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'", key);
    }
  }
  return c;
}

namespace detail {

inline void require(bool present, Mode mode, const std::string& field) {
  if (!present) {
    throw Error(ErrorCode::ModeFieldMissing,
                "mode " + std::string(to_string(mode)) + " requires '" + field + "'", field);
  }
}

// Re-raises a parameter error as a ValidationError naming the field.
template <class Fn>
void validate_field(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    throw Error(ErrorCode::ValidationError, e.what(), field);
  }
}

inline void check_range(std::optional<double> v, double lo, double hi, const std::string& field) {
  if (v && !(*v >= lo && *v <= hi)) {
    throw Error(ErrorCode::ValidationError,
                field + " must lie in [" + format_double(lo) + ", " + format_double(hi) + "]",
                field);
  }
}

}  // namespace detail

/// Merges the layers in order and validates the result for its mode.
inline RunConfig resolve_config(const std::vector<ConfigLayer>& layers) {
  ConfigLayer m;
  for (const ConfigLayer& l : layers) {
    detail::overlay(m.mode, l.mode);
    detail::overlay(m.alpha, l.alpha);
    detail::overlay(m.beta, l.beta);
    detail::overlay(m.gamma, l.gamma);
    detail::overlay(m.prejudice, l.prejudice);
    detail::overlay(m.epsilon, l.epsilon);
    detail::overlay(m.tmax, l.tmax);
    detail::overlay(m.n, l.n);
    detail::overlay(m.seed, l.seed);
    detail::overlay(m.random_points, l.random_points);
    detail::overlay(m.threads, l.threads);
    detail::overlay(m.prejudices, l.prejudices);
    detail::overlay(m.epsilons, l.epsilons);
    detail::overlay(m.out, l.out);
    detail::overlay(m.format, l.format);
    detail::overlay(m.series, l.series);
  }
  if (!m.mode) throw Error(ErrorCode::ModeFieldMissing, "no mode given", "mode");

  RunConfig c;
  c.mode = *m.mode;
  const bool needs_weights = c.mode != Mode::SweepSimplex;
  const bool needs_prejudice = c.mode != Mode::SweepPrejudice;
  const bool needs_epsilon = c.mode != Mode::SweepEpsilon;
  const bool needs_seed = c.mode != Mode::Simulate && c.mode != Mode::Oracle;

  if (needs_weights) {
    detail::require(m.alpha.has_value(), c.mode, "alpha");
    detail::require(m.beta.has_value(), c.mode, "beta");
    detail::require(m.gamma.has_value(), c.mode, "gamma");
    c.alpha = m.alpha;
    c.beta = m.beta;
    c.gamma = m.gamma;
  }
  if (needs_prejudice) {
    detail::require(m.prejudice.has_value(), c.mode, "prejudice");
    c.prejudice = m.prejudice;
  }
  if (needs_epsilon) {
    detail::require(m.epsilon.has_value(), c.mode, "epsilon");
    c.epsilon = m.epsilon;
  }
  if (needs_seed) detail::require(m.seed.has_value(), c.mode, "seed");
  if (c.mode == Mode::SweepEpsilon) detail::require(m.epsilons.has_value(), c.mode, "epsilons");

  c.tmax = m.tmax.value_or(c.tmax);
  c.n = m.n.value_or(c.n);
  c.seed = m.seed.value_or(c.seed);
  c.random_points = m.random_points.value_or(c.random_points);
  c.threads = m.threads.value_or(c.threads);
  c.out = m.out.value_or(c.out);
  c.format = m.format.value_or(c.format);
  c.series = m.series.value_or(c.series);
  if (c.mode == Mode::SweepPrejudice) c.prejudices = m.prejudices.value_or(default_prejudice_grid());
  if (c.mode == Mode::SweepEpsilon) c.epsilons = *m.epsilons;

  detail::check_range(c.prejudice, -1.0, 1.0, "prejudice");
  detail::check_range(c.epsilon, 0.0, 0.5, "epsilon");
  if (needs_weights) {
    detail::validate_field("alpha+beta+gamma", [&] {
      validate_params(*c.alpha, *c.beta, *c.gamma, 0.0, 0.0);
    });
  }
  if (c.tmax < 2) throw Error(ErrorCode::ValidationError, "tmax must be at least 2", "tmax");
  if (c.tmax > kMaxTmax) throw Error(ErrorCode::ValidationError, "tmax must not exceed 2^32", "tmax");
  if (c.n < 1) throw Error(ErrorCode::ValidationError, "n must be at least 1", "n");

  if (c.mode == Mode::SweepPrejudice) {
    if (c.prejudices.empty()) throw Error(ErrorCode::ValidationError, "empty list", "prejudices");
    for (double u : c.prejudices) {
      detail::check_range(u, -1.0, 1.0, "prejudices");
    }
  }
  if (c.mode == Mode::SweepEpsilon) {
    if (c.epsilons.empty()) throw Error(ErrorCode::ValidationError, "empty list", "epsilons");
    bool has_baseline = false;
    for (double e : c.epsilons) {
      detail::check_range(e, 0.0, 0.5, "epsilons");
      has_baseline = has_baseline || e == 0.5;
    }
    if (!has_baseline) {
      throw Error(ErrorCode::ValidationError, "epsilons must include the 0.5 baseline", "epsilons");
    }
  }
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string(), path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string(), path.string());
  return ss.str();
}

/// File settings (if any) overridden by flag settings.
inline RunConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const ConfigLayer& flags) {
  std::vector<ConfigLayer> layers;
  if (file) layers.push_back(parse_config_layer(read_file(*file)));
  layers.push_back(flags);
  return resolve_config(layers);
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline void check_stream(const std::ostream& os) {
  if (!os) throw Error(ErrorCode::IoError, "write failed");
}

class CsvRow {
 public:
  CsvRow& operator<<(double v) { return cell(format_double(v)); }
  CsvRow& operator<<(std::uint64_t v) { return cell(std::to_string(v)); }
  CsvRow& operator<<(int v) { return cell(std::to_string(v)); }
  CsvRow& operator<<(bool v) { return cell(v ? "1" : "0"); }
  CsvRow& operator<<(std::string_view v) { return cell(std::string(v)); }
  CsvRow& operator<<(const char* v) { return cell(v); }
  template <class T>
  CsvRow& operator<<(const std::optional<T>& v) {
    return v ? (*this << *v) : cell("");
  }
  std::string str() const { return line_ + "\n"; }

 private:
  CsvRow& cell(const std::string& s) {
    if (!first_) line_ += ',';
    line_ += s;
    first_ = false;
    return *this;
  }
  std::string line_;
  bool first_ = true;
};

inline nlohmann::ordered_json params_json(const ModelParams& p) {
  return {{"alpha", p.alpha()},
          {"beta", p.beta()},
          {"gamma", p.gamma()},
          {"prejudice", p.prejudice()},
          {"epsilon", p.epsilon()}};
}

inline nlohmann::ordered_json state_json(const SystemState& s) {
  return {{"t", s.t},           {"rho_plus", s.rho_plus}, {"rho_minus", s.rho_minus},
          {"c_plus", s.c_plus}, {"c_minus", s.c_minus},   {"opinion", s.opinion}};
}

template <class T>
nlohmann::ordered_json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline void write_json(const nlohmann::ordered_json& j, std::ostream& os) {
  os << j.dump(2) << '\n';
  check_stream(os);
}

}  // namespace detail

inline nlohmann::ordered_json oracle_json(const OracleReport& r) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [key, value] : r.to_key_values()) {
    std::visit([&, k = key](const auto& v) { j[k] = v; }, value);
  }
  return j;
}

inline void emit_oracle(const ModelParams& params, const OracleReport& report, OutputFormat format,
                        std::ostream& os) {
  if (format == OutputFormat::Json) {
    detail::write_json({{"params", detail::params_json(params)}, {"oracle", oracle_json(report)}}, os);
    return;
  }
  os << "key,value\n";
  const nlohmann::ordered_json pj = detail::params_json(params);
  for (const auto& [k, v] : pj.items()) {
    os << (detail::CsvRow{} << k << v.get<double>()).str();
  }
  for (const auto& [key, value] : report.to_key_values()) {
    detail::CsvRow row;
    row << key;
    std::visit([&](const auto& v) { row << v; }, value);
    os << row.str();
  }
  detail::check_stream(os);
}

inline constexpr std::string_view kTrajectoryCsvHeader =
    "t,position,click,opinion,rho_plus,rho_minus,c_plus,c_minus,ctr,avg_opinion,avg_position";

/// One row per time t = 1..tmax. Requires the series to have been retained.
inline void emit_trajectory(const TrajectoryRecord& rec, OutputFormat format, std::ostream& os) {
  if (rec.series.size() != rec.tmax) {
    throw Error(ErrorCode::InvalidArgument, "trajectory was run without series retention");
  }
  if (format == OutputFormat::Json) {
    nlohmann::ordered_json cols = nlohmann::ordered_json::object();
    for (const char* k : {"t", "position", "click", "opinion", "rho_plus", "rho_minus", "c_plus",
                          "c_minus", "ctr", "avg_opinion", "avg_position"}) {
      cols[k] = nlohmann::ordered_json::array();
    }
    for (const SeriesRow& r : rec.series) {
      cols["t"].push_back(r.t);
      cols["position"].push_back(static_cast<int>(r.position));
      cols["click"].push_back(r.clicked ? 1 : 0);
      cols["opinion"].push_back(r.opinion);
      cols["rho_plus"].push_back(r.rho_plus);
      cols["rho_minus"].push_back(r.rho_minus);
      cols["c_plus"].push_back(r.c_plus);
      cols["c_minus"].push_back(r.c_minus);
      cols["ctr"].push_back(r.ctr);
      cols["avg_opinion"].push_back(r.avg_opinion);
      cols["avg_position"].push_back(r.avg_position);
    }
    detail::write_json({{"params", detail::params_json(rec.params)},
                        {"seed", rec.seed},
                        {"tmax", rec.tmax},
                        {"majority", to_string(classify_majority(rec))},
                        {"final_state", detail::state_json(rec.final_state)},
                        {"series", std::move(cols)}},
                       os);
    return;
  }
  os << kTrajectoryCsvHeader << '\n';
  for (const SeriesRow& r : rec.series) {
    os << (detail::CsvRow{} << r.t << static_cast<int>(r.position) << r.clicked << r.opinion
                            << r.rho_plus << r.rho_minus << r.c_plus << r.c_minus << r.ctr
                            << r.avg_opinion << r.avg_position)
              .str();
  }
  detail::check_stream(os);
}

/// End-of-run metrics of one trajectory, for runs without series.
inline void emit_trajectory_summary(const TrajectoryRecord& rec, OutputFormat format,
                                    std::ostream& os) {
  const Majority m = classify_majority(rec);
  const SystemState& s = rec.final_state;
  if (format == OutputFormat::Json) {
    detail::write_json({{"params", detail::params_json(rec.params)},
                        {"seed", rec.seed},
                        {"tmax", rec.tmax},
                        {"majority", to_string(m)},
                        {"ctr", rec.ctr},
                        {"avg_opinion", rec.avg_opinion},
                        {"avg_position", rec.avg_position},
                        {"final_state", detail::state_json(s)}},
                       os);
    return;
  }
  os << "seed,tmax,majority,rho_plus,rho_minus,c_plus,c_minus,opinion,ctr,avg_opinion,avg_position\n";
  os << (detail::CsvRow{} << rec.seed << rec.tmax << to_string(m) << s.rho_plus << s.rho_minus
                          << s.c_plus << s.c_minus << s.opinion << rec.ctr << rec.avg_opinion
                          << rec.avg_position)
            .str();
  detail::check_stream(os);
}

/// Empirical ensemble quantity next to its closed-form counterpart.
struct ComparisonRow {
  std::string quantity;
  std::optional<double> empirical;
  std::optional<OracleReport::Value> oracle;

  std::optional<double> abs_diff() const {
    if (!empirical || !oracle) return std::nullopt;
    if (const double* o = std::get_if<double>(&*oracle)) return std::abs(*empirical - *o);
    return std::nullopt;
  }
};

inline std::vector<ComparisonRow> comparison_rows(const EnsembleSummary& s) {
  const OracleReport& o = s.oracle;
  auto group_value = [&](Majority m, auto proj) -> std::optional<double> {
    const auto& g = s.group(m);
    return g ? std::optional<double>(proj(*g)) : std::nullopt;
  };
  auto count = [&](Majority m) -> double {
    const auto& g = s.group(m);
    return g ? static_cast<double>(g->count) : 0.0;
  };
  const auto z_up = group_value(Majority::Up, [](const GroupStats& g) { return g.avg_opinion.mean; });
  const auto z_down = group_value(Majority::Down, [](const GroupStats& g) { return g.avg_opinion.mean; });
  const auto ctr_up = group_value(Majority::Up, [](const GroupStats& g) { return g.ctr.mean; });
  const auto ctr_down = group_value(Majority::Down, [](const GroupStats& g) { return g.ctr.mean; });
  auto both = [](std::optional<double> a, std::optional<double> b) -> std::optional<double> {
    return a && b ? std::optional<double>(*a - *b) : std::nullopt;
  };

  std::vector<ComparisonRow> rows = {
      {"up_fraction", s.up_fraction, std::nullopt},
      {"count_up", count(Majority::Up), std::nullopt},
      {"count_down", count(Majority::Down), std::nullopt},
      {"mean_avg_opinion", s.avg_opinion.mean, std::nullopt},
      {"mean_ctr", s.ctr.mean, std::nullopt},
      {"avg_opinion_up", z_up, o.asymptotic_opinion_up},
      {"avg_opinion_down", z_down, o.asymptotic_opinion_down},
      {"std_avg_opinion_up", group_value(Majority::Up, [](const GroupStats& g) { return g.avg_opinion.std; }), std::nullopt},
      {"std_avg_opinion_down", group_value(Majority::Down, [](const GroupStats& g) { return g.avg_opinion.std; }), std::nullopt},
      {"discrepancy", both(z_up, z_down), o.discrepancy},
      {"ctr_up", ctr_up, o.ctr_up},
      {"ctr_down", ctr_down, o.ctr_down},
      {"std_ctr_up", group_value(Majority::Up, [](const GroupStats& g) { return g.ctr.std; }), std::nullopt},
      {"std_ctr_down", group_value(Majority::Down, [](const GroupStats& g) { return g.ctr.std; }), std::nullopt},
      {"ctr_difference", both(ctr_up, ctr_down), o.ctr_difference},
      {"mean_ctr_symmetric", both(ctr_up, ctr_down) ? std::optional<double>(0.5 * (*ctr_up + *ctr_down)) : std::nullopt, o.mean_ctr},
      {"rate_rho_plus_up", group_value(Majority::Up, [](const GroupStats& g) { return g.rates.rho_plus; }), o.rates_up.rho_plus},
      {"rate_rho_minus_up", group_value(Majority::Up, [](const GroupStats& g) { return g.rates.rho_minus; }), o.rates_up.rho_minus},
      {"rate_c_plus_up", group_value(Majority::Up, [](const GroupStats& g) { return g.rates.c_plus; }), o.rates_up.c_plus},
      {"rate_c_minus_up", group_value(Majority::Up, [](const GroupStats& g) { return g.rates.c_minus; }), o.rates_up.c_minus},
      {"rate_rho_plus_down", group_value(Majority::Down, [](const GroupStats& g) { return g.rates.rho_plus; }), o.rates_down.rho_plus},
      {"rate_rho_minus_down", group_value(Majority::Down, [](const GroupStats& g) { return g.rates.rho_minus; }), o.rates_down.rho_minus},
      {"rate_c_plus_down", group_value(Majority::Down, [](const GroupStats& g) { return g.rates.c_plus; }), o.rates_down.c_plus},
      {"rate_c_minus_down", group_value(Majority::Down, [](const GroupStats& g) { return g.rates.c_minus; }), o.rates_down.c_minus},
  };
  for (const auto& [key, value] : o.to_key_values()) {
    if (key == "regime" || key == "regime_threshold" || key.starts_with("opinion_distortion") ||
        key.starts_with("ctr_gain") || key == "degenerate_weights" || key == "alpha_zero" ||
        key == "gamma_zero") {
      rows.push_back({key, std::nullopt, value});
    }
  }
  return rows;
}

namespace detail {

inline nlohmann::ordered_json group_json(const std::optional<GroupStats>& g) {
  if (!g) return nullptr;
  return {{"count", g->count},
          {"mean_avg_opinion", g->avg_opinion.mean},
          {"std_avg_opinion", g->avg_opinion.std},
          {"mean_ctr", g->ctr.mean},
          {"std_ctr", g->ctr.std},
          {"rate_rho_plus", g->rates.rho_plus},
          {"rate_rho_minus", g->rates.rho_minus},
          {"rate_c_plus", g->rates.c_plus},
          {"rate_c_minus", g->rates.c_minus}};
}

inline nlohmann::ordered_json oracle_value_json(const std::optional<OracleReport::Value>& v) {
  if (!v) return nullptr;
  return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, *v);
}

inline nlohmann::ordered_json final_json(const TrajectoryFinal& f) {
  return {{"index", f.index},
          {"seed", f.seed},
          {"majority", to_string(f.majority)},
          {"avg_opinion", f.avg_opinion},
          {"avg_position", f.avg_position},
          {"ctr", f.ctr},
          {"final_state", state_json(f.final_state)}};
}

inline void comparison_csv(const std::vector<ComparisonRow>& rows, std::ostream& os) {
  os << "quantity,empirical,oracle,abs_diff\n";
  for (const ComparisonRow& r : rows) {
    CsvRow row;
    row << r.quantity << r.empirical;
    if (r.oracle) {
      std::visit([&](const auto& v) { row << v; }, *r.oracle);
    } else {
      row << "";
    }
    row << r.abs_diff();
    os << row.str();
  }
}

}  // namespace detail

inline nlohmann::ordered_json ensemble_json(const EnsembleSummary& s, bool with_trajectories) {
  nlohmann::ordered_json j = {{"params", detail::params_json(s.params)},
                              {"n", s.n_trajectories},
                              {"tmax", s.tmax},
                              {"base_seed", s.base_seed}};
  if (with_trajectories) {
    j["trajectories"] = nlohmann::ordered_json::array();
    for (const TrajectoryFinal& f : s.finals) j["trajectories"].push_back(detail::final_json(f));
  }
  j["aggregates"] = {{"up_fraction", s.up_fraction},
                     {"mean_avg_opinion", s.avg_opinion.mean},
                     {"std_avg_opinion", s.avg_opinion.std},
                     {"mean_ctr", s.ctr.mean},
                     {"std_ctr", s.ctr.std},
                     {"up", detail::group_json(s.up)},
                     {"down", detail::group_json(s.down)}};
  j["oracle"] = oracle_json(s.oracle);
  j["comparison"] = nlohmann::ordered_json::array();
  for (const ComparisonRow& r : comparison_rows(s)) {
    j["comparison"].push_back({{"quantity", r.quantity},
                               {"empirical", detail::opt_json(r.empirical)},
                               {"oracle", detail::oracle_value_json(r.oracle)},
                               {"abs_diff", detail::opt_json(r.abs_diff())}});
  }
  return j;
}

inline constexpr std::string_view kEnsembleCsvHeader =
    "index,seed,majority,avg_opinion,avg_position,ctr,rho_plus,rho_minus,c_plus,c_minus";

/// CSV layout: per-trajectory table, a blank line, then the comparison
/// table (quantity, empirical, oracle, abs_diff).
inline void emit_ensemble(const EnsembleSummary& s, OutputFormat format, std::ostream& os,
                          bool with_trajectories = true) {
  if (format == OutputFormat::Json) {
    detail::write_json(ensemble_json(s, with_trajectories), os);
    return;
  }
  if (with_trajectories) {
    os << kEnsembleCsvHeader << '\n';
    for (const TrajectoryFinal& f : s.finals) {
      const SystemState& st = f.final_state;
      os << (detail::CsvRow{} << f.index << f.seed << to_string(f.majority) << f.avg_opinion
                              << f.avg_position << f.ctr << st.rho_plus << st.rho_minus
                              << st.c_plus << st.c_minus)
                .str();
    }
    os << '\n';
  }
  detail::comparison_csv(comparison_rows(s), os);
  detail::check_stream(os);
}

inline void emit_prejudice_sweep(const std::vector<EnsembleSummary>& sweep, OutputFormat format,
                                 std::ostream& os, bool with_trajectories = true) {
  if (format == OutputFormat::Json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const EnsembleSummary& s : sweep) j.push_back(ensemble_json(s, with_trajectories));
    detail::write_json({{"sweep", "prejudice"}, {"ensembles", std::move(j)}}, os);
    return;
  }
  if (with_trajectories) {
    os << "prejudice,index,seed,majority,avg_opinion,avg_position,ctr\n";
    for (const EnsembleSummary& s : sweep) {
      for (const TrajectoryFinal& f : s.finals) {
        os << (detail::CsvRow{} << s.params.prejudice() << f.index << f.seed << to_string(f.majority)
                                << f.avg_opinion << f.avg_position << f.ctr)
                  .str();
      }
    }
    os << '\n';
  }
  os << "prejudice,n,up_fraction,count_up,count_down,mean_avg_opinion_up,std_avg_opinion_up,"
        "mean_avg_opinion_down,std_avg_opinion_down,mean_ctr_up,mean_ctr_down,mean_ctr,"
        "oracle_opinion_up,oracle_opinion_down,oracle_ctr_up,oracle_ctr_down,regime\n";
  for (const EnsembleSummary& s : sweep) {
    auto field = [](const std::optional<GroupStats>& g, auto proj) {
      return g ? std::optional<double>(proj(*g)) : std::nullopt;
    };
    const auto mean_z = [](const GroupStats& g) { return g.avg_opinion.mean; };
    const auto std_z = [](const GroupStats& g) { return g.avg_opinion.std; };
    const auto mean_c = [](const GroupStats& g) { return g.ctr.mean; };
    os << (detail::CsvRow{} << s.params.prejudice() << std::uint64_t{s.n_trajectories}
                            << s.up_fraction << std::uint64_t{s.up ? s.up->count : 0}
                            << std::uint64_t{s.down ? s.down->count : 0} << field(s.up, mean_z)
                            << field(s.up, std_z) << field(s.down, mean_z) << field(s.down, std_z)
                            << field(s.up, mean_c) << field(s.down, mean_c) << s.ctr.mean
                            << s.oracle.asymptotic_opinion_up << s.oracle.asymptotic_opinion_down
                            << s.oracle.ctr_up << s.oracle.ctr_down << to_string(s.oracle.regime))
              .str();
  }
  detail::check_stream(os);
}

inline void emit_epsilon_sweep(const EpsilonSweep& sweep, OutputFormat format, std::ostream& os,
                               bool with_points = true) {
  auto group_mean = [](const EpsilonSweep& sw, const EpsilonRow& row, Majority m,
                       bool gain) -> std::optional<double> {
    const auto& g = row.ensemble.group(m);
    if (!g) return std::nullopt;
    return gain ? g->ctr.mean - sw.baseline_ctr : g->avg_opinion.mean - sw.baseline_avg_opinion;
  };
  if (format == OutputFormat::Json) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const EpsilonRow& r : sweep.rows) {
      rows.push_back({{"epsilon", r.epsilon},
                      {"n", r.ensemble.n_trajectories},
                      {"up_fraction", r.ensemble.up_fraction},
                      {"mean_distortion_up", detail::opt_json(group_mean(sweep, r, Majority::Up, false))},
                      {"mean_gain_up", detail::opt_json(group_mean(sweep, r, Majority::Up, true))},
                      {"mean_distortion_down", detail::opt_json(group_mean(sweep, r, Majority::Down, false))},
                      {"mean_gain_down", detail::opt_json(group_mean(sweep, r, Majority::Down, true))},
                      {"analytic_distortion_up", r.analytic_distortion_up},
                      {"analytic_gain_up", r.analytic_gain_up},
                      {"analytic_distortion_down", r.analytic_distortion_down},
                      {"analytic_gain_down", r.analytic_gain_down}});
    }
    nlohmann::ordered_json j = {{"sweep", "epsilon"},
                                {"baseline_avg_opinion", sweep.baseline_avg_opinion},
                                {"baseline_ctr", sweep.baseline_ctr},
                                {"rows", std::move(rows)}};
    if (with_points) {
      j["points"] = nlohmann::ordered_json::array();
      for (const DistortionGainPoint& p : sweep.points) {
        j["points"].push_back({{"epsilon", p.epsilon},
                               {"index", p.index},
                               {"majority", to_string(p.majority)},
                               {"distortion", p.distortion},
                               {"gain", p.gain},
                               {"predicted_gain", p.predicted_gain}});
      }
    }
    detail::write_json(j, os);
    return;
  }
  if (with_points) {
    os << "epsilon,index,majority,distortion,gain,predicted_gain\n";
    for (const DistortionGainPoint& p : sweep.points) {
      os << (detail::CsvRow{} << p.epsilon << p.index << to_string(p.majority) << p.distortion
                              << p.gain << p.predicted_gain)
                .str();
    }
    os << '\n';
  }
  os << "epsilon,n,up_fraction,mean_distortion_up,mean_gain_up,mean_distortion_down,"
        "mean_gain_down,analytic_distortion_up,analytic_gain_up,analytic_distortion_down,"
        "analytic_gain_down,baseline_avg_opinion,baseline_ctr\n";
  for (const EpsilonRow& r : sweep.rows) {
    os << (detail::CsvRow{} << r.epsilon << std::uint64_t{r.ensemble.n_trajectories}
                            << r.ensemble.up_fraction << group_mean(sweep, r, Majority::Up, false)
                            << group_mean(sweep, r, Majority::Up, true)
                            << group_mean(sweep, r, Majority::Down, false)
                            << group_mean(sweep, r, Majority::Down, true) << r.analytic_distortion_up
                            << r.analytic_gain_up << r.analytic_distortion_down
                            << r.analytic_gain_down << sweep.baseline_avg_opinion
                            << sweep.baseline_ctr)
              .str();
  }
  detail::check_stream(os);
}

inline void emit_simplex_sweep(const std::vector<SimplexRow>& rows, OutputFormat format,
                               std::ostream& os) {
  if (format == OutputFormat::Json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const SimplexRow& r : rows) {
      j.push_back({{"alpha", r.point.alpha},
                   {"beta", r.point.beta},
                   {"gamma", r.point.gamma},
                   {"source", r.random ? "random" : "grid"},
                   {"up_fraction", r.ensemble.up_fraction},
                   {"mean_ctr", r.ensemble.ctr.mean},
                   {"oracle", oracle_json(r.ensemble.oracle)}});
    }
    detail::write_json({{"sweep", "simplex"}, {"points", std::move(j)}}, os);
    return;
  }
  os << "alpha,beta,gamma,source,up_fraction,mean_ctr,discrepancy,oracle_mean_ctr,oracle_ctr_up,"
        "degenerate_weights,alpha_zero,gamma_zero\n";
  for (const SimplexRow& r : rows) {
    const OracleReport& o = r.ensemble.oracle;
    os << (detail::CsvRow{} << r.point.alpha << r.point.beta << r.point.gamma
                            << (r.random ? "random" : "grid") << r.ensemble.up_fraction
                            << r.ensemble.ctr.mean << o.discrepancy << o.mean_ctr << o.ctr_up
                            << o.degenerate_weights << o.alpha_zero << o.gamma_zero)
              .str();
  }
  detail::check_stream(os);
}

/// "-" is standard output; anything else is a file truncated on open.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing", path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (file_) file_->close();
    if (!stream()) throw Error(ErrorCode::IoError, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

}  // namespace recloop
