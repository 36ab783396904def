#include "orbitglue/run.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "orbitglue/deviations.hpp"
#include "orbitglue/error.hpp"
#include "orbitglue/gluing.hpp"
#include "orbitglue/thermo.hpp"
#include "orbitglue/version.hpp"

namespace orbitglue {

const char* errc_name(errc c) {
  switch (c) {
    case errc::zero_row: return "zero_row";
    case errc::zero_column: return "zero_column";
    case errc::not_transitive: return "not_transitive";
    case errc::non_positive_epsilon: return "non_positive_epsilon";
    case errc::negative_time: return "negative_time";
    case errc::depth_mismatch: return "depth_mismatch";
    case errc::scale_too_coarse: return "scale_too_coarse";
    case errc::outside_feasible_range: return "outside_feasible_range";
    case errc::horizon_too_short: return "horizon_too_short";
    case errc::invalid_argument: return "invalid_argument";
    case errc::config_invalid: return "config_invalid";
    case errc::eigen_not_converged: return "eigen_not_converged";
    case errc::bracket_not_found: return "bracket_not_found";
    case errc::budget_exceeded: return "budget_exceeded";
  }
  return "unknown";
}

namespace {

using nlohmann::json;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("ORBITGLUE_LOG");
    if (!env) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json finite_or_null(double v) {
  return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string word_label(const ExperimentConfig& config, const Word& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const std::string& l = config.labels[static_cast<std::size_t>(w[i])];
    if (l.size() != 1 && i > 0) out += ".";
    out += l;
  }
  return out;
}

struct Artifacts {
  std::filesystem::path dir;

  void write_csv(const std::string& name, const std::string& header,
                 const std::vector<std::vector<std::string>>& rows) const {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) raise(errc::invalid_argument, "cannot write " + (dir / name).string());
    out << header << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ",";
        out << row[i];
      }
      out << "\n";
    }
  }
};

// ---- parameter access with schema-path diagnostics ----

[[noreturn]] void bad_param(const std::string& path, const std::string& what) {
  raise(errc::config_invalid, "/params/" + path + ": " + what);
}

const json& need_param(const json& params, const std::string& key) {
  if (!params.contains(key)) bad_param(key, "missing");
  return params.at(key);
}

double param_number(const json& params, const std::string& key) {
  const json& v = need_param(params, key);
  if (!v.is_number()) bad_param(key, "expected a number");
  return v.get<double>();
}

double param_number_or(const json& params, const std::string& key, double fallback) {
  if (!params.contains(key)) return fallback;
  return param_number(params, key);
}

std::int64_t param_int(const json& params, const std::string& key) {
  const json& v = need_param(params, key);
  if (!v.is_number_integer()) bad_param(key, "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t param_seed(const json& params) {
  const json& v = need_param(params, "seed");
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    bad_param("seed", "expected a nonnegative integer (mandatory for stochastic runs)");
  return v.get<std::uint64_t>();
}

std::vector<double> param_number_array(const json& params, const std::string& key) {
  const json& v = need_param(params, key);
  if (!v.is_array() || v.empty()) bad_param(key, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v.at(i).is_number()) bad_param(key + "/" + std::to_string(i), "expected a number");
    out.push_back(v.at(i).get<double>());
  }
  return out;
}

int param_workers(const json& params) {
  if (!params.contains("workers")) {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
  }
  const json& v = params.at("workers");
  if (!v.is_number_integer() || v.get<int>() < 1)
    bad_param("workers", "expected an integer >= 1");
  return v.get<int>();
}

// ---- config block access ----

const LocallyConstantFunction& need_roof(const ExperimentConfig& config) {
  if (!config.roof) raise(errc::config_invalid, "/roof: required for this subcommand");
  return *config.roof;
}

const LocallyConstantFunction& need_observable(const ExperimentConfig& config) {
  if (!config.observable)
    raise(errc::config_invalid, "/observable: required for this subcommand");
  return *config.observable;
}

LocallyConstantFunction potential_or_zero(const ExperimentConfig& config) {
  if (config.potential) return *config.potential;
  return LocallyConstantFunction::constant(config.system, 0.0);
}

SymbolicPoint parse_point(const ExperimentConfig& config, const json& node,
                          const std::string& path) {
  if (!node.is_object()) raise(errc::config_invalid, path + ": expected an object");
  if (node.contains("cylinder")) {
    const Word w = parse_word(config, node.at("cylinder"), path + "/cylinder");
    if (w.empty()) raise(errc::config_invalid, path + "/cylinder: empty word");
    return extend_prefix_periodically(config.system, w);
  }
  if (!node.contains("cycle"))
    raise(errc::config_invalid, path + ": expected 'cycle' or 'cylinder'");
  const Word cycle = parse_word(config, node.at("cycle"), path + "/cycle");
  if (cycle.empty()) raise(errc::config_invalid, path + "/cycle: empty word");
  Word pre;
  if (node.contains("preperiod"))
    pre = parse_word(config, node.at("preperiod"), path + "/preperiod");
  const SymbolicPoint x(pre, cycle);
  if (!point_admissible(config.system, x))
    raise(errc::config_invalid, path + ": point is not admissible");
  return x;
}

json point_json(const ExperimentConfig& config, const SymbolicPoint& x) {
  json out;
  out["preperiod"] = word_label(config, x.preperiod());
  out["cycle"] = word_label(config, x.cycle());
  return out;
}

// ---- subcommands ----

json do_pressure(const ExperimentConfig& config, const Artifacts& artifacts) {
  const LocallyConstantFunction u = potential_or_zero(config);
  const double value = pressure(config.system, u);
  artifacts.write_csv("pressure.csv", "quantity,value",
                      {{"pressure", format_double(value)}});
  return json{{"pressure", value}};
}

json do_equilibrium(const ExperimentConfig& config, const Artifacts& artifacts) {
  const LocallyConstantFunction u = potential_or_zero(config);
  const MarkovMeasure mu = equilibrium_markov(config.system, u);
  const auto [entropy, mean_u] = measure_stats(mu, u);

  std::vector<std::vector<std::string>> pi_rows;
  const BlockGraph& graph = mu.graph();
  for (int v = 0; v < graph.state_count(); ++v)
    pi_rows.push_back({std::to_string(v),
                       word_label(config, graph.states[static_cast<std::size_t>(v)]),
                       format_double(mu.stationary()[static_cast<std::size_t>(v)])});
  artifacts.write_csv("equilibrium_stationary.csv", "state,word,pi", pi_rows);

  std::vector<std::vector<std::string>> p_rows;
  for (int v = 0; v < graph.state_count(); ++v) {
    const auto& row = mu.transition_probs()[static_cast<std::size_t>(v)];
    for (std::size_t e = 0; e < row.size(); ++e)
      p_rows.push_back({std::to_string(v),
                        std::to_string(graph.succ[static_cast<std::size_t>(v)][e]),
                        format_double(row[e])});
  }
  artifacts.write_csv("equilibrium_transitions.csv", "from,to,prob", p_rows);

  return json{{"pressure", mu.log_perron()},
              {"entropy", entropy},
              {"mean_potential", mean_u},
              {"block_depth", mu.block_depth()}};
}

json do_verify_gibbs(const ExperimentConfig& config, const Artifacts& artifacts) {
  const LocallyConstantFunction u = potential_or_zero(config);
  const int n_max = static_cast<int>(param_int(config.params, "n_max"));
  if (n_max < 1) bad_param("n_max", "expected an integer >= 1");
  const MarkovMeasure mu = equilibrium_markov(config.system, u);
  const double constant =
      param_number_or(config.params, "pressure", mu.log_perron());
  std::size_t budget = 10'000'000;
  if (config.params.contains("budget"))
    budget = static_cast<std::size_t>(param_int(config.params, "budget"));
  const double tol = param_number_or(config.params, "growth_tolerance", 0.01);

  const GibbsReport report = verify_gibbs(config.system, mu, u, constant, n_max,
                                          budget, tol);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.per_length)
    rows.push_back({std::to_string(r.n), format_double(r.k_min),
                    format_double(r.k_max), format_double(r.k_max / r.k_min)});
  artifacts.write_csv("verify_gibbs.csv", "n,k_min,k_max,ratio", rows);
  return json{{"pressure_constant", report.pressure_constant},
              {"growth_flag", report.growth_flag},
              {"lengths_checked", report.per_length.size()}};
}

std::pair<json, int> do_glue(const ExperimentConfig& config, const Artifacts& artifacts) {
  const double eps = param_number(config.params, "epsilon");
  const json& seg_node = need_param(config.params, "segments");
  if (!seg_node.is_array() || seg_node.empty())
    bad_param("segments", "expected a nonempty array");
  std::vector<DiscreteSegment> segments;
  for (std::size_t i = 0; i < seg_node.size(); ++i) {
    const std::string path = "/params/segments/" + std::to_string(i);
    const json& s = seg_node.at(i);
    const SymbolicPoint x = parse_point(config, s, path);
    if (!s.contains("length") || !s.at("length").is_number_integer() ||
        s.at("length").get<int>() < 1)
      raise(errc::config_invalid, path + "/length: expected an integer >= 1");
    segments.push_back(DiscreteSegment{x, s.at("length").get<int>()});
  }

  const GluedOrbit glued = glue_discrete(config.system, segments, eps);
  const DiscreteShadowCheck check =
      verify_discrete_shadowing(config.system, glued, segments, eps);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < segments.size(); ++i)
    for (int j = 0; j < segments[i].length; ++j)
      rows.push_back(
          {std::to_string(i), std::to_string(j),
           format_double(symbol_distance_shifted(
               glued.point, glued.offsets[i] + static_cast<std::size_t>(j),
               segments[i].point, static_cast<std::size_t>(j)))});
  artifacts.write_csv("glue.csv", "segment,j,distance", rows);

  json extras{{"pass", check.pass},
              {"gaps", glued.gaps},
              {"bound", glued.bound},
              {"epsilon", glued.epsilon},
              {"max_distance", check.max_distance},
              {"point", point_json(config, glued.point)}};
  return {extras, check.pass ? 0 : 4};
}

std::pair<json, int> do_glue_flow(const ExperimentConfig& config,
                                  const Artifacts& artifacts) {
  const SuspensionSystem sys(config.system, need_roof(config));
  const double eps = param_number(config.params, "epsilon");
  const double step = param_number_or(config.params, "step", 0.01);
  const double threshold = param_number_or(config.params, "threshold", 3.0);
  const json& seg_node = need_param(config.params, "segments");
  if (!seg_node.is_array() || seg_node.empty())
    bad_param("segments", "expected a nonempty array");
  std::vector<FlowSegment> segments;
  for (std::size_t i = 0; i < seg_node.size(); ++i) {
    const std::string path = "/params/segments/" + std::to_string(i);
    const json& s = seg_node.at(i);
    const SymbolicPoint x = parse_point(config, s, path);
    if (!s.contains("height") || !s.at("height").is_number())
      raise(errc::config_invalid, path + "/height: expected a number");
    if (!s.contains("duration") || !s.at("duration").is_number())
      raise(errc::config_invalid, path + "/duration: expected a number");
    segments.push_back(FlowSegment{
        make_suspension_point(sys, x, s.at("height").get<double>()),
        s.at("duration").get<double>()});
  }

  const FlowGluedOrbit glued = glue_flow(sys, segments, eps);
  const ShadowReport report =
      verify_flow_shadowing(sys, glued, segments, eps, step, threshold);

  std::vector<std::vector<std::string>> rows;
  for (const ShadowSample& sample : report.samples)
    rows.push_back({std::to_string(sample.segment), format_double(sample.t),
                    format_double(sample.distance)});
  artifacts.write_csv("glue_flow.csv", "segment,t,d_pi", rows);

  json extras{{"pass", report.pass},
              {"gaps", glued.gaps},
              {"bound", glued.bound},
              {"xi", glued.xi},
              {"case_trace", glued.case_trace},
              {"max_d_pi", report.max_distance()},
              {"per_segment_max", report.per_segment_max},
              {"step", report.step},
              {"threshold", report.threshold},
              {"start", {{"point", point_json(config, glued.start.base_point)},
                         {"height", glued.start.height}}}};
  return {extras, report.pass ? 0 : 4};
}

json do_rate_function(const ExperimentConfig& config, const Artifacts& artifacts) {
  const SuspensionSystem sys(config.system, need_roof(config));
  const FlowObservable phi{potential_or_zero(config)};
  const FlowObservable psi{need_observable(config)};
  const std::vector<double> s_grid = param_number_array(config.params, "s_grid");

  const RateFunctionProfile profile = rate_function_profile(sys, phi, psi, s_grid);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < profile.s.size(); ++i)
    rows.push_back({format_double(profile.s[i]), format_double(profile.rate[i]),
                    format_double(profile.q_star[i])});
  artifacts.write_csv("rate_function.csv", "s,I,q_star", rows);
  return json{{"s_min", profile.s_min}, {"s_max", profile.s_max},
              {"points", profile.s.size()}};
}

// Base measure matching the flow equilibrium of the potential: the
// equilibrium chain of phi_bar - c(0) rho (for constant roofs this is just
// the equilibrium of the potential).
MarkovMeasure sampling_measure(const SuspensionSystem& sys, const FlowObservable& phi) {
  const LocallyConstantFunction phi_bar = reduced_observable(sys, phi);
  const double c0 = flow_free_energy(sys, phi, phi, 0.0);
  const LocallyConstantFunction g =
      combine(sys.base(), {{1.0, &phi_bar}, {-c0, &sys.roof()}});
  return equilibrium_markov(sys.base(), g);
}

std::vector<std::vector<std::string>> decay_rows(const EmpiricalDecay& decay) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < decay.t.size(); ++i)
    rows.push_back({format_double(decay.t[i]), std::to_string(decay.counts[i]),
                    format_double(decay.frequency[i]),
                    format_double(decay.log_frequency[i])});
  return rows;
}

json decay_json(const EmpiricalDecay& decay) {
  return json{{"slope", finite_or_null(decay.slope)},
              {"slope_stderr", finite_or_null(decay.slope_stderr)},
              {"fit_points", decay.fit_points},
              {"samples_per_t", decay.samples_per_t},
              {"seed", decay.seed}};
}

json do_ldp_simulate(const ExperimentConfig& config, const Artifacts& artifacts) {
  const SuspensionSystem sys(config.system, need_roof(config));
  const FlowObservable phi{potential_or_zero(config)};
  const FlowObservable psi{need_observable(config)};
  const std::vector<double> interval = param_number_array(config.params, "interval");
  if (interval.size() != 2 || !(interval[0] <= interval[1]))
    bad_param("interval", "expected [a, b] with a <= b");
  const std::vector<double> t_grid = param_number_array(config.params, "t_grid");
  const auto n_samples = static_cast<std::uint64_t>(param_int(config.params, "n_samples"));
  const std::uint64_t seed = param_seed(config.params);
  const int workers = param_workers(config.params);

  const MarkovMeasure mu = sampling_measure(sys, phi);
  log_info("ldp-simulate: " + std::to_string(n_samples) + " samples per t, " +
           std::to_string(workers) + " workers");
  const EmpiricalDecay decay = estimate_deviation_level1(
      sys, mu, psi, interval[0], interval[1], t_grid, n_samples, seed, workers);
  artifacts.write_csv("ldp_simulate.csv", "t,count,freq,log_freq", decay_rows(decay));

  json extras = decay_json(decay);
  // -inf of the rate over [a, b]: zero when the interval contains the
  // typical mean, otherwise the rate at the nearest endpoint (convexity).
  const LocallyConstantFunction psi_bar = reduced_observable(sys, psi);
  const double s_bar =
      measure_stats(mu, psi_bar).second / measure_stats(mu, sys.roof()).second;
  extras["typical_mean"] = s_bar;
  try {
    double theory = 0.0;
    if (s_bar < interval[0])
      theory = -rate_function(sys, phi, psi, interval[0]).rate;
    else if (s_bar > interval[1])
      theory = -rate_function(sys, phi, psi, interval[1]).rate;
    extras["theoretical_slope"] = theory;
  } catch (const Error&) {
    extras["theoretical_slope"] = nullptr;
  }
  return extras;
}

json do_ldp_level2(const ExperimentConfig& config, const Artifacts& artifacts) {
  const SuspensionSystem sys(config.system, need_roof(config));
  const FlowObservable phi{potential_or_zero(config)};
  if (config.basis.empty())
    raise(errc::config_invalid, "/basis: required for this subcommand");
  TestBasis basis;
  for (const auto& g : config.basis) basis.observables.push_back(FlowObservable{g});
  const std::vector<double> center = param_number_array(config.params, "center");
  const double radius = param_number(config.params, "radius");
  const std::vector<double> t_grid = param_number_array(config.params, "t_grid");
  const auto n_samples = static_cast<std::uint64_t>(param_int(config.params, "n_samples"));
  const std::uint64_t seed = param_seed(config.params);
  const int workers = param_workers(config.params);

  const MarkovMeasure mu = sampling_measure(sys, phi);
  log_info("ldp-level2: " + std::to_string(n_samples) + " samples per t, " +
           std::to_string(workers) + " workers");
  const EmpiricalDecay decay = estimate_deviation_level2(
      sys, mu, basis, center, radius, t_grid, n_samples, seed, workers);
  artifacts.write_csv("ldp_level2.csv", "t,count,freq,log_freq", decay_rows(decay));
  json extras = decay_json(decay);
  extras["radius"] = radius;
  return extras;
}

json do_tempered_profile(const ExperimentConfig& config, const Artifacts& artifacts) {
  const SuspensionSystem sys(config.system, need_roof(config));
  const FlowObservable psi{need_observable(config)};
  const double delta = param_number(config.params, "delta");
  const std::vector<double> t_grid = param_number_array(config.params, "t_grid");
  const int n_pairs = static_cast<int>(param_int(config.params, "n_pairs"));
  const std::uint64_t seed = param_seed(config.params);

  const std::vector<TemperedPoint> profile =
      tempered_variation_profile(sys, psi, delta, t_grid, n_pairs, seed);
  std::vector<std::vector<std::string>> rows;
  double worst = 0.0;
  bool nonincreasing = true;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    rows.push_back({format_double(profile[i].t), format_double(profile[i].gamma_over_t)});
    worst = std::max(worst, profile[i].gamma_over_t);
    if (i > 0 && profile[i].gamma_over_t > profile[i - 1].gamma_over_t + 1e-12)
      nonincreasing = false;
  }
  artifacts.write_csv("tempered_profile.csv", "t,gamma_over_t", rows);
  return json{{"seed", seed},
              {"delta", delta},
              {"n_pairs", n_pairs},
              {"max_gamma_over_t", worst},
              {"nonincreasing", nonincreasing}};
}

}  // namespace

int run(const ExperimentConfig& config, const std::string& subcommand) {
  const auto t0 = std::chrono::steady_clock::now();
  const Artifacts artifacts{std::filesystem::path(config.output_dir)};
  std::filesystem::create_directories(artifacts.dir);
  log_info("running " + subcommand + " into " + artifacts.dir.string());

  json extras;
  int code = 0;
  if (subcommand == "pressure") {
    extras = do_pressure(config, artifacts);
  } else if (subcommand == "equilibrium") {
    extras = do_equilibrium(config, artifacts);
  } else if (subcommand == "verify-gibbs") {
    extras = do_verify_gibbs(config, artifacts);
  } else if (subcommand == "glue") {
    std::tie(extras, code) = do_glue(config, artifacts);
  } else if (subcommand == "glue-flow") {
    std::tie(extras, code) = do_glue_flow(config, artifacts);
  } else if (subcommand == "rate-function") {
    extras = do_rate_function(config, artifacts);
  } else if (subcommand == "ldp-simulate") {
    extras = do_ldp_simulate(config, artifacts);
  } else if (subcommand == "ldp-level2") {
    extras = do_ldp_level2(config, artifacts);
  } else if (subcommand == "tempered-profile") {
    extras = do_tempered_profile(config, artifacts);
  } else {
    raise(errc::config_invalid, "unknown subcommand: " + subcommand);
  }

  json summary;
  summary["version"] = kVersion;
  summary["subcommand"] = subcommand;
  summary["config"] = config.resolved;
  summary["config_hash"] = hash_hex(config_hash(config.resolved));
  for (const auto& [key, val] : extras.items()) summary[key] = val;
  const auto t1 = std::chrono::steady_clock::now();
  summary["wall_time_seconds"] =
      std::chrono::duration<double>(t1 - t0).count();

  std::ofstream out(artifacts.dir / "summary.json", std::ios::binary);
  if (!out)
    raise(errc::invalid_argument,
          "cannot write " + (artifacts.dir / "summary.json").string());
  out << summary.dump(2) << "\n";
  log_info("done, exit " + std::to_string(code));
  return code;
}

}  // namespace orbitglue
