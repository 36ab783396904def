#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "orbitglue/config.hpp"
#include "orbitglue/error.hpp"
#include "orbitglue/run.hpp"
#include "orbitglue/version.hpp"

namespace {

using nlohmann::json;

void emit_error(const std::string& code_name, int exit_code, const std::string& message) {
  json err{{"error", code_name}, {"exit_code", exit_code}, {"message", message}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Executable thermodynamic formalism on subshifts of finite type: "
               "pressure and equilibrium states, suspension-flow orbit gluing "
               "certificates, and large-deviations experiments."};
  app.set_version_flag("--version", std::string(orbitglue::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> seed;
  std::optional<int> workers;
  std::optional<double> step;

  const std::vector<std::string> names = {
      "pressure",      "equilibrium", "verify-gibbs",
      "glue",          "glue-flow",   "rate-function",
      "ldp-simulate",  "ldp-level2",  "tempered-profile"};
  const std::vector<std::string> descriptions = {
      "Topological pressure of the potential",
      "Equilibrium Markov chain of the potential",
      "Gibbs-ratio bounds of the equilibrium state over cylinders",
      "Glue shift orbit segments into one shadowing orbit",
      "Glue suspension-flow orbit segments with real gap times",
      "Large-deviations rate function on an s grid",
      "Monte Carlo level-1 deviation decay",
      "Monte Carlo level-2 (empirical-measure ball) decay",
      "Tempered-variation profile of a flow observable"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
    sub->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "RNG seed (overrides config)");
    sub->add_option("--workers", workers, "Monte Carlo worker threads");
    sub->add_option("--step", step, "shadowing sample step (glue-flow)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help / --version
  } catch (const CLI::ParseError& e) {
    emit_error("bad_arguments", 2, e.what());
    return 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    json doc;
    {
      std::ifstream in(config_path);
      if (!in) {
        emit_error("config_invalid", 2, "cannot open config file: " + config_path);
        return 2;
      }
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        emit_error("config_invalid", 2, std::string("invalid JSON: ") + e.what());
        return 2;
      }
    }
    if (out_dir) doc["output"] = *out_dir;
    if (seed) doc["params"]["seed"] = *seed;
    if (workers) doc["params"]["workers"] = *workers;
    if (step) doc["params"]["step"] = *step;

    const orbitglue::ExperimentConfig config = orbitglue::parse_config(doc);
    const int code = orbitglue::run(config, subcommand);
    if (code != 0)
      emit_error("verification_failed", code, "shadowing verification failed");
    return code;
  } catch (const orbitglue::Error& e) {
    const int code =
        e.category() == orbitglue::error_category::validation ? 2 : 3;
    emit_error(orbitglue::errc_name(e.code()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    emit_error("internal", 3, e.what());
    return 3;
  }
}
