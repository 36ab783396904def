#pragma once

#include <string>

#include "orbitglue/config.hpp"

namespace orbitglue {

/*
 * Executes one subcommand against a parsed config: writes the CSV
 * artifact(s) and summary.json into the output directory and returns the
 * exit code (0 success, 4 shadowing verification failure). Validation and
 * numerical errors raise; the CLI maps their category to exit codes 2/3.
 * Re-running with identical inputs reproduces every artifact byte for
 * byte; only the wall-time field of the summary may differ.
 */
int run(const ExperimentConfig& config, const std::string& subcommand);

}  // namespace orbitglue
