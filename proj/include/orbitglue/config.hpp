#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "orbitglue/function.hpp"
#include "orbitglue/sft.hpp"

namespace orbitglue {

/*
 * One JSON config format for every subcommand. Top-level keys:
 *
 *   system     { "matrix": [[0/1,...],...], "labels": ["a","b",...]? }
 *   roof       function block (suspension subcommands)
 *   potential  function block (defaults to 0)
 *   observable function block
 *   basis      [ function block, ... ] (ldp-level2)
 *   params     subcommand-specific parameters
 *   output     output directory (default "out")
 *
 * A function block is {"constant": c} or {"depth": k, "values": {...}}
 * with one entry per admissible depth-k word; words are written as label
 * strings ("ab") when every label is a single character, or as arrays of
 * labels/indices. Validation failures raise config_invalid with the JSON
 * path of the offending node.
 */
struct ExperimentConfig {
  nlohmann::json resolved;  // defaults filled in; hashed for the summary
  TransitionSystem system;
  std::vector<std::string> labels;
  std::optional<LocallyConstantFunction> roof;
  std::optional<LocallyConstantFunction> potential;
  std::optional<LocallyConstantFunction> observable;
  std::vector<LocallyConstantFunction> basis;
  nlohmann::json params;
  std::string output_dir;
};

ExperimentConfig parse_config(const nlohmann::json& doc);

// Reads and parses a config file; parse errors raise config_invalid.
ExperimentConfig load_config(const std::string& path);

// Word from a config node: label string or array of labels/indices.
Word parse_word(const ExperimentConfig& config, const nlohmann::json& node,
                const std::string& path);

// FNV-1a over the canonical (key-sorted) dump of the resolved config.
std::uint64_t config_hash(const nlohmann::json& resolved);

}  // namespace orbitglue
