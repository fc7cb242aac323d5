#pragma once

#include <string>
#include <string_view>

#include "vsl/core_model.hpp"

namespace vsl {

/// Parses the sectioned `key = value` dialect. Top-level keys precede the first
/// `[species]` header; each `[species]` header opens one species block. Unknown keys,
/// duplicate keys and malformed values are ConfigErrors carrying the line number.
/// The result is not yet finalized so that overrides can still be applied.
SimulationConfig parse_config_text(std::string_view text);

/// Applies `key=value`. Species keys are addressed as `species.<index>.<key>` or
/// `species.*.<key>` (all species).
void apply_override(SimulationConfig& config, std::string_view assignment);

/// parse_config_text + overrides + finalize_config.
SimulationConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

SimulationConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const SimulationConfig& config);

}  // namespace vsl
