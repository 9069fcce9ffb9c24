#pragma once

#include "regmech/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace regmech {

inline constexpr const char* kToolVersion = "1.0.0";

/// Subcommand names accepted by run(); "fixedcost-classify" backs `fixedcost classify`.
const std::vector<std::string>& subcommands();

/**
 * Executes one subcommand, writes its CSV tables and report.json into
 * cfg.run.out, and returns the report. Library errors propagate unchanged.
 */
nlohmann::json run(const std::string& subcommand, const Config& cfg);

/// Rounds every floating-point leaf to 12 significant digits.
nlohmann::json rounded(const nlohmann::json& j);

} // namespace regmech
