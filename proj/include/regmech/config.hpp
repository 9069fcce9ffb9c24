#pragma once

#include "regmech/fixedcost.hpp"
#include "regmech/market.hpp"
#include "regmech/mechanism.hpp"
#include "regmech/prior.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace regmech {

struct RunOptions {
    std::filesystem::path out = "out";
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    std::string mechanism;          ///< primary mechanism name
    std::string other;              ///< second mechanism for compare
    std::string prior;              ///< prior name for optimal / oracle
    std::vector<std::string> priors; ///< prior set for maxmin
    std::size_t q_levels = 141;
    std::optional<double> epsilon;
    std::optional<double> theta_l;
    std::optional<double> theta_h;
    double alpha_low = 0.1;
    double rotate_slope = 0.5;
    bool witness_search = true;
};

struct Config {
    std::optional<MarketParams> market;
    std::optional<FixedCostParams> fixedcost;
    std::map<std::string, nlohmann::json> mechanisms;
    std::map<std::string, nlohmann::json> fc_mechanisms;
    std::map<std::string, nlohmann::json> priors;
    RunOptions run;
    std::filesystem::path base_dir;
    std::uint64_t hash = 0;
};

/// FNV-1a over the raw bytes.
std::uint64_t fnv1a(const std::string& bytes);

/// Parses and validates; ContractError lists every violation found.
Config parse_config(const std::filesystem::path& path);
Config parse_config_text(const std::string& text, const std::filesystem::path& base_dir);

/// Re-runs the range checks after command-line overrides.
void validate_config(const Config& cfg);

Demand parse_demand(const nlohmann::json& j);

Mechanism build_mechanism(const Config& cfg, const std::string& name, EnvPtr env);
FcMechanism build_fc_mechanism(const Config& cfg, const std::string& name, FcEnvPtr env);
Prior build_prior(const Config& cfg, const std::string& name, std::shared_ptr<const TypeGrid> grid);

} // namespace regmech
