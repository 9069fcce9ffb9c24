#pragma once

#include "regmech/fixedcost.hpp"
#include "regmech/mechanism.hpp"
#include "regmech/prior.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace regmech {

/// %.12g formatting used by every emitted number.
std::string fmt12(double v);
/// Round to 12 significant digits (for JSON reports).
double round12(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Header theta,q,r; thetas must match the grid within 1e-9.
std::vector<std::vector<double>> mechanism_rows(const Mechanism& m);
CsvTable mechanism_table(const Mechanism& m);
CsvTable overrides_table(const std::vector<Override>& ov);
CsvTable fc_mechanism_table(const FcMechanism& m);

Mechanism mechanism_from_rows(EnvPtr env, const std::vector<std::vector<double>>& rows,
                              const std::vector<std::vector<double>>& override_rows, double u_bar);
FcMechanism fc_mechanism_from_rows(FcEnvPtr env, const std::vector<std::vector<double>>& rows,
                                   const std::vector<std::vector<double>>& override_rows, double u_bar);

/// Writes <dir>/<name>.csv and, when overrides exist, <dir>/<name>_overrides.csv.
void write_mechanism(const std::filesystem::path& dir, const std::string& name, const Mechanism& m);
void write_fc_mechanism(const std::filesystem::path& dir, const std::string& name, const FcMechanism& m);

/// Per-knot plot data: theta,q,r,u,s,ts,cs,rs (s = 0 where r = 0).
CsvTable plot_table(const Mechanism& m);

/// Header theta,density.
std::vector<std::pair<double, double>> read_prior_points(const std::filesystem::path& path);

} // namespace regmech
