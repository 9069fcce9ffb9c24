#include "regmech/io.hpp"

#include "regmech/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace regmech {

std::string fmt12(double v)
{
    if (v == 0.0) return "0"; // folds -0
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double round12(double v)
{
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt12(v).c_str(), nullptr);
}

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& h, const std::string& what)
{
    if (t.header != h) {
        std::string want;
        for (const auto& s : h) want += (want.empty() ? "" : ",") + s;
        throw ContractError(what + ": expected header " + want);
    }
}

} // namespace

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ContractError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (t.header.empty()) {
            t.header = cells;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ContractError(path.string() + ":" + std::to_string(lineno) + ": wrong number of columns");
        std::vector<double> row;
        for (const auto& c : cells) {
            char* end = nullptr;
            double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0')
                throw ContractError(path.string() + ":" + std::to_string(lineno) + ": not a number: " + c);
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ContractError(path.string() + ": empty file");
    return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table)
{
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    for (std::size_t j = 0; j < table.header.size(); ++j) out << (j ? "," : "") << table.header[j];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << fmt12(row[j]);
        out << '\n';
    }
}

std::vector<std::vector<double>> mechanism_rows(const Mechanism& m)
{
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < m.size(); ++i) rows.push_back({m.grid()[i], m.q_interval(i), m.r_interval(i)});
    return rows;
}

CsvTable mechanism_table(const Mechanism& m) { return {{"theta", "q", "r"}, mechanism_rows(m)}; }

CsvTable overrides_table(const std::vector<Override>& ov)
{
    CsvTable t{{"knot_index", "q", "r"}, {}};
    for (const auto& o : ov) t.rows.push_back({static_cast<double>(o.knot), o.q, o.r});
    return t;
}

CsvTable fc_mechanism_table(const FcMechanism& m)
{
    CsvTable t{{"theta", "q", "r"}, {}};
    for (std::size_t i = 0; i < m.size(); ++i)
        t.rows.push_back({m.env().grid()[i], m.q_values()[i], m.r_values()[i]});
    return t;
}

namespace {

template <class Grid>
void split_rows(const Grid& grid, const std::vector<std::vector<double>>& rows,
                const std::vector<std::vector<double>>& override_rows, std::vector<double>& q, std::vector<double>& r,
                std::vector<Override>& ov)
{
    if (rows.size() != grid.size())
        throw ContractError("mechanism table has " + std::to_string(rows.size()) + " rows; grid has " +
                            std::to_string(grid.size()) + " knots");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw ContractError("mechanism rows need theta,q,r");
        if (std::abs(rows[i][0] - grid[i]) > 1e-9)
            throw ContractError("mechanism table theta " + fmt12(rows[i][0]) + " does not match knot " +
                                std::to_string(i));
        q.push_back(rows[i][1]);
        r.push_back(rows[i][2]);
    }
    for (const auto& row : override_rows) {
        if (row.size() != 3) throw ContractError("override rows need knot_index,q,r");
        double k = row[0];
        if (k < 0 || k != std::floor(k)) throw ContractError("override knot_index must be a non-negative integer");
        ov.push_back({static_cast<std::size_t>(k), row[1], row[2]});
    }
}

} // namespace

Mechanism mechanism_from_rows(EnvPtr env, const std::vector<std::vector<double>>& rows,
                              const std::vector<std::vector<double>>& override_rows, double u_bar)
{
    std::vector<double> q, r;
    std::vector<Override> ov;
    split_rows(env->grid(), rows, override_rows, q, r, ov);
    return Mechanism(std::move(env), std::move(q), std::move(r), std::move(ov), u_bar);
}

FcMechanism fc_mechanism_from_rows(FcEnvPtr env, const std::vector<std::vector<double>>& rows,
                                   const std::vector<std::vector<double>>& override_rows, double u_bar)
{
    std::vector<double> q, r;
    std::vector<Override> ov;
    split_rows(env->grid(), rows, override_rows, q, r, ov);
    return FcMechanism(std::move(env), std::move(q), std::move(r), std::move(ov), u_bar);
}

void write_mechanism(const std::filesystem::path& dir, const std::string& name, const Mechanism& m)
{
    write_csv(dir / (name + ".csv"), mechanism_table(m));
    if (!m.overrides().empty()) write_csv(dir / (name + "_overrides.csv"), overrides_table(m.overrides()));
}

void write_fc_mechanism(const std::filesystem::path& dir, const std::string& name, const FcMechanism& m)
{
    write_csv(dir / (name + ".csv"), fc_mechanism_table(m));
    if (!m.overrides().empty()) write_csv(dir / (name + "_overrides.csv"), overrides_table(m.overrides()));
}

CsvTable plot_table(const Mechanism& m)
{
    SurplusProfile p = surplus_profile(m);
    CsvTable t{{"theta", "q", "r", "u", "s", "ts", "cs", "rs"}, {}};
    for (std::size_t i = 0; i < m.size(); ++i) {
        t.rows.push_back({m.grid()[i], m.q_at(i), m.r_at(i), p.u[i], p.s[i].value_or(0.0), p.ts[i], p.cs[i],
                          p.rs[i]});
    }
    return t;
}

std::vector<std::pair<double, double>> read_prior_points(const std::filesystem::path& path)
{
    CsvTable t = read_csv(path);
    expect_header(t, {"theta", "density"}, path.string());
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : t.rows) pts.emplace_back(row[0], row[1]);
    return pts;
}

} // namespace regmech
