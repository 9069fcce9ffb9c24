#include "regmech/prior.hpp"

#include "regmech/errors.hpp"
#include "regmech/tolerance.hpp"

#include <algorithm>
#include <cmath>

namespace regmech {

Prior::Prior(std::shared_ptr<const TypeGrid> grid, std::vector<double> density, std::string name)
    : grid_(std::move(grid)), density_(std::move(density)), name_(std::move(name))
{
    if (!grid_) throw ContractError("prior: null grid");
    if (density_.size() != grid_->size()) throw ContractError("prior: density must have one value per knot");
    for (double d : density_) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw ContractError("prior: density values must be finite and >= 0");
    }
    std::vector<double> w = grid_->trapezoid_weights();
    double mass = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mass += w[i] * density_[i];
    if (!(mass > 0.0)) throw ContractError("prior: density integrates to zero");
    for (double& d : density_) d /= mass;

    cdf_.assign(density_.size(), 0.0);
    for (std::size_t i = 1; i < density_.size(); ++i)
        cdf_[i] = cdf_[i - 1] + 0.5 * grid_->width(i) * (density_[i] + density_[i - 1]);
    cdf_.back() = 1.0;
    set_masses_from_cdf();
}

void Prior::set_masses_from_cdf()
{
    mass_.assign(cdf_.size(), 0.0);
    for (std::size_t i = 1; i < cdf_.size(); ++i) mass_[i] = cdf_[i] - cdf_[i - 1];
}

Prior Prior::from_interval_masses(std::shared_ptr<const TypeGrid> grid, std::vector<double> mass, std::string name)
{
    if (!grid) throw ContractError("prior: null grid");
    if (mass.size() != grid->size()) throw ContractError("prior: one mass per knot required");
    if (grid->size() < 2) throw ContractError("prior: interval masses need at least two knots");
    double total = 0.0;
    for (std::size_t i = 1; i < mass.size(); ++i) {
        if (!(mass[i] >= 0.0) || !std::isfinite(mass[i])) throw ContractError("prior: masses must be finite and >= 0");
        total += mass[i];
    }
    if (!(total > 0.0)) throw ContractError("prior: masses sum to zero");
    Prior p;
    p.grid_ = std::move(grid);
    p.name_ = std::move(name);
    const std::size_t n = mass.size();
    p.density_.assign(n, 0.0);
    p.cdf_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double m = mass[i] / total;
        p.density_[i] = m / p.grid_->width(i);
        p.cdf_[i] = p.cdf_[i - 1] + m;
    }
    p.density_[0] = p.density_[1];
    p.cdf_.back() = 1.0;
    p.set_masses_from_cdf();
    return p;
}

Prior Prior::uniform(std::shared_ptr<const TypeGrid> grid)
{
    std::vector<double> d(grid->size(), 1.0);
    return Prior(std::move(grid), std::move(d), "uniform");
}

Prior Prior::triangular_increasing(std::shared_ptr<const TypeGrid> grid)
{
    std::vector<double> d(grid->size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (*grid)[i] - grid->front();
    return Prior(std::move(grid), std::move(d), "triangular");
}

Prior Prior::narrow_triangular(std::shared_ptr<const TypeGrid> grid, double center, double half_width)
{
    if (!(half_width > 0.0)) throw ContractError("prior: half width must be > 0");
    std::vector<double> d(grid->size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::max(0.0, 1.0 - std::abs((*grid)[i] - center) / half_width);
    return Prior(std::move(grid), std::move(d), "narrow");
}

Prior Prior::uniform_on(std::shared_ptr<const TypeGrid> grid, double lo, double hi)
{
    std::vector<double> d(grid->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        double t = (*grid)[i];
        d[i] = (t >= lo - 1e-12 && t <= hi + 1e-12) ? 1.0 : 0.0;
    }
    return Prior(std::move(grid), std::move(d), "uniform_on");
}

Prior Prior::interpolated(std::shared_ptr<const TypeGrid> grid, const std::vector<std::pair<double, double>>& pts,
                          std::string name)
{
    if (pts.empty()) throw ContractError("prior: no density points");
    for (std::size_t k = 1; k < pts.size(); ++k) {
        if (!(pts[k].first > pts[k - 1].first)) throw ContractError("prior: theta column must strictly increase");
    }
    std::vector<double> d(grid->size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        double t = (*grid)[i];
        if (t <= pts.front().first) {
            d[i] = pts.front().second;
        } else if (t >= pts.back().first) {
            d[i] = pts.back().second;
        } else {
            auto it = std::upper_bound(pts.begin(), pts.end(), t, [](double v, const auto& p) { return v < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            double w = (t - lo.first) / (hi.first - lo.first);
            d[i] = lo.second + w * (hi.second - lo.second);
        }
    }
    return Prior(std::move(grid), std::move(d), std::move(name));
}

bool fosd(const Prior& g, const Prior& g_prime)
{
    if (!g.grid().same_as(g_prime.grid())) throw ContractError("fosd: priors live on different grids");
    for (std::size_t i = 0; i < g.cdf().size(); ++i) {
        if (g.cdf()[i] > g_prime.cdf()[i] + kTol) return false;
    }
    return true;
}

std::vector<double> rs_profile_intervals(const Mechanism& m, double alpha)
{
    std::vector<double> u = m.rents();
    std::vector<double> rs(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        double ts = total_surplus(m.env(), m.grid()[i], m.q_interval(i));
        rs[i] = m.r_interval(i) * ts - (1.0 - alpha) * u[i];
    }
    return rs;
}

double expected_rs(const Mechanism& m, const Prior& prior) { return expected_rs(m, prior, m.env().alpha()); }

double expected_rs(const Mechanism& m, const Prior& prior, double alpha)
{
    if (!m.grid().same_as(prior.grid())) throw ContractError("expected_rs: prior and mechanism grids differ");
    std::vector<double> rs = rs_profile_intervals(m, alpha);
    double total = 0.0;
    for (std::size_t i = 1; i < rs.size(); ++i) total += prior.mass()[i] * rs[i];
    return total;
}

} // namespace regmech
