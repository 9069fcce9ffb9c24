#pragma once

#include "regmech/market.hpp"
#include "regmech/mechanism.hpp"

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace regmech {

/// Grid density with trapezoid normalization and its trapezoid-accumulated CDF.
/// mass()[i] is the probability of (theta_{i-1}, theta_i]; mass()[0] is zero.
class Prior {
public:
    /// Renormalizes `density` so its trapezoid integral is one.
    Prior(std::shared_ptr<const TypeGrid> grid, std::vector<double> density, std::string name = "custom");

    static Prior uniform(std::shared_ptr<const TypeGrid> grid);
    /// Density proportional to theta - theta_low.
    static Prior triangular_increasing(std::shared_ptr<const TypeGrid> grid);
    /// Tent of the given half width centred at `center` (clipped to the grid).
    static Prior narrow_triangular(std::shared_ptr<const TypeGrid> grid, double center, double half_width);
    /// Uniform on [lo, hi]; zero elsewhere.
    static Prior uniform_on(std::shared_ptr<const TypeGrid> grid, double lo, double hi);
    /// Linear interpolation of (theta, density) points, constant beyond the ends.
    static Prior interpolated(std::shared_ptr<const TypeGrid> grid, const std::vector<std::pair<double, double>>& pts,
                              std::string name = "csv");

    const TypeGrid& grid() const { return *grid_; }
    const std::shared_ptr<const TypeGrid>& grid_ptr() const { return grid_; }
    const std::vector<double>& density() const { return density_; }
    const std::vector<double>& cdf() const { return cdf_; }
    const std::vector<double>& mass() const { return mass_; }

    /// Prior given directly by interval masses (index 0 ignored); density is the step mass / width.
    static Prior from_interval_masses(std::shared_ptr<const TypeGrid> grid, std::vector<double> mass,
                                      std::string name = "discrete");
    const std::string& name() const { return name_; }

private:
    std::shared_ptr<const TypeGrid> grid_;
    std::vector<double> density_;
    std::vector<double> cdf_;
    std::vector<double> mass_;
    std::string name_;

    Prior() = default;
    void set_masses_from_cdf();
};

/// True iff G(theta_i) <= G'(theta_i) at every knot (G weakly dominates G').
bool fosd(const Prior& g, const Prior& g_prime);

/// Sum of interval mass times RS from interval values (overrides ignored).
double expected_rs(const Mechanism& m, const Prior& prior);
double expected_rs(const Mechanism& m, const Prior& prior, double alpha);

/// RS at each knot from interval values only.
std::vector<double> rs_profile_intervals(const Mechanism& m, double alpha);

} // namespace regmech
