#pragma once

#include "regmech/mechanism.hpp"
#include "regmech/transforms.hpp"

#include <optional>
#include <string>
#include <vector>

namespace regmech {

enum class Relation { Dominates, DominatedBy, Equal, Incomparable };

std::string to_string(Relation r);

struct DominanceVerdict {
    Relation relation = Relation::Equal;
    std::vector<std::size_t> strict_knots; ///< knots where the two RS values differ
    double min_gap = 0.0;                  ///< min over knots of RS(a) - RS(b)
    double max_gap = 0.0;
    double slack = 0.0;                    ///< shortfall of a below b tolerated as grid error
};

/// Relation of a to b under the environment alpha of a.
DominanceVerdict compare(const Mechanism& a, const Mechanism& b);
/// With slack > 0, gaps in [-slack, 0) do not count against a.
DominanceVerdict compare(const Mechanism& a, const Mechanism& b, double alpha, double slack = 0.0);

enum class Status { Dominated, Undominated, Unknown };

std::string to_string(Status s);

struct Diagnostics {
    bool floor_randomized = false;
    bool dd = false;
    bool strict_dd = false;
    bool left_continuous = false;
    std::string fr_clause; ///< first failing clause of the partition check
};

struct Classification {
    Status status = Status::Unknown;
    std::optional<Mechanism> witness;
    std::string witness_source; ///< operation that produced the witness
    std::optional<PerturbationParams> perturbation;
    double slack = 0.0; ///< grid tolerance used when verifying the witness
    Diagnostics diagnostics;
};

struct ClassifyOptions {
    bool witness_search = false;
    unsigned jobs = 1;
};

Diagnostics diagnose(const Mechanism& m);

Classification classify(const Mechanism& m, const ClassifyOptions& opts = {});

struct WitnessSearchResult {
    std::optional<Mechanism> witness;
    std::optional<PerturbationParams> params;
    double slack = 0.0;
    std::size_t candidates = 0;
};

/// Scans perturbations of efficient segments in lexicographic (theta_l, theta_h, -eps) order.
/// A candidate is accepted when it dominates up to perturbation_grid_error.
WitnessSearchResult perturbation_witness_search(const Mechanism& m, unsigned jobs = 1);

struct NestingReport {
    DominanceVerdict witness_high;
    DominanceVerdict meet_high;
    DominanceVerdict meet_low;
    bool meet_was_identity = false;
    bool product_below_input = false;
    std::optional<Mechanism> meet_witness;

    bool ok() const
    {
        return witness_high.relation == Relation::Dominates && meet_high.relation == Relation::Dominates &&
               meet_low.relation == Relation::Dominates && product_below_input;
    }
};

/// Checks that a witness at alpha_high, met with m, still dominates m at alpha_low.
/// A perturbation witness is compared with its grid-error slack at each alpha.
NestingReport alpha_nesting_check(const Mechanism& m, double alpha_high, double alpha_low,
                                  const std::optional<Mechanism>& witness,
                                  const std::optional<PerturbationParams>& perturbation = std::nullopt);

} // namespace regmech
