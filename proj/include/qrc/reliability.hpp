#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qrc/bounds.hpp"
#include "qrc/intensity.hpp"
#include "qrc/verify.hpp"

namespace qrc {

// Two-element repairable system: a main element alternating work and repair
// phases, plus a reserve whose hazard is raised while the main is down.
// Each element's full cycle (work then repair) is one renewal; the bracket
// pair phi/Q and the floor q play the same role as in ProcessSpec.
struct ReliabilitySpec {
    GeneralizedIntensity main_work;
    GeneralizedIntensity main_repair;
    GeneralizedIntensity reserve_work;
    GeneralizedIntensity reserve_repair;
    double failed_boost = 0.0;  // extra reserve hazard while the main is down

    GeneralizedIntensity phi;  // shared lower bracket
    GeneralizedIntensity Q;    // shared majorant
    double q = 0.0;            // constant floor of the modulation
    double k = 2.0;

    // the main element is treated as down once its elapsed cycle time passes
    // this point; <= 0 selects the median work duration
    double failure_elapsed = 0.0;
};

void validate(const ReliabilitySpec& rs);

// Law of one full cycle (work + repair, independent phases) as a single
// renewal law: the convolution CDF/density are tabulated on a grid sized by
// both phases' quantile ranges and stored as a cumulative-hazard spline.
// Phases must be continuous (no atoms) and proper.
GeneralizedIntensity compose_cycle(const GeneralizedIntensity& work,
                                   const GeneralizedIntensity& repair);

// m = 2 bracketed spec: component 0 renews with the main element's cycle
// law, component 1 with the reserve's, plus failed_boost on main-down
// states. Throws model_error naming the phase and grid point on a bracket
// violation.
ProcessSpec to_process_spec(const ReliabilitySpec& rs);

struct ReliabilityReport {
    double theta = 0.0;
    std::vector<std::pair<double, double>> xi;       // (order, Xi(order))
    std::vector<std::pair<double, KBreakdown>> K;    // (order, breakdown)
    bool degraded = false;  // bounds infeasible; Monte Carlo skipped
    std::string note;
    VerificationReport verification;

    bool all_pass() const;
};

// Full pipeline: bounds at the optimized threshold, then the verify-module
// checks on the induced two-component process. An infinite Xi(1) (heavy
// tails beyond the k assumption) degrades to a bounds-only report with +inf
// sentinels instead of failing.
ReliabilityReport analyze(const ReliabilitySpec& rs,
                          const std::vector<double>& orders, long runs,
                          std::uint64_t seed, int threads = 1);

std::string reliability_summary(const ReliabilityReport& report);

}  // namespace qrc
