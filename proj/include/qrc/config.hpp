#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrc/reliability.hpp"
#include "qrc/verify.hpp"

namespace qrc {

// Declarative, serializable modulation handle. kind is one of
//   zero        mu = 0
//   constant    mu = c
//   saturating  mu = c * u / (1 + u), u = sum_j weights[j] * x_j
// The saturating form is bounded by c, which is what the envelope checks
// need; weights must have one entry per component.
struct MuConfig {
    std::string kind = "zero";
    double c = 0.0;
    std::vector<double> weights;

    bool operator==(const MuConfig&) const = default;
};

MuFn make_mu(const MuConfig& mc, std::size_t m);

// One parsed "qrc-config-1" document: a model (plain or reliability) plus
// experiment defaults the CLI may override.
struct RunConfig {
    std::size_t m = 1;
    GeneralizedIntensity phi;
    GeneralizedIntensity Q;
    double q = 0.0;
    double k = 2.0;
    std::vector<MuConfig> mu;

    bool has_reliability = false;
    ReliabilitySpec reliability;

    std::vector<double> probes = {5.0, 10.0, 20.0};
    long runs = 1000;
    std::uint64_t seed = 0;
    int bins = 16;
    std::vector<double> orders = {1.0};
    double theta = 0.0;  // <= 0 means optimize
    int threads = 1;
    double horizon_factor = 1000.0;
    std::vector<double> a;      // start states for coupling checks
    std::vector<double> a_hat;  // empty -> subcommand defaults
};

// Throws config_error with a field path on any schema violation.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical serialization; parse(canonical_config(c)) reproduces the model
// and experiment exactly.
std::string canonical_config(const RunConfig& cfg);

ProcessSpec to_process_spec(const RunConfig& cfg);
ExperimentPlan to_plan(const RunConfig& cfg);

}  // namespace qrc
