#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrc/bounds.hpp"
#include "qrc/process.hpp"

namespace qrc {

struct ExperimentPlan {
    ProcessSpec spec;
    std::vector<double> probes;      // positive, increasing
    long runs = 1000;                // >= 100
    std::uint64_t seed = 0;
    int bins = 16;                   // >= 16, histogram resolution for TV
    std::vector<double> N_orders = {1.0};
    double Theta = 0.0;              // <= 0 means optimize automatically
    int threads = 1;
    double horizon_factor = 1000.0;  // coupling horizon = factor * Xi(1)
};

void validate(const ExperimentPlan& plan);

// resolved threshold: plan.Theta when positive, otherwise the optimizer's
double resolve_theta(const ExperimentPlan& plan);

struct CheckRecord {
    std::string name;
    double bound = 0.0;
    double empirical = 0.0;
    double half_width = 0.0;  // 3 sigma
    std::string verdict;      // pass | fail | inconclusive | skipped
    std::string note;
};

struct TVPoint {
    double t = 0.0;
    double tv = 0.0;          // histogram TV between the two start laws
    double tv_half_width = 0.0;
    double tau_tail = 0.0;    // empirical P{tau > t}
    double tau_half_width = 0.0;
};

struct VerificationReport {
    std::vector<CheckRecord> records;
    std::vector<TVPoint> tv_curve;

    bool all_pass() const;  // false iff any record failed (not inconclusive)
};

// Empirical E B_t^N across runs vs Xi(N), per probe and order. Orders
// beyond k-1 produce skipped records.
std::vector<CheckRecord> check_lorden(const ExperimentPlan& plan);

// Empirical E tau^N (censored runs counted at the horizon: a lower
// estimate) vs T(a...)_N. Censoring above 50% makes the verdict
// inconclusive; censoring is always recorded.
std::vector<CheckRecord> check_coupling_epoch(const ExperimentPlan& plan,
                                              const std::vector<double>& a,
                                              const std::vector<double>& a_hat);

// Product-histogram TV between the laws of the backward-time state started
// at a vs a_hat, against the coupling-tail estimate and K(N)/t^N.
struct TVResult {
    std::vector<TVPoint> curve;
    std::vector<CheckRecord> records;
};
TVResult estimate_tv_decay(const ExperimentPlan& plan,
                           const std::vector<double>& a,
                           const std::vector<double>& a_hat);

// Empirical CDF of B at the largest probe vs the clamped Psi bound on an
// s-grid. (Psi bounds the distribution function; the tail is bounded below
// by 1 - Psi.)
std::vector<CheckRecord> check_stationary_tail(const ExperimentPlan& plan);

// Runs every check and asserts coverage: each analytic bound family
// (Xi, T, K, Psi, pi) must appear in at least one record.
VerificationReport run_verification(const ExperimentPlan& plan,
                                    const std::vector<double>& a,
                                    const std::vector<double>& a_hat);

std::string report_to_csv(const VerificationReport& report);
std::string report_summary(const VerificationReport& report);
void write_report_csv(const VerificationReport& report, const std::string& path);
void write_summary(const VerificationReport& report, const std::string& path);

namespace detail {

// equal-mass bin edges (interior) from pooled per-dimension samples
std::vector<double> quantile_edges(std::vector<double> pooled, int bins);

// product-histogram total variation between two equally-sized samples of
// m-vectors; returns {tv, half_width, undersampled}
struct TVEstimate {
    double tv = 0.0;
    double half_width = 0.0;
    bool undersampled = false;
};
TVEstimate histogram_tv(const std::vector<std::vector<double>>& sa,
                        const std::vector<std::vector<double>>& sb, int bins);

}  // namespace detail

}  // namespace qrc
