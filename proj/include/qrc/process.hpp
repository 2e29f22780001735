#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "qrc/bounds.hpp"
#include "qrc/coupling.hpp"
#include "qrc/intensity.hpp"
#include "qrc/rng.hpp"

namespace qrc {

struct Event {
    double time = 0.0;
    std::size_t component = 0;
};

// One copy of the m-component quasi-renewal process. Elapsed (backward
// renewal) times are x; counts are per-component renewal counters.
struct ProcessState {
    double t = 0.0;
    std::vector<double> x;
    std::vector<long> counts;
    bool log_events = false;
    std::vector<Event> event_log;
};

ProcessState make_state(const ProcessSpec& spec, std::vector<double> x0 = {});

// Advances to the next renewal of any component by thinning against the
// per-component majorant: candidates are drawn from the Q-residual law,
// continuous candidates accepted with (phi(x_i)+mu_i(state))/Q(x_i), Q-atom
// candidates accepted with the ratio of conditional jump masses. Exactly one
// component fires. Throws model_error if an acceptance ratio exceeds 1.
Event step(ProcessState& state, const ProcessSpec& spec, RngStream& rng);

struct SimulationTrace {
    std::vector<Event> events;                // renewals up to the horizon
    std::vector<double> probes;               // requested probe times
    std::vector<std::vector<double>> backward;  // [probe][component] B values
    double final_t = 0.0;
};

// Repeated step() to the horizon; backward-time snapshots are linear
// interpolations between renewals, exact at every probe <= horizon.
// Guards against runaway intensity at 1e8 events.
SimulationTrace simulate_until(ProcessState& state, const ProcessSpec& spec,
                               double horizon, RngStream& rng,
                               const std::vector<double>& probes = {});

// --- Paired / coupled construction ----------------------------------------

struct EpochRecord {
    double theta = 0.0;        // epoch time theta_l
    bool condition_held = false;  // all backward times <= Theta at theta_l
    bool coincided = false;    // joint redraw returned a shared value
    bool success = false;      // condition held, coincided, not preempted
};

using CouplerFactory =
    std::function<MaximalCoupler(const std::vector<DistributionView>&)>;

// Two copies on one clock. Each component keeps its last renewal time plus
// pending zeta (phi-part) and eta (mu-part candidate) event times; elapsed
// time is t - renewed_at.
struct PairedState {
    double t = 0.0;
    double Theta = 0.0;
    // [copy][component]
    std::vector<std::vector<double>> renewed_at;
    std::vector<std::vector<double>> zeta_at;
    std::vector<std::vector<double>> eta_at;
    bool coupled = false;
    double tau = 0.0;
    std::vector<EpochRecord> epochs;

    // mid-epoch bookkeeping; lets coupled_step pause at a t_stop and resume
    bool epoch_open = false;
    EpochRecord open_rec;
    double shared_v = 0.0;  // absolute time of a coincided redraw, +inf if none
    std::vector<std::vector<double>> first_renewal;

    double elapsed(std::size_t copy, std::size_t i) const {
        return t - renewed_at[copy][i];
    }
};

PairedState make_paired(const ProcessSpec& spec, const std::vector<double>& a,
                        const std::vector<double>& a_hat, double Theta,
                        RngStream& rng);

// Advances the pair through one epoch interval [theta_{l-1}, theta_l]:
// tests the Theta-condition, jointly redraws the 2m pending zeta deadlines
// through a MaximalCoupler of the residual phi-laws when it holds, then
// simulates both copies (zeta deadlines preemptible by thinned eta events)
// until every component has renewed once; theta_l is the max of those first
// renewal times. Declares global coupling when a coincided redraw survives
// un-preempted, i.e. both copies renew everywhere simultaneously. Processing
// pauses (resumably) if the next event would pass t_stop.
void coupled_step(PairedState& pair, const ProcessSpec& spec,
                  const CouplerFactory& factory, RngStream& rng,
                  double t_stop = kInf);

struct CouplingResult {
    double tau = 0.0;
    bool censored = false;
    std::vector<EpochRecord> epochs;
};

// coupled_step until global coupling or max_horizon; censored runs are
// reported, never dropped.
CouplingResult coupling_epoch(const std::vector<double>& a,
                              const std::vector<double>& a_hat,
                              const ProcessSpec& spec, RngStream& rng,
                              double max_horizon, double Theta);

// Backward times of both copies at a fixed probe time under the coupled
// construction; after tau the copies are mirrored (bitwise identical).
std::pair<std::vector<double>, std::vector<double>> paired_backward_at(
    const ProcessSpec& spec, const std::vector<double>& a,
    const std::vector<double>& a_hat, double t_probe, double Theta,
    RngStream& rng);

}  // namespace qrc
