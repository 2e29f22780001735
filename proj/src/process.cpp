#include "qrc/process.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrc/errors.hpp"

namespace qrc {

namespace {

constexpr long kEventGuard = 100000000L;
constexpr double kAtomTol = 1e-9;

const Atom* atom_near(const GeneralizedIntensity& gi, double at) {
    for (const auto& a : gi.atoms())
        if (std::fabs(a.at - at) <= kAtomTol * std::max(1.0, std::fabs(at)))
            return &a;
    return nullptr;
}

// majorant of the eta (mu) part: hazard Q - phi as signed terms, no atoms
GeneralizedIntensity eta_majorant(const ProcessSpec& spec) {
    std::vector<HazardTerm> terms = spec.Q.terms();
    for (HazardTerm t : spec.phi.terms()) {
        t.coeff = -t.coeff;
        terms.push_back(std::move(t));
    }
    return GeneralizedIntensity(std::move(terms), {});
}

}  // namespace

ProcessState make_state(const ProcessSpec& spec, std::vector<double> x0) {
    ProcessState s;
    if (x0.empty()) x0.assign(spec.m, 0.0);
    if (x0.size() != spec.m) throw model_error("initial state size != m");
    for (double v : x0)
        if (v < 0.0) throw model_error("negative elapsed time");
    s.x = std::move(x0);
    s.counts.assign(spec.m, 0);
    return s;
}

Event step(ProcessState& state, const ProcessSpec& spec, RngStream& rng) {
    const std::size_t m = spec.m;
    if (state.x.size() != m) throw model_error("state size != m");
    for (long guard = 0; guard < 10000000L; ++guard) {
        double best = kInf;
        std::size_t bi = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const double v = sample(residual_intensity(spec.Q, state.x[i]), rng);
            if (v < best) {
                best = v;
                bi = i;
            }
        }
        if (best == kInf)
            throw model_error("no further majorant events; process stalled");
        const double x_before = state.x[bi];
        state.t += best;
        for (std::size_t i = 0; i < m; ++i) state.x[i] += best;
        const double s = state.x[bi];

        double pacc;
        const Atom* qa = atom_near(spec.Q, s);
        const Atom* fa = qa ? atom_near(spec.phi, s) : nullptr;
        // a candidate exactly on a Q-atom is a jump proposal; acceptance is
        // the ratio of conditional jump masses
        const bool at_atom =
            qa && std::fabs((x_before + best) - s) <= kAtomTol &&
            [&] {
                const auto res = residual_intensity(spec.Q, x_before);
                for (const auto& a : res.atoms())
                    if (best == a.at) return true;
                return false;
            }();
        if (at_atom) {
            pacc = fa ? fa->mass / qa->mass : 0.0;
        } else {
            const double qh = spec.Q.hazard(s);
            const double th = spec.phi.hazard(s) + spec.mu_value(bi, state.x);
            if (th > qh * (1.0 + 1e-9) + 1e-12) {
                std::ostringstream os;
                os << "majorant violated at runtime: component " << bi
                   << ", elapsed " << s << ", intensity " << th << " > Q "
                   << qh;
                throw model_error(os.str());
            }
            pacc = qh > 0.0 ? std::min(1.0, th / qh) : 0.0;
        }
        if (pacc > 1.0 + 1e-9)
            throw model_error("atom acceptance ratio exceeds 1");
        if (pacc >= 1.0 || rng.uniform() < pacc) {
            state.x[bi] = 0.0;
            ++state.counts[bi];
            const Event e{state.t, bi};
            if (state.log_events) state.event_log.push_back(e);
            return e;
        }
    }
    throw numeric_error("thinning rejection guard exceeded");
}

SimulationTrace simulate_until(ProcessState& state, const ProcessSpec& spec,
                               double horizon, RngStream& rng,
                               const std::vector<double>& probes) {
    SimulationTrace trace;
    trace.probes = probes;
    trace.final_t = state.t;
    if (!(horizon > state.t)) return trace;

    std::size_t pi = 0;
    while (pi < probes.size() && probes[pi] < state.t) ++pi;
    long events = 0;
    while (state.t < horizon) {
        const double t_prev = state.t;
        const std::vector<double> x_prev = state.x;
        const Event e = step(state, spec, rng);
        if (++events > kEventGuard)
            throw numeric_error("runaway intensity: event guard exceeded");
        const double cut = std::min(e.time, horizon);
        for (; pi < probes.size() && probes[pi] <= cut; ++pi) {
            std::vector<double> b(spec.m);
            for (std::size_t i = 0; i < spec.m; ++i)
                b[i] = x_prev[i] + (probes[pi] - t_prev);
            trace.backward.push_back(std::move(b));
        }
        if (e.time > horizon) {
            // the event falls beyond the horizon: unwind it and park the
            // state exactly at the horizon (law-consistent by residual
            // re-sampling on any continuation)
            --state.counts[e.component];
            if (state.log_events) state.event_log.pop_back();
            for (std::size_t i = 0; i < spec.m; ++i)
                state.x[i] = x_prev[i] + (horizon - t_prev);
            state.t = horizon;
            break;
        }
        trace.events.push_back(e);
    }
    trace.final_t = state.t;
    return trace;
}

// --- Coupled construction ---------------------------------------------------

PairedState make_paired(const ProcessSpec& spec, const std::vector<double>& a,
                        const std::vector<double>& a_hat, double Theta,
                        RngStream& rng) {
    if (a.size() != spec.m || a_hat.size() != spec.m)
        throw model_error("initial elapsed-time lists must have size m");
    PairedState p;
    p.Theta = Theta;
    p.renewed_at = {std::vector<double>(spec.m), std::vector<double>(spec.m)};
    p.zeta_at = p.renewed_at;
    p.eta_at = p.renewed_at;
    const GeneralizedIntensity g = eta_majorant(spec);
    for (std::size_t i = 0; i < spec.m; ++i) {
        p.renewed_at[0][i] = -a[i];
        p.renewed_at[1][i] = -a_hat[i];
    }
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < spec.m; ++i) {
            const double x = p.elapsed(c, i);
            p.zeta_at[c][i] = sample(residual_intensity(spec.phi, x), rng);
            p.eta_at[c][i] = sample(residual_intensity(g, x), rng);
        }
    if (a == a_hat) {
        p.coupled = true;
        p.tau = 0.0;
        p.renewed_at[1] = p.renewed_at[0];
        p.zeta_at[1] = p.zeta_at[0];
        p.eta_at[1] = p.eta_at[0];
    }
    return p;
}

namespace {

struct NextEvent {
    double time = kInf;
    std::size_t copy = 0, comp = 0;
    bool is_eta = false;
};

NextEvent find_next(const PairedState& p, std::size_t copies) {
    NextEvent e;
    for (std::size_t c = 0; c < copies; ++c)
        for (std::size_t i = 0; i < p.zeta_at[c].size(); ++i) {
            if (p.zeta_at[c][i] < e.time)
                e = {p.zeta_at[c][i], c, i, false};
            if (p.eta_at[c][i] < e.time) e = {p.eta_at[c][i], c, i, true};
        }
    return e;
}

// renewal of one component: reset the clock, draw fresh zeta/eta
void renew(PairedState& p, const ProcessSpec& spec,
           const GeneralizedIntensity& g, std::size_t c, std::size_t i,
           double at, RngStream& rng) {
    p.renewed_at[c][i] = at;
    p.zeta_at[c][i] = at + sample(spec.phi, rng);
    p.eta_at[c][i] = at + sample(g, rng);
}

void mirror(PairedState& p) {
    p.renewed_at[1] = p.renewed_at[0];
    p.zeta_at[1] = p.zeta_at[0];
    p.eta_at[1] = p.eta_at[0];
}

// advance a coupled (mirrored) pair: only copy 0 is simulated
void advance_mirrored(PairedState& p, const ProcessSpec& spec,
                      const GeneralizedIntensity& g, RngStream& rng,
                      double t_stop) {
    long events = 0;
    while (true) {
        const NextEvent e = find_next(p, 1);
        if (e.time > t_stop) {
            p.t = t_stop;
            mirror(p);
            return;
        }
        if (++events > kEventGuard)
            throw numeric_error("runaway intensity in coupled run");
        p.t = e.time;
        if (e.is_eta) {
            const double x = p.elapsed(0, e.comp);
            std::vector<double> xs(spec.m);
            for (std::size_t j = 0; j < spec.m; ++j) xs[j] = p.elapsed(0, j);
            const double gh = g.hazard(x);
            const double mu = spec.mu_value(e.comp, xs);
            if (mu > gh * (1.0 + 1e-9) + 1e-12)
                throw model_error("mu exceeds its majorant Q - phi");
            if (gh > 0.0 && rng.uniform() < mu / gh)
                renew(p, spec, g, 0, e.comp, e.time, rng);
            else
                p.eta_at[0][e.comp] =
                    e.time + sample(residual_intensity(g, x), rng);
        } else {
            renew(p, spec, g, 0, e.comp, e.time, rng);
        }
    }
}

}  // namespace

void coupled_step(PairedState& pair, const ProcessSpec& spec,
                  const CouplerFactory& factory, RngStream& rng,
                  double t_stop) {
    const GeneralizedIntensity g = eta_majorant(spec);
    if (pair.coupled) {
        advance_mirrored(pair, spec, g, rng, t_stop);
        return;
    }
    const std::size_t m = spec.m;

    if (!pair.epoch_open) {
        EpochRecord rec;
        rec.theta = pair.t;
        bool cond = true;
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < m; ++i)
                if (pair.elapsed(c, i) > pair.Theta) cond = false;
        rec.condition_held = cond;
        pair.shared_v = kInf;
        if (cond) {
            std::vector<DistributionView> laws;
            laws.reserve(2 * m);
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    laws.emplace_back(
                        residual_intensity(spec.phi, pair.elapsed(c, i)));
            JointDraw d;
            try {
                d = factory(laws).joint_sample(rng);
            } catch (const std::exception& ex) {
                std::ostringstream os;
                os << "coupler construction failed at theta=" << pair.t << ": "
                   << ex.what();
                throw numeric_error(os.str());
            }
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    pair.zeta_at[c][i] = pair.t + d.values[c * m + i];
            rec.coincided = d.coincided;
            if (d.coincided) pair.shared_v = pair.t + d.values[0];
        } else {
            // independent redraw; law-preserving by residual consistency
            for (std::size_t c = 0; c < 2; ++c)
                for (std::size_t i = 0; i < m; ++i)
                    pair.zeta_at[c][i] =
                        pair.t + sample(residual_intensity(
                                            spec.phi, pair.elapsed(c, i)),
                                        rng);
        }
        pair.open_rec = rec;
        pair.first_renewal = {std::vector<double>(m, kInf),
                              std::vector<double>(m, kInf)};
        pair.epoch_open = true;
    }

    long events = 0;
    while (true) {
        bool all_set = true;
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < m; ++i)
                if (pair.first_renewal[c][i] == kInf) all_set = false;
        if (all_set) break;

        const NextEvent e = find_next(pair, 2);
        if (e.time > t_stop) {
            pair.t = t_stop;
            return;  // epoch stays open; resumable
        }
        if (e.time == kInf)
            throw model_error("paired process stalled (defective laws)");
        if (++events > kEventGuard)
            throw numeric_error("runaway intensity in coupled run");
        pair.t = e.time;
        bool renewed = false;
        if (e.is_eta) {
            const double x = pair.elapsed(e.copy, e.comp);
            std::vector<double> xs(m);
            for (std::size_t j = 0; j < m; ++j) xs[j] = pair.elapsed(e.copy, j);
            const double gh = g.hazard(x);
            const double mu = spec.mu_value(e.comp, xs);
            if (mu > gh * (1.0 + 1e-9) + 1e-12)
                throw model_error("mu exceeds its majorant Q - phi");
            if (gh > 0.0 && rng.uniform() < mu / gh)
                renewed = true;
            else
                pair.eta_at[e.copy][e.comp] =
                    e.time + sample(residual_intensity(g, x), rng);
        } else {
            renewed = true;
        }
        if (renewed) {
            renew(pair, spec, g, e.copy, e.comp, e.time, rng);
            if (pair.first_renewal[e.copy][e.comp] == kInf)
                pair.first_renewal[e.copy][e.comp] = e.time;
        }
    }

    // epoch complete: theta_l = max first renewal time (== pair.t)
    EpochRecord rec = pair.open_rec;
    bool success = rec.coincided;
    for (std::size_t c = 0; c < 2 && success; ++c)
        for (std::size_t i = 0; i < m; ++i)
            if (pair.first_renewal[c][i] != pair.shared_v) success = false;
    rec.success = success;
    pair.epochs.push_back(rec);
    pair.epoch_open = false;
    if (success) {
        // both copies renewed everywhere at the same instant: the all-zeros
        // state is hit simultaneously, mirror from here on
        pair.coupled = true;
        pair.tau = pair.shared_v;
        mirror(pair);
    }
}

CouplingResult coupling_epoch(const std::vector<double>& a,
                              const std::vector<double>& a_hat,
                              const ProcessSpec& spec, RngStream& rng,
                              double max_horizon, double Theta) {
    if (!(max_horizon < kInf)) throw model_error("max_horizon must be finite");
    PairedState p = make_paired(spec, a, a_hat, Theta, rng);
    const CouplerFactory factory = [](const std::vector<DistributionView>& l) {
        return MaximalCoupler::build(l);
    };
    long guard = 0;
    while (!p.coupled && p.t < max_horizon) {
        coupled_step(p, spec, factory, rng, max_horizon);
        if (++guard > kEventGuard)
            throw numeric_error("coupling run exceeded the epoch guard");
    }
    CouplingResult r;
    r.epochs = std::move(p.epochs);
    if (p.coupled && p.tau <= max_horizon) {
        r.tau = p.tau;
        r.censored = false;
    } else {
        r.tau = max_horizon;
        r.censored = true;
    }
    return r;
}

std::pair<std::vector<double>, std::vector<double>> paired_backward_at(
    const ProcessSpec& spec, const std::vector<double>& a,
    const std::vector<double>& a_hat, double t_probe, double Theta,
    RngStream& rng) {
    PairedState p = make_paired(spec, a, a_hat, Theta, rng);
    const CouplerFactory factory = [](const std::vector<DistributionView>& l) {
        return MaximalCoupler::build(l);
    };
    long guard = 0;
    while (p.t < t_probe) {
        coupled_step(p, spec, factory, rng, t_probe);
        if (++guard > kEventGuard)
            throw numeric_error("paired run exceeded the epoch guard");
    }
    std::vector<double> b0(spec.m), b1(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        b0[i] = t_probe - p.renewed_at[0][i];
        b1[i] = t_probe - p.renewed_at[1][i];
    }
    return {std::move(b0), std::move(b1)};
}

}  // namespace qrc
