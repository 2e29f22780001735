#include "qrc/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrc/errors.hpp"
#include "qrc/quadrature.hpp"

namespace qrc {

namespace {

void basic_validate(const ReliabilitySpec& rs) {
    if (rs.failed_boost < 0.0)
        throw model_error("failed_boost must be nonnegative");
    if (rs.q < 0.0) throw model_error("q must be nonnegative");
    if (!(rs.k > 1.0)) throw model_error("k must exceed 1");
}

// phi <= cycle hazard <= Q - extra on the validation grid; violations name
// the phase and the grid point
void check_cycle_bracket(const std::string& phase,
                         const GeneralizedIntensity& cycle,
                         const GeneralizedIntensity& phi,
                         const GeneralizedIntensity& Q, double extra) {
    const double hi = std::min(DistributionView(Q).truncation_point(), 200.0);
    std::vector<double> grid;
    for (int i = 0; i <= 256; ++i) grid.push_back(hi * i / 256.0);
    for (double b : phi.breakpoints())
        if (b < hi) grid.push_back(b);
    for (double b : Q.breakpoints())
        if (b < hi) grid.push_back(b);
    for (double s : grid) {
        const double h = cycle.hazard(s);
        const double tol = 1e-9 * (1.0 + std::fabs(h));
        if (phi.hazard(s) > h + tol) {
            std::ostringstream os;
            os << phase << " cycle hazard falls below phi at s=" << s;
            throw model_error(os.str());
        }
        if (h + extra > Q.hazard(s) + tol) {
            std::ostringstream os;
            os << phase << " cycle hazard (with boost) exceeds Q at s=" << s;
            throw model_error(os.str());
        }
    }
}

}  // namespace

void validate(const ReliabilitySpec& rs) {
    basic_validate(rs);
    (void)to_process_spec(rs);  // full bracket and assumption grid
}

GeneralizedIntensity compose_cycle(const GeneralizedIntensity& work,
                                   const GeneralizedIntensity& repair) {
    if (!work.atoms().empty() || !repair.atoms().empty())
        throw model_error("cycle composition requires continuous phases");
    const double cap = 1e4;

    // knots at proxy quantiles of the sum (comonotone quantile addition):
    // dense wherever either phase's quantile function is dense
    std::vector<double> us;
    for (int i = 1; i <= 480; ++i) us.push_back(0.998 * i / 480.0);
    for (double g = 2e-3; g > 1e-11; g *= 0.8) us.push_back(1.0 - g);
    std::sort(us.begin(), us.end());
    std::vector<double> knots;
    for (double u : us) {
        const double t = work.quantile(u) + repair.quantile(u);
        if (!std::isfinite(t))
            throw model_error("cycle phases must be proper laws");
        if (t >= cap) {
            knots.push_back(cap);
            break;
        }
        knots.push_back(t);
    }
    // exact anchor: H(0) = 0, and the sum of two continuous laws has zero
    // density at the edge of its support, so lambda(0) = 0 as well; without
    // it the below-grid extension would extrapolate a negative H at 0
    std::vector<double> ts = {0.0}, lams = {0.0}, Hs = {0.0};
    const std::vector<double> bw = work.breakpoints();
    const std::vector<double> br = repair.breakpoints();
    double prevF = 0.0;
    bool covered = false;
    for (double t : knots) {
        if (!ts.empty() && t <= ts.back() + 1e-12 * (1.0 + ts.back())) continue;
        std::vector<double> cuts = bw;
        for (double b : br) cuts.push_back(t - b);
        cuts.push_back(0.5 * t);
        const double F = std::clamp(
            integrate([&](double w) { return work.density(w) *
                                             repair.cdf(t - w); },
                      0.0, t, cuts)
                .value,
            prevF, 1.0 - 1e-14);
        const double f = std::max(
            0.0, integrate([&](double w) { return work.density(w) *
                                                  repair.density(t - w); },
                           0.0, t, cuts)
                     .value);
        prevF = F;
        ts.push_back(t);
        lams.push_back(f / (1.0 - F));
        Hs.push_back(-std::log1p(-F));
        if (F >= 1.0 - 1e-10) {
            covered = true;
            break;
        }
    }
    if (ts.size() < 8) throw numeric_error("cycle composition grid degenerate");
    for (std::size_t j = 1; j < Hs.size(); ++j)
        Hs[j] = std::max(Hs[j], Hs[j - 1]);

    HazardTerm term;
    term.shape = HazardShape::spline;
    term.params.push_back(static_cast<double>(ts.size()));
    term.params.insert(term.params.end(), ts.begin(), ts.end());
    term.params.insert(term.params.end(), lams.begin(), lams.end());
    term.params.insert(term.params.end(), Hs.begin(), Hs.end());
    GeneralizedIntensity out({term}, {});

    if (covered) {
        // phase-sum invariant; skipped when the grid was tail-capped
        const double mw = moment(work, 1.0), mr = moment(repair, 1.0);
        if (std::isfinite(mw) && std::isfinite(mr)) {
            const double mc = moment(out, 1.0);
            if (!(std::fabs(mc - mw - mr) <= 1e-4 * (mw + mr))) {
                std::ostringstream os;
                os << "cycle composition drifted: mean " << mc << " vs "
                   << mw + mr;
                throw numeric_error(os.str());
            }
        }
    }
    return out;
}

ProcessSpec to_process_spec(const ReliabilitySpec& rs) {
    basic_validate(rs);
    GeneralizedIntensity main_cycle = compose_cycle(rs.main_work, rs.main_repair);
    GeneralizedIntensity res_cycle =
        compose_cycle(rs.reserve_work, rs.reserve_repair);
    check_cycle_bracket("main", main_cycle, rs.phi, rs.Q, 0.0);
    check_cycle_bracket("reserve", res_cycle, rs.phi, rs.Q, rs.failed_boost);

    const double fail_at = rs.failure_elapsed > 0.0
                               ? rs.failure_elapsed
                               : rs.main_work.quantile(0.5);

    ProcessSpec spec;
    spec.m = 2;
    spec.phi = rs.phi;
    spec.Q = rs.Q;
    spec.k = rs.k;
    if (rs.q > 0.0) spec.q = [v = rs.q](double) { return v; };

    auto excess = [phi = rs.phi](const GeneralizedIntensity& cyc) {
        return [cyc, phi](double s) {
            return std::max(0.0, cyc.hazard(s) - phi.hazard(s));
        };
    };
    const auto e_main = excess(main_cycle);
    const auto e_res = excess(res_cycle);

    MuFn mu_main;
    mu_main.fn = [e_main](const std::vector<double>& x) { return e_main(x[0]); };
    mu_main.upper_of_own = e_main;
    mu_main.lower_of_own = e_main;

    MuFn mu_res;
    mu_res.fn = [e_res, boost = rs.failed_boost,
                 fail_at](const std::vector<double>& x) {
        return e_res(x[1]) + (x[0] >= fail_at ? boost : 0.0);
    };
    mu_res.upper_of_own = [e_res, boost = rs.failed_boost](double s) {
        return e_res(s) + boost;
    };
    mu_res.lower_of_own = e_res;

    spec.mu = {mu_main, mu_res};
    validate(spec);
    return spec;
}

bool ReliabilityReport::all_pass() const {
    return !degraded && verification.all_pass();
}

ReliabilityReport analyze(const ReliabilitySpec& rs,
                          const std::vector<double>& orders, long runs,
                          std::uint64_t seed, int threads) {
    if (orders.empty()) throw model_error("analyze needs at least one order");
    ReliabilityReport rep;
    const ProcessSpec spec = to_process_spec(rs);
    for (double N : orders) rep.xi.emplace_back(N, xi_bound(spec, N));
    try {
        rep.theta = optimize_theta(spec, orders.front()).theta;
    } catch (const numeric_error& e) {
        rep.degraded = true;
        rep.note = e.what();
    }
    for (double N : orders) {
        KBreakdown kb;
        if (rep.degraded) {
            kb.K = kInf;
            kb.finite = false;
            kb.failing_term = "Xi(1)";
        } else if (N > spec.k - 1.0 + 1e-12) {
            kb.K = kInf;
            kb.finite = false;
            kb.failing_term = "order beyond k-1";
        } else {
            kb = convergence_constant(spec, N, rep.theta);
        }
        rep.K.emplace_back(N, kb);
    }
    if (rep.degraded) {
        rep.note += "; Monte Carlo verification skipped";
        return rep;
    }
    const double xi1 = xi_bound(spec, 1.0);
    ExperimentPlan plan;
    plan.spec = spec;
    plan.probes = {xi1, 2.5 * xi1, 5.0 * xi1};
    plan.runs = runs;
    plan.seed = seed;
    plan.N_orders = orders;
    plan.Theta = rep.theta;
    plan.threads = threads;
    rep.verification =
        run_verification(plan, {xi1, 0.5 * xi1}, {0.0, 0.0});
    return rep;
}

std::string reliability_summary(const ReliabilityReport& rep) {
    std::ostringstream os;
    os.precision(8);
    os << "Theta = " << rep.theta << '\n';
    for (const auto& [N, v] : rep.xi) os << "Xi(" << N << ") = " << v << '\n';
    for (const auto& [N, kb] : rep.K) {
        os << "K(" << N << ") = ";
        if (kb.finite)
            os << kb.K;
        else
            os << "inf (" << kb.failing_term << ")";
        os << '\n';
    }
    if (rep.degraded)
        os << "bounds infeasible: " << rep.note << "\nRESULT: DEGRADED\n";
    else
        os << report_summary(rep.verification);
    return os.str();
}

}  // namespace qrc
