#include "qrc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qrc/errors.hpp"

namespace qrc {

// --- ProcessSpec ------------------------------------------------------------

MuFn MuFn::zero() {
    MuFn f;
    f.fn = [](const std::vector<double>&) { return 0.0; };
    f.upper_of_own = [](double) { return 0.0; };
    f.lower_of_own = [](double) { return 0.0; };
    return f;
}

MuFn MuFn::constant(double c) {
    MuFn f;
    f.fn = [c](const std::vector<double>&) { return c; };
    f.upper_of_own = [c](double) { return c; };
    f.lower_of_own = [c](double) { return c; };
    return f;
}

const MuFn& ProcessSpec::mu_of(std::size_t i) const {
    static const MuFn kZero = MuFn::zero();
    if (mu.empty()) return kZero;
    return mu.at(i);
}

double ProcessSpec::mu_value(std::size_t i, const std::vector<double>& x) const {
    const MuFn& f = mu_of(i);
    return f.fn ? f.fn(x) : 0.0;
}

void validate(const ProcessSpec& spec) {
    if (spec.m < 1) throw model_error("component count m must be >= 1");
    if (!spec.mu.empty() && spec.mu.size() != spec.m)
        throw model_error("mu list size does not match m");
    if (spec.k < 2.0) throw model_error("moment order k must be >= 2");

    // Assumption 4: the majorant must be bounded near 0.
    for (double s : {0.0, 1e-6, 1e-4, 1e-3}) {
        const double qv = spec.Q.hazard(s);
        if (!(qv < 1e12)) throw model_error("majorant Q unbounded near 0");
    }

    // Atom dominance: every jump of phi needs an at-least-as-big jump of Q.
    for (const auto& a : spec.phi.atoms()) {
        bool ok = false;
        for (const auto& b : spec.Q.atoms())
            if (std::fabs(b.at - a.at) <= 1e-12 && b.mass >= a.mass - 1e-12)
                ok = true;
        if (!ok) {
            std::ostringstream os;
            os << "phi atom at " << a.at << " not dominated by Q";
            throw model_error(os.str());
        }
    }

    // Bracket grid: phi + mu-upper <= Q and mu-lower >= q per coordinate.
    double S = std::min(DistributionView(spec.Q).truncation_point(), 200.0);
    S = std::max(S, 1.0);
    std::vector<double> grid;
    const int n = 512;
    for (int j = 0; j <= n; ++j) grid.push_back(S * j / n);
    for (double b : spec.phi.breakpoints())
        if (b > 0.0 && b < S) grid.push_back(b);
    for (double b : spec.Q.breakpoints())
        if (b > 0.0 && b < S) grid.push_back(b);

    for (std::size_t i = 0; i < spec.m; ++i) {
        const MuFn& f = spec.mu_of(i);
        for (double s : grid) {
            const double up = f.upper_of_own ? f.upper_of_own(s) : 0.0;
            const double lhs = spec.phi.hazard(s) + up;
            const double rhs = spec.Q.hazard(s);
            if (lhs > rhs * (1.0 + 1e-9) + 1e-9) {
                std::ostringstream os;
                os << "bracket violated for component " << i << " at s=" << s
                   << ": phi+mu=" << lhs << " > Q=" << rhs;
                throw model_error(os.str());
            }
            if (spec.q) {
                const double lo = f.lower_of_own ? f.lower_of_own(s) : 0.0;
                if (lo < spec.q(s) - 1e-9) {
                    std::ostringstream os;
                    os << "minorant violated for component " << i
                       << " at s=" << s;
                    throw model_error(os.str());
                }
            }
        }
    }
}

// --- Lorden quantities ------------------------------------------------------

double classical_lorden(const DistributionView& law) {
    const double m1 = law.moment(1.0);
    const double m2 = law.moment(2.0);
    if (m2 == kInf) return kInf;
    if (!(m1 > 0.0)) throw model_error("law with nonpositive mean");
    return m2 / m1;
}

double xi_bound(const ProcessSpec& spec, double N) {
    if (!(N > 0.0) || N > spec.k - 1.0 + 1e-12)
        throw model_error("order N outside (0, k-1]");
    const double zN = moment(spec.phi, N);
    const double zN1 = moment(spec.phi, N + 1.0);
    if (zN == kInf || zN1 == kInf) return kInf;
    const double exi = moment(spec.Q, 1.0);
    if (!(exi > 0.0) || exi == kInf)
        throw model_error("majorant law has degenerate mean");
    return zN + zN1 / ((N + 1.0) * exi);
}

double pi0(const ProcessSpec& spec, double Theta) {
    const double xi1 = xi_bound(spec, 1.0);
    if (xi1 == kInf) throw model_error("Xi(1) infinite; no valid threshold");
    if (!(Theta > xi1)) {
        std::ostringstream os;
        os << "threshold Theta=" << Theta << " must exceed Xi(1)=" << xi1;
        throw model_error(os.str());
    }
    return 1.0 - xi1 / Theta;
}

namespace {

// integral over x of the a-grid minimum of f(a,x) = phi(a+x) e^{-int_a^{a+x}Q}
double pi1_on_grid(const ProcessSpec& spec, double Theta, int grid_n) {
    std::vector<double> avals, qexp;
    avals.reserve(grid_n + 1);
    qexp.reserve(grid_n + 1);
    for (int j = 0; j <= grid_n; ++j) {
        const double a = Theta * j / grid_n;
        avals.push_back(a);
        qexp.push_back(spec.Q.total_exponent(a));
    }
    auto g = [&](double x) {
        double v = kInf;
        for (std::size_t j = 0; j < avals.size(); ++j) {
            const double s = avals[j] + x;
            const double h = spec.phi.hazard(s);
            const double e = spec.Q.total_exponent(s) - qexp[j];
            const double f = h <= 0.0 ? 0.0 : h * std::exp(-e);
            v = std::min(v, f);
            if (v == 0.0) break;
        }
        return v;
    };
    const double X = DistributionView(spec.phi).truncation_point();
    std::vector<double> bp = spec.phi.breakpoints();
    for (double b : spec.Q.breakpoints()) bp.push_back(b);
    // delayed hazards kink at delay - a for every grid a; seed the largest
    bp.push_back(spec.phi.delay_T());
    return integrate(g, 0.0, X, bp).value;
}

}  // namespace

double pi1(const ProcessSpec& spec, double Theta) {
    if (!(Theta > 0.0)) throw model_error("pi1 requires Theta > 0");
    const double coarse = pi1_on_grid(spec, Theta, 512);
    const double fine = pi1_on_grid(spec, Theta, 1024);
    if (!(fine > 0.0))
        throw model_error("degenerate coupling: pi1 <= 0, pipeline cannot proceed");
    // refinement difference as the grid-modulus surrogate, subtracted to
    // keep the reported infimum conservative
    const double v = fine - std::fabs(fine - coarse);
    return std::clamp(v, 0.0, 1.0);
}

double residual_moment_floor(const ProcessSpec& spec, double a, double N) {
    return moment(residual_intensity(spec.phi, a), N);
}

namespace {

// E (nu+1)^M for integer M via the raw geometric moments on {1,2,...}
double geom_plus_one_int(double pi, int M) {
    const double q = 1.0 - pi;
    const double e1 = 1.0 / pi;
    const double e2 = (1.0 + q) / (pi * pi);
    const double e3 = (1.0 + 4.0 * q + q * q) / (pi * pi * pi);
    const double e4 =
        (1.0 + 11.0 * q + 11.0 * q * q + q * q * q) / (pi * pi * pi * pi);
    switch (M) {
        case 1: return 1.0 + e1;
        case 2: return 1.0 + 2.0 * e1 + e2;
        case 3: return 1.0 + 3.0 * e1 + 3.0 * e2 + e3;
        case 4: return 1.0 + 4.0 * e1 + 6.0 * e2 + 4.0 * e3 + e4;
        default: return kInf;
    }
}

}  // namespace

double geometric_plus_one_moment(double pi, double N) {
    if (!(pi > 0.0)) return kInf;
    if (pi >= 1.0) return std::pow(2.0, N);
    if (pi < 1e-4) {
        // the series below needs ~60/pi terms here; switch to closed forms,
        // exact for integer N and a Lyapunov upper bound otherwise (safe:
        // this quantity only ever enters upper bounds)
        const int M = static_cast<int>(std::ceil(N - 1e-12));
        const double em = geom_plus_one_int(pi, M);
        return em == kInf ? kInf : std::pow(em, N / M);
    }
    const double q = 1.0 - pi;
    double sum = 0.0, w = pi;  // w = pi * q^{j-1}
    for (long j = 1; j <= 100000000L; ++j) {
        const double t = std::pow(static_cast<double>(j + 1), N) * w;
        sum += t;
        const double r = q * std::pow((j + 2.0) / (j + 1.0), N);
        if (r < 1.0) {
            const double tail = t * r / (1.0 - r);
            if (tail < 1e-10) return sum + tail;
        }
        w *= q;
    }
    // never certified the tail: refuse to under-report the moment
    return kInf;
}

double coupling_epoch_moment_bound(const ProcessSpec& spec,
                                   const std::vector<double>& a, double N,
                                   double Theta) {
    if (a.size() != spec.m) throw model_error("initial elapsed-time list size != m");
    const double xiN = xi_bound(spec, N);
    if (xiN == kInf) return kInf;
    const double p0 = std::pow(pi0(spec, Theta), static_cast<double>(spec.m));
    const double pi = std::min(1.0, p0 * p0 * pi1(spec, Theta));
    if (!(pi > 0.0)) return kInf;
    double sum_res = 0.0;
    for (double ar : a) {
        const double r = residual_moment_floor(spec, ar, N);
        if (r == kInf) return kInf;
        sum_res += r;
    }
    const double geom = geometric_plus_one_moment(pi, N);
    const double zN = moment(spec.phi, N);
    if (geom == kInf || zN == kInf) return kInf;
    return std::pow(static_cast<double>(spec.m) + 2.0, N - 1.0) *
           (sum_res + geom * std::pow(xiN, N) + zN);
}

double stationary_tail(const ProcessSpec& spec, double s) {
    if (s < 0.0) throw model_error("stationary_tail requires s >= 0");
    const double den = moment(spec.Q, 1.0);
    if (!(den > 0.0) || den == kInf)
        throw model_error("degenerate majorant law in stationary tail");
    if (s == 0.0) return 0.0;
    auto surv = [&](double u) { return spec.phi.survival(u); };
    const double num = integrate(surv, 0.0, s, spec.phi.breakpoints()).value;
    return std::clamp(num / den, 0.0, 1.0);
}

// --- Convergence constant ---------------------------------------------------

namespace {

// point s* where the raw Psi ratio reaches 1 (integral of phi-survival
// equals E xi); the clamped Psi is a proper CDF supported on [0, s*]
double psi_clamp_point(const ProcessSpec& spec, double den) {
    const double X = DistributionView(spec.phi).truncation_point();
    auto mass = [&](double s) {
        return integrate([&](double u) { return spec.phi.survival(u); }, 0.0, s,
                         spec.phi.breakpoints())
            .value;
    };
    if (mass(X) <= den) return X;  // never clamps; Psi total <= 1
    double lo = 0.0, hi = X;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) < den ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

KBreakdown convergence_constant(const ProcessSpec& spec, double N, double Theta,
                                const QuadOptions& outer) {
    KBreakdown out;
    auto fail = [&](const std::string& term) {
        out.finite = false;
        out.failing_term = term;
        out.K = kInf;
        return out;
    };

    const double xi1 = xi_bound(spec, 1.0);
    out.items.emplace_back("Xi(1)", xi1);
    if (xi1 == kInf) return fail("Xi(1)");
    const double xiN = xi_bound(spec, N);
    out.items.emplace_back("Xi(N)", xiN);
    if (xiN == kInf) return fail("Xi(N)");

    const double p0_1 = pi0(spec, Theta);  // throws on Theta <= Xi(1)
    const double p0 = std::pow(p0_1, static_cast<double>(spec.m));
    out.items.emplace_back("pi0", p0_1);
    out.items.emplace_back("p0", p0);

    double pi1v;
    try {
        pi1v = pi1(spec, Theta);
    } catch (const model_error&) {
        out.items.emplace_back("pi1", 0.0);
        return fail("pi1");
    }
    out.items.emplace_back("pi1", pi1v);
    const double piv = std::min(1.0, p0 * p0 * pi1v);
    out.items.emplace_back("pi", piv);
    if (!(piv > 0.0)) return fail("pi");

    const double geom = geometric_plus_one_moment(piv, N);
    out.items.emplace_back("E(nu+1)^N", geom);
    if (geom == kInf) return fail("E(nu+1)^N");

    const double zN = moment(spec.phi, N);
    out.items.emplace_back("E zeta^N", zN);
    if (zN == kInf) return fail("E zeta^N");

    // residual-moment term integrated against the clamped Psi measure
    const double den = moment(spec.Q, 1.0);
    const double s_star = psi_clamp_point(spec, den);
    auto g = [&](double a) {
        return residual_moment_floor(spec, a, N) * spec.phi.survival(a) / den;
    };
    const QuadResult ri = integrate(g, 0.0, s_star, spec.phi.breakpoints(), outer);
    double rint = ri.value;
    if (!std::isfinite(rint)) {
        out.items.emplace_back("residual integral", kInf);
        return fail("residual moment integral");
    }
    out.items.emplace_back("residual integral", rint);

    out.K = std::pow(static_cast<double>(spec.m) + 2.0, N - 1.0) *
            (static_cast<double>(spec.m) * rint + geom * std::pow(xiN, N) + zN);
    return out;
}

// --- Theta optimization -----------------------------------------------------

namespace detail {

std::pair<double, double> minimize_on_interval(
    const std::function<double(double)>& f, double lo, double hi,
    int grid_points) {
    if (!(hi > lo)) throw model_error("empty optimization interval");
    const double ratio = hi / lo;
    std::vector<double> xs(grid_points), ys(grid_points);
    int best = 0;
    for (int i = 0; i < grid_points; ++i) {
        xs[i] = lo * std::pow(ratio, static_cast<double>(i) / (grid_points - 1));
        ys[i] = f(xs[i]);
        if (ys[i] < ys[best]) best = i;
    }
    double a = xs[std::max(0, best - 1)];
    double b = xs[std::min(grid_points - 1, best + 1)];
    double bx = xs[best], by = ys[best];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 80 && b - a > 1e-10 * std::max(1.0, b); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    if (f1 < by) {
        bx = x1;
        by = f1;
    }
    if (f2 < by) {
        bx = x2;
        by = f2;
    }
    return {bx, by};
}

}  // namespace detail

ThetaResult optimize_theta(const ProcessSpec& spec, double N, double theta_max) {
    const double xi1 = xi_bound(spec, 1.0);
    if (xi1 == kInf)
        throw numeric_error("infeasible optimization: Xi(1) infinite");
    const double lo = xi1 * (1.0 + 1e-6);
    const double hi = theta_max > 0.0 ? theta_max : 50.0 * xi1;
    if (!(hi > lo))
        throw numeric_error("infeasible optimization: empty Theta interval");
    auto f = [&](double theta) {
        try {
            const KBreakdown b = convergence_constant(spec, N, theta);
            return b.finite ? b.K : kInf;
        } catch (const model_error&) {
            return kInf;
        }
    };
    auto [theta, K] = detail::minimize_on_interval(f, lo, hi);
    if (K == kInf)
        throw numeric_error("infeasible optimization: no finite K on interval");
    return {theta, K};
}

// --- LordenBounds -----------------------------------------------------------

LordenBounds::LordenBounds(ProcessSpec spec, double Theta)
    : spec_(std::move(spec)), theta_(Theta), xi1_(xi_bound(spec_, 1.0)) {
    if (!(Theta > xi1_))
        throw model_error("LordenBounds requires Theta > Xi(1)");
}

double LordenBounds::p0() const {
    return std::pow(qrc::pi0(spec_, theta_), static_cast<double>(spec_.m));
}

double LordenBounds::pi1_value() const { return qrc::pi1(spec_, theta_); }

double LordenBounds::pi() const {
    const double v = p0();
    return std::min(1.0, v * v * pi1_value());
}

}  // namespace qrc
