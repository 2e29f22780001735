#include "qrc/intensity.hpp"

#include <algorithm>
#include <cmath>

#include "qrc/errors.hpp"
#include "qrc/quadrature.hpp"

namespace qrc {

namespace {

constexpr double kAtomLocTol = 1e-12;

double hermite_value(double t0, double t1, double h0, double h1, double l0,
                     double l1, double s, bool derivative) {
    const double h = t1 - t0;
    const double u = (s - t0) / h;
    const double u2 = u * u, u3 = u2 * u;
    if (!derivative) {
        return (2 * u3 - 3 * u2 + 1) * h0 + (u3 - 2 * u2 + u) * h * l0 +
               (-2 * u3 + 3 * u2) * h1 + (u3 - u2) * h * l1;
    }
    return ((6 * u2 - 6 * u) * h0 + (3 * u2 - 4 * u + 1) * h * l0 +
            (-6 * u2 + 6 * u) * h1 + (3 * u2 - 2 * u) * h * l1) /
           h;
}

}  // namespace

// --- HazardTerm -------------------------------------------------------------

double HazardTerm::value(double s) const {
    if (s < start) return 0.0;
    const double u = s + offset;
    double v = 0.0;
    switch (shape) {
        case HazardShape::constant:
            v = params[0];
            break;
        case HazardShape::power: {
            const double c = params[0], p = params[1];
            if (p == -1.0) {
                // Support ends where c/u would turn negative (e.g. the
                // uniform-type hazard 1/(1-s)).
                if (u == 0.0) return kInf;
                const double r = c / u;
                v = r >= 0.0 ? r : kInf;
                if (v == kInf) return kInf;
            } else if (u < 0.0) {
                return kInf;
            } else if (u == 0.0) {
                v = p > 0.0 ? 0.0 : (p == 0.0 ? c : kInf);
                if (v == kInf) return kInf;
            } else {
                v = c * std::pow(u, p);
            }
            break;
        }
        case HazardShape::piecewise: {
            const std::size_t n = params.size() / 2;
            if (u <= params[0]) {
                v = params[1];
            } else if (u >= params[2 * (n - 1)]) {
                v = params[2 * (n - 1) + 1];
            } else {
                std::size_t j = 0;
                while (j + 1 < n && params[2 * (j + 1)] <= u) ++j;
                const double s0 = params[2 * j], v0 = params[2 * j + 1];
                const double s1 = params[2 * j + 2], v1 = params[2 * j + 3];
                v = v0 + (v1 - v0) * (u - s0) / (s1 - s0);
            }
            break;
        }
        case HazardShape::rational: {
            const double c = params[0], b = params[1];
            const double d = b + u;
            if (d <= 0.0) return kInf;
            v = c / d;
            break;
        }
        case HazardShape::spline: {
            const std::size_t n = static_cast<std::size_t>(params[0]);
            const double* t = &params[1];
            const double* lam = t + n;
            if (u <= t[0]) {
                v = lam[0];
            } else if (u >= t[n - 1]) {
                v = lam[n - 1];
            } else {
                const double* H = lam + n;
                std::size_t j =
                    std::upper_bound(t, t + n, u) - t - 1;
                v = hermite_value(t[j], t[j + 1], H[j], H[j + 1], lam[j],
                                  lam[j + 1], u, true);
                if (v < 0.0) v = 0.0;
            }
            break;
        }
    }
    return coeff * v;
}

double HazardTerm::cumulative(double x) const {
    if (x <= start) return 0.0;
    const double lo = start + offset;
    const double hi = x + offset;
    double a = 0.0;
    switch (shape) {
        case HazardShape::constant:
            a = params[0] * (hi - lo);
            break;
        case HazardShape::power: {
            const double c = params[0], p = params[1];
            if (p == -1.0) {
                // Antiderivative c*ln|u|; crossing the singularity means the
                // law is exhausted before x.
                if (lo == 0.0 || hi == 0.0 || (lo < 0.0) != (hi < 0.0))
                    return coeff > 0 ? kInf : -kInf;
                a = c * std::log(hi / lo);
            } else {
                if (lo < 0.0 || hi < 0.0) return coeff > 0 ? kInf : -kInf;
                a = c * (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) /
                    (p + 1.0);
            }
            break;
        }
        case HazardShape::piecewise: {
            const std::size_t n = params.size() / 2;
            auto seg = [&](double ua, double ub) {
                // integral of the interpolated table over [ua, ub]
                double acc = 0.0;
                auto val = [&](double u) {
                    if (u <= params[0]) return params[1];
                    if (u >= params[2 * (n - 1)]) return params[2 * (n - 1) + 1];
                    std::size_t j = 0;
                    while (j + 1 < n && params[2 * (j + 1)] <= u) ++j;
                    const double s0 = params[2 * j], v0 = params[2 * j + 1];
                    const double s1 = params[2 * j + 2], v1 = params[2 * j + 3];
                    return v0 + (v1 - v0) * (u - s0) / (s1 - s0);
                };
                double prev = ua;
                for (std::size_t j = 0; j < n; ++j) {
                    const double k = params[2 * j];
                    if (k <= prev) continue;
                    if (k >= ub) break;
                    acc += 0.5 * (val(prev) + val(k)) * (k - prev);
                    prev = k;
                }
                acc += 0.5 * (val(prev) + val(ub)) * (ub - prev);
                return acc;
            };
            a = seg(lo, hi);
            break;
        }
        case HazardShape::rational: {
            const double c = params[0], b = params[1];
            if (b + lo <= 0.0 || b + hi <= 0.0) return coeff > 0 ? kInf : -kInf;
            a = c * std::log((b + hi) / (b + lo));
            break;
        }
        case HazardShape::spline: {
            const std::size_t n = static_cast<std::size_t>(params[0]);
            const double* t = &params[1];
            const double* lam = t + n;
            const double* H = lam + n;
            auto cum = [&](double u) {
                if (u <= t[0]) return H[0] - lam[0] * (t[0] - u);
                if (u >= t[n - 1]) return H[n - 1] + lam[n - 1] * (u - t[n - 1]);
                std::size_t j = std::upper_bound(t, t + n, u) - t - 1;
                return hermite_value(t[j], t[j + 1], H[j], H[j + 1], lam[j],
                                     lam[j + 1], u, false);
            };
            a = cum(hi) - cum(lo);
            break;
        }
    }
    return coeff * a;
}

// --- Atom -------------------------------------------------------------------

double Atom::weight() const {
    if (mass >= 1.0) return kInf;
    return -std::log1p(-mass);
}

// --- GeneralizedIntensity ---------------------------------------------------

GeneralizedIntensity::GeneralizedIntensity(std::vector<HazardTerm> terms,
                                           std::vector<Atom> atoms,
                                           double delay_T)
    : terms_(std::move(terms)), atoms_(std::move(atoms)), delay_T_(delay_T) {
    for (const auto& t : terms_) {
        switch (t.shape) {
            case HazardShape::constant:
                if (t.params.size() != 1) throw model_error("constant hazard needs 1 parameter");
                break;
            case HazardShape::power:
                if (t.params.size() != 2) throw model_error("power hazard needs 2 parameters");
                if (t.start + t.offset < 0.0 && t.params[1] != -1.0)
                    throw model_error("power hazard with negative shift requires exponent -1");
                break;
            case HazardShape::piecewise:
                if (t.params.size() < 4 || t.params.size() % 2 != 0)
                    throw model_error("piecewise hazard needs an even list of >= 4 values");
                for (std::size_t j = 2; j < t.params.size(); j += 2)
                    if (!(t.params[j] > t.params[j - 2]))
                        throw model_error("piecewise hazard knots must be strictly increasing");
                break;
            case HazardShape::rational:
                if (t.params.size() != 2) throw model_error("rational hazard needs 2 parameters");
                if (t.params[1] + t.start + t.offset <= 0.0)
                    throw model_error("rational hazard pole inside the support");
                break;
            case HazardShape::spline:
                if (t.params.empty() ||
                    t.params.size() != 1 + 3 * static_cast<std::size_t>(t.params[0]))
                    throw model_error("malformed spline hazard");
                break;
        }
    }
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.at < b.at; });
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const Atom& a = atoms_[i];
        if (!(a.at > 0.0))
            throw model_error("atom at 0 (or negative location) is not supported");
        if (!(a.mass > 0.0 && a.mass <= 1.0))
            throw model_error("atom mass must lie in (0, 1]");
        if (i > 0 && !(a.at > atoms_[i - 1].at + kAtomLocTol))
            throw model_error("atom locations must be strictly increasing");
    }
    if (delay_T_ < 0.0) throw model_error("delay_T must be nonnegative");
}

GeneralizedIntensity GeneralizedIntensity::zero() { return {}; }

GeneralizedIntensity GeneralizedIntensity::constant(double c, double delay_T) {
    HazardTerm t;
    t.shape = HazardShape::constant;
    t.params = {c};
    t.start = delay_T;
    return GeneralizedIntensity({t}, {}, delay_T);
}

GeneralizedIntensity GeneralizedIntensity::power(double c, double p, double offset,
                                                 double delay_T) {
    HazardTerm t;
    t.shape = HazardShape::power;
    t.params = {c, p};
    t.offset = offset;
    t.start = delay_T;
    return GeneralizedIntensity({t}, {}, delay_T);
}

GeneralizedIntensity GeneralizedIntensity::piecewise(
    const std::vector<double>& knots_values, double delay_T) {
    HazardTerm t;
    t.shape = HazardShape::piecewise;
    t.params = knots_values;
    t.start = delay_T;
    return GeneralizedIntensity({t}, {}, delay_T);
}

GeneralizedIntensity GeneralizedIntensity::rational(double c, double b,
                                                    double delay_T) {
    HazardTerm t;
    t.shape = HazardShape::rational;
    t.params = {c, b};
    t.start = delay_T;
    return GeneralizedIntensity({t}, {}, delay_T);
}

GeneralizedIntensity GeneralizedIntensity::with_atoms(std::vector<Atom> atoms) const {
    return GeneralizedIntensity(terms_, std::move(atoms), delay_T_);
}

double GeneralizedIntensity::hazard(double s) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        const double tv = t.value(s);
        if (tv == kInf) return kInf;
        v += tv;
    }
    return v;
}

double GeneralizedIntensity::cumulative_hazard(double x) const {
    double h = 0.0;
    for (const auto& t : terms_) {
        const double c = t.cumulative(x);
        if (c == kInf) return kInf;
        h += c;
    }
    return h;
}

double GeneralizedIntensity::total_exponent(double x) const {
    double e = cumulative_hazard(x);
    if (e == kInf) return kInf;
    for (const auto& a : atoms_) {
        if (a.at > x) break;
        const double w = a.weight();
        if (w == kInf) return kInf;
        e += w;
    }
    return e;
}

double GeneralizedIntensity::survival(double x) const {
    if (x < 0.0) return 1.0;
    const double e = total_exponent(x);
    return e == kInf ? 0.0 : std::exp(-e);
}

double GeneralizedIntensity::cdf(double x) const { return 1.0 - survival(x); }

double GeneralizedIntensity::density(double x) const {
    const double s = survival(x);
    if (s <= 0.0) return 0.0;
    const double h = hazard(x);
    if (!std::isfinite(h)) return 0.0;
    return h * s;
}

double GeneralizedIntensity::quantile(double u) const {
    if (u <= 0.0) return 0.0;
    const double target = u >= 1.0 ? kInf : -std::log1p(-u);

    // Atom pass: exact point masses.
    double wsum = 0.0;
    for (const auto& a : atoms_) {
        const double lm = cumulative_hazard(a.at) + wsum;
        const double w = a.weight();
        if (lm < target && (w == kInf || target <= lm + w)) return a.at;
        if (w == kInf) break;
        wsum += w;
        if (lm + wsum >= target) break;
    }

    auto lam = [this](double x) { return total_exponent(x); };

    double hi = 1.0;
    while (lam(hi) < target) {
        hi *= 2.0;
        if (hi > 1e18) return kInf;  // defective mass
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (lam(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<double> GeneralizedIntensity::breakpoints() const {
    std::vector<double> bp;
    for (const auto& t : terms_) {
        if (t.start > 0.0) bp.push_back(t.start);
        switch (t.shape) {
            case HazardShape::piecewise:
                for (std::size_t j = 0; j < t.params.size(); j += 2) {
                    const double s = t.params[j] - t.offset;
                    if (s > 0.0) bp.push_back(s);
                }
                break;
            case HazardShape::power:
                if (t.params[1] == -1.0 && -t.offset > 0.0)
                    bp.push_back(-t.offset);
                break;
            case HazardShape::spline: {
                const std::size_t n = static_cast<std::size_t>(t.params[0]);
                for (std::size_t j = 0; j < n; ++j) {
                    const double s = t.params[1 + j] - t.offset;
                    if (s > 0.0) bp.push_back(s);
                }
                break;
            }
            default:
                break;
        }
    }
    for (const auto& a : atoms_) bp.push_back(a.at);
    if (delay_T_ > 0.0) bp.push_back(delay_T_);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return bp;
}

// --- Operations -------------------------------------------------------------

double cdf_from_intensity(const GeneralizedIntensity& gi, double x,
                          bool* saturated) {
    if (x < 0.0) throw model_error("cdf_from_intensity: x must be >= 0");
    const double h = gi.hazard(x);
    if (h < 0.0) throw model_error("negative hazard encountered");
    const double e = gi.total_exponent(x);
    if (saturated) *saturated = (e == kInf);
    return e == kInf ? 1.0 : -std::expm1(-e);
}

double cdf_from_intensity(const GeneralizedIntensity& gi, double x) {
    return cdf_from_intensity(gi, x, nullptr);
}

GeneralizedIntensity superpose_min(const GeneralizedIntensity& gi1,
                                   const GeneralizedIntensity& gi2) {
    const bool z1 = gi1.terms().empty() && gi1.atoms().empty();
    const bool z2 = gi2.terms().empty() && gi2.atoms().empty();
    if (z1) return gi2;
    if (z2) return gi1;

    std::vector<HazardTerm> terms = gi1.terms();
    terms.insert(terms.end(), gi2.terms().begin(), gi2.terms().end());

    std::vector<Atom> atoms;
    const auto& a1 = gi1.atoms();
    const auto& a2 = gi2.atoms();
    std::size_t i = 0, j = 0;
    while (i < a1.size() || j < a2.size()) {
        if (j >= a2.size() || (i < a1.size() && a1[i].at < a2[j].at - kAtomLocTol)) {
            atoms.push_back(a1[i++]);
        } else if (i >= a1.size() || a2[j].at < a1[i].at - kAtomLocTol) {
            atoms.push_back(a2[j++]);
        } else {
            // shared location: weights add, masses combine as 1-(1-w1)(1-w2)
            Atom merged;
            merged.at = a1[i].at;
            merged.mass = 1.0 - (1.0 - a1[i].mass) * (1.0 - a2[j].mass);
            atoms.push_back(merged);
            ++i;
            ++j;
        }
    }
    return GeneralizedIntensity(std::move(terms), std::move(atoms),
                                std::min(gi1.delay_T(), gi2.delay_T()));
}

double sample(const GeneralizedIntensity& gi, RngStream& rng) {
    return gi.quantile(rng.uniform());
}

double moment(const GeneralizedIntensity& gi, double order) {
    if (!(order > 0.0)) throw model_error("moment order must be positive");
    const double tail_tol = 1e-12;

    double X = 1.0;
    while (gi.survival(X) >= tail_tol && X < 1e12) X *= 2.0;

    // Tail convergence heuristic: the local Pareto index alpha = s*hazard(s)
    // must exceed the order, otherwise x^order outgrows the survival decay
    // (small survival alone is not enough). With alpha > order the remainder
    // beyond X is bounded by order*S(X)*X^order/(alpha - order).
    double remainder = 0.0;
    if (gi.survival(X) > 0.0) {
        double alpha = kInf;
        for (double s : {X, 1.5 * X, 2.0 * X, 3.0 * X})
            alpha = std::min(alpha, s * gi.hazard(s));
        if (!(alpha > order + 1e-9)) return kInf;
        remainder = order * gi.survival(X) * std::pow(X, order) / (alpha - order);
    }

    std::vector<double> bp = gi.breakpoints();
    for (double g = 1.0; g < X; g *= 2.0) bp.push_back(g);
    if (order < 1.0) {
        bp.push_back(1e-6);
        bp.push_back(1e-3);
    }
    auto f = [&](double x) {
        return order * std::pow(x, order - 1.0) * gi.survival(x);
    };
    QuadOptions opt;
    opt.abs_tol = 1e-12;
    opt.rel_tol = 1e-10;
    const QuadResult q = integrate(f, 0.0, X, bp, opt);
    return q.value + remainder;
}

GeneralizedIntensity residual_intensity(const GeneralizedIntensity& gi, double a) {
    if (a < 0.0) throw model_error("residual elapsed time must be >= 0");
    if (a == 0.0) return gi;
    if (!(gi.survival(a) > 0.0))
        throw model_error("residual_intensity: conditioning on a null event");

    std::vector<HazardTerm> terms = gi.terms();
    for (auto& t : terms) {
        // a constant term's value and cumulative are offset-independent;
        // leaving it untouched keeps memoryless residuals equal (==) to the
        // original law, which downstream identical-law fast paths rely on
        if (t.shape != HazardShape::constant) t.offset += a;
        t.start = std::max(0.0, t.start - a);
    }
    std::vector<Atom> atoms;
    for (const auto& at : gi.atoms())
        if (at.at > a + kAtomLocTol) atoms.push_back({at.at - a, at.mass});
    return GeneralizedIntensity(std::move(terms), std::move(atoms),
                                std::max(0.0, gi.delay_T() - a));
}

DivergenceVerdict check_hazard_divergence(const GeneralizedIntensity& gi) {
    for (double x = 1.0; x <= 1e15; x *= 2.0)
        if (gi.cumulative_hazard(x) >= 50.0) return DivergenceVerdict::satisfied;
    return DivergenceVerdict::warning;
}

double DistributionView::truncation_point(double tol) const {
    const double target = -std::log(tol);
    double x = 1.0;
    while (gi_.total_exponent(x) < target && x < 1e12) x *= 2.0;
    return x;
}

std::string shape_name(HazardShape s) {
    switch (s) {
        case HazardShape::constant: return "constant";
        case HazardShape::power: return "power";
        case HazardShape::piecewise: return "piecewise";
        case HazardShape::rational: return "rational";
        case HazardShape::spline: return "spline";
    }
    return "?";
}

}  // namespace qrc
