#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qrc/rng.hpp"

namespace qrc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class HazardShape {
    constant,   // params: [c]
    power,      // params: [c, p]; hazard c*(s+offset)^p (Weibull-type)
    piecewise,  // params: [s0,v0, s1,v1, ...]; linear between knots,
                // constant extension beyond the last knot
    rational,   // params: [c, b]; hazard c/(b+s), bounded when b > 0
    spline,     // internal: cubic-Hermite cumulative hazard on knots
                // params: [n, t0..t_{n-1}, lam0.., H0..]
};

// One additive term of a continuous hazard. `offset` shifts the argument
// (residual laws), `start` gates the term to s >= start (delayed hazards),
// `coeff` scales it (difference-of-majorants proposals use coeff = -1).
struct HazardTerm {
    HazardShape shape = HazardShape::constant;
    std::vector<double> params;
    double offset = 0.0;
    double start = 0.0;
    double coeff = 1.0;

    double value(double s) const;       // hazard contribution at s
    double cumulative(double x) const;  // integral of value over [0, x]

    bool operator==(const HazardTerm&) const = default;
};

struct Atom {
    double at = 0.0;    // location, > 0
    double mass = 0.0;  // conditional jump mass w in (0,1]
    double weight() const;  // -ln(1-w); +inf for w == 1

    bool operator==(const Atom&) const = default;
};

// A distribution of a positive random variable described by its hazard:
// a sum of continuous terms plus a finite list of delta-atoms. The CDF is
// F(x) = 1 - exp(-H(x) - sum of atom weights at locations <= x).
class GeneralizedIntensity {
  public:
    GeneralizedIntensity() = default;
    GeneralizedIntensity(std::vector<HazardTerm> terms, std::vector<Atom> atoms,
                         double delay_T = 0.0);

    static GeneralizedIntensity zero();  // never fires; identity for superpose_min
    static GeneralizedIntensity constant(double c, double delay_T = 0.0);
    static GeneralizedIntensity power(double c, double p, double offset = 0.0,
                                      double delay_T = 0.0);
    static GeneralizedIntensity piecewise(const std::vector<double>& knots_values,
                                          double delay_T = 0.0);
    static GeneralizedIntensity rational(double c, double b, double delay_T = 0.0);

    GeneralizedIntensity with_atoms(std::vector<Atom> atoms) const;

    const std::vector<HazardTerm>& terms() const { return terms_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    double delay_T() const { return delay_T_; }

    double hazard(double s) const;             // continuous part at s
    double cumulative_hazard(double x) const;  // H(x), integral of hazard
    // H(x) plus summed atom weights at locations <= x (right-continuous).
    double total_exponent(double x) const;

    double survival(double x) const;  // exp(-total_exponent(x))
    double cdf(double x) const;
    // Density of the continuous component: hazard(x) * survival(x).
    double density(double x) const;

    // Smallest x with cdf(x) >= u. Atoms are returned exactly. Returns +inf
    // for a defective law when u exceeds the total mass.
    double quantile(double u) const;

    // Locations where the hazard or CDF may kink or jump; used as initial
    // quadrature panel cuts.
    std::vector<double> breakpoints() const;

    bool operator==(const GeneralizedIntensity&) const = default;

  private:
    std::vector<HazardTerm> terms_;
    std::vector<Atom> atoms_;  // sorted by location, strictly increasing
    double delay_T_ = 0.0;
};

// --- Operations ------------------------------------------------------------

double cdf_from_intensity(const GeneralizedIntensity& gi, double x);
// `saturated` is set when the cumulative hazard diverged at finite x and the
// value was clamped to 1.
double cdf_from_intensity(const GeneralizedIntensity& gi, double x, bool* saturated);

// Law of min{xi, eta} for independent xi ~ gi1, eta ~ gi2: hazards add,
// atom weights (in -ln form) add at shared locations.
GeneralizedIntensity superpose_min(const GeneralizedIntensity& gi1,
                                   const GeneralizedIntensity& gi2);

// Inverse-transform draw; +inf with the defective-mass probability.
double sample(const GeneralizedIntensity& gi, RngStream& rng);

// E xi^order via int order*x^(order-1)*survival(x) dx with tail truncation.
// Returns +inf when the tail fails the convergence heuristic.
double moment(const GeneralizedIntensity& gi, double order);

// Law of (xi - a | xi > a): shifted hazard s -> hazard(a + s).
GeneralizedIntensity residual_intensity(const GeneralizedIntensity& gi, double a);

// Assumption check: declare the total hazard divergent (int = inf) once the
// cumulative hazard exceeds 50 at a finite probe; otherwise a warning.
enum class DivergenceVerdict { satisfied, warning };
DivergenceVerdict check_hazard_divergence(const GeneralizedIntensity& gi);

// --- View ------------------------------------------------------------------

// Convenience wrapper exposing the derived distribution functions of one
// intensity, plus its panel breakpoints and a truncation point for
// semi-infinite integrals.
class DistributionView {
  public:
    explicit DistributionView(GeneralizedIntensity gi) : gi_(std::move(gi)) {}

    const GeneralizedIntensity& intensity() const { return gi_; }

    double cdf(double x) const { return gi_.cdf(x); }
    double survival(double x) const { return gi_.survival(x); }
    double density(double x) const { return gi_.density(x); }
    double quantile(double u) const { return gi_.quantile(u); }
    double moment(double order) const { return qrc::moment(gi_, order); }
    std::vector<double> breakpoints() const { return gi_.breakpoints(); }

    // Point beyond which survival < tol (capped when the law is defective
    // or very heavy-tailed).
    double truncation_point(double tol = 1e-12) const;

  private:
    GeneralizedIntensity gi_;
};

std::string shape_name(HazardShape s);

}  // namespace qrc
