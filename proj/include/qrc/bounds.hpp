#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qrc/intensity.hpp"
#include "qrc/quadrature.hpp"

namespace qrc {

// State-dependent extra intensity of one component. `fn` receives the full
// vector of elapsed times; the envelopes depend only on the component's own
// elapsed time and are what the assumption grid-checks can actually verify.
struct MuFn {
    std::function<double(const std::vector<double>&)> fn;
    std::function<double(double)> upper_of_own;  // mu_i(state) <= upper(s_i)
    std::function<double(double)> lower_of_own;  // mu_i(state) >= lower(s_i)

    static MuFn zero();
    static MuFn constant(double c);
};

// Bracketed m-component model: each component renews with hazard
// phi(x_i) + mu_i(state), majorized by Q(x_i) and minorized by phi + q.
struct ProcessSpec {
    std::size_t m = 1;
    GeneralizedIntensity phi;  // shared minimal hazard (zeta-part)
    GeneralizedIntensity Q;    // shared majorant
    std::vector<MuFn> mu;      // size m, or empty meaning all-zero
    std::function<double(double)> q;  // minorant of every mu_i; may be empty
    double k = 2.0;            // moment order with E zeta^k < inf assumed

    const MuFn& mu_of(std::size_t i) const;
    double mu_value(std::size_t i, const std::vector<double>& x) const;
};

// Grid-checks the bracketing assumptions: phi + mu-upper <= Q and
// mu-lower >= q on a per-coordinate grid, atom dominance of Q over phi,
// delay compatibility, Q bounded near 0. Throws model_error on violation.
// Moment finiteness is NOT enforced here; divergent moments surface as
// +inf sentinels in the bound operations.
void validate(const ProcessSpec& spec);

// E xi^2 / E xi; +inf sentinel when the second moment diverges.
double classical_lorden(const DistributionView& law);

// Generalized Lorden constant: Xi(N) = E zeta^N + E zeta^{N+1}/((N+1) E xi)
// with zeta ~ Phi-law (from phi) and xi ~ G-law (from Q).
double xi_bound(const ProcessSpec& spec, double N);

// Markov-inequality threshold probability 1 - Xi(1)/Theta, Theta > Xi(1).
double pi0(const ProcessSpec& spec, double Theta);

// Density-floor overlap: integral over x of min over a in [0,Theta] of
// phi(a+x) * exp(-int_a^{a+x} Q). Grid minimum with a refinement pass and
// conservative grid-error subtraction; clamped to [0,1].
double pi1(const ProcessSpec& spec, double Theta);

// N-th moment of the residual inter-renewal law at elapsed time a under the
// conservative floor (residual of the phi-law).
double residual_moment_floor(const ProcessSpec& spec, double a, double N);

// E (nu+1)^N for nu geometric on {1,2,...} with success pi; truncated series
// with tail bound < 1e-10.
double geometric_plus_one_moment(double pi, double N);

// T(a_1..a_m)_N = (m+2)^{N-1} (sum_r E(xi-hat_r(a_r))^N
//                 + E(nu+1)^N Xi(N)^N + E zeta^N), pi = p0^2 * pi1.
double coupling_epoch_moment_bound(const ProcessSpec& spec,
                                   const std::vector<double>& a, double N,
                                   double Theta);

// Psi(s) = int_0^s (1-Phi) / int_0^inf (1-G), clamped to [0,1].
double stationary_tail(const ProcessSpec& spec, double s);

struct KBreakdown {
    double K = 0.0;
    bool finite = true;
    std::string failing_term;  // set when !finite
    // named intermediate quantities: Xi(1), Xi(N), pi0, p0, pi1, pi,
    // E(nu+1)^N, residual integral, E zeta^N
    std::vector<std::pair<std::string, double>> items;
};

// K(N) at threshold Theta: T(a)_N integrated coordinate-wise against the
// measure induced by the clamped Psi tail bound. `outer` controls the
// quadrature tolerance of the a-integral (tolerance-robustness checks).
KBreakdown convergence_constant(const ProcessSpec& spec, double N, double Theta,
                                const QuadOptions& outer = {});

struct ThetaResult {
    double theta = 0.0;
    double K = 0.0;
};

// Coarse log-grid scan over (Xi(1), theta_max] followed by golden-section
// refinement. theta_max <= 0 selects the default 50 * Xi(1).
ThetaResult optimize_theta(const ProcessSpec& spec, double N,
                           double theta_max = 0.0);

namespace detail {

// Deterministic scalar minimizer used by optimize_theta: grid scan plus
// golden-section refinement around the best grid cell.
std::pair<double, double> minimize_on_interval(
    const std::function<double(double)>& f, double lo, double hi,
    int grid_points = 64);

}  // namespace detail

// Convenience bundle over one spec + threshold, caching Xi(1).
class LordenBounds {
  public:
    LordenBounds(ProcessSpec spec, double Theta);

    double Xi(double N) const { return xi_bound(spec_, N); }
    double pi0_at(double Theta) const { return qrc::pi0(spec_, Theta); }
    double p0() const;
    double pi1_value() const;
    double pi() const;
    double Theta() const { return theta_; }
    double T_of_a(const std::vector<double>& a, double N) const {
        return coupling_epoch_moment_bound(spec_, a, N, theta_);
    }
    KBreakdown K(double N) const {
        return convergence_constant(spec_, N, theta_);
    }
    double tail(double s) const { return stationary_tail(spec_, s); }
    const ProcessSpec& spec() const { return spec_; }

  private:
    ProcessSpec spec_;
    double theta_;
    double xi1_;
};

}  // namespace qrc
