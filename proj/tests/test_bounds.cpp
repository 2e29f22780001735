#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qrc/bounds.hpp"
#include "qrc/errors.hpp"
#include "qrc/intensity.hpp"

using namespace qrc;

namespace {

ProcessSpec homogeneous(double rate, std::size_t m = 1, double k = 2.0) {
    ProcessSpec s;
    s.m = m;
    s.phi = GeneralizedIntensity::constant(rate);
    s.Q = GeneralizedIntensity::constant(rate);
    s.k = k;
    return s;
}

template <class F>
double simpson(const F& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

}  // namespace

TEST_CASE("classical Lorden") {
    CHECK(classical_lorden(DistributionView(GeneralizedIntensity::constant(1.0))) ==
          doctest::Approx(2.0).epsilon(1e-9));
    // deterministic unit renewal: single atom at 1 with full mass
    auto det = GeneralizedIntensity::zero().with_atoms({{1.0, 1.0}});
    CHECK(classical_lorden(DistributionView(det)) == doctest::Approx(1.0));
    // uniform on [0,1]: hazard 1/(1-s)
    auto uni = DistributionView(GeneralizedIntensity::power(-1.0, -1.0, -1.0));
    const double got = classical_lorden(uni);
    CHECK(got == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    // quadrature oracle for the moments from the survival function
    auto surv = [&uni](double x) { return uni.survival(x); };
    const double m1 = simpson(surv, 0.0, 1.0, 20000);
    const double m2 = simpson([&](double x) { return 2.0 * x * surv(x); }, 0.0,
                              1.0, 20000);
    CHECK(got == doctest::Approx(m2 / m1).epsilon(1e-6));
    // heavy tail: hazard 1.5/(1+s) has infinite second moment
    CHECK(classical_lorden(DistributionView(GeneralizedIntensity::rational(
              1.5, 1.0))) == kInf);
}

TEST_CASE("xi_bound: exponential and modulated examples") {
    CHECK(xi_bound(homogeneous(1.0), 1.0) == doctest::Approx(2.0).epsilon(1e-9));

    ProcessSpec s;
    s.phi = GeneralizedIntensity::constant(1.0);
    s.Q = GeneralizedIntensity::constant(2.0);
    s.k = 3.0;
    // E zeta^2 = 2, E zeta^3 = 6, E xi = 1/2 -> 2 + 6/(3*0.5) = 6
    CHECK(xi_bound(s, 2.0) == doctest::Approx(6.0).epsilon(1e-8));
    // quadrature oracle for the same composition
    auto zsurv = [](double x) { return std::exp(-x); };
    const double z2 = simpson([&](double x) { return 2.0 * x * zsurv(x); }, 0.0,
                              60.0, 60000);
    const double z3 = simpson([&](double x) { return 3.0 * x * x * zsurv(x); },
                              0.0, 60.0, 60000);
    const double exi =
        simpson([](double x) { return std::exp(-2.0 * x); }, 0.0, 30.0, 30000);
    CHECK(xi_bound(s, 2.0) == doctest::Approx(z2 + z3 / (3.0 * exi)).epsilon(1e-6));
}

TEST_CASE("xi_bound: phi=Q reduction dominates the stationary overshoot") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::power(2.0, 1.0);  // Weibull-type
    s.Q = s.phi;
    const double xi1 = xi_bound(s, 1.0);
    const double ez = moment(s.phi, 1.0);
    const double ez2 = moment(s.phi, 2.0);
    CHECK(xi1 == doctest::Approx(ez + ez2 / (2.0 * ez)).epsilon(1e-9));
    CHECK(xi1 >= ez2 / (2.0 * ez));
}

TEST_CASE("xi_bound: divergent zeta-moment gives the +inf sentinel") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::rational(1.5, 1.0);
    s.Q = GeneralizedIntensity::constant(1.5);
    s.k = 3.0;
    CHECK(xi_bound(s, 2.0) == kInf);  // E zeta^3 diverges (and E zeta^2 does)
    CHECK_THROWS_AS(xi_bound(s, 2.5), model_error);  // outside (0, k-1]
}

TEST_CASE("xi_bound: nondecreasing in N for E zeta >= 1 family") {
    ProcessSpec s = homogeneous(0.5, 1, 3.0);  // E zeta = 2
    const double a = xi_bound(s, 1.0);
    const double b = xi_bound(s, 1.5);
    const double c = xi_bound(s, 2.0);
    CHECK(a <= b);
    CHECK(b <= c);
}

TEST_CASE("pi0") {
    ProcessSpec s = homogeneous(1.0);
    const double xi1 = xi_bound(s, 1.0);
    CHECK(pi0(s, 2.0 * xi1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi0(s, 4.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi0(s, 1e9) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(pi0(s, 8.0) > pi0(s, 4.0));  // strictly increasing
    CHECK_THROWS_AS(pi0(s, xi1), model_error);
    CHECK_THROWS_AS(pi0(s, 0.5), model_error);
}

TEST_CASE("pi1: memoryless case is exactly 1") {
    for (double lam : {0.5, 1.0, 3.0}) {
        ProcessSpec s = homogeneous(lam);
        CHECK(pi1(s, 4.0) == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("pi1: phi=1 Q=2 gives 1/2 for any Theta") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::constant(1.0);
    s.Q = GeneralizedIntensity::constant(2.0);
    CHECK(pi1(s, 1.0) == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(pi1(s, 10.0) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("pi1: delayed phi lowers the overlap") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::constant(1.0, 0.5);  // no events before 0.5
    s.Q = GeneralizedIntensity::constant(1.0);
    const double v = pi1(s, 4.0);
    // min over a of 1{a+x>1/2} e^{-x} vanishes below x=1/2, equals e^{-x} above
    CHECK(v == doctest::Approx(std::exp(-0.5)).epsilon(1e-3));
    CHECK(v < 1.0);
    CHECK(v >= 0.0);
}

TEST_CASE("residual moment floor: nondecreasing in a for a DFR law") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::rational(4.0, 1.0);  // decreasing hazard
    s.Q = GeneralizedIntensity::constant(4.0);
    double prev = residual_moment_floor(s, 0.0, 1.0);
    for (double a : {0.5, 1.0, 2.0, 4.0}) {
        const double cur = residual_moment_floor(s, a, 1.0);
        CHECK(cur >= prev - 1e-9);
        prev = cur;
    }
    // memoryless: residual moment independent of a
    ProcessSpec e = homogeneous(2.0);
    CHECK(residual_moment_floor(e, 3.0, 1.0) ==
          doctest::Approx(residual_moment_floor(e, 0.0, 1.0)).epsilon(1e-8));
}

TEST_CASE("geometric moment E(nu+1)^N") {
    CHECK(geometric_plus_one_moment(1.0, 3.0) == doctest::Approx(8.0));
    CHECK(geometric_plus_one_moment(0.3, 1.0) ==
          doctest::Approx(1.0 / 0.3 + 1.0).epsilon(1e-9));
    // N=2, pi=0.5: E nu = 2, E nu^2 = (2-pi)/pi^2 = 6 -> 6+4+1 = 11
    CHECK(geometric_plus_one_moment(0.5, 2.0) == doctest::Approx(11.0).epsilon(1e-9));
    // direct-summation oracle
    double pi = 0.2, n = 2.5, sum = 0.0, w = pi;
    for (int j = 1; j < 20000; ++j) {
        sum += std::pow(j + 1.0, n) * w;
        w *= 1.0 - pi;
    }
    CHECK(geometric_plus_one_moment(pi, n) == doctest::Approx(sum).epsilon(1e-8));
    CHECK(geometric_plus_one_moment(0.0, 1.0) == kInf);
    // decreasing in pi (used by the K monotonicity argument)
    CHECK(geometric_plus_one_moment(0.2, 2.0) > geometric_plus_one_moment(0.4, 2.0));
}

TEST_CASE("coupling epoch moment bound: arithmetic oracle") {
    ProcessSpec s = homogeneous(1.0);
    const double theta = 4.0;
    // pi0 = 0.5, p0 = 0.5, pi1 = 1, pi = 0.25
    const double pi = std::pow(pi0(s, theta), 1.0);
    const double piv = pi * pi * pi1(s, theta);
    const double oracle =
        1.0 + (1.0 / piv + 1.0) * xi_bound(s, 1.0) + 1.0;  // (m+2)^0 * (...)
    const double got = coupling_epoch_moment_bound(s, {0.0}, 1.0, theta);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(got == doctest::Approx(12.0).epsilon(1e-6));
    // Jensen prefactor is 1 at N=1 regardless of m
    ProcessSpec s2 = homogeneous(1.0, 2);
    const double g2 = coupling_epoch_moment_bound(s2, {0.0, 0.0}, 1.0, 4.0);
    const double p02 = std::pow(pi0(s2, 4.0), 2.0);
    const double piv2 = p02 * p02 * pi1(s2, 4.0);
    CHECK(g2 == doctest::Approx(2.0 +
                                geometric_plus_one_moment(piv2, 1.0) * 2.0 + 1.0)
                    .epsilon(1e-7));
}

TEST_CASE("coupling epoch moment bound: size and sentinel checks") {
    ProcessSpec s = homogeneous(1.0);
    CHECK_THROWS_AS(coupling_epoch_moment_bound(s, {0.0, 0.0}, 1.0, 4.0),
                    model_error);
    ProcessSpec h;
    h.phi = GeneralizedIntensity::rational(1.5, 1.0);
    h.Q = GeneralizedIntensity::constant(1.5);
    h.k = 3.0;
    CHECK(coupling_epoch_moment_bound(h, {0.0}, 2.0, 1e3) == kInf);
}

TEST_CASE("stationary tail") {
    ProcessSpec s = homogeneous(1.0);
    CHECK(stationary_tail(s, 0.0) == 0.0);
    CHECK(stationary_tail(s, 1.0) ==
          doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-8));
    CHECK(stationary_tail(s, 40.0) == doctest::Approx(1.0).epsilon(1e-9));

    ProcessSpec t;
    t.phi = GeneralizedIntensity::constant(1.0);
    t.Q = GeneralizedIntensity::constant(2.0);
    // raw ratio tends to E zeta / E xi = 2; must clamp to 1
    CHECK(stationary_tail(t, 50.0) == doctest::Approx(1.0));
    CHECK(stationary_tail(t, 0.1) ==
          doctest::Approx((1.0 - std::exp(-0.1)) / 0.5).epsilon(1e-8));
}

TEST_CASE("convergence constant: exponential pipeline arithmetic oracle") {
    ProcessSpec s = homogeneous(1.0);
    const KBreakdown b = convergence_constant(s, 1.0, 4.0);
    REQUIRE(b.finite);
    // memoryless: residual integral = total Psi mass = 1, Xi = 2, E zeta = 1
    const double piv = 0.25;
    const double oracle = 1.0 * (1.0 / piv + 1.0) * 2.0 + 1.0 + 1.0;
    CHECK(b.K == doctest::Approx(oracle).epsilon(1e-5));
    CHECK(!b.items.empty());
    bool has_pi1 = false;
    for (const auto& [name, v] : b.items)
        if (name == "pi1") {
            has_pi1 = true;
            CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
        }
    CHECK(has_pi1);
}

TEST_CASE("convergence constant: sentinel names the failing term") {
    // survival ~ (1+s)^{-2.5}: E zeta^2 finite, E zeta^3 diverges
    ProcessSpec h;
    h.phi = GeneralizedIntensity::rational(2.5, 1.0);
    h.Q = GeneralizedIntensity::constant(2.5);
    h.k = 3.0;
    CHECK(std::isfinite(xi_bound(h, 1.0)));
    const KBreakdown b = convergence_constant(h, 2.0, 1e3);
    CHECK(!b.finite);
    CHECK(b.K == kInf);
    CHECK(b.failing_term == "Xi(N)");
}

TEST_CASE("convergence constant: robust to a 10x quadrature-tolerance change") {
    ProcessSpec s;
    s.phi = GeneralizedIntensity::power(2.0, 1.0);
    s.Q = s.phi;
    const double theta = 3.0 * xi_bound(s, 1.0);
    const KBreakdown tight = convergence_constant(s, 1.0, theta);
    QuadOptions loose;
    loose.abs_tol = 1e-9;
    loose.rel_tol = 1e-7;
    const KBreakdown coarse = convergence_constant(s, 1.0, theta, loose);
    CHECK(std::fabs(tight.K - coarse.K) <=
          std::max(1e-9, 1e-7 * std::fabs(tight.K)) + 1e-9);
}

TEST_CASE("theta optimization: scalar minimizer matches an exhaustive scan") {
    auto f = [](double x) { return (x - 3.0) * (x - 3.0) + 1.0; };
    auto [x, fx] = detail::minimize_on_interval(f, 1.0, 10.0);
    // exhaustive 10^3-point scan oracle
    double bx = 1.0, bf = f(1.0);
    for (int i = 0; i <= 1000; ++i) {
        const double xi = 1.0 + 9.0 * i / 1000.0;
        if (f(xi) < bf) {
            bf = f(xi);
            bx = xi;
        }
    }
    CHECK(std::fabs(x - bx) < 9.0 / 1000.0 + 1e-6);
    CHECK(fx <= bf + 1e-12);
}

TEST_CASE("theta optimization: flat objective accepted, value constant") {
    auto [x, fx] = detail::minimize_on_interval([](double) { return 7.0; }, 2.0,
                                                20.0);
    CHECK(fx == doctest::Approx(7.0).epsilon(1e-9));
    CHECK(x >= 2.0);
    CHECK(x <= 20.0);
}

TEST_CASE("theta optimization: exponential spec yields a finite minimum") {
    ProcessSpec s = homogeneous(1.0);
    const ThetaResult r = optimize_theta(s, 1.0);
    CHECK(std::isfinite(r.K));
    CHECK(r.theta > xi_bound(s, 1.0));
    CHECK(r.theta <= 50.0 * xi_bound(s, 1.0) + 1e-9);
    const KBreakdown at4 = convergence_constant(s, 1.0, 4.0);
    CHECK(r.K <= at4.K + 1e-6);
}

TEST_CASE("theta optimization: infeasible when the density floor is empty") {
    // deterministic renewal: no continuous part at all, pi1 = 0 everywhere
    ProcessSpec s;
    s.phi = GeneralizedIntensity::zero().with_atoms({{1.0, 1.0}});
    s.Q = s.phi;
    CHECK_THROWS_AS(optimize_theta(s, 1.0), numeric_error);
}

TEST_CASE("spec validation") {
    ProcessSpec ok = homogeneous(1.0, 2);
    CHECK_NOTHROW(validate(ok));

    ProcessSpec bad = ok;
    bad.phi = GeneralizedIntensity::constant(2.0);
    bad.Q = GeneralizedIntensity::constant(1.0);
    CHECK_THROWS_AS(validate(bad), model_error);

    ProcessSpec mu_bad;
    mu_bad.m = 1;
    mu_bad.phi = GeneralizedIntensity::constant(1.0);
    mu_bad.Q = GeneralizedIntensity::constant(1.5);
    mu_bad.mu = {MuFn::constant(1.0)};  // 1 + 1 > 1.5
    CHECK_THROWS_AS(validate(mu_bad), model_error);
    mu_bad.mu = {MuFn::constant(0.4)};
    CHECK_NOTHROW(validate(mu_bad));

    ProcessSpec q_bad = mu_bad;
    q_bad.q = [](double) { return 0.6; };  // above the mu lower envelope
    CHECK_THROWS_AS(validate(q_bad), model_error);
    q_bad.q = [](double) { return 0.3; };
    CHECK_NOTHROW(validate(q_bad));

    ProcessSpec atom_bad;
    atom_bad.phi = GeneralizedIntensity::constant(1.0).with_atoms({{1.0, 0.5}});
    atom_bad.Q = GeneralizedIntensity::constant(2.0);
    CHECK_THROWS_AS(validate(atom_bad), model_error);
    atom_bad.Q = GeneralizedIntensity::constant(2.0).with_atoms({{1.0, 0.5}});
    CHECK_NOTHROW(validate(atom_bad));

    ProcessSpec unbounded;
    unbounded.phi = GeneralizedIntensity::constant(0.1);
    unbounded.Q = GeneralizedIntensity::power(1.0, -0.5);  // blows up at 0
    CHECK_THROWS_AS(validate(unbounded), model_error);
}

TEST_CASE("LordenBounds bundle is consistent with the free functions") {
    ProcessSpec s = homogeneous(1.0, 2);
    LordenBounds lb(s, 5.0);
    CHECK(lb.Xi(1.0) == doctest::Approx(xi_bound(s, 1.0)));
    CHECK(lb.p0() == doctest::Approx(std::pow(pi0(s, 5.0), 2.0)));
    CHECK(lb.pi() == doctest::Approx(std::pow(pi0(s, 5.0), 4.0) * pi1(s, 5.0))
                         .epsilon(1e-9));
    CHECK(lb.T_of_a({0.0, 0.0}, 1.0) ==
          doctest::Approx(coupling_epoch_moment_bound(s, {0.0, 0.0}, 1.0, 5.0)));
    CHECK(lb.tail(1.0) == doctest::Approx(stationary_tail(s, 1.0)));
    CHECK_THROWS_AS(LordenBounds(s, 1.0), model_error);
}
