#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>

#include "qrc/errors.hpp"
#include "qrc/reliability.hpp"

using namespace qrc;

namespace {

ReliabilitySpec base_rs() {
    ReliabilitySpec rs;
    rs.main_work = GeneralizedIntensity::constant(1.0);
    rs.main_repair = GeneralizedIntensity::constant(2.0);
    rs.reserve_work = GeneralizedIntensity::constant(2.0);
    rs.reserve_repair = GeneralizedIntensity::constant(4.0);
    rs.failed_boost = 0.3;
    rs.phi = GeneralizedIntensity::piecewise({0.0, 0.0, 0.5, 0.3, 1.0, 0.5});
    rs.Q = GeneralizedIntensity::constant(2.5);
    return rs;
}

ReliabilitySpec heavy_rs() {
    ReliabilitySpec rs = base_rs();
    rs.main_repair = GeneralizedIntensity::rational(1.5, 1.0);
    HazardTerm t;
    t.shape = HazardShape::rational;
    t.params = {0.8, 1.0};
    t.start = 2.0;
    rs.phi = GeneralizedIntensity({t}, {});
    return rs;
}

}  // namespace

TEST_CASE("compose_cycle: exponential phases match the closed-form sum law") {
    const GeneralizedIntensity cycle =
        compose_cycle(GeneralizedIntensity::constant(1.0),
                      GeneralizedIntensity::constant(2.0));
    // Exp(1) + Exp(2): F(t) = 1 - 2 e^-t + e^-2t
    for (double t : {0.3, 1.0, 2.5, 6.0}) {
        const double F = 1.0 - 2.0 * std::exp(-t) + std::exp(-2.0 * t);
        CHECK(cycle.cdf(t) == doctest::Approx(F).epsilon(1e-6));
    }
    CHECK(moment(cycle, 1.0) == doctest::Approx(1.5).epsilon(1e-6));
    // Var = 1 + 1/4, E S^2 = 1.25 + 1.5^2
    CHECK(moment(cycle, 2.0) == doctest::Approx(3.5).epsilon(1e-5));
}

TEST_CASE("compose_cycle: Rayleigh work plus exponential repair mean") {
    const GeneralizedIntensity cycle =
        compose_cycle(GeneralizedIntensity::power(2.0, 1.0),
                      GeneralizedIntensity::constant(1.0));
    const double mean = std::sqrt(3.14159265358979323846) / 2.0 + 1.0;
    CHECK(moment(cycle, 1.0) == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("compose_cycle: atomic phases are rejected") {
    const GeneralizedIntensity atomic =
        GeneralizedIntensity::constant(1.0).with_atoms({{1.0, 0.4}});
    CHECK_THROWS_AS(compose_cycle(atomic, GeneralizedIntensity::constant(1.0)),
                    model_error);
}

TEST_CASE("to_process_spec: boost appears exactly on main-failed states") {
    ReliabilitySpec rs = base_rs();
    rs.failure_elapsed = 0.8;
    const ProcessSpec spec = to_process_spec(rs);
    REQUIRE(spec.m == 2);
    const double s = 0.6;
    const double up = spec.mu_value(1, {0.0, s});     // main working
    const double down = spec.mu_value(1, {0.9, s});   // main failed
    CHECK(down - up == doctest::Approx(rs.failed_boost));
    // main component's modulation never depends on the reserve state
    CHECK(spec.mu_value(0, {s, 0.0}) ==
          doctest::Approx(spec.mu_value(0, {s, 5.0})));
}

TEST_CASE("to_process_spec: zero boost decouples the reserve") {
    ReliabilitySpec rs = base_rs();
    rs.failed_boost = 0.0;
    const ProcessSpec spec = to_process_spec(rs);
    for (double s : {0.2, 1.0, 3.0})
        CHECK(spec.mu_value(1, {0.0, s}) ==
              doctest::Approx(spec.mu_value(1, {10.0, s})));
}

TEST_CASE("to_process_spec: bracket violations name the phase") {
    ReliabilitySpec low = base_rs();
    low.phi = GeneralizedIntensity::constant(0.5);  // cycle hazard starts at 0
    try {
        (void)to_process_spec(low);
        FAIL("expected a bracket rejection");
    } catch (const model_error& e) {
        CHECK(std::string(e.what()).find("main") != std::string::npos);
    }
    ReliabilitySpec tight = base_rs();
    tight.Q = GeneralizedIntensity::constant(2.0);  // reserve + boost exceeds
    try {
        (void)to_process_spec(tight);
        FAIL("expected a bracket rejection");
    } catch (const model_error& e) {
        CHECK(std::string(e.what()).find("reserve") != std::string::npos);
    }
}

TEST_CASE("analyze: exponential baseline passes end to end") {
    const ReliabilityReport rep = analyze(base_rs(), {1.0}, 200, 5, 4);
    CHECK(!rep.degraded);
    CHECK(rep.theta > 0.0);
    REQUIRE(rep.xi.size() == 1);
    CHECK(std::isfinite(rep.xi[0].second));
    REQUIRE(rep.K.size() == 1);
    CHECK(rep.K[0].second.finite);
    CHECK(!rep.verification.records.empty());
    CHECK(rep.all_pass());
    CHECK(reliability_summary(rep).find("RESULT: PASS") != std::string::npos);
}

TEST_CASE("analyze: heavy-tailed repair degrades to the +inf sentinel") {
    const ReliabilityReport rep = analyze(heavy_rs(), {1.0}, 200, 5);
    CHECK(rep.degraded);
    CHECK(rep.xi[0].second == kInf);
    CHECK(!rep.K[0].second.finite);
    CHECK(rep.verification.records.empty());
    const std::string sum = reliability_summary(rep);
    CHECK(sum.find("inf") != std::string::npos);
    CHECK(sum.find("RESULT: DEGRADED") != std::string::npos);
}

TEST_CASE("analyze: identical seeds give identical reports") {
    const std::string s1 = reliability_summary(analyze(base_rs(), {1.0}, 120, 9));
    const std::string s2 = reliability_summary(analyze(base_rs(), {1.0}, 120, 9));
    CHECK(s1 == s2);
}
