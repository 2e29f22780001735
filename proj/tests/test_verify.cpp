#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qrc/errors.hpp"
#include "qrc/verify.hpp"

using namespace qrc;

namespace {

ExperimentPlan exp_plan(double rate = 1.0, std::size_t m = 1) {
    ExperimentPlan p;
    p.spec.m = m;
    p.spec.phi = GeneralizedIntensity::constant(rate);
    p.spec.Q = GeneralizedIntensity::constant(rate);
    p.probes = {5.0, 10.0, 20.0};
    p.runs = 2000;
    p.seed = 99;
    p.Theta = 4.0;
    return p;
}

const CheckRecord* find_record(const std::vector<CheckRecord>& rs,
                               const std::string& token) {
    for (const auto& r : rs)
        if (r.name.find(token) != std::string::npos) return &r;
    return nullptr;
}

}  // namespace

TEST_CASE("plan validation") {
    ExperimentPlan p = exp_plan();
    CHECK_NOTHROW(validate(p));
    ExperimentPlan bad = p;
    bad.runs = 50;
    CHECK_THROWS_AS(validate(bad), model_error);
    bad = p;
    bad.bins = 8;
    CHECK_THROWS_AS(validate(bad), model_error);
    bad = p;
    bad.probes = {5.0, 5.0};
    CHECK_THROWS_AS(validate(bad), model_error);
    bad = p;
    bad.probes = {-1.0};
    CHECK_THROWS_AS(validate(bad), model_error);
}

TEST_CASE("histogram TV: identical and disjoint samples") {
    std::vector<std::vector<double>> a, b, c;
    RngStream rng(41);
    for (int i = 0; i < 4000; ++i) {
        const double u = rng.uniform();
        a.push_back({u});
        b.push_back({u});
        c.push_back({u + 10.0});
    }
    CHECK(detail::histogram_tv(a, b, 16).tv == doctest::Approx(0.0));
    CHECK(detail::histogram_tv(a, c, 16).tv == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("check_lorden: exponential stationary overshoot passes") {
    ExperimentPlan p = exp_plan();
    const auto recs = check_lorden(p);
    REQUIRE(!recs.empty());
    const CheckRecord* last = find_record(recs, "t=20");
    REQUIRE(last);
    CHECK(last->verdict == "pass");
    CHECK(last->bound == doctest::Approx(2.0));
    CHECK(last->empirical == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("check_lorden: out-of-range order is skipped with a note") {
    ExperimentPlan p = exp_plan();
    p.N_orders = {1.0, 3.0};  // k = 2, so N = 3 is out of range
    const auto recs = check_lorden(p);
    const CheckRecord* skipped = find_record(recs, "Xi(3)");
    REQUIRE(skipped);
    CHECK(skipped->verdict == "skipped");
    CHECK(!skipped->note.empty());
}

TEST_CASE("check_lorden: half-width shrinks like 1/sqrt(runs)") {
    ExperimentPlan small = exp_plan();
    small.runs = 100;
    small.probes = {10.0};
    ExperimentPlan big = small;
    big.runs = 10000;
    const auto rs = check_lorden(small);
    const auto rb = check_lorden(big);
    REQUIRE(!rs.empty());
    REQUIRE(!rb.empty());
    const double ratio = rs.front().half_width / rb.front().half_width;
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("check_coupling_epoch: identical starts trivially pass") {
    ExperimentPlan p = exp_plan();
    p.runs = 300;
    const auto recs = check_coupling_epoch(p, {0.5}, {0.5});
    REQUIRE(!recs.empty());
    CHECK(recs.front().verdict == "pass");
    CHECK(recs.front().empirical == doctest::Approx(0.0));
}

TEST_CASE("check_coupling_epoch: exponential case passes with slack") {
    ExperimentPlan p = exp_plan();
    p.runs = 1000;
    const auto recs = check_coupling_epoch(p, {2.0}, {0.0});
    REQUIRE(!recs.empty());
    const CheckRecord& r = recs.front();
    CHECK(r.verdict == "pass");
    CHECK(r.empirical < r.bound);  // slack expected, recorded not asserted tight
    CHECK(r.note.find("censoring") != std::string::npos);
}

TEST_CASE("check_coupling_epoch: heavy censoring is inconclusive, not hidden") {
    ExperimentPlan p = exp_plan();
    p.runs = 120;
    p.Theta = 2.02;
    // horizon 0.2 * Xi(1) = 0.4: the first epoch rarely even closes, so
    // nearly every run hits the horizon before coupling
    p.horizon_factor = 0.2;
    const auto recs = check_coupling_epoch(p, {30.0}, {0.0});
    REQUIRE(!recs.empty());
    CHECK(recs.front().verdict == "inconclusive");
}

TEST_CASE("estimate_tv_decay: identical starts give near-zero TV") {
    ExperimentPlan p = exp_plan();
    p.runs = 1500;
    const TVResult tv = estimate_tv_decay(p, {0.7}, {0.7});
    // the histogram estimator's noise floor is about sqrt(bins/(pi*runs))
    for (const auto& pt : tv.curve) CHECK(pt.tv < 0.1);
    for (const auto& r : tv.records) CHECK(r.verdict != "fail");
}

TEST_CASE("estimate_tv_decay: exponential case respects the coupling band") {
    ExperimentPlan p = exp_plan();
    p.runs = 3000;
    const TVResult tv = estimate_tv_decay(p, {3.0}, {0.0});
    REQUIRE(tv.curve.size() == 3);
    for (const auto& r : tv.records) CHECK(r.verdict != "fail");
    // decay: TV at the last probe well below the first
    CHECK(tv.curve.back().tv <= tv.curve.front().tv + 0.05);
    const CheckRecord* k = find_record(tv.records, "K(1)");
    REQUIRE(k);
    CHECK(k->verdict == "pass");
}

TEST_CASE("check_stationary_tail: exponential CDF sits under clamped Psi") {
    ExperimentPlan p = exp_plan();
    p.runs = 3000;
    const auto recs = check_stationary_tail(p);
    REQUIRE(recs.size() == 11);
    for (const auto& r : recs) CHECK(r.verdict == "pass");
    CHECK(recs.front().empirical == doctest::Approx(0.0));  // s = 0
}

TEST_CASE("run_verification: coverage and overall pass on the base model") {
    ExperimentPlan p = exp_plan();
    p.runs = 800;
    p.probes = {4.0, 8.0};
    const VerificationReport rep = run_verification(p, {1.5}, {0.0});
    CHECK(rep.all_pass());
    for (const std::string tok : {"Xi(", "T(a)_", "K(", "Psi"})
        CHECK(find_record(rep.records, tok) != nullptr);
    CHECK(!rep.tv_curve.empty());
    const std::string sum = report_summary(rep);
    CHECK(sum.find("RESULT: PASS") != std::string::npos);
}

TEST_CASE("run_verification: deterministic, independent of thread count") {
    ExperimentPlan p = exp_plan();
    p.runs = 300;
    p.probes = {3.0, 6.0};
    const std::string csv1 = report_to_csv(run_verification(p, {1.0}, {0.0}));
    const std::string csv2 = report_to_csv(run_verification(p, {1.0}, {0.0}));
    CHECK(csv1 == csv2);
    ExperimentPlan p4 = p;
    p4.threads = 4;
    const std::string csv3 = report_to_csv(run_verification(p4, {1.0}, {0.0}));
    CHECK(csv1 == csv3);
}
