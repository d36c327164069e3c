#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fmce/errors.hpp"
#include "fmce/phase_segmentation.hpp"
#include "fmce/rng.hpp"

#include "curve_gen.hpp"
#include "oracle_helpers.hpp"

using namespace fmce;

namespace {

// the analysis path under test, end to end from raw values
PhasePlan analyze_values(const std::vector<double>& values, int k, double mu = 1e-3) {
    const LossSeries raw{values, "test"};
    const auto smoothed = smooth(raw, {});
    const auto series = cqi(smoothed, {10, mu});
    return plan_phases(raw, smoothed, series, {k});
}

CqiSeries fixed_convergence(int epoch) {
    CqiSeries c;
    c.converged_epoch = epoch;
    return c;
}

std::vector<double> exact_exponential(int epochs, double amplitude, double rate) {
    std::vector<double> v;
    for (int m = 1; m <= epochs; ++m) v.push_back(amplitude * std::exp(-rate * m));
    return v;
}

}  // namespace

TEST_CASE("log transform is the elementwise natural log") {
    const auto out = log_transform(SmoothedSeries{{1.0, M_E, M_E * M_E}});
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(1.0));
    CHECK(out[2] == doctest::Approx(2.0));

    const auto constant = log_transform(SmoothedSeries{{2.5, 2.5, 2.5}});
    for (double v : constant) CHECK(v == std::log(2.5));
}

TEST_CASE("log transform names the offending epoch") {
    try {
        log_transform(SmoothedSeries{{1.0, 0.0, 2.0}});
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("epoch 2") != std::string::npos);
    }
}

TEST_CASE("exact exponential decay yields the ceiling-spaced markers") {
    // log of the curve is linear, so phase thresholds are crossed at
    // E_0 + ceil(k * (E_K - E_0) / K); span 81 keeps every intermediate
    // threshold strictly between epochs, immune to last-ulp rounding
    const auto values = exact_exponential(100, 5.0, 0.1);
    const LossSeries raw{values, "exp"};
    const SmoothedSeries as_smoothed{values};
    const int e_k = 82;

    for (const int k : {2, 5, 10}) {
        const auto plan = plan_phases(raw, as_smoothed, fixed_convergence(e_k), {k});
        CHECK(plan.baseline_epoch == 1);
        CHECK(plan.convergence_epoch == e_k);
        REQUIRE(static_cast<int>(plan.markers.size()) == k);
        for (int phase = 1; phase < k; ++phase) {
            const double ideal = static_cast<double>(phase) * (e_k - 1) / k;
            const int expected = 1 + static_cast<int>(std::ceil(ideal));
            CHECK(plan.markers[static_cast<size_t>(phase) - 1] == expected);
        }
        CHECK(plan.total_drop == doctest::Approx(0.1 * (e_k - 1)));
        CHECK(plan.per_phase_drop == doctest::Approx(plan.total_drop / k));
    }
}

TEST_CASE("exponential markers are uniformly spaced within one epoch") {
    const auto values = exact_exponential(120, 2.0, 0.07);
    const LossSeries raw{values, "exp"};
    const SmoothedSeries as_smoothed{values};
    for (const int e_k : {81, 97, 111}) {
        for (const int k : {2, 5, 10}) {
            const auto plan = plan_phases(raw, as_smoothed, fixed_convergence(e_k), {k});
            const double ideal = static_cast<double>(e_k - plan.baseline_epoch) / k;
            int prev = plan.baseline_epoch;
            for (int marker : plan.markers) {
                CHECK(std::abs((marker - prev) - ideal) <= 1.0);
                prev = marker;
            }
        }
    }
}

TEST_CASE("two phases split the drop at the midpoint") {
    const auto values = exact_exponential(60, 2.0, 0.08);
    const LossSeries raw{values, "exp"};
    const SmoothedSeries as_smoothed{values};
    const auto plan = plan_phases(raw, as_smoothed, fixed_convergence(49), {2});
    REQUIRE(plan.markers.size() == 2);
    CHECK(plan.markers[1] == 49);
    const auto log_s = log_transform(as_smoothed);
    const double drop =
        std::abs(log_s[static_cast<size_t>(plan.markers[0]) - 1] - log_s[0]);
    CHECK(drop >= plan.total_drop / 2.0);
}

TEST_CASE("marker invariants hold across the plan") {
    Xoshiro256pp rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        const auto curve = testgen::noisy_exponential(rng);
        const PhasePlan plan = analyze_values(curve.values, 10);
        REQUIRE(plan.markers.size() == 10);
        CHECK(plan.baseline_epoch < plan.markers.front());
        for (size_t i = 1; i < plan.markers.size(); ++i) {
            CHECK(plan.markers[i] > plan.markers[i - 1]);
        }
        CHECK(plan.markers.back() == plan.convergence_epoch);
        CHECK(plan.total_drop == doctest::Approx(10.0 * plan.per_phase_drop));

        // each phase keeps a non-negative share of the drop on these curves
        const double base = plan.log_series[static_cast<size_t>(plan.baseline_epoch) - 1];
        double prev_cum = 0.0;
        for (int marker : plan.markers) {
            const double cum = std::abs(plan.log_series[static_cast<size_t>(marker) - 1] - base);
            CHECK(cum >= prev_cum);
            prev_cum = cum;
        }
        CHECK(prev_cum >= plan.total_drop - plan.per_phase_drop);
    }
}

TEST_CASE("plan matches the brute-force reference on random curves") {
    Xoshiro256pp rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        const auto curve = testgen::noisy_exponential(rng);
        const LossSeries raw{curve.values, "prop"};
        const auto smoothed = smooth(raw, {});
        const auto series = cqi(smoothed, {10, 1e-3});
        REQUIRE(series.converged_epoch.has_value());

        const auto plan = plan_phases(raw, smoothed, series, {10});
        const auto ref = oracle::epoch_markers(curve.values, oracle::smooth(curve.values, 0.85),
                                               *series.converged_epoch, 10);
        CHECK(plan.baseline_epoch == ref.baseline_epoch);
        CHECK(plan.markers == ref.markers);
    }
}

TEST_CASE("markers are invariant under positive scaling with the convergence epoch fixed") {
    Xoshiro256pp rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        const auto curve = testgen::noisy_exponential(rng);
        std::vector<double> scaled;
        for (double v : curve.values) scaled.push_back(7.3 * v);

        const LossSeries raw_a{curve.values, "a"}, raw_b{scaled, "b"};
        const auto sm_a = smooth(raw_a, {}), sm_b = smooth(raw_b, {});
        const auto plan_a = plan_phases(raw_a, sm_a, fixed_convergence(160), {10});
        const auto plan_b = plan_phases(raw_b, sm_b, fixed_convergence(160), {10});
        CHECK(plan_a.markers == plan_b.markers);
        CHECK(plan_a.baseline_epoch == plan_b.baseline_epoch);
    }
}

TEST_CASE("score assignment maps marker epochs and nothing else") {
    const auto values = exact_exponential(100, 5.0, 0.1);
    const auto plan =
        plan_phases(LossSeries{values, "exp"}, SmoothedSeries{values}, fixed_convergence(81), {10});
    CHECK(assign_fmcs(plan, plan.markers[0]) == 1);
    CHECK(assign_fmcs(plan, plan.convergence_epoch) == 10);
    CHECK(assign_fmcs(plan, plan.markers[3]) == 4);
    CHECK_FALSE(assign_fmcs(plan, plan.markers[0] + 100).has_value());
    int non_marker = 2;
    while (assign_fmcs(plan, non_marker).has_value()) non_marker++;
    CHECK_FALSE(assign_fmcs(plan, non_marker).has_value());
}

TEST_CASE("degenerate and non-converged curves are rejected") {
    const std::vector<double> flat(30, 0.5);
    const LossSeries raw{flat, "flat"};
    const auto smoothed = smooth(raw, {});

    CHECK_THROWS_AS(plan_phases(raw, smoothed, CqiSeries{}, {5}), NotConvergedError);
    CHECK_THROWS_AS(plan_phases(raw, smoothed, fixed_convergence(2), {5}), DegenerateCurveError);
    CHECK_THROWS_AS(plan_phases(raw, smoothed, fixed_convergence(2), {1}), std::invalid_argument);
}

TEST_CASE("colliding thresholds on a cliff are infeasible") {
    // nearly all of the drop happens at epoch 2; phases 2+ have nowhere to go
    const std::vector<double> values{1.0, std::exp(-10.0), std::exp(-10.1)};
    const LossSeries raw{values, "cliff"};
    const SmoothedSeries as_smoothed{values};
    try {
        plan_phases(raw, as_smoothed, fixed_convergence(3), {3});
        FAIL("expected InfeasibleSegmentationError");
    } catch (const InfeasibleSegmentationError& e) {
        CHECK(e.colliding_phase == 2);
    }
}

TEST_CASE("baseline at or past the convergence epoch is infeasible") {
    // rising curve: raw maximum lands on the last epoch
    const std::vector<double> values{0.5, 0.6, 0.7, 0.8};
    const LossSeries raw{values, "rising"};
    CHECK_THROWS_AS(plan_phases(raw, SmoothedSeries{values}, fixed_convergence(3), {2}),
                    InfeasibleSegmentationError);
}

TEST_CASE("plan report round-trips through json") {
    const auto values = exact_exponential(100, 5.0, 0.1);
    const auto plan =
        plan_phases(LossSeries{values, "exp"}, SmoothedSeries{values}, fixed_convergence(81), {10});
    const auto report = phase_plan_report(plan, "exp", {}, {}, {10});
    CHECK(report.at("run_id") == "exp");
    CHECK(report.at("mode") == "recursive");
    CHECK(report.at("baseline_epoch") == 1);

    const auto back = phase_plan_from_report(report);
    CHECK(back.markers == plan.markers);
    CHECK(back.convergence_epoch == plan.convergence_epoch);
    CHECK(back.total_drop == plan.total_drop);
}
