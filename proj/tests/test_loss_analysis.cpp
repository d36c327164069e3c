#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fmce/errors.hpp"
#include "fmce/loss_analysis.hpp"
#include "fmce/rng.hpp"

#include "curve_gen.hpp"
#include "oracle_helpers.hpp"

using namespace fmce;

namespace {

LossSeries series_of(std::vector<double> values, std::string id = "test") {
    return LossSeries{std::move(values), std::move(id)};
}

}  // namespace

TEST_CASE("defaults match the documented configuration") {
    CHECK(SmoothingConfig{}.alpha == doctest::Approx(0.85));
    CHECK(SmoothingConfig{}.mode == SmoothingMode::recursive);
    CHECK(CqiConfig{}.window == 10);
}

TEST_CASE("recursive smoothing follows the running-average recurrence") {
    const auto out = smooth(series_of({4.0, 2.0, 2.0}), {0.5, SmoothingMode::recursive});
    REQUIRE(out.values.size() == 3);
    CHECK(out.values[0] == 4.0);
    CHECK(out.values[1] == 3.0);
    CHECK(out.values[2] == 2.5);
}

TEST_CASE("paper-literal smoothing blends with the raw previous value") {
    const auto out = smooth(series_of({4.0, 2.0, 2.0}), {0.5, SmoothingMode::paper_literal});
    CHECK(out.values == std::vector<double>{4.0, 3.0, 2.0});
}

TEST_CASE("constant series is a fixed point of both modes") {
    for (const auto mode : {SmoothingMode::recursive, SmoothingMode::paper_literal}) {
        // dyadic blend weights keep the fixed point bit-exact
        for (const double alpha : {0.25, 0.5, 1.0}) {
            const auto out = smooth(series_of({3.25, 3.25, 3.25}), {alpha, mode});
            CHECK(out.values == std::vector<double>{3.25, 3.25, 3.25});
        }
        const auto out = smooth(series_of({3.25, 3.25, 3.25}), {0.85, mode});
        for (double v : out.values) CHECK(v == doctest::Approx(3.25).epsilon(1e-15));
    }
}

TEST_CASE("smoothing is scale-equivariant in both modes") {
    Xoshiro256pp rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> values;
        for (int m = 0; m < 40; ++m) values.push_back(rng.uniform(0.1, 5.0));
        const double scale = rng.uniform(0.5, 10.0);
        std::vector<double> scaled;
        for (double v : values) scaled.push_back(scale * v);

        for (const auto mode : {SmoothingMode::recursive, SmoothingMode::paper_literal}) {
            const auto a = smooth(series_of(values), {0.85, mode});
            const auto b = smooth(series_of(scaled), {0.85, mode});
            for (size_t i = 0; i < a.values.size(); ++i) {
                CHECK(b.values[i] == doctest::Approx(scale * a.values[i]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("invalid inputs are rejected with diagnostics") {
    CHECK_THROWS_AS(smooth(series_of({1.0}), {}), ParseError);
    CHECK_THROWS_AS(smooth(series_of({1.0, -0.5}), {}), ParseError);
    CHECK_THROWS_AS(smooth(series_of({1.0, std::nan("")}), {}), ParseError);
    CHECK_THROWS_AS(smooth(series_of({1.0, 2.0}), {0.0, SmoothingMode::recursive}),
                    std::invalid_argument);
    CHECK_THROWS_AS(smooth(series_of({1.0, 2.0}), {1.5, SmoothingMode::recursive}),
                    std::invalid_argument);
    CHECK_THROWS_AS(first_difference(SmoothedSeries{{1.0}}), std::invalid_argument);

    try {
        smooth(series_of({1.0, -2.0}, "runA"), {});
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch 2") != std::string::npos);
        CHECK(msg.find("runA") != std::string::npos);
    }
}

TEST_CASE("first differences") {
    CHECK(first_difference(SmoothedSeries{{4.0, 3.0, 2.5}}) ==
          std::vector<double>{-1.0, -0.5});
    CHECK(first_difference(SmoothedSeries{{2.0, 2.0, 2.0, 2.0}}) ==
          std::vector<double>{0.0, 0.0, 0.0});
    const auto diffs = first_difference(SmoothedSeries{{5.0, 4.0, 2.0, 1.9}});
    for (double d : diffs) CHECK(d < 0.0);
}

TEST_CASE("cqi windows truncate at the head") {
    // |diffs| = [1.0, 0.5, 0.25] at epochs 2..4
    const SmoothedSeries smoothed{{2.0, 1.0, 0.5, 0.25}};
    const auto out = cqi(smoothed, {2, 0.4});
    REQUIRE(out.cqi.size() == 3);
    CHECK(out.cqi[0] == 1.0);
    CHECK(out.cqi[1] == 0.75);
    CHECK(out.cqi[2] == 0.375);
    REQUIRE(out.converged_epoch.has_value());
    CHECK(*out.converged_epoch == 4);  // first epoch at or below 0.4
}

TEST_CASE("constant series converges at epoch 2 for any threshold") {
    const auto smoothed = smooth(series_of({1.5, 1.5, 1.5, 1.5}), {});
    for (const double mu : {1e-12, 1e-4, 0.5}) {
        const auto out = cqi(smoothed, {10, mu});
        for (double v : out.cqi) CHECK(v == 0.0);
        REQUIRE(out.converged_epoch.has_value());
        CHECK(*out.converged_epoch == 2);
    }
}

TEST_CASE("synthetic exponential decay converges where the reference says") {
    // frozen from tests/oracles/analyze_oracle.py on exp(-0.1 m), m = 1..100
    std::vector<double> values;
    for (int m = 1; m <= 100; ++m) values.push_back(std::exp(-0.1 * m));
    const auto smoothed = smooth(series_of(values), {0.85, SmoothingMode::recursive});
    const auto out = cqi(smoothed, {10, 1e-4});
    REQUIRE(out.converged_epoch.has_value());
    CHECK(*out.converged_epoch == 84);

    const auto ref = oracle::converged_epoch(
        oracle::cqi_values(oracle::smooth(values, 0.85), 10), 1e-4);
    REQUIRE(ref.has_value());
    CHECK(*out.converged_epoch == *ref);
}

TEST_CASE("cqi equals the brute-force reference on random curves") {
    Xoshiro256pp rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        const auto curve = testgen::noisy_exponential(rng);
        const auto smoothed = smooth(series_of(curve.values), {});
        const auto out = cqi(smoothed, {10, 1e-3});

        const auto ref_smoothed = oracle::smooth(curve.values, 0.85);
        const auto ref_cqi = oracle::cqi_values(ref_smoothed, 10);
        REQUIRE(out.cqi.size() == ref_cqi.size());
        for (size_t i = 0; i < ref_cqi.size(); ++i) {
            CHECK(out.cqi[i] == ref_cqi[i]);
            CHECK(out.cqi[i] >= 0.0);
        }
        CHECK(out.converged_epoch == oracle::converged_epoch(ref_cqi, 1e-3));
    }
}

TEST_CASE("cqi is translation-invariant") {
    Xoshiro256pp rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto curve = testgen::noisy_exponential_raw(rng, 80);
        std::vector<double> shifted;
        for (double v : curve.values) shifted.push_back(v + 2.5);

        const auto a = cqi(smooth(series_of(curve.values), {}), {10, 1e-3});
        const auto b = cqi(smooth(series_of(shifted), {}), {10, 1e-3});
        for (size_t i = 0; i < a.cqi.size(); ++i) {
            CHECK(b.cqi[i] == doctest::Approx(a.cqi[i]).epsilon(1e-9));
        }
    }
}

TEST_CASE("converged epoch is monotone in the threshold") {
    Xoshiro256pp rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const auto curve = testgen::noisy_exponential(rng);
        const auto smoothed = smooth(series_of(curve.values), {});
        const auto loose = cqi(smoothed, {10, 1e-2});
        const auto tight = cqi(smoothed, {10, 1e-3});
        if (tight.converged_epoch) {
            REQUIRE(loose.converged_epoch.has_value());
            CHECK(*loose.converged_epoch <= *tight.converged_epoch);
        }
    }
}

TEST_CASE("loss logs parse from csv and jsonl") {
    const std::string dir = FMCE_FIXTURES_DIR;
    const auto csv = read_loss_log(dir + "/exp_decay.csv");
    CHECK(csv.run_id == "exp_decay");
    REQUIRE(csv.values.size() == 100);
    CHECK(csv.values[0] == std::exp(-0.1));

    const auto jsonl = read_loss_log(dir + "/exp_decay.jsonl");
    CHECK(jsonl.values == csv.values);
}

TEST_CASE("malformed loss logs are rejected") {
    const std::string dir = "/tmp/fmce_loss_parse_tests";
    std::filesystem::create_directories(dir);

    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream os(dir + "/" + name, std::ios::trunc);
        os << body;
        return dir + "/" + name;
    };

    CHECK_THROWS_AS(read_loss_log(dir + "/does_not_exist.csv"), ParseError);
    CHECK_THROWS_AS(read_loss_log(write("gap.csv", "epoch,loss\n1,0.5\n3,0.4\n")), ParseError);
    CHECK_THROWS_AS(read_loss_log(write("junk.csv", "epoch,loss\n1,0.5\ntwo,0.4\n")), ParseError);
    CHECK_THROWS_AS(read_loss_log(write("empty.csv", "")), ParseError);
    CHECK_THROWS_AS(read_loss_log(write("short.csv", "epoch,loss\n1,0.5\n")), ParseError);
    CHECK_THROWS_AS(read_loss_log(write("bad.jsonl", "{\"epoch\": 1}\n")), ParseError);
    CHECK_THROWS_AS(
        read_loss_log(write("neg.csv", "epoch,loss\n1,0.5\n2,-0.1\n")), ParseError);
}
