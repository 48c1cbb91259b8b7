#include "segwave/error.hpp"
#include "segwave/parallel.hpp"
#include "segwave/segmenter.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace segwave;
using Catch::Approx;

namespace {

SegConfig quick(std::uint64_t seed) {
    SegConfig c;
    c.seed = seed;
    c.mcmc.chain_length = 20'000;
    c.mcmc.burn_in = 4000;
    return c;
}

void check_structure(const SegmentationResult& r, std::size_t n, const SegConfig& cfg) {
    REQUIRE(r.reports.size() == r.changepoints.size());
    REQUIRE(r.splits.size() == r.changepoints.size());
    for (std::size_t i = 0; i < r.changepoints.size(); ++i) {
        if (i > 0) {
            CHECK(r.changepoints[i] > r.changepoints[i - 1]);
        }
        CHECK(r.changepoints[i] >= cfg.min_seg_len);
        CHECK(r.changepoints[i] <= n - cfg.min_seg_len);
        CHECK(r.reports[i].sev <= cfg.alpha);
        CHECK(r.splits[i].index == r.changepoints[i]);
        CHECK(r.splits[i].index - r.splits[i].begin >= cfg.min_seg_len);
        CHECK(r.splits[i].end - r.splits[i].index >= cfg.min_seg_len);
    }
    REQUIRE(r.segments.size() == r.changepoints.size() + 1);
    CHECK(r.segments.front().start == 0);
    CHECK(r.segments.back().end == n);
    for (std::size_t i = 1; i < r.segments.size(); ++i) {
        CHECK(r.segments[i].start == r.segments[i - 1].end);
    }
    for (const auto& s : r.rejected_candidates) {
        CHECK(s.report.sev > cfg.alpha);
    }
}

}  // namespace

TEST_CASE("configuration validation", "[segmenter]") {
    const Signal sig(testing::white_noise(5000, 1));
    SegConfig c;
    c.alpha = 0.0;
    CHECK_THROWS_AS(segment(sig, c), InvalidInput);
    c.alpha = 1.0;
    CHECK_THROWS_AS(segment(sig, c), InvalidInput);
    c = SegConfig{};
    c.min_seg_len = 1;
    CHECK_THROWS_AS(segment(sig, c), InvalidInput);
    c = SegConfig{};
    c.base_resolution = 0;
    CHECK_THROWS_AS(segment(sig, c), InvalidInput);
    c = SegConfig{};
    c.min_seg_len = 3000;
    CHECK_THROWS_AS(segment(sig, c), InvalidInput);
}

TEST_CASE("resolution step", "[segmenter]") {
    CHECK(resolution_step(50'000, 1000, 50'000) == 1000);
    CHECK(resolution_step(25'000, 1000, 50'000) == 500);
    CHECK(resolution_step(10, 1000, 50'000) == 1);
    CHECK(resolution_step(75, 1000, 100'000) == 1);
}

TEST_CASE("single step: the top-level split is near the truth", "[segmenter]") {
    const std::size_t n = 50'000;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto y = testing::piecewise_noise(n, {n / 2}, {1.0, std::sqrt(2.0)}, 100 + seed);
        const SegConfig cfg = quick(seed);
        const auto r = segment(Signal(y), cfg);
        check_structure(r, n, cfg);
        const long t = static_cast<long>(testing::top_split(r, n));
        hits += std::abs(t - static_cast<long>(n / 2)) <= static_cast<long>(n / 100) ? 1 : 0;
    }
    CHECK(hits >= 9);
}

TEST_CASE("empirical-quantile gate: white noise and a single step", "[segmenter][calibration]") {
    const std::size_t n = 50'000;
    SegConfig cfg = quick(0);
    cfg.sev_mode = SevMode::EmpiricalQuantile;
    cfg.calibration_replicates = 100;
    int empty = 0, exact = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        cfg.seed = seed;
        empty += segment(Signal(testing::white_noise(n, 9000 + seed)), cfg).changepoints.empty() ? 1 : 0;
        const auto r = segment(Signal(testing::piecewise_noise(n, {n / 2}, {1.0, std::sqrt(2.0)}, 100 + seed)), cfg);
        exact += r.changepoints.size() == 1 &&
                         std::abs(static_cast<long>(r.changepoints[0]) - static_cast<long>(n / 2)) <= 500
                     ? 1
                     : 0;
    }
    CHECK(empty >= 9);
    CHECK(exact >= 8);
}

TEST_CASE("segment-level null threshold", "[segmenter][calibration]") {
    SegConfig cfg = quick(0);
    cfg.calibration_replicates = 50;
    const auto a = calibrate_segment_threshold(20'000, 400, cfg, 11);
    const auto b = calibrate_segment_threshold(20'000, 400, cfg, 11);
    CHECK(a.ev_threshold == b.ev_threshold);
    CHECK(a.replicates == 50);
    // Selecting the mode first makes null e-values smaller than at a fixed split.
    const auto fixed = calibrate_null_threshold(10'000, 10'000, cfg.prior, cfg.mcmc, 0.05, 50, 11);
    CHECK(a.ev_threshold < fixed.ev_threshold);
    CHECK_THROWS_AS(calibrate_segment_threshold(1500, 10, cfg, 1), InvalidInput);
}

TEST_CASE("several changepoints: structure and evidence", "[segmenter]") {
    const std::size_t n = 60'000;
    const auto y = testing::piecewise_noise(n, {12'000, 30'000, 41'000}, {1.0, 2.0, 0.8, 1.6}, 3);
    const SegConfig cfg = quick(9);
    const auto r = segment(Signal(y), cfg);
    check_structure(r, n, cfg);
    CHECK(r.changepoints.size() >= 3);
    CHECK(r.errors.empty());
}

TEST_CASE("serial and parallel runs are identical", "[segmenter][parallel]") {
    const std::size_t n = 80'000;
    const auto y = testing::piecewise_noise(n, {9000, 23'000, 40'000, 52'000, 70'000},
                                            {1.0, 1.6, 1.0, 2.0, 1.2, 2.2}, 77);
    const EnergyPrefix p(y);
    SegConfig cfg = quick(5);
    cfg.parallel = false;
    const auto serial = segment(p, cfg);
    cfg.parallel = true;
    for (int threads : {2, 4}) {
        set_max_threads(threads);
        const auto par = segment(p, cfg);
        CHECK(par.changepoints == serial.changepoints);
        REQUIRE(par.reports.size() == serial.reports.size());
        for (std::size_t i = 0; i < par.reports.size(); ++i) {
            CHECK(par.reports[i].ev == serial.reports[i].ev);
        }
        CHECK(par.rejected_candidates.size() == serial.rejected_candidates.size());
    }
    set_max_threads(0);
}

TEST_CASE("restricting alpha matches a rerun", "[segmenter]") {
    const std::size_t n = 60'000;
    const auto y = testing::piecewise_noise(n, {15'000, 31'000, 44'000}, {1.0, 1.15, 1.0, 1.4}, 13);
    const EnergyPrefix p(y);
    SegConfig cfg = quick(2);
    cfg.alpha = 0.2;
    const auto full = segment(p, cfg);
    for (double a : {0.2, 0.05, 0.01, 1e-4}) {
        SegConfig small = cfg;
        small.alpha = a;
        const auto direct = segment(p, small);
        const auto derived = restrict_alpha(full, p, a);
        CHECK(derived.changepoints == direct.changepoints);
        CHECK(derived.rejected_candidates.size() == direct.rejected_candidates.size());
    }
    CHECK_THROWS_AS(restrict_alpha(full, p, 0.0), InvalidInput);
}

TEST_CASE("changepoints are scale invariant", "[segmenter][property]") {
    const std::size_t n = 40'000;
    const auto y = testing::piecewise_noise(n, {11'000, 26'000}, {1.0, 1.5, 1.0}, 31);
    const auto base = segment(Signal(y), quick(4));
    for (double c : {0.01, 25.0}) {
        std::vector<double> z(y);
        for (double& v : z) {
            v *= c;
        }
        CHECK(segment(Signal(z), quick(4)).changepoints == base.changepoints);
    }
}

TEST_CASE("a grid step as long as the signal has no candidates", "[segmenter]") {
    const std::size_t n = 20'000;
    const auto y = testing::piecewise_noise(n, {n / 2}, {1.0, 3.0}, 1);
    SegConfig cfg = quick(1);
    cfg.base_resolution = n;
    const auto r = segment(Signal(y), cfg);
    CHECK(r.changepoints.empty());
    CHECK(r.rejected_candidates.empty());
    CHECK(r.segments.size() == 1);
}

TEST_CASE("changepoint cap", "[segmenter]") {
    const std::size_t n = 60'000;
    const auto y = testing::piecewise_noise(n, {15'000, 30'000, 45'000}, {1.0, 3.0, 1.0, 3.0}, 8);
    SegConfig cfg = quick(1);
    cfg.max_changepoints = 2;
    const auto r = segment(Signal(y), cfg);
    CHECK(r.changepoints.size() == 2);
}

TEST_CASE("halving the resolution moves the changepoint by at most one coarse step", "[segmenter][property]") {
    const std::size_t n = 50'000;
    int stable = 0, runs = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto y = testing::piecewise_noise(n, {n / 2}, {1.0, std::sqrt(2.0)}, 300 + seed);
        const EnergyPrefix p(y);
        SegConfig coarse = quick(seed);
        SegConfig fine = coarse;
        fine.base_resolution = coarse.base_resolution / 2;
        const std::size_t a = testing::top_split(segment(p, coarse), n);
        const std::size_t b = testing::top_split(segment(p, fine), n);
        if (a == 0 || b == 0) {
            continue;
        }
        ++runs;
        const long diff = std::abs(static_cast<long>(a) - static_cast<long>(b));
        stable += diff <= static_cast<long>(resolution_step(n, coarse.base_resolution, n)) ? 1 : 0;
    }
    REQUIRE(runs >= 8);
    CHECK(stable >= 0.9 * runs);
}

TEST_CASE("empirical-quantile mode finds a strong step", "[segmenter]") {
    const std::size_t n = 20'000;
    const auto y = testing::piecewise_noise(n, {n / 2}, {1.0, 2.0}, 5);
    SegConfig cfg = quick(3);
    cfg.sev_mode = SevMode::EmpiricalQuantile;
    cfg.calibration_replicates = 40;
    cfg.mcmc.chain_length = 5000;
    cfg.mcmc.burn_in = 1000;
    const auto r = segment(Signal(y), cfg);
    REQUIRE(r.changepoints.size() >= 1);
    CHECK(std::abs(static_cast<long>(r.changepoints[0]) - static_cast<long>(n / 2)) <= 200);
}

TEST_CASE("segment statistics", "[segmenter]") {
    const auto a = estimate_segment_stats(Signal(std::vector<double>{1, -1, 1, -1}), {});
    REQUIRE(a.size() == 1);
    CHECK(a[0].variance == 1.0);
    CHECK(a[0].rms_db == 0.0);

    const auto b = estimate_segment_stats(Signal(std::vector<double>{1, -1, 2, -2}), {2});
    REQUIRE(b.size() == 2);
    CHECK(b[0].variance == 1.0);
    CHECK(b[1].variance == 4.0);
    CHECK(b[1].rms_db == Approx(6.0206).margin(1e-4));
    CHECK(b[1].start == 2);
    CHECK(b[1].end == 4);

    const auto c = estimate_segment_stats(Signal(std::vector<double>(6, 0.0)), {});
    CHECK(c[0].variance == 0.0);
    CHECK(std::isinf(c[0].rms_db));
    CHECK(c[0].rms_db < 0.0);

    CHECK_THROWS_AS(estimate_segment_stats(Signal(std::vector<double>{1, 2, 3, 4}), {3, 2}), InvalidInput);
    CHECK_THROWS_AS(estimate_segment_stats(Signal(std::vector<double>{1, 2, 3, 4}), {4}), InvalidInput);
}
