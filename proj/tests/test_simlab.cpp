#include "segwave/error.hpp"
#include "segwave/simlab.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include <cmath>
#include <numeric>

using namespace segwave;
using Catch::Approx;

TEST_CASE("simulated gaps follow the geometric law", "[simlab]") {
    SimSpec spec;
    spec.seed = 1;
    double count = 0.0, gaps = 0.0, gap_n = 0.0;
    const int reps = 1000;
    for (int r = 0; r < reps; ++r) {
        spec.seed = 1000 + r;
        const auto sim = simulate(spec);
        count += static_cast<double>(sim.changepoints.size());
        std::size_t prev = 0;
        for (std::size_t c : sim.changepoints) {
            gaps += static_cast<double>(c - prev);
            gap_n += 1.0;
            prev = c;
        }
    }
    CHECK(spec.expected_k / static_cast<double>(spec.n) == Approx(5e-4));
    CHECK(count / reps == Approx(50.0).margin(2.0));
    CHECK(gaps / gap_n == Approx(2000.0).margin(60.0));
}

TEST_CASE("simulated variances alternate starting low", "[simlab]") {
    SimSpec spec;
    spec.n = 200'000;
    spec.expected_k = 20;
    spec.seed = 3;
    const auto sim = simulate(spec);
    const EnergyPrefix p(build_prefix(sim.signal));
    std::size_t a = 0;
    for (std::size_t k = 0; k <= sim.changepoints.size(); ++k) {
        const std::size_t b = k < sim.changepoints.size() ? sim.changepoints[k] : spec.n;
        if (b - a >= 2000) {
            const double v = p.energy(a, b) / static_cast<double>(b - a);
            CHECK(v == Approx(k % 2 == 0 ? 1.0 : 2.0).margin(0.2));
        }
        a = b;
    }
}

TEST_CASE("simulation is deterministic per seed", "[simlab]") {
    SimSpec spec;
    spec.n = 20'000;
    spec.seed = 9;
    const auto a = simulate(spec);
    const auto b = simulate(spec);
    CHECK(a.changepoints == b.changepoints);
    CHECK(std::equal(a.signal.samples().begin(), a.signal.samples().end(), b.signal.samples().begin()));
    spec.seed = 10;
    CHECK(simulate(spec).changepoints != a.changepoints);

    spec.n = 50;
    CHECK_THROWS_AS(simulate(spec), InvalidInput);
    spec.n = 1000;
    spec.expected_k = 0.5;
    CHECK_THROWS_AS(simulate(spec), InvalidInput);
}

TEST_CASE("match score examples", "[simlab]") {
    const auto a = match_score({100}, {100}, 10);
    CHECK(a.precision == 1.0);
    CHECK(a.recall == 1.0);
    CHECK(a.f1_paper == 0.5);
    CHECK(a.f1_standard == 1.0);

    const auto b = match_score({100}, {98, 500}, 10);
    CHECK(b.precision == 0.5);
    CHECK(b.recall == 1.0);
    CHECK(b.f1_paper == Approx(1.0 / 3.0));
    CHECK(b.f1_standard == Approx(2.0 / 3.0));

    const double p = 0.179, r = 0.417;
    CHECK(p * r / (p + r) == Approx(0.1253).margin(1e-4));
}

TEST_CASE("match score is one-to-one and nearest first", "[simlab]") {
    const auto a = match_score({100}, {95, 103}, 10);
    CHECK(a.true_positives == 1);
    CHECK(a.precision == 0.5);
    // 103 is closest to 100 and must not steal 108's only partner.
    const auto b = match_score({100, 110}, {103, 108}, 5);
    CHECK(b.true_positives == 2);
    const auto c = match_score({100}, {111}, 10);
    CHECK(c.true_positives == 0);
    CHECK(match_score({100}, {110}, 10).true_positives == 1);
}

TEST_CASE("match score conventions and symmetry", "[simlab][property]") {
    const auto e = match_score({}, {}, 5);
    CHECK(e.precision == 1.0);
    CHECK(e.recall == 1.0);
    const auto f = match_score({10}, {}, 5);
    CHECK(f.precision == 0.0);
    CHECK(f.recall == 0.0);
    CHECK(f.f1_standard == 0.0);
    CHECK_THROWS_AS(match_score({5, 3}, {1}, 1), InvalidInput);
    CHECK_THROWS_AS(match_score({1}, {5, 3}, 1), InvalidInput);

    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> pos(0, 10'000);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<std::size_t> t(rng() % 20), s(rng() % 20);
        for (auto& v : t) {
            v = pos(rng);
        }
        for (auto& v : s) {
            v = pos(rng);
        }
        std::sort(t.begin(), t.end());
        std::sort(s.begin(), s.end());
        const auto x = match_score(t, s, 300);
        const auto y = match_score(s, t, 300);
        CHECK(x.precision == y.recall);
        CHECK(x.recall == y.precision);
        CHECK(x.f1_standard >= x.f1_paper);
        CHECK(x.f1_standard == Approx(2.0 * x.f1_paper));
        CHECK(x.f1_paper <= 0.5);
    }
}

TEST_CASE("BIC closed form", "[simlab]") {
    std::vector<double> y(100);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = i % 2 ? -1.0 : 1.0;
    }
    const EnergyPrefix p(y);
    const double loglik = -50.0 * (std::log(2.0 * M_PI) + 1.0);
    CHECK(loglik == Approx(-141.894).margin(1e-3));
    CHECK(bic(p, {}) == Approx(288.393).margin(1e-3));
    // Both sides keep the pooled variance: only the parameter count changes.
    CHECK(bic(p, {40}) - bic(p, {}) == Approx(2.0 * std::log(100.0)).epsilon(1e-12));
    CHECK_THROWS_AS(bic(EnergyPrefix(std::vector<double>{0, 0, 1, 1}), {2}), DegenerateSegment);
    CHECK_THROWS_AS(bic(p, {50, 50}), InvalidInput);
}

TEST_CASE("BIC ignores order within segments", "[simlab][property]") {
    auto y = testing::piecewise_noise(1000, {400}, {1.0, 2.0}, 8);
    const double before = bic(EnergyPrefix(y), {400});
    std::mt19937_64 rng(1);
    std::shuffle(y.begin(), y.begin() + 400, rng);
    std::shuffle(y.begin() + 400, y.end(), rng);
    CHECK(bic(EnergyPrefix(y), {400}) == Approx(before).epsilon(1e-12));
}

TEST_CASE("BIC rewards the true changepoint and penalizes a spurious one", "[simlab][property]") {
    const std::size_t n = 50'000;
    int better = 0, worse = 0;
    const int trials = 20;
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> pos(1000, n - 1000);
    for (int t = 0; t < trials; ++t) {
        const EnergyPrefix p(testing::piecewise_noise(n, {n / 2}, {1.0, std::sqrt(2.0)}, 40 + t));
        better += bic(p, {n / 2}) < bic(p, {}) ? 1 : 0;
        std::size_t extra = pos(rng);
        while (extra == n / 2) {
            extra = pos(rng);
        }
        std::vector<std::size_t> cps{n / 2, extra};
        std::sort(cps.begin(), cps.end());
        worse += bic(p, cps) > bic(p, {n / 2}) ? 1 : 0;
    }
    CHECK(better >= 0.9 * trials);
    CHECK(worse >= 0.9 * trials);
}

TEST_CASE("knee detection", "[simlab]") {
    const std::vector<double> x{0, 1, 2, 3, 4, 5};
    CHECK_FALSE(knee_index(x, {5, 5, 5, 5, 5, 5}).has_value());
    CHECK_FALSE(knee_index({0, 1}, {1, 0}).has_value());
    // Sharp drop then flat: the corner is the first low point.
    const auto k = knee_index(x, {100, 99, 98, 10, 9.5, 9.4});
    REQUIRE(k.has_value());
    CHECK(*k == 3);
    // A straight line has no corner.
    CHECK_FALSE(knee_index(x, {6, 5, 4, 3, 2, 1}).has_value());
}

TEST_CASE("beta selection on a single step", "[simlab]") {
    std::vector<double> grid;
    for (int i = 0; i < 9; ++i) {
        grid.push_back(std::pow(10.0, -6.0 + 5.0 * i / 8.0));
    }
    SegConfig cfg;
    cfg.mcmc.chain_length = 20'000;
    cfg.mcmc.burn_in = 4000;
    int ok = 0;
    const int runs = 5;
    for (int s = 0; s < runs; ++s) {
        cfg.seed = s;
        const Signal sig(testing::piecewise_noise(50'000, {25'000}, {1.0, std::sqrt(2.0)}, 100 + s));
        const BetaSelection sel = select_beta(sig, grid, cfg);
        REQUIRE(sel.curve.size() == grid.size());
        const auto chosen = std::find_if(sel.curve.begin(), sel.curve.end(),
                                         [&](const BetaPoint& p) { return p.beta == sel.beta_star; });
        REQUIRE(chosen != sel.curve.end());
        ok += !sel.knee_undefined && chosen->changepoints == 1 && sel.curve.front().changepoints == 0 ? 1 : 0;
    }
    CHECK(ok >= runs - 1);
}

TEST_CASE("beta selection input checks", "[simlab]") {
    const Signal sig(testing::white_noise(5000, 1));
    SegConfig cfg;
    cfg.min_seg_len = 500;
    CHECK_THROWS_AS(select_beta(sig, {1e-3, 1e-2}, cfg), InvalidInput);
    CHECK_THROWS_AS(select_beta(sig, {1e-2, 1e-3, 1e-1}, cfg), InvalidInput);
    CHECK_THROWS_AS(select_beta(sig, {0.0, 1e-3, 1e-1}, cfg), InvalidInput);
    cfg.min_seg_len = 4000;
    try {
        select_beta(sig, {1e-3, 1e-2, 1e-1}, cfg);
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        CHECK(e.curve().size() == 3);
        CHECK(e.curve()[0].failed);
    }
}

TEST_CASE("flat BIC curve falls back to the smallest beta", "[simlab]") {
    SegConfig cfg;
    cfg.mcmc.chain_length = 5000;
    cfg.mcmc.burn_in = 1000;
    cfg.min_seg_len = 500;
    const BetaSelection sel = select_beta(Signal(testing::white_noise(5000, 2)), {1e-7, 1e-6, 1e-5}, cfg);
    CHECK(sel.knee_undefined);
    CHECK(sel.beta_star == 1e-7);
}

TEST_CASE("algorithm names", "[simlab]") {
    CHECK(parse_algorithm("bayes-jeffreys") == Algorithm::BayesJeffreys);
    CHECK(parse_algorithm("bayes-laplace") == Algorithm::BayesLaplace);
    CHECK(parse_algorithm("pelt") == Algorithm::Pelt);
    CHECK(parse_algorithm("binseg") == Algorithm::Binseg);
    CHECK(algorithm_name(Algorithm::BayesLaplace) == "laplace");
    CHECK_THROWS_AS(parse_algorithm("kmeans"), InvalidInput);
}

TEST_CASE("benchmark runner", "[simlab]") {
    SimSpec spec;
    spec.n = 5000;
    spec.expected_k = 5;
    spec.replicates = 3;
    spec.seed = 12;
    CHECK(run_benchmark({spec}, {}).empty());

    BenchConfig cfg;
    cfg.min_seg_len = 200;
    cfg.mcmc.chain_length = 5000;
    cfg.mcmc.burn_in = 1000;
    const auto recs = run_benchmark({spec}, {Algorithm::BayesJeffreys, Algorithm::Pelt, Algorithm::Binseg}, cfg);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].algorithm == "jeffreys");
    for (const auto& r : recs) {
        CHECK(r.n == 5000);
        CHECK(r.runs == 3);
        CHECK(r.failures == 0);
        CHECK(r.precision >= 0.0);
        CHECK(r.precision <= 1.0);
        CHECK(r.f1_standard >= r.f1_paper);
    }
    const auto again = run_benchmark({spec}, {Algorithm::BayesJeffreys, Algorithm::Pelt, Algorithm::Binseg}, cfg);
    CHECK(records_to_csv(again) == records_to_csv(recs));

    const std::string csv = records_to_csv(recs);
    CHECK(csv.rfind("n,algorithm,true_k,est_k,precision,recall,f1_standard,f1_paper,runs,failures\n", 0) == 0);
    const auto j = nlohmann::json::parse(records_to_json(recs));
    REQUIRE(j.size() == 3);
    CHECK(j[1]["algorithm"] == "pelt");
}

TEST_CASE("failed runs are counted, not fatal", "[simlab]") {
    SimSpec spec;
    spec.n = 1000;
    spec.replicates = 2;
    BenchConfig cfg;
    cfg.min_seg_len = 1000;  // longer than half the signal
    const auto recs = run_benchmark({spec}, {Algorithm::BayesJeffreys, Algorithm::Pelt}, cfg);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].failures == 2);
    CHECK(recs[1].failures == 0);
}
