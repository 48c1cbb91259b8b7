#pragma once

#include "segwave/baselines.hpp"
#include "segwave/energy.hpp"
#include "segwave/segmenter.hpp"

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace segwave {

struct SimSpec {
    std::size_t n = 100'000;
    double expected_k = 50.0;
    double var_low = 1.0;
    double var_high = 2.0;
    std::uint64_t seed = 0;
    std::size_t replicates = 10;

    void validate() const;
};

struct SimulatedSignal {
    Signal signal;
    std::vector<std::size_t> changepoints;
};

// Geometric gaps with p = expected_k / n; segment variances alternate
// var_low, var_high, ... starting at var_low.
SimulatedSignal simulate(const SimSpec& spec);

struct MatchScore {
    double precision = 0.0;
    double recall = 0.0;
    // 2 P R / (P + R)
    double f1_standard = 0.0;
    // P R / (P + R), at most 0.5
    double f1_paper = 0.0;
    std::size_t true_positives = 0;
};

// Greedy one-to-one matching, closest pairs first, within `tol` samples.
// Throws InvalidInput for unsorted inputs.
MatchScore match_score(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& estimate,
                       std::size_t tol);

// -2 max log-likelihood (per-segment ML variances) + (2m + 1) log N.
// Throws DegenerateSegment for a zero-energy segment.
double bic(const EnergyPrefix& prefix, const std::vector<std::size_t>& changepoints);

struct BetaPoint {
    double beta = 0.0;
    double bic = 0.0;
    std::size_t changepoints = 0;
    bool failed = false;
};

struct BetaSelection {
    double beta_star = 0.0;
    std::vector<BetaPoint> curve;
    // No convex knee on the (log beta, BIC) curve; beta_star is the smallest beta.
    bool knee_undefined = false;
};

class SelectionError : public std::runtime_error {
public:
    SelectionError(const std::string& what, std::vector<BetaPoint> curve)
        : std::runtime_error(what), curve_(std::move(curve)) {}

    const std::vector<BetaPoint>& curve() const noexcept { return curve_; }

private:
    std::vector<BetaPoint> curve_;
};

// Knee of a BIC-versus-log(beta) curve by maximum discrete curvature on
// normalized axes, restricted to convex corners. Returns the curve index, or
// nothing when the curve has no such corner.
std::optional<std::size_t> knee_index(const std::vector<double>& log_beta, const std::vector<double>& bic_values);

// Runs `segment` with a Laplace(beta) prior for every beta in the ascending
// grid (>= 3 points) and picks the knee of the BIC curve.
BetaSelection select_beta(const Signal& signal, const std::vector<double>& beta_grid, const SegConfig& config);

enum class Algorithm { BayesJeffreys, BayesLaplace, Pelt, Binseg };

// Table names: "jeffreys", "laplace", "pelt", "binseg".
std::string algorithm_name(Algorithm a);
// Accepts the CLI spellings "bayes-jeffreys", "bayes-laplace", "pelt", "binseg".
Algorithm parse_algorithm(const std::string& name);

struct BenchConfig {
    // Bayesian runs pick alpha (and beta for Laplace) by minimum BIC.
    std::vector<double> alpha_grid{0.001, 0.005, 0.01, 0.02, 0.05, 0.1};
    std::vector<double> beta_grid{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
    std::size_t base_resolution = 1000;
    std::size_t min_seg_len = 1000;
    McmcConfig mcmc{};
    PenaltySpec penalty = PenaltySpec::mbic();
    std::size_t baseline_min_seg_len = 2;
    // Match tolerance is n / tolerance_divisor.
    std::size_t tolerance_divisor = 100;
};

struct EvalRecord {
    std::size_t n = 0;
    std::string algorithm;
    double time_s = 0.0;
    double true_k = 0.0;
    double est_k = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1_standard = 0.0;
    double f1_paper = 0.0;
    std::size_t runs = 0;
    std::size_t failures = 0;
};

// Per-replicate outcome; run_benchmark averages these.
struct RunOutcome {
    double time_s = 0.0;
    std::size_t true_k = 0;
    std::size_t est_k = 0;
    MatchScore score{};
    bool failed = false;
    std::string error;
};

RunOutcome run_single(const SimulatedSignal& sim, Algorithm algorithm, const BenchConfig& config,
                      std::uint64_t seed);

// One record per (spec, algorithm), in input order. Failed runs are counted
// and excluded from the averages.
std::vector<EvalRecord> run_benchmark(const std::vector<SimSpec>& specs, const std::vector<Algorithm>& algorithms,
                                      const BenchConfig& config = {});

std::string records_to_csv(const std::vector<EvalRecord>& records);
std::string records_to_json(const std::vector<EvalRecord>& records);

}  // namespace segwave
