#pragma once

#include "segwave/energy.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace segwave {

enum class PriorKind { Jeffreys, Laplace };

// Jeffreys: 1/(sigma0 sigma1). Laplace: flat on log sigma0 and
// (1/2b) exp(-|delta|/b) on delta = log(sigma1/sigma0).
struct PriorSpec {
    PriorKind kind = PriorKind::Jeffreys;
    double beta = 0.0;

    static PriorSpec jeffreys() { return {PriorKind::Jeffreys, 0.0}; }
    static PriorSpec laplace(double beta);

    void validate() const;
};

// Sampler coordinates: lambda0 = log sigma0, delta = log(sigma1 / sigma0).
struct ThetaPoint {
    double lambda0 = 0.0;
    double delta = 0.0;

    double sigma0() const;
    double sigma1() const;
};

// Sufficient statistics of a two-sided split: sample counts and energies.
struct SplitStats {
    double n0 = 0.0;
    double n1 = 0.0;
    double s0 = 0.0;
    double s1 = 0.0;

    static SplitStats at(const EnergyPrefix& prefix, std::size_t t_hat);
    static SplitStats at(const EnergyPrefix& prefix, std::size_t begin, std::size_t end, std::size_t t_hat);

    double n() const noexcept { return n0 + n1; }
    double s() const noexcept { return s0 + s1; }
};

struct McmcConfig {
    std::size_t chain_length = 50'000;
    std::size_t burn_in = 10'000;
    std::size_t adapt_start = 2'000;
    double epsilon = 1e-6;
    // Per-coordinate standard deviation of the proposal before adaptation.
    double initial_sd = 0.1;
    std::uint64_t seed = 0;

    // chain_length - burn_in must be at least 1000.
    void validate() const;
};

struct EvalueReport {
    double ev = 1.0;
    double sev = 1.0;
    double p_star = 0.0;
    ThetaPoint theta_star{};
    double acceptance_rate = 0.0;
    double n_effective = 0.0;
    // Set when n_effective < 100.
    bool unreliable = false;
};

// Log posterior density over (lambda0, delta), unnormalized. With Jeffreys
// priors this is the log likelihood alone: the 1/(sigma0 sigma1) prior
// cancels the Jacobian of the log transform.
double log_full_posterior(const ThetaPoint& theta, const SplitStats& stats, const PriorSpec& prior);
double log_full_posterior(const ThetaPoint& theta, const EnergyPrefix& prefix, std::size_t t_hat,
                          const PriorSpec& prior);

struct H0Optimum {
    ThetaPoint theta_star{};
    double p_star = 0.0;

    double variance() const;
};

// Maximum of the posterior on delta = 0, in sampler coordinates:
// sigma*^2 = S / N for both priors. Throws DegenerateSegment when S = 0.
H0Optimum h0_max(const SplitStats& stats, const PriorSpec& prior);
H0Optimum h0_max(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior);

// Common-variance mode in (sigma0, sigma1) coordinates with Jeffreys priors:
// S / (N + 2).
double h0_variance_sigma_coords(const SplitStats& stats);

struct ChainSample {
    ThetaPoint theta{};
    double log_density = 0.0;
};

struct ChainResult {
    std::vector<ChainSample> samples;
    std::size_t accepted = 0;

    double acceptance_rate() const;
};

using LogDensity = std::function<double(const ThetaPoint&)>;

// Proposal scale factor 2.4^2 / d for a d-dimensional target.
constexpr double proposal_scale(int dim) { return 2.4 * 2.4 / static_cast<double>(dim); }

// Adaptive random-walk Metropolis (Haario et al.) on the plane. Before
// adapt_start the proposal is N(0, initial_sd^2 I); afterwards it is
// s_d Cov(history) + s_d epsilon I. Throws ChainFailure if the target
// returns NaN; -inf proposals are rejected.
ChainResult adaptive_chain(const LogDensity& target, const ThetaPoint& init, const McmcConfig& config);

// ev = 1 - posterior mass of {theta : p(theta) > p*}, estimated from the
// post-burn-in draws of a chain started at the H0 optimum.
EvalueReport evalue(const SplitStats& stats, const PriorSpec& prior, const McmcConfig& config);
EvalueReport evalue(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior,
                    const McmcConfig& config);

// sev = 1 - F_{k-h}(F_k^{-1}(1 - ev)) with k = 2, h = 1 (chi-square CDFs),
// which reduces to erfc(sqrt(-log ev)). Throws InvalidInput outside [0, 1].
double sev(double ev);

// Acceptance threshold on ev from simulated H0 data: the alpha-quantile of ev
// over `replicates` equal-variance signals with the same split sizes.
struct EvCalibration {
    double ev_threshold = 0.0;
    std::size_t replicates = 0;
};

EvCalibration calibrate_null_threshold(std::size_t n0, std::size_t n1, const PriorSpec& prior,
                                       const McmcConfig& config, double alpha, std::size_t replicates,
                                       std::uint64_t seed);

struct TestOutcome {
    bool accepted = false;
    EvalueReport report{};
};

// accepted iff sev <= alpha (H0 of equal variances rejected). With a
// calibration, accepted iff ev <= calibration->ev_threshold instead.
TestOutcome test_changepoint(const SplitStats& stats, const PriorSpec& prior, const McmcConfig& config,
                             double alpha, const std::optional<EvCalibration>& calibration = std::nullopt);
TestOutcome test_changepoint(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior,
                             const McmcConfig& config, double alpha);

}  // namespace segwave
