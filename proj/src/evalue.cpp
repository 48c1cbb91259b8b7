#include "segwave/evalue.hpp"

#include "segwave/error.hpp"
#include "segwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace segwave {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Running mean and covariance of the chain history (Welford).
struct RunningCov {
    double n = 0.0;
    double m0 = 0.0;
    double m1 = 0.0;
    double c00 = 0.0;
    double c01 = 0.0;
    double c11 = 0.0;

    void push(const ThetaPoint& x) {
        n += 1.0;
        const double d0 = x.lambda0 - m0;
        const double d1 = x.delta - m1;
        m0 += d0 / n;
        m1 += d1 / n;
        c00 += d0 * (x.lambda0 - m0);
        c01 += d0 * (x.delta - m1);
        c11 += d1 * (x.delta - m1);
    }
};

struct Cholesky2 {
    double l00 = 0.0;
    double l10 = 0.0;
    double l11 = 0.0;
};

Cholesky2 cholesky(double a00, double a01, double a11) {
    Cholesky2 l;
    l.l00 = std::sqrt(a00);
    l.l10 = a01 / l.l00;
    l.l11 = std::sqrt(std::max(a11 - l.l10 * l.l10, 0.0));
    return l;
}

// Shared kernel for adaptive_chain and evalue. `visit(i, sample)` sees every
// state of the chain, i = 0 .. chain_length - 1.
template <typename Target, typename Visit>
std::size_t run_chain(const Target& target, const ThetaPoint& init, const McmcConfig& config, Visit&& visit) {
    config.validate();
    double current_lp = target(init);
    if (std::isnan(current_lp) || !std::isfinite(current_lp)) {
        throw ChainFailure("target not finite at the initial point", 0);
    }
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double sd = proposal_scale(2);
    ThetaPoint current = init;
    RunningCov history;
    history.push(current);
    std::size_t accepted = 0;

    visit(0, ChainSample{current, current_lp});
    for (std::size_t i = 1; i < config.chain_length; ++i) {
        Cholesky2 l;
        if (i < config.adapt_start || history.n < 2.0) {
            l = {config.initial_sd, 0.0, config.initial_sd};
        } else {
            const double denom = history.n - 1.0;
            l = cholesky(sd * (history.c00 / denom + config.epsilon), sd * (history.c01 / denom),
                         sd * (history.c11 / denom + config.epsilon));
        }
        const double z0 = normal(rng);
        const double z1 = normal(rng);
        const ThetaPoint proposal{current.lambda0 + l.l00 * z0, current.delta + l.l10 * z0 + l.l11 * z1};
        const double lp = target(proposal);
        if (std::isnan(lp)) {
            throw ChainFailure("target returned NaN", i);
        }
        const double u = uniform(rng);
        if (lp > -std::numeric_limits<double>::infinity() && std::log(u) < lp - current_lp) {
            current = proposal;
            current_lp = lp;
            ++accepted;
        }
        history.push(current);
        visit(i, ChainSample{current, current_lp});
    }
    return accepted;
}

double lag1_effective_size(const std::vector<double>& trace) {
    const auto n = static_cast<double>(trace.size());
    if (trace.size() < 3) {
        return n;
    }
    double mean = 0.0;
    for (double v : trace) {
        mean += v;
    }
    mean /= n;
    double var = 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double d = trace[i] - mean;
        var += d * d;
        if (i > 0) {
            cov += d * (trace[i - 1] - mean);
        }
    }
    if (!(var > 0.0)) {
        return 1.0;
    }
    const double rho = std::clamp(cov / var, -0.999, 0.999);
    return std::max(1.0, n * (1.0 - rho) / (1.0 + rho));
}

}  // namespace

PriorSpec PriorSpec::laplace(double beta) {
    PriorSpec p{PriorKind::Laplace, beta};
    p.validate();
    return p;
}

void PriorSpec::validate() const {
    if (kind == PriorKind::Laplace && !(beta > 0.0 && std::isfinite(beta))) {
        throw InvalidInput("Laplace prior requires a positive finite beta");
    }
}

double ThetaPoint::sigma0() const { return std::exp(lambda0); }
double ThetaPoint::sigma1() const { return std::exp(lambda0 + delta); }

SplitStats SplitStats::at(const EnergyPrefix& prefix, std::size_t t_hat) {
    return at(prefix, 0, prefix.size(), t_hat);
}

SplitStats SplitStats::at(const EnergyPrefix& prefix, std::size_t begin, std::size_t end, std::size_t t_hat) {
    if (end > prefix.size() || t_hat <= begin || t_hat >= end) {
        throw InvalidInput("split " + std::to_string(t_hat) + " outside (" + std::to_string(begin) + ", " +
                           std::to_string(end) + ")");
    }
    return {static_cast<double>(t_hat - begin), static_cast<double>(end - t_hat), prefix.energy(begin, t_hat),
            prefix.energy(t_hat, end)};
}

void McmcConfig::validate() const {
    if (chain_length <= burn_in || chain_length - burn_in < 1000) {
        throw InvalidInput("chain_length - burn_in must be at least 1000");
    }
    if (!(epsilon > 0.0)) {
        throw InvalidInput("epsilon must be positive");
    }
    if (!(initial_sd > 0.0)) {
        throw InvalidInput("initial proposal sd must be positive");
    }
}

double log_full_posterior(const ThetaPoint& theta, const SplitStats& stats, const PriorSpec& prior) {
    const double lambda1 = theta.lambda0 + theta.delta;
    double lp = -0.5 * stats.n() * kLog2Pi - stats.n0 * theta.lambda0 - stats.n1 * lambda1 -
                0.5 * stats.s0 * std::exp(-2.0 * theta.lambda0) - 0.5 * stats.s1 * std::exp(-2.0 * lambda1);
    if (prior.kind == PriorKind::Laplace) {
        lp -= std::abs(theta.delta) / prior.beta + std::log(2.0 * prior.beta);
    }
    return lp;
}

double log_full_posterior(const ThetaPoint& theta, const EnergyPrefix& prefix, std::size_t t_hat,
                          const PriorSpec& prior) {
    return log_full_posterior(theta, SplitStats::at(prefix, t_hat), prior);
}

double H0Optimum::variance() const { return std::exp(2.0 * theta_star.lambda0); }

H0Optimum h0_max(const SplitStats& stats, const PriorSpec& prior) {
    prior.validate();
    if (!(stats.s() > 0.0)) {
        throw DegenerateSegment("zero total energy; H0 optimum undefined");
    }
    // d/d lambda0 of -N lambda0 - S exp(-2 lambda0) / 2 vanishes at exp(2 lambda0) = S / N.
    const ThetaPoint theta{0.5 * std::log(stats.s() / stats.n()), 0.0};
    return {theta, log_full_posterior(theta, stats, prior)};
}

H0Optimum h0_max(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior) {
    return h0_max(SplitStats::at(prefix, t_hat), prior);
}

double h0_variance_sigma_coords(const SplitStats& stats) {
    if (!(stats.s() > 0.0)) {
        throw DegenerateSegment("zero total energy; H0 optimum undefined");
    }
    return stats.s() / (stats.n() + 2.0);
}

double ChainResult::acceptance_rate() const {
    return samples.size() > 1 ? static_cast<double>(accepted) / static_cast<double>(samples.size() - 1) : 0.0;
}

ChainResult adaptive_chain(const LogDensity& target, const ThetaPoint& init, const McmcConfig& config) {
    ChainResult result;
    result.samples.reserve(config.chain_length);
    result.accepted = run_chain(target, init, config,
                                [&](std::size_t, const ChainSample& s) { result.samples.push_back(s); });
    return result;
}

EvalueReport evalue(const SplitStats& stats, const PriorSpec& prior, const McmcConfig& config) {
    prior.validate();
    config.validate();
    if (!(stats.s0 > 0.0) || !(stats.s1 > 0.0)) {
        throw DegenerateSegment("zero-energy side; posterior is improper");
    }
    const H0Optimum opt = h0_max(stats, prior);
    const auto target = [&](const ThetaPoint& theta) { return log_full_posterior(theta, stats, prior); };

    std::vector<double> trace;
    trace.reserve(config.chain_length - config.burn_in);
    std::size_t above = 0;
    const std::size_t accepted = run_chain(target, opt.theta_star, config, [&](std::size_t i, const ChainSample& s) {
        if (i < config.burn_in) {
            return;
        }
        trace.push_back(s.log_density);
        if (s.log_density > opt.p_star) {
            ++above;
        }
    });

    EvalueReport report;
    const auto kept = static_cast<double>(trace.size());
    report.ev = 1.0 - static_cast<double>(above) / kept;
    report.sev = sev(report.ev);
    report.p_star = opt.p_star;
    report.theta_star = opt.theta_star;
    report.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(config.chain_length - 1);
    report.n_effective = lag1_effective_size(trace);
    report.unreliable = report.n_effective < 100.0;
    return report;
}

EvalueReport evalue(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior,
                    const McmcConfig& config) {
    return evalue(SplitStats::at(prefix, t_hat), prior, config);
}

double sev(double ev) {
    if (!(ev >= 0.0 && ev <= 1.0)) {
        throw InvalidInput("e-value must lie in [0, 1]");
    }
    if (ev == 0.0) {
        return 0.0;
    }
    // F_2^{-1}(1 - ev) = -2 log ev and 1 - F_1(x) = erfc(sqrt(x / 2)).
    return std::erfc(std::sqrt(-std::log(ev)));
}

EvCalibration calibrate_null_threshold(std::size_t n0, std::size_t n1, const PriorSpec& prior,
                                       const McmcConfig& config, double alpha, std::size_t replicates,
                                       std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidInput("alpha must lie in (0, 1)");
    }
    if (replicates < 10 || n0 < 1 || n1 < 1) {
        throw InvalidInput("calibration needs >= 10 replicates and non-empty sides");
    }
    std::vector<double> evs(replicates);
    for (std::size_t r = 0; r < replicates; ++r) {
        // Unit-variance Gaussian energies are chi-square with n degrees of freedom.
        std::mt19937_64 rng(mix_seed(seed, r, 0x6e756c6cULL));
        std::chi_squared_distribution<double> chi0(static_cast<double>(n0));
        std::chi_squared_distribution<double> chi1(static_cast<double>(n1));
        const SplitStats stats{static_cast<double>(n0), static_cast<double>(n1), chi0(rng), chi1(rng)};
        McmcConfig cfg = config;
        cfg.seed = mix_seed(seed, r, 0x6d636d63ULL);
        evs[r] = evalue(stats, prior, cfg).ev;
    }
    std::sort(evs.begin(), evs.end());
    const auto idx = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(replicates - 1)));
    return {evs[idx], replicates};
}

TestOutcome test_changepoint(const SplitStats& stats, const PriorSpec& prior, const McmcConfig& config, double alpha,
                             const std::optional<EvCalibration>& calibration) {
    if (!(alpha >= 0.0 && alpha < 1.0)) {
        throw InvalidInput("alpha must lie in [0, 1)");
    }
    TestOutcome out;
    out.report = evalue(stats, prior, config);
    if (calibration) {
        out.accepted = alpha > 0.0 && out.report.ev <= calibration->ev_threshold;
    } else {
        out.accepted = alpha > 0.0 && out.report.sev <= alpha;
    }
    return out;
}

TestOutcome test_changepoint(const EnergyPrefix& prefix, std::size_t t_hat, const PriorSpec& prior,
                             const McmcConfig& config, double alpha) {
    return test_changepoint(SplitStats::at(prefix, t_hat), prior, config, alpha);
}

}  // namespace segwave
