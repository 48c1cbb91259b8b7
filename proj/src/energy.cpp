#include "segwave/energy.hpp"

#include "segwave/error.hpp"
#include "segwave/parallel.hpp"

#include "numeric.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <string>

namespace segwave {

namespace {

void check_samples(std::span<const double> samples) {
    if (samples.size() < 2) {
        throw InvalidInput("signal must hold at least 2 samples, got " + std::to_string(samples.size()));
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i])) {
            throw InvalidInput("non-finite sample at index " + std::to_string(i));
        }
    }
}

// Grid size below which the serial kernel is cheaper than forking threads.
constexpr std::size_t kParallelThreshold = 1 << 14;

double score(const EnergyPrefix& prefix, std::size_t begin, std::size_t end, std::size_t t) noexcept {
    const double s1 = prefix.energy(begin, t);
    const double s2 = prefix.energy(t, end);
    if (!(s1 > 0.0) || !(s2 > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double n1 = static_cast<double>(t - begin);
    const double n2 = static_cast<double>(end - t);
    return -0.5 * n1 * std::log(s1) - 0.5 * n2 * std::log(s2) + detail::log_gamma(0.5 * n1) +
           detail::log_gamma(0.5 * n2);
}

}  // namespace

Signal::Signal(std::vector<double> samples, std::optional<double> sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
    check_samples(samples_);
    if (sample_rate_hz_ && !(*sample_rate_hz_ > 0.0 && std::isfinite(*sample_rate_hz_))) {
        throw InvalidInput("sample rate must be positive and finite");
    }
}

EnergyPrefix::EnergyPrefix(std::span<const double> samples) {
    check_samples(samples);
    cum_.resize(samples.size() + 1);
    cum_[0] = 0.0;
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double term = samples[i] * samples[i];
        const double next = sum + term;
        if (std::abs(sum) >= std::abs(term)) {
            comp += (sum - next) + term;
        } else {
            comp += (term - next) + sum;
        }
        sum = next;
        cum_[i + 1] = sum + comp;
    }
}

EnergyPrefix build_prefix(const Signal& signal) { return EnergyPrefix(signal.samples()); }

CandidateGrid CandidateGrid::over(std::size_t begin, std::size_t end, std::size_t step,
                                  std::size_t min_margin) {
    if (end < begin || end - begin < 2 * min_margin || min_margin == 0) {
        throw InvalidInput("segment [" + std::to_string(begin) + ", " + std::to_string(end) +
                           ") too short for margin " + std::to_string(min_margin));
    }
    CandidateGrid grid{begin, end, begin + min_margin, end - min_margin, step, min_margin};
    grid.validate();
    return grid;
}

void CandidateGrid::validate() const {
    if (step < 1) {
        throw InvalidInput("grid step must be >= 1");
    }
    if (min_margin < 1) {
        throw InvalidInput("grid margin must be >= 1");
    }
    if (end < begin || lo < begin + min_margin || hi + min_margin > end || lo > hi) {
        throw InvalidInput("invalid candidate grid: lo=" + std::to_string(lo) + " hi=" + std::to_string(hi) +
                           " over [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
    }
}

double log_marginal_posterior(const EnergyPrefix& prefix, std::size_t t) {
    return log_marginal_posterior(prefix, 0, prefix.size(), t);
}

double log_marginal_posterior(const EnergyPrefix& prefix, std::size_t begin, std::size_t end,
                              std::size_t t) {
    if (end > prefix.size() || t <= begin || t >= end) {
        throw InvalidInput("changepoint " + std::to_string(t) + " outside (" + std::to_string(begin) + ", " +
                           std::to_string(end) + ")");
    }
    if (!(prefix.energy(begin, t) > 0.0) || !(prefix.energy(t, end) > 0.0)) {
        throw DegenerateSegment("zero-energy side at changepoint " + std::to_string(t));
    }
    return score(prefix, begin, end, t);
}

ModeEstimate argmax_changepoint_serial(const EnergyPrefix& prefix, const CandidateGrid& grid) {
    grid.validate();
    if (grid.end > prefix.size()) {
        throw InvalidInput("grid extends past the signal");
    }
    ModeEstimate best{0, -std::numeric_limits<double>::infinity()};
    bool found = false;
    const std::size_t count = grid.count();
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t t = grid.at(k);
        const double v = score(prefix, grid.begin, grid.end, t);
        if (std::isfinite(v) && (!found || v > best.logpost)) {
            best = {t, v};
            found = true;
        }
    }
    if (!found) {
        throw NoCandidate("no admissible changepoint in [" + std::to_string(grid.lo) + ", " +
                          std::to_string(grid.hi) + "]");
    }
    return best;
}

ModeEstimate argmax_changepoint_parallel(const EnergyPrefix& prefix, const CandidateGrid& grid) {
    grid.validate();
    if (grid.end > prefix.size()) {
        throw InvalidInput("grid extends past the signal");
    }
    const std::size_t count = grid.count();
    const int threads = max_threads();
    std::vector<ModeEstimate> partial(static_cast<std::size_t>(threads),
                                      {0, -std::numeric_limits<double>::infinity()});
    std::vector<char> partial_found(static_cast<std::size_t>(threads), 0);

    // Static schedule: each thread scans one contiguous block in increasing
    // order, so a strict '>' keeps the smallest index within the block.
#pragma omp parallel num_threads(threads)
    {
        const auto tid = static_cast<std::size_t>(omp_get_thread_num());
        ModeEstimate local{0, -std::numeric_limits<double>::infinity()};
        bool local_found = false;
#pragma omp for schedule(static)
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t t = grid.at(k);
            const double v = score(prefix, grid.begin, grid.end, t);
            if (std::isfinite(v) && (!local_found || v > local.logpost)) {
                local = {t, v};
                local_found = true;
            }
        }
        partial[tid] = local;
        partial_found[tid] = local_found ? 1 : 0;
    }

    ModeEstimate best{0, -std::numeric_limits<double>::infinity()};
    bool found = false;
    for (std::size_t i = 0; i < partial.size(); ++i) {
        if (!partial_found[i]) {
            continue;
        }
        const auto& p = partial[i];
        if (!found || p.logpost > best.logpost || (p.logpost == best.logpost && p.t_hat < best.t_hat)) {
            best = p;
            found = true;
        }
    }
    if (!found) {
        throw NoCandidate("no admissible changepoint in [" + std::to_string(grid.lo) + ", " +
                          std::to_string(grid.hi) + "]");
    }
    return best;
}

ModeEstimate argmax_changepoint(const EnergyPrefix& prefix, const CandidateGrid& grid) {
    if (max_threads() > 1 && !omp_in_parallel() && grid.count() >= kParallelThreshold) {
        return argmax_changepoint_parallel(prefix, grid);
    }
    return argmax_changepoint_serial(prefix, grid);
}

}  // namespace segwave
