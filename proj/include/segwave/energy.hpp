#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace segwave {

// Zero-mean amplitude sequence. Length >= 2, every sample finite.
class Signal {
public:
    explicit Signal(std::vector<double> samples, std::optional<double> sample_rate_hz = std::nullopt);

    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    std::optional<double> sample_rate_hz() const noexcept { return sample_rate_hz_; }

    double operator[](std::size_t i) const noexcept { return samples_[i]; }

private:
    std::vector<double> samples_;
    std::optional<double> sample_rate_hz_;
};

// Cumulative squared amplitudes: cum[0] = 0, cum[k] = y_1^2 + ... + y_k^2.
// Immutable once built; safe for concurrent reads.
class EnergyPrefix {
public:
    // Compensated (Neumaier) accumulation. Throws InvalidInput for fewer than
    // two samples or non-finite values.
    explicit EnergyPrefix(std::span<const double> samples);

    std::size_t size() const noexcept { return cum_.size() - 1; }
    std::span<const double> cumulative() const noexcept { return cum_; }

    // Energy of the 0-based sample range [a, b). Requires a <= b <= size().
    double energy(std::size_t a, std::size_t b) const noexcept { return cum_[b] - cum_[a]; }
    double total() const noexcept { return cum_.back(); }

private:
    std::vector<double> cum_;
};

EnergyPrefix build_prefix(const Signal& signal);

// Admissible changepoints {lo, lo + step, ...} ∩ [lo, hi] inside the segment
// [begin, end). A changepoint t splits the segment into [begin, t) and [t, end).
struct CandidateGrid {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t step = 1;
    std::size_t min_margin = 2;

    // Grid over a whole segment with lo = begin + margin, hi = end - margin.
    // Throws InvalidInput when the segment cannot hold a candidate.
    static CandidateGrid over(std::size_t begin, std::size_t end, std::size_t step,
                              std::size_t min_margin = 2);

    // Throws InvalidInput if the invariants do not hold.
    void validate() const;

    std::size_t count() const noexcept { return (hi - lo) / step + 1; }
    std::size_t at(std::size_t k) const noexcept { return lo + k * step; }
};

// Unnormalized log marginal posterior of a single changepoint at t with the
// segment variances integrated out under Jeffreys priors and a uniform
// location prior:
//   -(n1/2) log S1 - (n2/2) log S2 + lgamma(n1/2) + lgamma(n2/2)
// where n1 = t - begin, n2 = end - t. Throws DegenerateSegment when either side
// has zero energy and InvalidInput when t is not strictly inside the segment.
double log_marginal_posterior(const EnergyPrefix& prefix, std::size_t t);
double log_marginal_posterior(const EnergyPrefix& prefix, std::size_t begin, std::size_t end,
                              std::size_t t);

struct ModeEstimate {
    std::size_t t_hat = 0;
    double logpost = 0.0;
};

// Posterior mode over the grid; ties go to the smallest index. Degenerate
// candidates are skipped. Throws NoCandidate if nothing admissible remains.
// The default entry point picks the OpenMP kernel for large grids; both
// kernels return identical results.
ModeEstimate argmax_changepoint(const EnergyPrefix& prefix, const CandidateGrid& grid);
ModeEstimate argmax_changepoint_serial(const EnergyPrefix& prefix, const CandidateGrid& grid);
ModeEstimate argmax_changepoint_parallel(const EnergyPrefix& prefix, const CandidateGrid& grid);

}  // namespace segwave
