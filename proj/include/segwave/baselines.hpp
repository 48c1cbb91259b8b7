#pragma once

#include "segwave/energy.hpp"

#include <cstddef>
#include <vector>

namespace segwave {

enum class PenaltyKind { MBIC, BIC, Manual };

// MBIC: (3/2) log N per changepoint plus (1/2) sum_i log(L_i / N) over
// segments. BIC: log N per changepoint (a location and a variance, each
// (1/2) log N on the log-likelihood scale). Manual: `value` per changepoint.
struct PenaltySpec {
    PenaltyKind kind = PenaltyKind::MBIC;
    double value = 0.0;

    static PenaltySpec mbic() { return {PenaltyKind::MBIC, 0.0}; }
    static PenaltySpec bic() { return {PenaltyKind::BIC, 0.0}; }
    static PenaltySpec manual(double value);

    void validate() const;
    double per_changepoint(std::size_t n) const;
};

// Negated variance-change fitness of the segment [a, b):
//   (L/2) log S - lgamma(L/2),  L = b - a, S its energy.
// Throws DegenerateSegment for S = 0 and InvalidInput unless a < b <= N.
double segment_cost(const EnergyPrefix& prefix, std::size_t a, std::size_t b);

// sum of segment costs + penalty for a changepoint set; +inf if any segment
// is degenerate.
double penalized_objective(const EnergyPrefix& prefix, const PenaltySpec& penalty,
                           const std::vector<std::size_t>& changepoints);

// Exact minimizer of the penalized objective with segments of length >=
// min_seg_len. Pruned dynamic program; ties prefer the smallest last
// changepoint. Throws InvalidInput if N < 2 * min_seg_len.
std::vector<std::size_t> pelt(const EnergyPrefix& prefix, const PenaltySpec& penalty, std::size_t min_seg_len);

// Greedy splitting: apply the best improving split over all segments until no
// split lowers the penalized objective.
std::vector<std::size_t> binseg(const EnergyPrefix& prefix, const PenaltySpec& penalty, std::size_t min_seg_len);

// Unpruned O(N^2) optimal partition. Refuses N > 5000.
std::vector<std::size_t> optimal_partition_bruteforce(const EnergyPrefix& prefix, const PenaltySpec& penalty,
                                                      std::size_t min_seg_len);

constexpr std::size_t kBruteforceLimit = 5000;

}  // namespace segwave
