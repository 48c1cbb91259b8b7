#pragma once

#include "segwave/energy.hpp"
#include "segwave/evalue.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace segwave {

enum class SevMode {
    // sev <= alpha with the chi-square transformation.
    ChiSquare,
    // ev <= alpha-quantile of ev under simulated H0 segments of the same
    // length, each run through the same grid search before testing. Accounts
    // for testing at the posterior mode rather than at a fixed split.
    EmpiricalQuantile,
};

struct SegConfig {
    double alpha = 0.05;
    PriorSpec prior = PriorSpec::jeffreys();
    // Grid step at the top level; the ratio base_resolution / N is kept for
    // every sub-segment.
    std::size_t base_resolution = 1000;
    std::size_t min_seg_len = 1000;
    std::optional<std::size_t> max_changepoints;
    McmcConfig mcmc{};
    std::uint64_t seed = 0;
    SevMode sev_mode = SevMode::ChiSquare;
    std::size_t calibration_replicates = 200;
    // Process independent pending segments on OpenMP workers.
    bool parallel = true;

    void validate() const;
};

struct SegmentStats {
    std::size_t start = 0;
    std::size_t end = 0;
    double variance = 0.0;
    // 10 log10(variance); -infinity for a zero-energy segment.
    double rms_db = 0.0;
};

// One tested split: the segment [begin, end) and its posterior-mode candidate.
struct TestedSplit {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t index = 0;
    EvalueReport report{};
};

struct BranchError {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string message;
};

struct SegmentationResult {
    std::vector<std::size_t> changepoints;
    // reports[i] and splits[i] belong to changepoints[i].
    std::vector<EvalueReport> reports;
    std::vector<TestedSplit> splits;
    std::vector<TestedSplit> rejected_candidates;
    std::vector<SegmentStats> segments;
    std::vector<BranchError> errors;
};

// Binary segmentation driven by the marginal posterior mode and the e-value
// test. Iterative work queue; identical output for serial and parallel runs.
// Throws InvalidInput if the signal is shorter than 2 * min_seg_len.
SegmentationResult segment(const Signal& signal, const SegConfig& config);
SegmentationResult segment(const EnergyPrefix& prefix, const SegConfig& config);

// The result `segment` would return with a smaller alpha, derived without
// re-running any test: e-values depend only on the segment bounds and the
// seed. Requires the chi-square mode, no changepoint cap, and alpha <= the
// alpha of the full run.
SegmentationResult restrict_alpha(const SegmentationResult& full, const EnergyPrefix& prefix, double alpha);

// Null threshold for EmpiricalQuantile: white-noise segments of `length`,
// posterior mode on the grid with `step`, e-value at the mode.
EvCalibration calibrate_segment_threshold(std::size_t length, std::size_t step, const SegConfig& config,
                                          std::uint64_t seed);

// Grid step for a segment of length len: max(1, round(len * base_resolution / n_total)).
std::size_t resolution_step(std::size_t len, std::size_t base_resolution, std::size_t n_total);

// Per-segment ML variance sum(y^2)/L and its level in dB.
std::vector<SegmentStats> estimate_segment_stats(const Signal& signal, const std::vector<std::size_t>& changepoints);
std::vector<SegmentStats> estimate_segment_stats(const EnergyPrefix& prefix,
                                                 const std::vector<std::size_t>& changepoints);

}  // namespace segwave
