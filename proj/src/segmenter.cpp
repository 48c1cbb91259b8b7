#include "segwave/segmenter.hpp"

#include "segwave/error.hpp"
#include "segwave/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace segwave {

namespace {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - begin; }
};

enum class Verdict { Closed, Accepted, Rejected, Failed };

struct Outcome {
    Verdict verdict = Verdict::Closed;
    std::size_t t_hat = 0;
    EvalueReport report{};
    std::string error;
};

// First grid point at or after begin + min_seg_len that is a multiple of step
// away from begin.
std::optional<CandidateGrid> grid_for(const Span& span, std::size_t step, std::size_t min_seg_len) {
    const std::size_t offset = (min_seg_len + step - 1) / step * step;
    const std::size_t lo = span.begin + offset;
    if (span.length() < 2 * min_seg_len || lo + min_seg_len > span.end) {
        return std::nullopt;
    }
    const std::size_t hi_limit = span.end - min_seg_len;
    const std::size_t hi = lo + (hi_limit - lo) / step * step;
    return CandidateGrid{span.begin, span.end, lo, hi, step, min_seg_len};
}

Outcome process(const EnergyPrefix& prefix, const Span& span, const SegConfig& config) {
    Outcome out;
    const std::size_t step = resolution_step(span.length(), config.base_resolution, prefix.size());
    const auto grid = grid_for(span, step, config.min_seg_len);
    if (!grid) {
        return out;
    }
    try {
        const ModeEstimate mode = argmax_changepoint(prefix, *grid);
        const SplitStats stats = SplitStats::at(prefix, span.begin, span.end, mode.t_hat);
        McmcConfig mcmc = config.mcmc;
        mcmc.seed = mix_seed(config.seed, span.begin, span.end);
        std::optional<EvCalibration> calibration;
        if (config.sev_mode == SevMode::EmpiricalQuantile) {
            calibration = calibrate_segment_threshold(span.length(), step, config,
                                                      mix_seed(config.seed, span.begin, span.end ^ 0x63616cULL));
        }
        const TestOutcome test = test_changepoint(stats, config.prior, mcmc, config.alpha, calibration);
        out.verdict = test.accepted ? Verdict::Accepted : Verdict::Rejected;
        out.t_hat = mode.t_hat;
        out.report = test.report;
    } catch (const NoCandidate&) {
        out.verdict = Verdict::Closed;
    } catch (const std::exception& e) {
        out.verdict = Verdict::Failed;
        out.error = e.what();
    }
    return out;
}

void finish(SegmentationResult& result, std::vector<TestedSplit> accepted, const EnergyPrefix& prefix) {
    const auto by_index = [](const TestedSplit& a, const TestedSplit& b) { return a.index < b.index; };
    std::sort(accepted.begin(), accepted.end(), by_index);
    std::sort(result.rejected_candidates.begin(), result.rejected_candidates.end(), by_index);
    for (auto& s : accepted) {
        result.changepoints.push_back(s.index);
        result.reports.push_back(s.report);
    }
    result.splits = std::move(accepted);
    result.segments = estimate_segment_stats(prefix, result.changepoints);
}

}  // namespace

EvCalibration calibrate_segment_threshold(std::size_t length, std::size_t step, const SegConfig& config,
                                          std::uint64_t seed) {
    const auto grid = grid_for({0, length}, step, config.min_seg_len);
    if (!grid) {
        throw InvalidInput("segment too short for a candidate grid");
    }
    if (config.calibration_replicates < 10) {
        throw InvalidInput("calibration needs >= 10 replicates");
    }
    std::vector<double> evs;
    evs.reserve(config.calibration_replicates);
    std::vector<double> noise(length);
    for (std::size_t r = 0; r < config.calibration_replicates; ++r) {
        std::mt19937_64 rng(mix_seed(seed, r, 0x6e756c6cULL));
        std::normal_distribution<double> z(0.0, 1.0);
        for (double& v : noise) {
            v = z(rng);
        }
        const EnergyPrefix null_prefix(noise);
        const ModeEstimate mode = argmax_changepoint_serial(null_prefix, *grid);
        McmcConfig mcmc = config.mcmc;
        mcmc.seed = mix_seed(seed, r, 0x6d636d63ULL);
        evs.push_back(evalue(SplitStats::at(null_prefix, mode.t_hat), config.prior, mcmc).ev);
    }
    std::sort(evs.begin(), evs.end());
    const auto idx = static_cast<std::size_t>(std::floor(config.alpha * static_cast<double>(evs.size() - 1)));
    return {evs[idx], evs.size()};
}

void SegConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidInput("alpha must lie in (0, 1)");
    }
    if (min_seg_len < 2) {
        throw InvalidInput("min_seg_len must be >= 2");
    }
    if (base_resolution < 1) {
        throw InvalidInput("base_resolution must be >= 1");
    }
    prior.validate();
    mcmc.validate();
}

std::size_t resolution_step(std::size_t len, std::size_t base_resolution, std::size_t n_total) {
    const double step = std::round(static_cast<double>(len) * static_cast<double>(base_resolution) /
                                   static_cast<double>(n_total));
    return std::max<std::size_t>(1, static_cast<std::size_t>(step));
}

SegmentationResult segment(const Signal& signal, const SegConfig& config) {
    config.validate();
    if (signal.size() < 2 * config.min_seg_len) {
        throw InvalidInput("signal of length " + std::to_string(signal.size()) + " is shorter than 2 * min_seg_len");
    }
    return segment(build_prefix(signal), config);
}

SegmentationResult segment(const EnergyPrefix& prefix, const SegConfig& config) {
    config.validate();
    const std::size_t n = prefix.size();
    if (n < 2 * config.min_seg_len) {
        throw InvalidInput("signal of length " + std::to_string(n) + " is shorter than 2 * min_seg_len");
    }

    SegmentationResult result;
    std::vector<TestedSplit> accepted;
    std::vector<Span> pending{{0, n}};
    const std::size_t cap = config.max_changepoints.value_or(std::numeric_limits<std::size_t>::max());
    const int threads = config.parallel ? max_threads() : 1;

    while (!pending.empty() && accepted.size() < cap) {
        // Larger segments first; the batch order only matters for the cap.
        std::sort(pending.begin(), pending.end(), [](const Span& a, const Span& b) {
            return a.length() != b.length() ? a.length() > b.length() : a.begin < b.begin;
        });
        std::vector<Outcome> outcomes(pending.size());
        const auto count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1 && count > 1)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            outcomes[static_cast<std::size_t>(i)] = process(prefix, pending[static_cast<std::size_t>(i)], config);
        }

        std::vector<Span> next;
        for (std::size_t i = 0; i < pending.size(); ++i) {
            const Span& span = pending[i];
            Outcome& o = outcomes[i];
            switch (o.verdict) {
                case Verdict::Closed:
                    break;
                case Verdict::Rejected:
                    result.rejected_candidates.push_back({span.begin, span.end, o.t_hat, o.report});
                    break;
                case Verdict::Failed:
                    result.errors.push_back({span.begin, span.end, std::move(o.error)});
                    break;
                case Verdict::Accepted:
                    if (accepted.size() < cap) {
                        accepted.push_back({span.begin, span.end, o.t_hat, o.report});
                        next.push_back({span.begin, o.t_hat});
                        next.push_back({o.t_hat, span.end});
                    }
                    break;
            }
        }
        pending = std::move(next);
    }

    finish(result, std::move(accepted), prefix);
    return result;
}

SegmentationResult restrict_alpha(const SegmentationResult& full, const EnergyPrefix& prefix, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidInput("alpha must lie in (0, 1)");
    }
    std::map<std::pair<std::size_t, std::size_t>, const TestedSplit*> tested;
    for (const auto& s : full.splits) {
        tested.emplace(std::pair{s.begin, s.end}, &s);
    }
    for (const auto& s : full.rejected_candidates) {
        tested.emplace(std::pair{s.begin, s.end}, &s);
    }
    SegmentationResult result;
    std::vector<TestedSplit> accepted;
    std::vector<Span> pending{{0, prefix.size()}};
    while (!pending.empty()) {
        const Span span = pending.back();
        pending.pop_back();
        const auto it = tested.find({span.begin, span.end});
        if (it == tested.end()) {
            for (const auto& e : full.errors) {
                if (e.begin == span.begin && e.end == span.end) {
                    result.errors.push_back(e);
                }
            }
            continue;
        }
        const TestedSplit& s = *it->second;
        if (s.report.sev <= alpha) {
            accepted.push_back(s);
            pending.push_back({span.begin, s.index});
            pending.push_back({s.index, span.end});
        } else {
            result.rejected_candidates.push_back(s);
        }
    }
    finish(result, std::move(accepted), prefix);
    return result;
}

std::vector<SegmentStats> estimate_segment_stats(const Signal& signal, const std::vector<std::size_t>& changepoints) {
    return estimate_segment_stats(build_prefix(signal), changepoints);
}

std::vector<SegmentStats> estimate_segment_stats(const EnergyPrefix& prefix,
                                                 const std::vector<std::size_t>& changepoints) {
    const std::size_t n = prefix.size();
    std::vector<SegmentStats> out;
    out.reserve(changepoints.size() + 1);
    std::size_t start = 0;
    for (std::size_t k = 0; k <= changepoints.size(); ++k) {
        const std::size_t end = k < changepoints.size() ? changepoints[k] : n;
        if (end <= start || end > n) {
            throw InvalidInput("changepoints must be strictly increasing inside (0, N)");
        }
        const double var = prefix.energy(start, end) / static_cast<double>(end - start);
        const double db = var > 0.0 ? 10.0 * std::log10(var) : -std::numeric_limits<double>::infinity();
        out.push_back({start, end, var, db});
        start = end;
    }
    return out;
}

}  // namespace segwave
