#include "segwave/baselines.hpp"

#include "segwave/error.hpp"

#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>

namespace segwave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kActive = std::numeric_limits<std::size_t>::max();

// Segment-additive part of the objective: the cost plus, for MBIC, the
// (1/2) log(L/N) length term. +inf for zero-energy segments.
class SegmentTerm {
public:
    SegmentTerm(const EnergyPrefix& prefix, const PenaltySpec& penalty) : prefix_(prefix), by_length_(prefix.size() + 1) {
        const double n = static_cast<double>(prefix.size());
        const bool mbic = penalty.kind == PenaltyKind::MBIC;
        for (std::size_t len = 1; len < by_length_.size(); ++len) {
            const double l = static_cast<double>(len);
            by_length_[len] = -detail::log_gamma(0.5 * l) + (mbic ? 0.5 * std::log(l / n) : 0.0);
        }
    }

    double operator()(std::size_t a, std::size_t b) const noexcept {
        const double s = prefix_.energy(a, b);
        if (!(s > 0.0)) {
            return kInf;
        }
        return 0.5 * static_cast<double>(b - a) * std::log(s) + by_length_[b - a];
    }

private:
    const EnergyPrefix& prefix_;
    // -lgamma(L/2), plus (1/2) log(L/N) for MBIC.
    std::vector<double> by_length_;
};

void check_problem(const EnergyPrefix& prefix, const PenaltySpec& penalty, std::size_t min_seg_len) {
    penalty.validate();
    if (min_seg_len < 1) {
        throw InvalidInput("min_seg_len must be >= 1");
    }
    if (prefix.size() < 2 * min_seg_len) {
        throw InvalidInput("signal of length " + std::to_string(prefix.size()) + " shorter than 2 * min_seg_len");
    }
}

std::vector<std::size_t> backtrack(const std::vector<std::size_t>& last, std::size_t n) {
    std::vector<std::size_t> cps;
    std::size_t cur = n;
    while (cur > 0) {
        const std::size_t prev = last[cur];
        if (prev == 0) {
            break;
        }
        cps.push_back(prev);
        cur = prev;
    }
    std::reverse(cps.begin(), cps.end());
    return cps;
}

}  // namespace

PenaltySpec PenaltySpec::manual(double value) {
    PenaltySpec p{PenaltyKind::Manual, value};
    p.validate();
    return p;
}

void PenaltySpec::validate() const {
    if (kind == PenaltyKind::Manual && !(value >= 0.0)) {
        throw InvalidInput("manual penalty must be >= 0");
    }
}

double PenaltySpec::per_changepoint(std::size_t n) const {
    const double logn = std::log(static_cast<double>(n));
    switch (kind) {
        case PenaltyKind::MBIC:
            return 1.5 * logn;
        case PenaltyKind::BIC:
            return logn;
        case PenaltyKind::Manual:
            return value;
    }
    return value;
}

double segment_cost(const EnergyPrefix& prefix, std::size_t a, std::size_t b) {
    if (a >= b || b > prefix.size()) {
        throw InvalidInput("segment [" + std::to_string(a) + ", " + std::to_string(b) + ") is empty or out of range");
    }
    const double s = prefix.energy(a, b);
    if (!(s > 0.0)) {
        throw DegenerateSegment("zero-energy segment [" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
    const double len = static_cast<double>(b - a);
    return 0.5 * len * std::log(s) - detail::log_gamma(0.5 * len);
}

double penalized_objective(const EnergyPrefix& prefix, const PenaltySpec& penalty,
                           const std::vector<std::size_t>& changepoints) {
    const SegmentTerm term(prefix, penalty);
    const double beta = penalty.per_changepoint(prefix.size());
    double total = 0.0;
    std::size_t a = 0;
    for (std::size_t k = 0; k <= changepoints.size(); ++k) {
        const std::size_t b = k < changepoints.size() ? changepoints[k] : prefix.size();
        if (b <= a || b > prefix.size()) {
            throw InvalidInput("changepoints must be strictly increasing inside (0, N)");
        }
        total += term(a, b);
        a = b;
    }
    return total + beta * static_cast<double>(changepoints.size());
}

std::vector<std::size_t> optimal_partition_bruteforce(const EnergyPrefix& prefix, const PenaltySpec& penalty,
                                                      std::size_t min_seg_len) {
    check_problem(prefix, penalty, min_seg_len);
    const std::size_t n = prefix.size();
    if (n > kBruteforceLimit) {
        throw InvalidInput("optimal_partition_bruteforce is limited to N <= " + std::to_string(kBruteforceLimit) +
                           "; use pelt for longer signals");
    }
    const SegmentTerm term(prefix, penalty);
    const double beta = penalty.per_changepoint(n);
    std::vector<double> f(n + 1, kInf);
    std::vector<std::size_t> last(n + 1, 0);
    f[0] = -beta;
    for (std::size_t s = min_seg_len; s <= n; ++s) {
        for (std::size_t t = 0; t + min_seg_len <= s; ++t) {
            if (t != 0 && t < min_seg_len) {
                continue;
            }
            if (f[t] == kInf) {
                continue;
            }
            const double c = term(t, s);
            if (c == kInf) {
                continue;
            }
            const double v = f[t] + c + beta;
            if (v < f[s]) {
                f[s] = v;
                last[s] = t;
            }
        }
    }
    if (f[n] == kInf) {
        throw DegenerateSegment("no partition with positive-energy segments exists");
    }
    return backtrack(last, n);
}

std::vector<std::size_t> pelt(const EnergyPrefix& prefix, const PenaltySpec& penalty, std::size_t min_seg_len) {
    check_problem(prefix, penalty, min_seg_len);
    const std::size_t n = prefix.size();
    const SegmentTerm term(prefix, penalty);
    const double beta = penalty.per_changepoint(n);
    // C(a,b) - C(a,t) - C(t,b) >= -(1/2) log(N/8) + (1/2) log(2 pi) - 1/12 for
    // this cost (log-sum inequality plus Stirling bounds on lgamma), and the
    // MBIC length term lowers it by at most (1/2) log(N/4). -(log N + 1) is
    // below both.
    const double k = -(std::log(static_cast<double>(n)) + 1.0);

    std::vector<double> f(n + 1, kInf);
    std::vector<std::size_t> last(n + 1, 0);
    f[0] = -beta;
    // (t, s at which t was pruned). A pruned t stays usable for s' < s + m,
    // where the pruning witness s is not yet an admissible last changepoint.
    std::vector<std::pair<std::size_t, std::size_t>> candidates{{0, kActive}};
    std::vector<double> cost_at(n + 1, kInf);

    for (std::size_t s = min_seg_len; s <= n; ++s) {
        double best = kInf;
        std::size_t arg = 0;
        for (const auto& [t, pruned_at] : candidates) {
            if (s - t < min_seg_len) {
                continue;
            }
            const double c = term(t, s);
            cost_at[t] = c;
            if (c == kInf) {
                continue;
            }
            const double v = f[t] + c + beta;
            if (v < best) {
                best = v;
                arg = t;
            }
        }
        f[s] = best;
        last[s] = arg;

        std::size_t keep = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            auto [t, pruned_at] = candidates[i];
            if (pruned_at == kActive && s - t >= min_seg_len && cost_at[t] != kInf && best != kInf &&
                f[t] + cost_at[t] + k > best) {
                pruned_at = s;
            }
            if (pruned_at != kActive && s + 1 >= pruned_at + min_seg_len) {
                continue;
            }
            candidates[keep++] = {t, pruned_at};
        }
        candidates.resize(keep);
        if (best != kInf && s + min_seg_len <= n) {
            candidates.emplace_back(s, kActive);
        }
    }
    if (f[n] == kInf) {
        throw DegenerateSegment("no partition with positive-energy segments exists");
    }
    return backtrack(last, n);
}

std::vector<std::size_t> binseg(const EnergyPrefix& prefix, const PenaltySpec& penalty, std::size_t min_seg_len) {
    check_problem(prefix, penalty, min_seg_len);
    const SegmentTerm term(prefix, penalty);
    const double beta = penalty.per_changepoint(prefix.size());

    struct Split {
        double gain;
        std::size_t a;
        std::size_t b;
        std::size_t t;
    };
    auto best_split = [&](std::size_t a, std::size_t b) -> std::optional<Split> {
        if (b - a < 2 * min_seg_len) {
            return std::nullopt;
        }
        const double whole = term(a, b);
        if (whole == kInf) {
            return std::nullopt;
        }
        double best = kInf;
        std::size_t arg = 0;
        for (std::size_t t = a + min_seg_len; t + min_seg_len <= b; ++t) {
            const double v = term(a, t) + term(t, b);
            if (v < best) {
                best = v;
                arg = t;
            }
        }
        if (best == kInf) {
            return std::nullopt;
        }
        return Split{whole - best - beta, a, b, arg};
    };
    auto worse = [](const Split& x, const Split& y) {
        return x.gain != y.gain ? x.gain < y.gain : x.a > y.a;
    };
    std::priority_queue<Split, std::vector<Split>, decltype(worse)> queue(worse);
    if (auto s = best_split(0, prefix.size())) {
        queue.push(*s);
    }
    std::vector<std::size_t> cps;
    while (!queue.empty() && queue.top().gain > 0.0) {
        const Split top = queue.top();
        queue.pop();
        cps.push_back(top.t);
        for (auto child : {best_split(top.a, top.t), best_split(top.t, top.b)}) {
            if (child) {
                queue.push(*child);
            }
        }
    }
    std::sort(cps.begin(), cps.end());
    return cps;
}

}  // namespace segwave
