#pragma once

#include "segwave/energy.hpp"
#include "segwave/evalue.hpp"
#include "segwave/segmenter.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace testing {

using mp = boost::multiprecision::cpp_bin_float_50;

// Piecewise Gaussian noise: sds[i] applies on [bounds[i], bounds[i+1]).
inline std::vector<double> piecewise_noise(std::size_t n, const std::vector<std::size_t>& cps,
                                           const std::vector<double>& sds, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> y(n);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (seg < cps.size() && i >= cps[seg]) {
            ++seg;
        }
        y[i] = sds[seg] * z(rng);
    }
    return y;
}

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    return piecewise_noise(n, {}, {sd}, seed);
}

// Marginal posterior evaluated directly in 50-digit arithmetic from the raw samples:
// Gamma(t/2) Gamma((N-t)/2) S1^(-t/2) S2^(-(N-t)/2), then the log.
inline double log_marginal_oracle(const std::vector<double>& y, std::size_t t) {
    mp s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const mp v = mp(y[i]) * mp(y[i]);
        (i < t ? s1 : s2) += v;
    }
    const mp a = mp(t) / 2;
    const mp b = mp(y.size() - t) / 2;
    const mp value = boost::multiprecision::tgamma(a) * boost::multiprecision::tgamma(b) * boost::multiprecision::pow(s1, -a) *
                     boost::multiprecision::pow(s2, -b);
    return static_cast<double>(boost::multiprecision::log(value));
}

// e-value by tensor-grid midpoint quadrature over (lambda0, delta). The box
// covers the region where the posterior is within e^-40 of its maximum.
inline double evalue_quadrature(const segwave::SplitStats& st, const segwave::PriorSpec& prior,
                                std::size_t nodes = 400) {
    const double n0 = st.n0, n1 = st.n1, s0 = st.s0, s1 = st.s1, n = n0 + n1;
    auto logp = [&](double l0, double d) {
        double v = -0.5 * n * std::log(2.0 * M_PI) - n * l0 - n1 * d - 0.5 * s0 * std::exp(-2.0 * l0) -
                   0.5 * s1 * std::exp(-2.0 * (l0 + d));
        if (prior.kind == segwave::PriorKind::Laplace) {
            v -= std::abs(d) / prior.beta + std::log(2.0 * prior.beta);
        }
        return v;
    };
    // lambda0 maximizing logp for fixed delta: exp(2 l0) = (s0 + s1 e^{-2d}) / n.
    auto l0_hat = [&](double d) { return 0.5 * std::log((s0 + s1 * std::exp(-2.0 * d)) / n); };
    auto profile = [&](double d) { return logp(l0_hat(d), d); };

    const double l0s = 0.5 * std::log((s0 + s1) / n);
    const double pstar = logp(l0s, 0.0);

    const double d_hat = 0.5 * std::log((s1 / n1) / (s0 / n0));
    const double sd = std::sqrt(1.0 / (2.0 * n0) + 1.0 / (2.0 * n1));
    const double scan_lo = std::min(0.0, d_hat - 12.0 * sd);
    const double scan_hi = std::max(0.0, d_hat + 12.0 * sd);
    const int scan = 20001;
    double pmax = -std::numeric_limits<double>::infinity();
    std::vector<double> prof(scan);
    for (int i = 0; i < scan; ++i) {
        prof[i] = profile(scan_lo + (scan_hi - scan_lo) * i / (scan - 1));
        pmax = std::max(pmax, prof[i]);
    }
    double dlo = scan_hi, dhi = scan_lo;
    for (int i = 0; i < scan; ++i) {
        if (prof[i] > pmax - 40.0) {
            const double d = scan_lo + (scan_hi - scan_lo) * i / (scan - 1);
            dlo = std::min(dlo, d);
            dhi = std::max(dhi, d);
        }
    }
    const double pad = (scan_hi - scan_lo) / (scan - 1);
    dlo -= pad;
    dhi += pad;
    const double l_centre = l0s;
    const double l_half = 12.0 / std::sqrt(2.0 * n) + std::max(std::abs(dlo), std::abs(dhi));
    const double llo = l_centre - l_half, lhi = l_centre + l_half;

    const double hd = (dhi - dlo) / nodes, hl = (lhi - llo) / nodes;
    double total = 0.0, surprise = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double d = dlo + (i + 0.5) * hd;
        for (std::size_t j = 0; j < nodes; ++j) {
            const double l0 = llo + (j + 0.5) * hl;
            const double lp = logp(l0, d);
            const double w = std::exp(lp - pmax);
            total += w;
            if (lp > pstar) {
                surprise += w;
            }
        }
    }
    return 1.0 - surprise / total;
}

// Split tested on the whole signal, or 0 when none was tested.
inline std::size_t top_split(const segwave::SegmentationResult& r, std::size_t n) {
    for (const auto& s : r.splits) {
        if (s.begin == 0 && s.end == n) {
            return s.index;
        }
    }
    return 0;
}

}  // namespace testing
