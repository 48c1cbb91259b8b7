#include "segwave/simlab.hpp"

#include "segwave/error.hpp"
#include "segwave/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace segwave {

namespace {

void require_sorted(const std::vector<std::size_t>& v, const char* what) {
    if (!std::is_sorted(v.begin(), v.end())) {
        throw InvalidInput(std::string(what) + " changepoints must be sorted");
    }
}

double elapsed_s(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

struct Selected {
    std::vector<std::size_t> changepoints;
    double bic = std::numeric_limits<double>::infinity();
};

// Smallest BIC over the alpha grid for one full (max-alpha) run.
void select_alpha(const SegmentationResult& full, const EnergyPrefix& prefix, const std::vector<double>& alphas,
                  Selected& best) {
    for (double alpha : alphas) {
        const SegmentationResult r = restrict_alpha(full, prefix, alpha);
        const double b = bic(prefix, r.changepoints);
        if (b < best.bic) {
            best = {r.changepoints, b};
        }
    }
}

std::string fmt(double v, int digits = 6) {
    if (!std::isfinite(v)) {
        return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

void SimSpec::validate() const {
    if (n < 100) {
        throw InvalidInput("simulation length must be >= 100");
    }
    if (!(expected_k >= 1.0) || !(expected_k < static_cast<double>(n))) {
        throw InvalidInput("expected_k must lie in [1, n)");
    }
    if (!(var_low > 0.0) || !(var_high > 0.0)) {
        throw InvalidInput("variances must be positive");
    }
    if (replicates < 1) {
        throw InvalidInput("replicates must be >= 1");
    }
}

SimulatedSignal simulate(const SimSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::geometric_distribution<std::size_t> gap(spec.expected_k / static_cast<double>(spec.n));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<std::size_t> cps;
    std::size_t pos = 0;
    while (true) {
        pos += gap(rng) + 1;
        if (pos >= spec.n) {
            break;
        }
        cps.push_back(pos);
    }

    std::vector<double> y(spec.n);
    const double sd[2] = {std::sqrt(spec.var_low), std::sqrt(spec.var_high)};
    std::size_t level = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        if (next < cps.size() && i == cps[next]) {
            level ^= 1U;
            ++next;
        }
        y[i] = sd[level] * normal(rng);
    }
    return {Signal(std::move(y)), std::move(cps)};
}

MatchScore match_score(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& estimate,
                       std::size_t tol) {
    require_sorted(truth, "true");
    require_sorted(estimate, "estimated");

    // (distance, true index, estimate index); the window scan relies on sorting.
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> pairs;
    std::size_t first = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        while (first < estimate.size() && estimate[first] + tol < truth[i]) {
            ++first;
        }
        for (std::size_t j = first; j < estimate.size() && estimate[j] <= truth[i] + tol; ++j) {
            const std::size_t d = truth[i] > estimate[j] ? truth[i] - estimate[j] : estimate[j] - truth[i];
            pairs.emplace_back(d, i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<char> used_true(truth.size(), 0);
    std::vector<char> used_est(estimate.size(), 0);
    std::size_t tp = 0;
    for (const auto& [d, i, j] : pairs) {
        if (!used_true[i] && !used_est[j]) {
            used_true[i] = used_est[j] = 1;
            ++tp;
        }
    }

    MatchScore s;
    s.true_positives = tp;
    if (estimate.empty()) {
        s.precision = truth.empty() ? 1.0 : 0.0;
    } else {
        s.precision = static_cast<double>(tp) / static_cast<double>(estimate.size());
    }
    if (truth.empty()) {
        s.recall = estimate.empty() ? 1.0 : 0.0;
    } else {
        s.recall = static_cast<double>(tp) / static_cast<double>(truth.size());
    }
    const double sum = s.precision + s.recall;
    if (sum > 0.0) {
        s.f1_paper = s.precision * s.recall / sum;
        s.f1_standard = 2.0 * s.f1_paper;
    }
    return s;
}

double bic(const EnergyPrefix& prefix, const std::vector<std::size_t>& changepoints) {
    const std::size_t n = prefix.size();
    double loglik = 0.0;
    std::size_t a = 0;
    for (std::size_t k = 0; k <= changepoints.size(); ++k) {
        const std::size_t b = k < changepoints.size() ? changepoints[k] : n;
        if (b <= a || b > n) {
            throw InvalidInput("changepoints must be strictly increasing inside (0, N)");
        }
        const double len = static_cast<double>(b - a);
        const double s = prefix.energy(a, b);
        if (!(s > 0.0)) {
            throw DegenerateSegment("zero-energy segment in BIC");
        }
        loglik -= 0.5 * len * (std::log(2.0 * std::numbers::pi * s / len) + 1.0);
        a = b;
    }
    const double params = 2.0 * static_cast<double>(changepoints.size()) + 1.0;
    return -2.0 * loglik + params * std::log(static_cast<double>(n));
}

std::optional<std::size_t> knee_index(const std::vector<double>& log_beta, const std::vector<double>& bic_values) {
    const std::size_t m = log_beta.size();
    if (m < 3 || bic_values.size() != m) {
        return std::nullopt;
    }
    const auto [xmin, xmax] = std::minmax_element(log_beta.begin(), log_beta.end());
    const auto [ymin, ymax] = std::minmax_element(bic_values.begin(), bic_values.end());
    const double xr = *xmax - *xmin;
    const double yr = *ymax - *ymin;
    if (!(xr > 0.0) || !(yr > 0.0)) {
        return std::nullopt;
    }
    std::optional<std::size_t> best;
    double best_k = 1e-6;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        const double x0 = (log_beta[i - 1] - *xmin) / xr;
        const double x1 = (log_beta[i] - *xmin) / xr;
        const double x2 = (log_beta[i + 1] - *xmin) / xr;
        const double y0 = (bic_values[i - 1] - *ymin) / yr;
        const double y1 = (bic_values[i] - *ymin) / yr;
        const double y2 = (bic_values[i + 1] - *ymin) / yr;
        const double d1 = (y2 - y0) / (x2 - x0);
        const double d2 = 2.0 * ((y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0)) / (x2 - x0);
        const double kappa = d2 / std::pow(1.0 + d1 * d1, 1.5);
        if (kappa > best_k) {
            best_k = kappa;
            best = i;
        }
    }
    return best;
}

BetaSelection select_beta(const Signal& signal, const std::vector<double>& beta_grid, const SegConfig& config) {
    if (beta_grid.size() < 3) {
        throw InvalidInput("beta grid needs at least 3 points");
    }
    for (std::size_t i = 0; i < beta_grid.size(); ++i) {
        if (!(beta_grid[i] > 0.0) || (i > 0 && !(beta_grid[i] > beta_grid[i - 1]))) {
            throw InvalidInput("beta grid must be positive and strictly ascending");
        }
    }
    const EnergyPrefix prefix = build_prefix(signal);
    BetaSelection sel;
    for (double beta : beta_grid) {
        SegConfig cfg = config;
        cfg.prior = PriorSpec::laplace(beta);
        BetaPoint p{beta, std::numeric_limits<double>::quiet_NaN(), 0, false};
        try {
            const SegmentationResult r = segment(prefix, cfg);
            p.bic = bic(prefix, r.changepoints);
            p.changepoints = r.changepoints.size();
        } catch (const std::exception&) {
            p.failed = true;
        }
        sel.curve.push_back(p);
    }

    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sel.curve.size(); ++i) {
        if (!sel.curve[i].failed && std::isfinite(sel.curve[i].bic)) {
            xs.push_back(std::log(sel.curve[i].beta));
            ys.push_back(sel.curve[i].bic);
            idx.push_back(i);
        }
    }
    if (idx.empty()) {
        throw SelectionError("every beta in the grid failed to segment", sel.curve);
    }
    if (const auto k = knee_index(xs, ys)) {
        sel.beta_star = sel.curve[idx[*k]].beta;
    } else {
        sel.beta_star = sel.curve[idx.front()].beta;
        sel.knee_undefined = true;
    }
    return sel;
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::BayesJeffreys:
            return "jeffreys";
        case Algorithm::BayesLaplace:
            return "laplace";
        case Algorithm::Pelt:
            return "pelt";
        case Algorithm::Binseg:
            return "binseg";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
    if (name == "bayes-jeffreys" || name == "jeffreys") {
        return Algorithm::BayesJeffreys;
    }
    if (name == "bayes-laplace" || name == "laplace") {
        return Algorithm::BayesLaplace;
    }
    if (name == "pelt") {
        return Algorithm::Pelt;
    }
    if (name == "binseg") {
        return Algorithm::Binseg;
    }
    throw InvalidInput("unknown algorithm '" + name + "'");
}

RunOutcome run_single(const SimulatedSignal& sim, Algorithm algorithm, const BenchConfig& config,
                      std::uint64_t seed) {
    RunOutcome out;
    out.true_k = sim.changepoints.size();
    const auto start = std::chrono::steady_clock::now();
    try {
        const EnergyPrefix prefix = build_prefix(sim.signal);
        std::vector<std::size_t> est;
        switch (algorithm) {
            case Algorithm::BayesJeffreys:
            case Algorithm::BayesLaplace: {
                if (config.alpha_grid.empty()) {
                    throw InvalidInput("alpha grid is empty");
                }
                SegConfig cfg;
                cfg.alpha = *std::max_element(config.alpha_grid.begin(), config.alpha_grid.end());
                cfg.base_resolution = config.base_resolution;
                cfg.min_seg_len = config.min_seg_len;
                cfg.mcmc = config.mcmc;
                cfg.seed = seed;
                Selected best;
                if (algorithm == Algorithm::BayesJeffreys) {
                    cfg.prior = PriorSpec::jeffreys();
                    select_alpha(segment(prefix, cfg), prefix, config.alpha_grid, best);
                } else {
                    for (double beta : config.beta_grid) {
                        cfg.prior = PriorSpec::laplace(beta);
                        select_alpha(segment(prefix, cfg), prefix, config.alpha_grid, best);
                    }
                }
                est = std::move(best.changepoints);
                break;
            }
            case Algorithm::Pelt:
                est = pelt(prefix, config.penalty, config.baseline_min_seg_len);
                break;
            case Algorithm::Binseg:
                est = binseg(prefix, config.penalty, config.baseline_min_seg_len);
                break;
        }
        out.est_k = est.size();
        out.score = match_score(sim.changepoints, est, sim.signal.size() / config.tolerance_divisor);
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    out.time_s = elapsed_s(start);
    return out;
}

std::vector<EvalRecord> run_benchmark(const std::vector<SimSpec>& specs, const std::vector<Algorithm>& algorithms,
                                      const BenchConfig& config) {
    std::vector<EvalRecord> records;
    for (const SimSpec& spec : specs) {
        spec.validate();
        std::vector<EvalRecord> cell(algorithms.size());
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            cell[a].n = spec.n;
            cell[a].algorithm = algorithm_name(algorithms[a]);
        }
        for (std::size_t r = 0; r < spec.replicates; ++r) {
            SimSpec one = spec;
            one.seed = mix_seed(spec.seed, spec.n, r);
            const SimulatedSignal sim = simulate(one);
            for (std::size_t a = 0; a < algorithms.size(); ++a) {
                const RunOutcome o = run_single(sim, algorithms[a], config, mix_seed(one.seed, a + 1));
                EvalRecord& rec = cell[a];
                ++rec.runs;
                if (o.failed) {
                    ++rec.failures;
                    continue;
                }
                rec.time_s += o.time_s;
                rec.true_k += static_cast<double>(o.true_k);
                rec.est_k += static_cast<double>(o.est_k);
                rec.precision += o.score.precision;
                rec.recall += o.score.recall;
                rec.f1_standard += o.score.f1_standard;
                rec.f1_paper += o.score.f1_paper;
            }
        }
        for (EvalRecord& rec : cell) {
            const auto ok = static_cast<double>(rec.runs - rec.failures);
            if (ok > 0.0) {
                for (double* v : {&rec.time_s, &rec.true_k, &rec.est_k, &rec.precision, &rec.recall,
                                  &rec.f1_standard, &rec.f1_paper}) {
                    *v /= ok;
                }
            }
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::string records_to_csv(const std::vector<EvalRecord>& records) {
    std::ostringstream os;
    os << "n,algorithm,true_k,est_k,precision,recall,f1_standard,f1_paper,runs,failures\n";
    for (const auto& r : records) {
        os << r.n << ',' << r.algorithm << ',' << fmt(r.true_k, 1) << ',' << fmt(r.est_k, 1) << ','
           << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.f1_standard) << ',' << fmt(r.f1_paper)
           << ',' << r.runs << ',' << r.failures << '\n';
    }
    return os.str();
}

std::string records_to_json(const std::vector<EvalRecord>& records) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        rows.push_back({{"n", r.n},
                        {"algorithm", r.algorithm},
                        {"true_k", r.true_k},
                        {"est_k", r.est_k},
                        {"precision", r.precision},
                        {"recall", r.recall},
                        {"f1_standard", r.f1_standard},
                        {"f1_paper", r.f1_paper},
                        {"runs", r.runs},
                        {"failures", r.failures}});
    }
    return rows.dump(2) + "\n";
}

}  // namespace segwave
