#include "segwave/cli.hpp"

#include "segwave/audio.hpp"
#include "segwave/baselines.hpp"
#include "segwave/error.hpp"
#include "segwave/manifest.hpp"
#include "segwave/segmenter.hpp"
#include "segwave/simlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <iostream>
#include <sstream>

namespace segwave {

namespace {

using json = nlohmann::ordered_json;

// Bad flag values or combinations; maps to exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
}

template <class Fn>
void validated(Fn&& fn) {
    try {
        fn();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// "lo:hi:logK", "lo:hi:linK" or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    try {
        if (text.find(':') == std::string::npos) {
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) {
                out.push_back(std::stod(item));
            }
        } else {
            const auto a = text.find(':');
            const auto b = text.find(':', a + 1);
            if (b == std::string::npos) {
                throw UsageError("grid must be lo:hi:logK or lo:hi:linK");
            }
            const double lo = std::stod(text.substr(0, a));
            const double hi = std::stod(text.substr(a + 1, b - a - 1));
            const std::string spec = text.substr(b + 1);
            const bool log = spec.rfind("log", 0) == 0;
            if (!log && spec.rfind("lin", 0) != 0) {
                throw UsageError("grid spacing must be log or lin");
            }
            const int k = std::stoi(spec.substr(3));
            if (k < 2 || !(hi > lo) || (log && lo <= 0.0)) {
                throw UsageError("grid needs 0 < lo < hi and at least 2 points");
            }
            for (int i = 0; i < k; ++i) {
                const double f = static_cast<double>(i) / (k - 1);
                out.push_back(log ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo + f * (hi - lo));
            }
        }
    } catch (const std::logic_error&) {
        throw UsageError("cannot parse grid '" + text + "'");
    }
    return out;
}

struct InputOpts {
    std::string path;
    std::optional<std::size_t> channel;
    std::optional<std::size_t> decimate;
    std::optional<std::uint32_t> sample_rate;

    void add(CLI::App* app) {
        app->add_option("--input", path, "WAV, CSV (one column) or raw float64 file")->required();
        app->add_option("--channel", channel, "channel index (default 0)");
        app->add_option("--decimate", decimate, "integer decimation factor")->check(CLI::PositiveNumber);
        app->add_option("--sample-rate", sample_rate, "sample rate for raw/CSV input")->check(CLI::PositiveNumber);
    }

    json to_json() const {
        json j;
        j["input"] = path;
        j["channel"] = channel.value_or(0);
        j["decimate"] = decimate.value_or(1);
        j["sample_rate"] = sample_rate ? json(*sample_rate) : json(nullptr);
        return j;
    }

    std::pair<Signal, std::string> load() const {
        const AudioClip clip = load_any(path, sample_rate);
        if (!channel && clip.channels.size() > 1) {
            std::cerr << "warning: " << path << " has " << clip.channels.size()
                      << " channels; using channel 0\n";
        }
        return {preprocess(clip, channel.value_or(0), decimate), clip.source_digest};
    }
};

struct SegmentOpts {
    InputOpts in;
    std::string algorithm = "bayes";
    std::string prior;
    std::optional<double> beta;
    double alpha = 0.05;
    std::size_t resolution = 1000;
    std::size_t min_seg = 1000;
    std::optional<std::size_t> max_cp;
    std::uint64_t seed = 0;
    std::size_t chain = McmcConfig{}.chain_length;
    std::size_t burn_in = McmcConfig{}.burn_in;
    std::string sev_mode = "chisq";
    std::string penalty = "mbic";
    std::string output;
    std::string csv;
};

PenaltySpec parse_penalty(const std::string& text) {
    if (text == "mbic") {
        return PenaltySpec::mbic();
    }
    if (text == "bic") {
        return PenaltySpec::bic();
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            PenaltySpec p;
            validated([&] { p = PenaltySpec::manual(v); });
            return p;
        }
    } catch (const std::logic_error&) {
    }
    throw UsageError("--penalty must be mbic, bic or a number");
}

SegConfig bayes_config(const SegmentOpts& o) {
    SegConfig cfg;
    if (o.prior.empty()) {
        throw UsageError("--prior is required for the bayes algorithm");
    }
    if (o.prior == "laplace") {
        if (!o.beta) {
            throw UsageError("--prior laplace requires --beta");
        }
        validated([&] { cfg.prior = PriorSpec::laplace(*o.beta); });
    } else if (o.prior != "jeffreys") {
        throw UsageError("--prior must be jeffreys or laplace");
    }
    cfg.alpha = o.alpha;
    cfg.base_resolution = o.resolution;
    cfg.min_seg_len = o.min_seg;
    cfg.max_changepoints = o.max_cp;
    cfg.seed = o.seed;
    cfg.mcmc.chain_length = o.chain;
    cfg.mcmc.burn_in = std::min(o.burn_in, o.chain);
    cfg.mcmc.adapt_start = std::min(cfg.mcmc.adapt_start, cfg.mcmc.burn_in);
    cfg.sev_mode = o.sev_mode == "empirical" ? SevMode::EmpiricalQuantile : SevMode::ChiSquare;
    validated([&] { cfg.validate(); });
    return cfg;
}

int run_segment(const SegmentOpts& o) {
    if (o.algorithm != "bayes" && o.algorithm != "pelt" && o.algorithm != "binseg") {
        throw UsageError("--algorithm must be bayes, pelt or binseg");
    }
    std::optional<SegConfig> cfg;
    PenaltySpec penalty;
    if (o.algorithm == "bayes") {
        cfg = bayes_config(o);
    } else {
        penalty = parse_penalty(o.penalty);
    }

    RunManifest manifest;
    manifest.start();
    auto [signal, digest] = o.in.load();
    const EnergyPrefix prefix = build_prefix(signal);

    std::vector<std::size_t> cps;
    std::vector<EvalueReport> reports;
    if (cfg) {
        SegmentationResult r = segment(prefix, *cfg);
        for (const auto& e : r.errors) {
            std::cerr << "warning: segment [" << e.begin << ", " << e.end << ") not tested: " << e.message << '\n';
        }
        cps = std::move(r.changepoints);
        reports = std::move(r.reports);
    } else if (o.algorithm == "pelt") {
        cps = pelt(prefix, penalty, o.min_seg);
    } else {
        cps = binseg(prefix, penalty, o.min_seg);
    }
    const auto segments = estimate_segment_stats(prefix, cps);
    manifest.finish();

    json config = o.in.to_json();
    config["algorithm"] = o.algorithm;
    if (cfg) {
        config["prior"] = o.prior;
        config["beta"] = o.beta ? json(*o.beta) : json(nullptr);
        config["alpha"] = o.alpha;
        config["resolution"] = o.resolution;
        config["min_seg"] = o.min_seg;
        config["max_changepoints"] = o.max_cp ? json(*o.max_cp) : json(nullptr);
        config["chain_length"] = cfg->mcmc.chain_length;
        config["burn_in"] = cfg->mcmc.burn_in;
        config["sev_mode"] = o.sev_mode;
    } else {
        config["penalty"] = o.penalty;
        config["min_seg"] = o.min_seg;
    }
    manifest.command = "segment";
    manifest.config = config.dump();
    manifest.seed = o.seed;
    manifest.source_digest = digest;

    const auto rate = signal.sample_rate_hz();
    auto time_of = [&](std::size_t idx) { return rate ? json(static_cast<double>(idx) / *rate) : json(nullptr); };

    json doc;
    doc["manifest"] = json::parse(manifest.reproducible_json());
    doc["n"] = signal.size();
    doc["sample_rate"] = rate ? json(*rate) : json(nullptr);
    doc["changepoints"] = json::array();
    for (std::size_t i = 0; i < cps.size(); ++i) {
        json c;
        c["index"] = cps[i];
        c["time_s"] = time_of(cps[i]);
        c["ev"] = i < reports.size() ? json(reports[i].ev) : json(nullptr);
        c["sev"] = i < reports.size() ? json(reports[i].sev) : json(nullptr);
        doc["changepoints"].push_back(c);
    }
    doc["segments"] = json::array();
    for (const auto& s : segments) {
        doc["segments"].push_back(
            {{"start", s.start}, {"end", s.end}, {"variance", s.variance}, {"rms_db", finite_or_null(s.rms_db)}});
    }
    write_text(o.output, doc.dump(2) + "\n");
    write_text(o.output + ".manifest.json", manifest.full_json());

    if (!o.csv.empty()) {
        std::ostringstream os;
        os << "index,time_s,ev,sev\n";
        for (std::size_t i = 0; i < cps.size(); ++i) {
            os << cps[i] << ',' << (rate ? num(static_cast<double>(cps[i]) / *rate) : "") << ','
               << (i < reports.size() ? num(reports[i].ev) : "") << ','
               << (i < reports.size() ? num(reports[i].sev) : "") << '\n';
        }
        write_text(o.csv, os.str());
    }
    return kExitOk;
}

struct SimulateOpts {
    std::size_t n = 0;
    double k = 50.0;
    double var_low = 1.0;
    double var_high = 2.0;
    std::uint64_t seed = 0;
    std::uint32_t sample_rate = 24000;
    std::string output;
    std::string truth;
};

int run_simulate(const SimulateOpts& o) {
    SimSpec spec;
    spec.n = o.n;
    spec.expected_k = o.k;
    spec.var_low = o.var_low;
    spec.var_high = o.var_high;
    spec.seed = o.seed;
    spec.replicates = 1;
    validated([&] { spec.validate(); });
    const SimulatedSignal sim = simulate(spec);

    std::string ext = std::filesystem::path(o.output).extension().string();
    if (ext == ".wav") {
        AudioClip clip;
        clip.channels.emplace_back(sim.signal.samples().begin(), sim.signal.samples().end());
        clip.sample_rate_hz = o.sample_rate;
        save_wav(o.output, clip, WavEncoding::Float32);
    } else if (ext == ".csv") {
        std::ostringstream os;
        for (double v : sim.signal.samples()) {
            os << num(v) << '\n';
        }
        write_text(o.output, os.str());
    } else {
        write_raw_f64(o.output, {sim.signal.samples().begin(), sim.signal.samples().end()});
    }

    json t;
    t["n"] = o.n;
    t["expected_k"] = o.k;
    t["var_low"] = o.var_low;
    t["var_high"] = o.var_high;
    t["seed"] = o.seed;
    t["changepoints"] = sim.changepoints;
    write_text(o.truth, t.dump(2) + "\n");
    return kExitOk;
}

struct BenchOpts {
    std::vector<std::size_t> sizes;
    std::size_t replicates = 10;
    std::vector<std::string> algorithms;
    double k = 50.0;
    std::uint64_t seed = 0;
    std::size_t resolution = 1000;
    std::size_t min_seg = 1000;
    std::size_t chain = McmcConfig{}.chain_length;
    std::string penalty = "mbic";
    std::string output;
    std::string json_out;
};

int run_bench(const BenchOpts& o) {
    std::vector<Algorithm> algs;
    for (const auto& a : o.algorithms) {
        validated([&] { algs.push_back(parse_algorithm(a)); });
    }
    std::vector<SimSpec> specs;
    for (std::size_t n : o.sizes) {
        SimSpec s;
        s.n = n;
        s.expected_k = o.k;
        s.seed = o.seed;
        s.replicates = o.replicates;
        validated([&] { s.validate(); });
        specs.push_back(s);
    }
    BenchConfig cfg;
    cfg.base_resolution = o.resolution;
    cfg.min_seg_len = o.min_seg;
    cfg.mcmc.chain_length = o.chain;
    cfg.mcmc.burn_in = std::min(cfg.mcmc.burn_in, o.chain / 5);
    cfg.mcmc.adapt_start = std::min(cfg.mcmc.adapt_start, cfg.mcmc.burn_in);
    cfg.penalty = parse_penalty(o.penalty);
    validated([&] { cfg.mcmc.validate(); });

    const auto records = run_benchmark(specs, algs, cfg);
    write_text(o.output, records_to_csv(records));
    std::ostringstream timing;
    timing << "n,algorithm,time_s\n";
    for (const auto& r : records) {
        timing << r.n << ',' << r.algorithm << ',' << num(r.time_s) << '\n';
    }
    const auto path = std::filesystem::path(o.output);
    write_text((path.parent_path() / (path.stem().string() + ".timing.csv")).string(), timing.str());
    if (!o.json_out.empty()) {
        write_text(o.json_out, records_to_json(records));
    }
    for (const auto& r : records) {
        if (r.failures > 0) {
            std::cerr << "warning: " << r.algorithm << " at n=" << r.n << ": " << r.failures << " of " << r.runs
                      << " runs failed\n";
        }
    }
    return kExitOk;
}

struct SelectBetaOpts {
    InputOpts in;
    std::string grid = "1e-6:1e-1:log9";
    double alpha = 0.05;
    std::size_t resolution = 1000;
    std::size_t min_seg = 1000;
    std::uint64_t seed = 0;
    std::string output;
};

int run_select_beta(const SelectBetaOpts& o) {
    const auto grid = parse_grid(o.grid);
    if (grid.size() < 3 || !std::is_sorted(grid.begin(), grid.end(), std::less_equal<>()) || !(grid.front() > 0.0)) {
        throw UsageError("--grid needs at least 3 strictly increasing positive values");
    }
    SegConfig cfg;
    cfg.alpha = o.alpha;
    cfg.base_resolution = o.resolution;
    cfg.min_seg_len = o.min_seg;
    cfg.seed = o.seed;
    validated([&] { cfg.validate(); });
    auto [signal, digest] = o.in.load();

    BetaSelection sel;
    try {
        sel = select_beta(signal, grid, cfg);
    } catch (const SelectionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    std::ostringstream os;
    os << "beta,bic,changepoints,failed,selected\n";
    for (const auto& p : sel.curve) {
        os << num(p.beta) << ',' << (p.failed ? "" : num(p.bic)) << ',' << p.changepoints << ','
           << (p.failed ? 1 : 0) << ',' << (p.beta == sel.beta_star ? 1 : 0) << '\n';
    }
    write_text(o.output, os.str());
    if (sel.knee_undefined) {
        std::cerr << "warning: BIC curve has no knee; using the smallest beta\n";
    }
    std::cout << num(sel.beta_star) << '\n';
    return kExitOk;
}

struct SpectrogramOpts {
    InputOpts in;
    std::size_t window = 1024;
    std::size_t hop = 512;
    std::string output;
    std::string pgm;
};

int run_spectrogram(const SpectrogramOpts& o) {
    if (o.window < 16 || o.hop < 1) {
        throw UsageError("--window must be >= 16 and --hop >= 1");
    }
    auto [signal, digest] = o.in.load();
    const Spectrogram spec = spectrogram(signal, o.window, o.hop);
    write_text(o.output, spectrogram_csv(spec));
    if (!o.pgm.empty()) {
        write_bytes(o.pgm, spectrogram_pgm(spec));
    }
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Variance changepoint segmentation of acoustic signals", "segwave"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    SegmentOpts seg;
    auto* s = app.add_subcommand("segment", "segment a signal into constant-variance pieces");
    seg.in.add(s);
    s->add_option("--algorithm", seg.algorithm, "bayes, pelt or binseg")->capture_default_str();
    s->add_option("--prior", seg.prior, "jeffreys or laplace (bayes only)");
    s->add_option("--beta", seg.beta, "Laplace prior scale");
    s->add_option("--alpha", seg.alpha, "significance level")->capture_default_str();
    s->add_option("--resolution", seg.resolution, "candidate grid resolution")->capture_default_str();
    s->add_option("--min-seg", seg.min_seg, "minimum segment length")->capture_default_str();
    s->add_option("--max-changepoints", seg.max_cp, "stop after this many changepoints");
    s->add_option("--seed", seg.seed, "random seed")->capture_default_str();
    s->add_option("--chain-length", seg.chain, "MCMC chain length")->capture_default_str();
    s->add_option("--burn-in", seg.burn_in, "MCMC burn-in")->capture_default_str();
    s->add_option("--sev-mode", seg.sev_mode, "chisq or empirical")
        ->check(CLI::IsMember({"chisq", "empirical"}))
        ->capture_default_str();
    s->add_option("--penalty", seg.penalty, "pelt/binseg penalty: mbic, bic or a number")->capture_default_str();
    s->add_option("--output", seg.output, "JSON result")->required();
    s->add_option("--csv", seg.csv, "changepoint table");

    SimulateOpts sim;
    auto* m = app.add_subcommand("simulate", "write a synthetic piecewise-variance signal");
    m->add_option("--n", sim.n, "length")->required();
    m->add_option("--k", sim.k, "expected number of changepoints")->capture_default_str();
    m->add_option("--var-low", sim.var_low)->capture_default_str();
    m->add_option("--var-high", sim.var_high)->capture_default_str();
    m->add_option("--seed", sim.seed)->capture_default_str();
    m->add_option("--sample-rate", sim.sample_rate, "for .wav output")->capture_default_str();
    m->add_option("--output", sim.output, "signal (.wav, .csv or raw float64)")->required();
    m->add_option("--truth", sim.truth, "true changepoints (JSON)")->required();

    BenchOpts bench;
    auto* b = app.add_subcommand("bench", "synthetic benchmark of all algorithms");
    b->add_option("--sizes", bench.sizes, "signal lengths")->delimiter(',')->required();
    b->add_option("--replicates", bench.replicates)->capture_default_str();
    b->add_option("--algorithms", bench.algorithms, "bayes-jeffreys,bayes-laplace,pelt,binseg")
        ->delimiter(',')
        ->required();
    b->add_option("--k", bench.k, "expected number of changepoints")->capture_default_str();
    b->add_option("--seed", bench.seed)->capture_default_str();
    b->add_option("--resolution", bench.resolution)->capture_default_str();
    b->add_option("--min-seg", bench.min_seg, "minimum segment length (bayes)")->capture_default_str();
    b->add_option("--chain-length", bench.chain)->capture_default_str();
    b->add_option("--penalty", bench.penalty, "pelt/binseg penalty")->capture_default_str();
    b->add_option("--output", bench.output, "table (CSV)")->required();
    b->add_option("--json", bench.json_out, "table (JSON)");

    SelectBetaOpts sb;
    auto* sbc = app.add_subcommand("select-beta", "choose the Laplace scale at the BIC knee");
    sb.in.add(sbc);
    sbc->add_option("--grid", sb.grid, "lo:hi:logK, lo:hi:linK or a list")->capture_default_str();
    sbc->add_option("--alpha", sb.alpha)->capture_default_str();
    sbc->add_option("--resolution", sb.resolution)->capture_default_str();
    sbc->add_option("--min-seg", sb.min_seg)->capture_default_str();
    sbc->add_option("--seed", sb.seed)->capture_default_str();
    sbc->add_option("--output", sb.output, "curve (CSV)")->required();

    SpectrogramOpts sp;
    auto* spc = app.add_subcommand("spectrogram", "STFT magnitude matrix");
    sp.in.add(spc);
    spc->add_option("--window", sp.window)->capture_default_str();
    spc->add_option("--hop", sp.hop)->capture_default_str();
    spc->add_option("--output", sp.output, "matrix (CSV)")->required();
    spc->add_option("--png", sp.pgm, "graymap quick-look (PGM)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*s) {
            return run_segment(seg);
        }
        if (*m) {
            return run_simulate(sim);
        }
        if (*b) {
            return run_bench(bench);
        }
        if (*sbc) {
            return run_select_beta(sb);
        }
        return run_spectrogram(sp);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return kExitUsage;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvalidInput& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DegenerateSegment& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

}  // namespace segwave
