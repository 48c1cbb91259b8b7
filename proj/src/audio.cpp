#include "segwave/audio.hpp"

#include "segwave/error.hpp"

#include <fftw3.h>
#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <numbers>
#include <sstream>

namespace segwave {

namespace {

static_assert(std::endian::native == std::endian::little, "raw and WAV I/O assume a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::string at(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

std::uint16_t u16(const std::vector<std::uint8_t>& b, std::size_t o) {
    return static_cast<std::uint16_t>(b[o] | (b[o + 1] << 8));
}

std::uint32_t u32(const std::vector<std::uint8_t>& b, std::size_t o) {
    return static_cast<std::uint32_t>(b[o]) | (static_cast<std::uint32_t>(b[o + 1]) << 8) |
           (static_cast<std::uint32_t>(b[o + 2]) << 16) | (static_cast<std::uint32_t>(b[o + 3]) << 24);
}

bool tag(const std::vector<std::uint8_t>& b, std::size_t o, const char* id) {
    return std::memcmp(b.data() + o, id, 4) == 0;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
    }
}

void put_tag(std::vector<std::uint8_t>& out, const char* id) { out.insert(out.end(), id, id + 4); }

struct Format {
    std::uint16_t code = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    std::uint16_t block_align = 0;
};

std::int64_t clip_round(double v, int bits) {
    const double scale = std::ldexp(1.0, bits - 1);
    const double q = std::nearbyint(v * scale);
    return static_cast<std::int64_t>(std::clamp(q, -scale, scale - 1.0));
}

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

AudioClip parse_wav(const std::vector<std::uint8_t>& b) {
    if (b.size() < 12 || !tag(b, 0, "RIFF") || !tag(b, 8, "WAVE")) {
        throw InputError("not a RIFF/WAVE file (bad header" + at(0) + ")");
    }
    std::optional<Format> fmt;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const std::uint32_t size = u32(b, pos + 4);
        const std::size_t body = pos + 8;
        if (tag(b, pos, "fmt ")) {
            if (size < 16 || body + size > b.size()) {
                throw InputError("truncated fmt chunk" + at(pos));
            }
            Format f{u16(b, body), u16(b, body + 2), u32(b, body + 4), u16(b, body + 14), u16(b, body + 12)};
            if (f.code == kFormatExtensible) {
                if (size < 40) {
                    throw InputError("truncated WAVE_FORMAT_EXTENSIBLE fmt chunk" + at(pos));
                }
                f.code = u16(b, body + 24);
            }
            if (f.channels == 0 || f.rate == 0) {
                throw InputError("fmt chunk declares zero channels or zero sample rate" + at(body));
            }
            const bool pcm = f.code == kFormatPcm && (f.bits == 16 || f.bits == 24 || f.bits == 32);
            const bool flt = f.code == kFormatFloat && f.bits == 32;
            if (!pcm && !flt) {
                throw InputError("unsupported codec: format " + std::to_string(f.code) + ", " +
                                 std::to_string(f.bits) + " bits" + at(body));
            }
            if (f.block_align != f.channels * (f.bits / 8)) {
                throw InputError("inconsistent block alignment " + std::to_string(f.block_align) + at(body + 12));
            }
            fmt = f;
        } else if (tag(b, pos, "data")) {
            if (!fmt) {
                throw InputError("data chunk before fmt chunk" + at(pos));
            }
            if (body + size > b.size()) {
                throw InputError("truncated data chunk: declares " + std::to_string(size) + " bytes, " +
                                 std::to_string(b.size() - body) + " available" + at(body));
            }
            const std::size_t frames = size / fmt->block_align;
            AudioClip clip;
            clip.sample_rate_hz = fmt->rate;
            clip.channels.assign(fmt->channels, std::vector<double>(frames));
            const std::size_t width = fmt->bits / 8;
            for (std::size_t i = 0; i < frames; ++i) {
                for (std::size_t c = 0; c < fmt->channels; ++c) {
                    const std::size_t o = body + i * fmt->block_align + c * width;
                    double v = 0.0;
                    if (fmt->code == kFormatFloat) {
                        v = static_cast<double>(std::bit_cast<float>(u32(b, o)));
                    } else if (fmt->bits == 16) {
                        v = static_cast<double>(static_cast<std::int16_t>(u16(b, o))) / 32768.0;
                    } else if (fmt->bits == 24) {
                        std::int32_t s = b[o] | (b[o + 1] << 8) | (b[o + 2] << 16);
                        if (s & 0x800000) {
                            s -= 0x1000000;
                        }
                        v = static_cast<double>(s) / 8388608.0;
                    } else {
                        v = static_cast<double>(static_cast<std::int32_t>(u32(b, o))) / 2147483648.0;
                    }
                    clip.channels[c][i] = v;
                }
            }
            return clip;
        }
        pos = body + size + (size & 1U);
    }
    throw InputError(fmt ? "no data chunk" + at(pos) : "no fmt chunk" + at(pos));
}

AudioClip load_wav(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        AudioClip clip = parse_wav(bytes);
        clip.source_digest = sha256_hex(bytes);
        return clip;
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding) {
    if (clip.channels.empty() || clip.sample_rate_hz == 0) {
        throw InvalidInput("clip needs at least one channel and a sample rate");
    }
    const std::size_t frames = clip.frames();
    for (const auto& ch : clip.channels) {
        if (ch.size() != frames) {
            throw InvalidInput("channels differ in length");
        }
    }
    const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : (encoding == WavEncoding::Pcm24 ? 24 : 32);
    const auto nch = static_cast<std::uint16_t>(clip.channels.size());
    const auto align = static_cast<std::uint16_t>(nch * bits / 8);
    const auto data_size = static_cast<std::uint32_t>(frames * align);

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_size);
    put_tag(out, "RIFF");
    put32(out, 36 + data_size);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm);
    put16(out, nch);
    put32(out, clip.sample_rate_hz);
    put32(out, clip.sample_rate_hz * align);
    put16(out, align);
    put16(out, bits);
    put_tag(out, "data");
    put32(out, data_size);
    for (std::size_t i = 0; i < frames; ++i) {
        for (const auto& ch : clip.channels) {
            const double v = ch[i];
            switch (encoding) {
                case WavEncoding::Pcm16:
                    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(clip_round(v, 16))));
                    break;
                case WavEncoding::Pcm24: {
                    const auto s = static_cast<std::uint32_t>(static_cast<std::int32_t>(clip_round(v, 24)));
                    out.push_back(static_cast<std::uint8_t>(s & 0xFF));
                    out.push_back(static_cast<std::uint8_t>((s >> 8) & 0xFF));
                    out.push_back(static_cast<std::uint8_t>((s >> 16) & 0xFF));
                    break;
                }
                case WavEncoding::Float32:
                    put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
                    break;
            }
        }
    }
    return out;
}

void save_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
    const auto bytes = encode_wav(clip, encoding);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
}

Signal preprocess(const AudioClip& clip, std::size_t channel, std::optional<std::size_t> decimate) {
    if (channel >= clip.channels.size()) {
        throw InvalidInput("channel " + std::to_string(channel) + " out of range (clip has " +
                           std::to_string(clip.channels.size()) + ")");
    }
    const auto& src = clip.channels[channel];
    const std::size_t d = decimate.value_or(1);
    if (d < 1) {
        throw InvalidInput("decimation factor must be >= 1");
    }
    if (d > src.size()) {
        throw InvalidInput("decimation factor " + std::to_string(d) + " exceeds the signal length");
    }
    auto centre = [](std::vector<double>& v) {
        // Two passes: the residual mean of the first subtraction is removed too.
        for (int pass = 0; pass < 2; ++pass) {
            long double sum = 0.0L;
            for (double x : v) {
                sum += x;
            }
            const auto mean = static_cast<double>(sum / static_cast<long double>(v.size()));
            for (double& x : v) {
                x -= mean;
            }
        }
    };
    std::vector<double> y(src.begin(), src.end());
    centre(y);
    std::optional<double> rate;
    if (clip.sample_rate_hz > 0) {
        rate = static_cast<double>(clip.sample_rate_hz) / static_cast<double>(d);
    }
    if (d > 1) {
        std::vector<double> out(y.size() / d);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                acc += y[k * d + j];
            }
            out[k] = acc / static_cast<double>(d);
        }
        y = std::move(out);
        centre(y);
    }
    return Signal(std::move(y), rate);
}

std::vector<double> read_raw_f64(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() % sizeof(double) != 0) {
        throw InputError(path.string() + ": size " + std::to_string(bytes.size()) +
                         " is not a multiple of 8 (trailing bytes" + at(bytes.size() / 8 * 8) + ")");
    }
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

void write_raw_f64(const std::filesystem::path& path, const std::vector<double>& samples) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size() * sizeof(double)));
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
}

std::vector<double> read_csv_column(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const std::string cell = line.substr(first, line.find_first_of(",;\t\r", first) - first);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0) {
            if (out.empty() && lineno == 1) {
                continue;  // header
            }
            throw InputError(path.string() + ": line " + std::to_string(lineno) + " is not numeric");
        }
        out.push_back(v);
    }
    return out;
}

AudioClip load_any(const std::filesystem::path& path, std::optional<std::uint32_t> sample_rate_hz) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") {
        return load_wav(path);
    }
    AudioClip clip;
    clip.channels.push_back(ext == ".csv" ? read_csv_column(path) : read_raw_f64(path));
    clip.sample_rate_hz = sample_rate_hz.value_or(0);
    clip.source_digest = sha256_hex(read_file(path));
    return clip;
}

Spectrogram spectrogram(const Signal& signal, std::size_t window_len, std::size_t hop) {
    if (window_len < 16 || hop < 1 || signal.size() < window_len) {
        throw InvalidInput("spectrogram needs window >= 16, hop >= 1 and at least one full window");
    }
    const std::size_t frames = (signal.size() - window_len) / hop + 1;
    const std::size_t bins = window_len / 2 + 1;

    std::vector<double> window(window_len);
    for (std::size_t i = 0; i < window_len; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(window_len - 1));
    }

    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(window_len), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(bins), &fftw_free);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(window_len), in.get(), out.get(), FFTW_ESTIMATE);
    if (plan == nullptr) {
        throw std::runtime_error("FFTW plan creation failed");
    }

    Spectrogram spec;
    spec.db.assign(bins, std::vector<double>(frames));
    const auto samples = signal.samples();
    for (std::size_t k = 0; k < frames; ++k) {
        const std::size_t start = k * hop;
        for (std::size_t i = 0; i < window_len; ++i) {
            in.get()[i] = samples[start + i] * window[i];
        }
        fftw_execute(plan);
        for (std::size_t f = 0; f < bins; ++f) {
            const double mag = std::hypot(out.get()[f][0], out.get()[f][1]);
            spec.db[f][k] = 20.0 * std::log10(mag + 1e-12);
        }
    }
    fftw_destroy_plan(plan);

    const double rate = signal.sample_rate_hz().value_or(0.0);
    spec.times.resize(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        const double centre = static_cast<double>(k * hop) + 0.5 * static_cast<double>(window_len);
        spec.times[k] = rate > 0.0 ? centre / rate : centre;
    }
    spec.freqs.resize(bins);
    for (std::size_t f = 0; f < bins; ++f) {
        const double cycles = static_cast<double>(f) / static_cast<double>(window_len);
        spec.freqs[f] = rate > 0.0 ? cycles * rate : cycles;
    }
    return spec;
}

std::string spectrogram_csv(const Spectrogram& spec) {
    std::ostringstream os;
    os.precision(10);
    os << "freq\\time";
    for (double t : spec.times) {
        os << ',' << t;
    }
    os << '\n';
    for (std::size_t f = 0; f < spec.bins(); ++f) {
        os << spec.freqs[f];
        for (double v : spec.db[f]) {
            os << ',' << v;
        }
        os << '\n';
    }
    return os.str();
}

std::vector<std::uint8_t> spectrogram_pgm(const Spectrogram& spec) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& row : spec.db) {
        for (double v : row) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const std::string header =
        "P5\n" + std::to_string(spec.frames()) + " " + std::to_string(spec.bins()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + spec.frames() * spec.bins());
    const double range = hi > lo ? hi - lo : 1.0;
    for (std::size_t r = spec.bins(); r-- > 0;) {
        for (double v : spec.db[r]) {
            out.push_back(static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / range)));
        }
    }
    return out;
}

}  // namespace segwave
