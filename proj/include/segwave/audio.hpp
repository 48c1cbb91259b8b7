#pragma once

#include "segwave/energy.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace segwave {

struct AudioClip {
    // channels[c][i], amplitudes in [-1, 1) for integer PCM.
    std::vector<std::vector<double>> channels;
    std::uint32_t sample_rate_hz = 0;
    // Hex SHA-256 of the file bytes; empty for synthetic clips.
    std::string source_digest;

    std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

// RIFF/WAVE reader: PCM 16/24/32-bit integer and 32-bit IEEE float, plus
// WAVE_FORMAT_EXTENSIBLE wrapping either. Integer samples are divided by
// 2^(bits-1). Throws InputError naming the byte offset of the problem.
AudioClip load_wav(const std::filesystem::path& path);
AudioClip parse_wav(const std::vector<std::uint8_t>& bytes);

enum class WavEncoding { Pcm16, Pcm24, Float32 };

// Writer used by the CLI and the tests. Integer encodings round to nearest
// and clip to the representable range.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding);
void save_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding);

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Channel selection, mean removal, then optional decimation by d: length-d
// moving average, keep every d-th output (floor(N/d) samples), re-centre.
Signal preprocess(const AudioClip& clip, std::size_t channel, std::optional<std::size_t> decimate = std::nullopt);

// Raw little-endian float64 and single-column CSV signals.
std::vector<double> read_raw_f64(const std::filesystem::path& path);
void write_raw_f64(const std::filesystem::path& path, const std::vector<double>& samples);
std::vector<double> read_csv_column(const std::filesystem::path& path);

// Loads .wav / .csv / anything else as raw float64 into a mono clip.
// Non-WAV inputs carry no sample rate unless one is supplied.
AudioClip load_any(const std::filesystem::path& path, std::optional<std::uint32_t> sample_rate_hz = std::nullopt);

struct Spectrogram {
    // db[f][k]: frequency bin f, frame k.
    std::vector<std::vector<double>> db;
    // Frame centres in seconds, or in samples without a sample rate.
    std::vector<double> times;
    // Bin frequencies in Hz, or in cycles/sample without a sample rate.
    std::vector<double> freqs;

    std::size_t frames() const { return times.size(); }
    std::size_t bins() const { return freqs.size(); }
};

// Hann-windowed STFT magnitudes as 20 log10(|X| + 1e-12).
// Requires window_len >= 16, hop >= 1 and signal length >= window_len.
Spectrogram spectrogram(const Signal& signal, std::size_t window_len, std::size_t hop);

std::string spectrogram_csv(const Spectrogram& spec);
// Binary PGM (P5), high frequencies at the top, scaled to the matrix range.
std::vector<std::uint8_t> spectrogram_pgm(const Spectrogram& spec);

}  // namespace segwave
