#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "droneaudio/audio_buffer.hpp"

namespace droneaudio {

/// Analysis parameters: 128 ms periodic-Hann window with half overlap by
/// default (window_length 1024 at the 8 kHz processing rate).
struct StftConfig {
    int window_length = 1024;
    int hop = 512;
    int sample_rate = 8000;

    static StftConfig for_rate(int rate);

    double bin_hz(std::size_t bin) const {
        return static_cast<double>(bin) * sample_rate / window_length;
    }
    std::size_t num_bins() const { return static_cast<std::size_t>(window_length) / 2 + 1; }
};

/// Per-channel one-sided complex STFT, frames at offsets m*hop.
struct Spectrogram {
    StftConfig config;
    std::size_t num_channels = 0;
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    std::size_t signal_length = 0;  // original sample count, for reconstruction
    std::vector<std::complex<double>> bins;  // layout [channel][frame][bin]

    std::complex<double>& at(std::size_t c, std::size_t t, std::size_t f) {
        return bins[(c * num_frames + t) * num_bins + f];
    }
    const std::complex<double>& at(std::size_t c, std::size_t t, std::size_t f) const {
        return bins[(c * num_frames + t) * num_bins + f];
    }

    /// Center time of frame t in seconds.
    double frame_time(std::size_t t) const {
        return (static_cast<double>(t) * config.hop + config.window_length / 2.0) /
               config.sample_rate;
    }
    std::size_t nearest_frame(double t_seconds) const;
};

std::vector<double> periodic_hann(int length);

/// Number of full analysis frames for a signal of the given length.
std::size_t stft_frame_count(std::size_t signal_length, const StftConfig& config);

Spectrogram stft(const AudioBuffer& buffer, const StftConfig& config);

/// Overlap-add reconstruction normalized by the accumulated window sum;
/// istft(stft(x)) == x to machine precision wherever frames cover the
/// signal and the window sum is nonzero.
AudioBuffer istft(const Spectrogram& spec);

}  // namespace droneaudio
