#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace droneaudio {

/// Multichannel sampled signal. All channels have equal length; amplitudes
/// are nominally in [-1, 1] (full scale of 16-bit PCM after quantization).
struct AudioBuffer {
    std::vector<std::vector<double>> channels;
    int sample_rate = 0;

    AudioBuffer() = default;
    AudioBuffer(std::size_t num_channels, std::size_t num_frames, int rate)
        : channels(num_channels, std::vector<double>(num_frames, 0.0)),
          sample_rate(rate) {}

    std::size_t channel_count() const { return channels.size(); }
    std::size_t frames() const { return channels.empty() ? 0 : channels[0].size(); }
    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(frames()) / sample_rate : 0.0;
    }
    bool empty() const { return channels.empty() || frames() == 0; }
};

/// Full-scale mapping: value = int16 / 32768. Round-half-away, clamped.
inline std::int16_t quantize_sample(double x) {
    double scaled = x * 32768.0;
    if (scaled >= 32767.0) return 32767;
    if (scaled <= -32768.0) return -32768;
    return static_cast<std::int16_t>(scaled >= 0.0 ? scaled + 0.5 : scaled - 0.5);
}

inline double dequantize_sample(std::int16_t q) {
    return static_cast<double>(q) / 32768.0;
}

/// Quantizes every sample in place (what the file on disk will hold).
AudioBuffer quantized(const AudioBuffer& in);

std::vector<std::int16_t> interleave_quantized(const AudioBuffer& in,
                                               std::uint64_t* clipped = nullptr);

AudioBuffer deinterleave(std::span<const std::int16_t> samples,
                         std::size_t num_channels, int sample_rate);

/// Sum of squared samples over all channels.
double total_energy(const AudioBuffer& in);

/// a + b sample-wise (equal shape required).
AudioBuffer mix_sum(const AudioBuffer& a, const AudioBuffer& b);

/// in scaled by a constant gain.
AudioBuffer scaled(const AudioBuffer& in, double gain);

}  // namespace droneaudio
