#include "droneaudio/audio_buffer.hpp"

#include <stdexcept>

namespace droneaudio {

AudioBuffer quantized(const AudioBuffer& in) {
    AudioBuffer out(in.channel_count(), in.frames(), in.sample_rate);
    for (std::size_t c = 0; c < in.channel_count(); ++c)
        for (std::size_t n = 0; n < in.frames(); ++n)
            out.channels[c][n] = dequantize_sample(quantize_sample(in.channels[c][n]));
    return out;
}

std::vector<std::int16_t> interleave_quantized(const AudioBuffer& in, std::uint64_t* clipped) {
    const std::size_t num_channels = in.channel_count();
    const std::size_t num_frames = in.frames();
    std::vector<std::int16_t> out(num_channels * num_frames);
    std::uint64_t clip_count = 0;
    for (std::size_t n = 0; n < num_frames; ++n) {
        for (std::size_t c = 0; c < num_channels; ++c) {
            double x = in.channels[c][n];
            if (x > 1.0 || x < -1.0) ++clip_count;
            out[n * num_channels + c] = quantize_sample(x);
        }
    }
    if (clipped) *clipped = clip_count;
    return out;
}

AudioBuffer deinterleave(std::span<const std::int16_t> samples, std::size_t num_channels,
                         int sample_rate) {
    if (num_channels == 0) throw std::invalid_argument("deinterleave: zero channels");
    const std::size_t num_frames = samples.size() / num_channels;
    AudioBuffer out(num_channels, num_frames, sample_rate);
    for (std::size_t n = 0; n < num_frames; ++n)
        for (std::size_t c = 0; c < num_channels; ++c)
            out.channels[c][n] = dequantize_sample(samples[n * num_channels + c]);
    return out;
}

double total_energy(const AudioBuffer& in) {
    double e = 0.0;
    for (const auto& ch : in.channels)
        for (double x : ch) e += x * x;
    return e;
}

AudioBuffer mix_sum(const AudioBuffer& a, const AudioBuffer& b) {
    if (a.channel_count() != b.channel_count() || a.frames() != b.frames())
        throw std::invalid_argument("mix_sum: shape mismatch");
    AudioBuffer out(a.channel_count(), a.frames(), a.sample_rate);
    for (std::size_t c = 0; c < a.channel_count(); ++c)
        for (std::size_t n = 0; n < a.frames(); ++n)
            out.channels[c][n] = a.channels[c][n] + b.channels[c][n];
    return out;
}

AudioBuffer scaled(const AudioBuffer& in, double gain) {
    AudioBuffer out = in;
    for (auto& ch : out.channels)
        for (double& x : ch) x *= gain;
    return out;
}

}  // namespace droneaudio
