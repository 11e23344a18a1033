#pragma once

#include "droneaudio/audio_buffer.hpp"

namespace droneaudio {

/// Rational-ratio resampler: Kaiser-windowed sinc low-pass (cutoff at
/// 0.45x the smaller rate, stopband from the smaller Nyquist, 70 dB
/// attenuation), output length = round(len * target/source) per channel.
/// The capture path uses it for the 48 kHz -> 8 kHz decimation.
AudioBuffer resample(const AudioBuffer& in, int target_rate);

}  // namespace droneaudio
