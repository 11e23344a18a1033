#pragma once

#include <cstdint>
#include <vector>

#include "droneaudio/audio_buffer.hpp"

namespace droneaudio {

/// Parametric rotor-noise model: one harmonic comb per rotor (distinct
/// fundamentals, per-channel random phases and near-unit gains) over a white
/// broadband floor. pitch_drift_hz_per_s = 0 is the hovering regime; a
/// positive rate applies a bounded random walk to each fundamental.
struct EgoNoiseModel {
    std::vector<double> rotor_fundamentals_hz = {95.0, 98.0, 102.0, 105.0};
    int harmonic_count = 30;
    double harmonic_rolloff_db = 6.0;     // per harmonic step
    double broadband_floor_db = -40.0;    // relative to the strongest harmonic
    double pitch_drift_hz_per_s = 0.0;
    double pitch_drift_bound_hz = 15.0;   // random walk reflects at +/- bound
    int channels = 8;
    double channel_gain_spread = 0.05;
    double output_rms = 0.0316;           // ~-30 dBFS, the recorded ego-noise ballpark
    std::uint64_t seed = 1;
};

/// Harmonics that would land above Nyquist are omitted.
AudioBuffer synth_ego_noise(const EgoNoiseModel& model, double duration_s, int sample_rate);

/// Amplitude-modulated bandpass noise standing in for far-field speech:
/// syllable-rate envelope with hard silence gaps, copied across channels
/// with small integer-sample delays.
struct SpeechSurrogateConfig {
    double band_low_hz = 300.0;
    double band_high_hz = 3400.0;
    double syllable_s = 0.25;             // 4 Hz syllabic rate
    double silence_prob = 0.3;
    int max_delay_samples = 4;
    double output_rms = 0.1;
    std::uint64_t seed = 7;
};

AudioBuffer synth_speech_surrogate(double duration_s, int sample_rate, int channels,
                                   const SpeechSurrogateConfig& config = {});

struct MixSpec {
    double input_snr_db = 0.0;
    enum class Reference { ScaleNoise, ScaleSpeech } reference = Reference::ScaleNoise;
};

struct Mix {
    AudioBuffer mixture;
    AudioBuffer speech;  // scaled component, mixture = speech + noise exactly
    AudioBuffer noise;
};

/// Scales one component by a single global gain so that the energy-summed
/// SNR over all channels hits the target exactly; returns the aligned clean
/// components for oracle filtering and shadow evaluation.
Mix mix_at_snr(const AudioBuffer& speech, const AudioBuffer& noise, const MixSpec& spec);

}  // namespace droneaudio
