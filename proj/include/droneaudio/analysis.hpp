#pragma once

#include <filesystem>
#include <vector>

#include "droneaudio/audio_buffer.hpp"
#include "droneaudio/stft.hpp"

namespace droneaudio {

struct FramePower {
    double time_s;
    double power_db;
};

struct PowerStats {
    double mean_db;
    double std_db;
    std::size_t frame_count;
};

struct SpectrumPoint {
    double freq_hz;
    double mag_db;
};

/// Values below this are reported as silence.
inline constexpr double kDbFloor = -120.0;

/// Per-frame power in dBFS: 10*log10(mean over channels and window samples
/// of x^2), frames aligned with the STFT of the same config.
std::vector<FramePower> frame_power_db(const AudioBuffer& buffer, const StftConfig& config);

/// Mean and (sample) standard deviation of the dB values with frame centers
/// in [t_start, t_end). Throws if fewer than 2 frames fall in the range.
PowerStats power_stats(const std::vector<FramePower>& powers, double t_start, double t_end);

/// Magnitude spectrum of the frame nearest t, in dB re full-scale sine.
std::vector<SpectrumPoint> spectrum_at(const Spectrogram& spec, double t_seconds, int channel);

struct FundamentalSearch {
    double f_min_hz = 50.0;
    double f_max_hz = 300.0;
    double step_hz = 0.5;
    int harmonics = 10;
    double threshold_ratio = 2.0;    // comb score must exceed median score by this factor
    double min_separation_hz = 2.0;
    double harmonic_tol_hz = 1.0;    // candidates harmonically related to a pick are folded into it
};

/// Harmonic-comb scoring over a fundamental grid: score(f0) sums the
/// channel-averaged magnitude at the bins nearest k*f0. Returns up to
/// max_sources fundamentals (ascending); empty when nothing scores above
/// the noise-floor threshold.
std::vector<double> estimate_fundamentals(const Spectrogram& spec, std::size_t frame,
                                          int max_sources = 4,
                                          const FundamentalSearch& search = {});

void write_power_csv(const std::filesystem::path& path, const std::vector<FramePower>& powers);
void write_spectrum_csv(const std::filesystem::path& path,
                        const std::vector<SpectrumPoint>& spectrum);
void write_fundamentals_csv(const std::filesystem::path& path,
                            const std::vector<double>& fundamentals);

}  // namespace droneaudio
