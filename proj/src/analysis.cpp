#include "droneaudio/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace droneaudio {

namespace {

double to_db_power(double power) {
    if (power <= 0.0) return kDbFloor;
    return std::max(kDbFloor, 10.0 * std::log10(power));
}

double to_db_amplitude(double amp) {
    if (amp <= 0.0) return kDbFloor;
    return std::max(kDbFloor, 20.0 * std::log10(amp));
}

std::FILE* open_csv(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write CSV: " + path.string());
    return f;
}

}  // namespace

std::vector<FramePower> frame_power_db(const AudioBuffer& buffer, const StftConfig& config) {
    if (buffer.empty()) throw std::invalid_argument("frame_power_db: empty signal");
    const std::size_t num_frames = stft_frame_count(buffer.frames(), config);
    const std::size_t window = static_cast<std::size_t>(config.window_length);
    const std::size_t samples_per_frame = window * buffer.channel_count();

    std::vector<FramePower> out;
    out.reserve(num_frames);
    for (std::size_t t = 0; t < num_frames; ++t) {
        const std::size_t offset = t * config.hop;
        double energy = 0.0;
        for (const auto& ch : buffer.channels)
            for (std::size_t i = 0; i < window; ++i) energy += ch[offset + i] * ch[offset + i];
        const double time_s =
            (static_cast<double>(offset) + window / 2.0) / config.sample_rate;
        out.push_back({time_s, to_db_power(energy / samples_per_frame)});
    }
    return out;
}

PowerStats power_stats(const std::vector<FramePower>& powers, double t_start, double t_end) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : powers) {
        if (p.time_s >= t_start && p.time_s < t_end) {
            sum += p.power_db;
            ++n;
        }
    }
    if (n < 2) throw std::invalid_argument("power_stats: range must contain at least 2 frames");
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& p : powers)
        if (p.time_s >= t_start && p.time_s < t_end) ss += (p.power_db - mean) * (p.power_db - mean);
    return {mean, std::sqrt(ss / (n - 1)), n};
}

std::vector<SpectrumPoint> spectrum_at(const Spectrogram& spec, double t_seconds, int channel) {
    if (channel < 0 || static_cast<std::size_t>(channel) >= spec.num_channels)
        throw std::invalid_argument("spectrum_at: channel out of range");
    if (t_seconds < 0.0 ||
        t_seconds > static_cast<double>(spec.signal_length) / spec.config.sample_rate)
        throw std::invalid_argument("spectrum_at: time out of range");
    const std::size_t t = spec.nearest_frame(t_seconds);

    // Scale so a full-scale sine reads ~0 dB: amplitude = 2|X| / sum(window).
    double wsum = 0.0;
    for (double w : periodic_hann(spec.config.window_length)) wsum += w;

    std::vector<SpectrumPoint> out;
    out.reserve(spec.num_bins);
    for (std::size_t f = 0; f < spec.num_bins; ++f) {
        const double amp = 2.0 * std::abs(spec.at(channel, t, f)) / wsum;
        out.push_back({spec.config.bin_hz(f), to_db_amplitude(amp)});
    }
    return out;
}

std::vector<double> estimate_fundamentals(const Spectrogram& spec, std::size_t frame,
                                          int max_sources, const FundamentalSearch& search) {
    if (max_sources < 1) throw std::invalid_argument("estimate_fundamentals: max_sources >= 1");
    if (frame >= spec.num_frames)
        throw std::invalid_argument("estimate_fundamentals: frame out of range");

    // Channel-averaged magnitude keeps the score invariant to channel order.
    std::vector<double> mag(spec.num_bins, 0.0);
    for (std::size_t c = 0; c < spec.num_channels; ++c)
        for (std::size_t f = 0; f < spec.num_bins; ++f)
            mag[f] += std::abs(spec.at(c, frame, f));
    for (double& m : mag) m /= spec.num_channels;

    const double bin_width = spec.config.bin_hz(1);
    const double nyquist = spec.config.sample_rate / 2.0;

    const std::size_t grid_size = static_cast<std::size_t>(
        std::floor((search.f_max_hz - search.f_min_hz) / search.step_hz)) + 1;
    std::vector<double> score(grid_size, 0.0);
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double f0 = search.f_min_hz + i * search.step_hz;
        for (int k = 1; k <= search.harmonics; ++k) {
            const double fk = k * f0;
            if (fk > nyquist) break;
            const auto bin = static_cast<std::size_t>(std::lround(fk / bin_width));
            if (bin < spec.num_bins) score[i] += mag[bin];
        }
    }

    std::vector<double> sorted_scores = score;
    std::nth_element(sorted_scores.begin(), sorted_scores.begin() + sorted_scores.size() / 2,
                     sorted_scores.end());
    const double median = sorted_scores[sorted_scores.size() / 2];
    const double threshold = median * search.threshold_ratio;

    // Local maxima above threshold, strongest first.
    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < grid_size; ++i)
        if (score[i] > score[i - 1] && score[i] >= score[i + 1] && score[i] > threshold)
            candidates.push_back(i);
    std::sort(candidates.begin(), candidates.end(),
              [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

    std::vector<double> picked;
    for (std::size_t idx : candidates) {
        if (static_cast<int>(picked.size()) >= max_sources) break;
        const double f0 = search.f_min_hz + idx * search.step_hz;
        bool reject = false;
        for (double f : picked) {
            if (std::abs(f - f0) < search.min_separation_hz) {
                reject = true;
                break;
            }
            // Sub- and super-harmonics of an already accepted pitch belong
            // to the same comb, not a new rotor.
            for (int m = 2; m <= search.harmonics && !reject; ++m) {
                if (std::abs(f0 * m - f) < search.harmonic_tol_hz * m ||
                    std::abs(f * m - f0) < search.harmonic_tol_hz * m)
                    reject = true;
            }
            if (reject) break;
        }
        if (!reject) picked.push_back(f0);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

void write_power_csv(const std::filesystem::path& path, const std::vector<FramePower>& powers) {
    std::FILE* f = open_csv(path);
    std::fprintf(f, "time_s,power_db\n");
    for (const auto& p : powers) std::fprintf(f, "%.6f,%.6f\n", p.time_s, p.power_db);
    std::fclose(f);
}

void write_spectrum_csv(const std::filesystem::path& path,
                        const std::vector<SpectrumPoint>& spectrum) {
    std::FILE* f = open_csv(path);
    std::fprintf(f, "freq_hz,mag_db\n");
    for (const auto& p : spectrum) std::fprintf(f, "%.6f,%.6f\n", p.freq_hz, p.mag_db);
    std::fclose(f);
}

void write_fundamentals_csv(const std::filesystem::path& path,
                            const std::vector<double>& fundamentals) {
    std::FILE* f = open_csv(path);
    std::fprintf(f, "fundamental_hz\n");
    for (double v : fundamentals) std::fprintf(f, "%.6f\n", v);
    std::fclose(f);
}

}  // namespace droneaudio
