#include "droneaudio/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace droneaudio {

namespace {

// FFTW plan creation is not thread-safe; execution of a private plan is.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
  public:
    explicit RealFft(int n) : n_(n) {
        time_ = fftw_alloc_real(n);
        freq_ = fftw_alloc_complex(n / 2 + 1);
        std::lock_guard lock(fftw_plan_mutex());
        forward_ = fftw_plan_dft_r2c_1d(n, time_, freq_, FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_1d(n, freq_, time_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(fftw_plan_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
        fftw_free(time_);
        fftw_free(freq_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* time() { return time_; }

    void forward(std::complex<double>* out) {
        fftw_execute(forward_);
        for (int f = 0; f <= n_ / 2; ++f)
            out[f] = {freq_[f][0], freq_[f][1]};
    }

    /// Writes the (1/n)-normalized inverse into time().
    void inverse(const std::complex<double>* in) {
        for (int f = 0; f <= n_ / 2; ++f) {
            freq_[f][0] = in[f].real();
            freq_[f][1] = in[f].imag();
        }
        fftw_execute(inverse_);
        const double scale = 1.0 / n_;
        for (int i = 0; i < n_; ++i) time_[i] *= scale;
    }

  private:
    int n_;
    double* time_;
    fftw_complex* freq_;
    fftw_plan forward_;
    fftw_plan inverse_;
};

}  // namespace

StftConfig StftConfig::for_rate(int rate) {
    StftConfig c;
    c.sample_rate = rate;
    c.window_length = static_cast<int>(std::lround(0.128 * rate));
    c.hop = c.window_length / 2;
    return c;
}

std::vector<double> periodic_hann(int length) {
    std::vector<double> w(length);
    for (int n = 0; n < length; ++n)
        w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
    return w;
}

std::size_t stft_frame_count(std::size_t signal_length, const StftConfig& config) {
    const auto window = static_cast<std::size_t>(config.window_length);
    if (signal_length < window) return 0;
    return (signal_length - window) / static_cast<std::size_t>(config.hop) + 1;
}

std::size_t Spectrogram::nearest_frame(double t_seconds) const {
    if (num_frames == 0) throw std::invalid_argument("nearest_frame: empty spectrogram");
    std::size_t best = 0;
    double best_dist = std::abs(frame_time(0) - t_seconds);
    for (std::size_t t = 1; t < num_frames; ++t) {
        const double d = std::abs(frame_time(t) - t_seconds);
        if (d < best_dist) {
            best_dist = d;
            best = t;
        }
    }
    return best;
}

Spectrogram stft(const AudioBuffer& buffer, const StftConfig& config) {
    if (buffer.empty()) throw std::invalid_argument("stft: empty signal");
    if (config.window_length <= 0 || config.hop <= 0)
        throw std::invalid_argument("stft: invalid config");
    if (buffer.frames() < static_cast<std::size_t>(config.window_length))
        throw std::invalid_argument("stft: signal shorter than the analysis window");
    if (config.sample_rate != buffer.sample_rate)
        throw std::invalid_argument("stft: config/buffer sample rate mismatch");

    const int n = config.window_length;
    const std::size_t num_frames = stft_frame_count(buffer.frames(), config);
    const std::vector<double> window = periodic_hann(n);

    Spectrogram spec;
    spec.config = config;
    spec.num_channels = buffer.channel_count();
    spec.num_frames = num_frames;
    spec.num_bins = config.num_bins();
    spec.signal_length = buffer.frames();
    spec.bins.resize(spec.num_channels * num_frames * spec.num_bins);

    RealFft fft(n);
    for (std::size_t c = 0; c < spec.num_channels; ++c) {
        const auto& x = buffer.channels[c];
        for (std::size_t t = 0; t < num_frames; ++t) {
            const std::size_t offset = t * config.hop;
            double* in = fft.time();
            for (int i = 0; i < n; ++i) in[i] = x[offset + i] * window[i];
            fft.forward(&spec.at(c, t, 0));
        }
    }
    return spec;
}

AudioBuffer istft(const Spectrogram& spec) {
    if (spec.num_frames == 0 || spec.num_channels == 0)
        throw std::invalid_argument("istft: empty spectrogram");
    const StftConfig& config = spec.config;
    const int n = config.window_length;
    if (spec.num_bins != config.num_bins())
        throw std::invalid_argument("istft: bin count inconsistent with window length");

    const std::vector<double> window = periodic_hann(n);
    AudioBuffer out(spec.num_channels, spec.signal_length, config.sample_rate);

    // Accumulated analysis-window sum; constant 1 on the interior for
    // periodic Hann at half overlap.
    std::vector<double> wsum(spec.signal_length, 0.0);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        const std::size_t offset = t * config.hop;
        for (int i = 0; i < n && offset + i < spec.signal_length; ++i)
            wsum[offset + i] += window[i];
    }

    RealFft fft(n);
    for (std::size_t c = 0; c < spec.num_channels; ++c) {
        auto& y = out.channels[c];
        for (std::size_t t = 0; t < spec.num_frames; ++t) {
            fft.inverse(&spec.at(c, t, 0));
            const std::size_t offset = t * config.hop;
            const double* frame = fft.time();
            for (int i = 0; i < n && offset + i < spec.signal_length; ++i)
                y[offset + i] += frame[i];
        }
        for (std::size_t i = 0; i < spec.signal_length; ++i)
            y[i] = wsum[i] > 1e-8 ? y[i] / wsum[i] : 0.0;
    }
    return out;
}

}  // namespace droneaudio
