#include "droneaudio/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "droneaudio/rng.hpp"

namespace droneaudio {

namespace {

double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

double buffer_rms(const AudioBuffer& b) {
    const double n = static_cast<double>(b.frames()) * b.channel_count();
    return n > 0 ? std::sqrt(total_energy(b) / n) : 0.0;
}

void normalize_rms(AudioBuffer& b, double target_rms) {
    const double rms = buffer_rms(b);
    if (rms <= 0.0) return;
    const double g = target_rms / rms;
    for (auto& ch : b.channels)
        for (double& x : ch) x *= g;
}

// Kaiser-windowed sinc low-pass prototype, unit DC gain, 70 dB design.
std::vector<double> lowpass_fir(double cutoff_hz, double transition_hz, int sample_rate) {
    const double atten = 70.0;
    const double beta = 0.1102 * (atten - 8.7);
    const double delta_f = transition_hz / sample_rate;
    const int half = std::max(
        4, static_cast<int>(std::ceil((atten - 7.95) / (2.285 * 2.0 * std::numbers::pi * delta_f) / 2.0)));
    const double fc = cutoff_hz / sample_rate;

    auto bessel_i0 = [](double x) {
        double sum = 1.0, term = 1.0;
        const double q = 0.25 * x * x;
        for (int k = 1; k < 64; ++k) {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    };

    std::vector<double> h(2 * half + 1);
    const double i0b = bessel_i0(beta);
    for (int i = -half; i <= half; ++i) {
        const double a = static_cast<double>(i) / (half + 1.0);
        const double w = bessel_i0(beta * std::sqrt(1.0 - a * a)) / i0b;
        double s;
        if (i == 0) {
            s = 2.0 * fc;
        } else {
            const double px = std::numbers::pi * i;
            s = std::sin(2.0 * fc * px) / px;
        }
        h[i + half] = s * w;
    }
    return h;
}

std::vector<double> convolve_same(const std::vector<double>& x, const std::vector<double>& h) {
    const int half = static_cast<int>(h.size()) / 2;
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        double acc = 0.0;
        for (int j = 0; j < static_cast<int>(h.size()); ++j) {
            const long long k = static_cast<long long>(n) + half - j;
            if (k >= 0 && k < static_cast<long long>(x.size())) acc += x[k] * h[j];
        }
        y[n] = acc;
    }
    return y;
}

}  // namespace

AudioBuffer synth_ego_noise(const EgoNoiseModel& model, double duration_s, int sample_rate) {
    if (duration_s <= 0.0) throw std::invalid_argument("synth_ego_noise: duration must be positive");
    if (sample_rate <= 0) throw std::invalid_argument("synth_ego_noise: invalid sample rate");
    if (model.channels < 1) throw std::invalid_argument("synth_ego_noise: invalid channel count");
    if (model.rotor_fundamentals_hz.empty())
        throw std::invalid_argument("synth_ego_noise: no rotors");

    const std::size_t num_frames = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    const std::size_t num_rotors = model.rotor_fundamentals_hz.size();
    const int num_channels = model.channels;
    const double nyquist = sample_rate / 2.0;

    Rng rng(model.seed);

    // Per (rotor, harmonic, channel) phase offsets; per (rotor, channel) gains.
    std::vector<double> amp(model.harmonic_count);
    for (int k = 0; k < model.harmonic_count; ++k)
        amp[k] = db_to_amplitude(-model.harmonic_rolloff_db * k);

    struct RotorTables {
        std::vector<double> cos_theta;  // [harmonic][channel]
        std::vector<double> sin_theta;
        std::vector<double> gain;       // [channel]
    };
    std::vector<RotorTables> tables(num_rotors);
    for (auto& t : tables) {
        t.cos_theta.resize(static_cast<std::size_t>(model.harmonic_count) * num_channels);
        t.sin_theta.resize(t.cos_theta.size());
        t.gain.resize(num_channels);
        for (int k = 0; k < model.harmonic_count; ++k)
            for (int c = 0; c < num_channels; ++c) {
                const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
                t.cos_theta[k * num_channels + c] = std::cos(theta);
                t.sin_theta[k * num_channels + c] = std::sin(theta);
            }
        for (int c = 0; c < num_channels; ++c)
            t.gain[c] = rng.uniform(1.0 - model.channel_gain_spread,
                                    1.0 + model.channel_gain_spread);
    }

    // Fundamental trajectories: constant when hovering, reflected random walk
    // when moving. Control points every 10 ms, linear in between.
    const double control_dt = 0.01;
    const std::size_t num_control =
        static_cast<std::size_t>(std::ceil(duration_s / control_dt)) + 2;
    std::vector<std::vector<double>> f0_track(num_rotors, std::vector<double>(num_control));
    for (std::size_t r = 0; r < num_rotors; ++r) {
        const double base = model.rotor_fundamentals_hz[r];
        double offset = 0.0;
        const double step_std = model.pitch_drift_hz_per_s * std::sqrt(control_dt);
        for (std::size_t i = 0; i < num_control; ++i) {
            f0_track[r][i] = base + offset;
            if (model.pitch_drift_hz_per_s > 0.0) {
                offset += step_std * rng.normal();
                const double bound = model.pitch_drift_bound_hz;
                if (offset > bound) offset = 2.0 * bound - offset;
                if (offset < -bound) offset = -2.0 * bound - offset;
            }
        }
    }

    AudioBuffer out(num_channels, num_frames, sample_rate);
    const double floor_std = db_to_amplitude(model.broadband_floor_db);

    std::vector<double> phase(num_rotors, 0.0);
    for (std::size_t n = 0; n < num_frames; ++n) {
        const double t = static_cast<double>(n) / sample_rate;
        const double ci = t / control_dt;
        const std::size_t i0 = std::min(static_cast<std::size_t>(ci), num_control - 2);
        const double frac = ci - i0;

        for (std::size_t r = 0; r < num_rotors; ++r) {
            const double f0 = f0_track[r][i0] * (1.0 - frac) + f0_track[r][i0 + 1] * frac;
            const auto& tab = tables[r];

            // e^{ik*phase} by recurrence; sin(k*phase + theta) expands over
            // the cached per-channel (cos, sin) of theta.
            const std::complex<double> z1(std::cos(phase[r]), std::sin(phase[r]));
            std::complex<double> zk = z1;
            for (int k = 0; k < model.harmonic_count; ++k) {
                if ((k + 1) * f0 < nyquist) {
                    const double s = zk.imag(), c = zk.real();
                    const double a = amp[k];
                    for (int ch = 0; ch < num_channels; ++ch)
                        out.channels[ch][n] +=
                            tab.gain[ch] * a *
                            (s * tab.cos_theta[k * num_channels + ch] +
                             c * tab.sin_theta[k * num_channels + ch]);
                }
                zk *= z1;
            }
            phase[r] += 2.0 * std::numbers::pi * f0 / sample_rate;
            if (phase[r] > 2.0 * std::numbers::pi)
                phase[r] -= 2.0 * std::numbers::pi;
        }
    }
    for (int ch = 0; ch < num_channels; ++ch)
        for (std::size_t n = 0; n < num_frames; ++n)
            out.channels[ch][n] += floor_std * rng.normal();

    normalize_rms(out, model.output_rms);
    return out;
}

AudioBuffer synth_speech_surrogate(double duration_s, int sample_rate, int channels,
                                   const SpeechSurrogateConfig& config) {
    if (duration_s <= 0.0)
        throw std::invalid_argument("synth_speech_surrogate: duration must be positive");
    if (sample_rate <= 0 || channels < 1)
        throw std::invalid_argument("synth_speech_surrogate: invalid rate or channels");

    const std::size_t num_frames = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    Rng rng(config.seed);

    std::vector<double> noise(num_frames);
    for (double& x : noise) x = rng.normal();

    // Bandpass = difference of two low-pass kernels; cutoffs inset by the
    // transition width so leakage outside the nominal band stays deep.
    const double transition = 100.0;
    const auto lp_high = lowpass_fir(config.band_high_hz - transition / 2.0, transition, sample_rate);
    const auto lp_low = lowpass_fir(config.band_low_hz + transition / 2.0, transition, sample_rate);
    std::vector<double> band = convolve_same(noise, lp_high);
    const std::vector<double> low = convolve_same(noise, lp_low);
    for (std::size_t i = 0; i < band.size(); ++i) band[i] -= low[i];

    // Syllable gating: hard silences plus a smooth on-syllable envelope.
    const std::size_t syllable_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.syllable_s * sample_rate)));
    for (std::size_t start = 0; start < num_frames; start += syllable_len) {
        const std::size_t len = std::min(syllable_len, num_frames - start);
        const bool silent = rng.uniform() < config.silence_prob;
        for (std::size_t i = 0; i < len; ++i) {
            const double env =
                silent ? 0.0
                       : std::pow(std::sin(std::numbers::pi * static_cast<double>(i) / syllable_len), 2.0);
            band[start + i] *= env;
        }
    }

    AudioBuffer out(channels, num_frames, sample_rate);
    for (int c = 0; c < channels; ++c) {
        const std::size_t delay =
            c == 0 ? 0
                   : static_cast<std::size_t>(rng.integer(
                         static_cast<std::uint64_t>(config.max_delay_samples) + 1));
        for (std::size_t n = delay; n < num_frames; ++n)
            out.channels[c][n] = band[n - delay];
    }
    normalize_rms(out, config.output_rms);
    return out;
}

Mix mix_at_snr(const AudioBuffer& speech, const AudioBuffer& noise, const MixSpec& spec) {
    if (speech.channel_count() != noise.channel_count())
        throw std::invalid_argument("mix_at_snr: channel counts differ");
    if (speech.sample_rate != noise.sample_rate)
        throw std::invalid_argument("mix_at_snr: sample rates differ");
    if (!std::isfinite(spec.input_snr_db))
        throw std::invalid_argument("mix_at_snr: target SNR must be finite");

    const std::size_t frames = std::min(speech.frames(), noise.frames());
    auto truncate = [&](const AudioBuffer& b) {
        AudioBuffer out(b.channel_count(), frames, b.sample_rate);
        for (std::size_t c = 0; c < b.channel_count(); ++c)
            std::copy_n(b.channels[c].begin(), frames, out.channels[c].begin());
        return out;
    };

    Mix mix;
    mix.speech = truncate(speech);
    mix.noise = truncate(noise);

    const double es = total_energy(mix.speech);
    const double ev = total_energy(mix.noise);
    if (es <= 0.0) throw std::invalid_argument("mix_at_snr: speech has zero energy");
    if (ev <= 0.0) throw std::invalid_argument("mix_at_snr: noise has zero energy");

    const double target_ratio = std::pow(10.0, spec.input_snr_db / 10.0);
    if (spec.reference == MixSpec::Reference::ScaleNoise) {
        const double gain = std::sqrt(es / (ev * target_ratio));
        for (auto& ch : mix.noise.channels)
            for (double& x : ch) x *= gain;
    } else {
        const double gain = std::sqrt(ev * target_ratio / es);
        for (auto& ch : mix.speech.channels)
            for (double& x : ch) x *= gain;
    }
    mix.mixture = mix_sum(mix.speech, mix.noise);
    return mix;
}

}  // namespace droneaudio
