#include "droneaudio/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace droneaudio {

namespace {

constexpr double kAttenuationDb = 70.0;

double bessel_i0(double x) {
    // Series expansion; converges quickly for the beta values used here.
    double sum = 1.0, term = 1.0;
    const double half_x_sq = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= half_x_sq / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

struct KernelDesign {
    int half_width;        // taps on each side of the center
    double cutoff;         // cycles per input sample
    double kaiser_beta;
    double tap(double offset) const {
        const double a = offset / (half_width + 1.0);
        if (std::abs(a) >= 1.0) return 0.0;
        const double window = bessel_i0(kaiser_beta * std::sqrt(1.0 - a * a)) /
                              bessel_i0(kaiser_beta);
        return 2.0 * cutoff * sinc(2.0 * cutoff * offset) * window;
    }
};

KernelDesign design_kernel(int source_rate, int target_rate) {
    const double min_rate = static_cast<double>(std::min(source_rate, target_rate));
    KernelDesign d{};
    d.cutoff = 0.45 * min_rate / source_rate;
    // Transition band from 0.45x to 0.55x the smaller rate.
    const double transition = 0.1 * min_rate / source_rate;
    d.kaiser_beta = 0.1102 * (kAttenuationDb - 8.7);
    const double taps = (kAttenuationDb - 7.95) /
                        (2.285 * 2.0 * std::numbers::pi * transition);
    d.half_width = std::max(4, static_cast<int>(std::ceil(taps / 2.0)));
    return d;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& in, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (in.sample_rate <= 0) throw std::invalid_argument("resample: source rate must be positive");
    if (in.sample_rate == target_rate) return in;

    const std::size_t in_len = in.frames();
    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(in_len) * target_rate / in.sample_rate));
    AudioBuffer out(in.channel_count(), out_len, target_rate);
    if (in_len == 0) return out;

    const KernelDesign kernel = design_kernel(in.sample_rate, target_rate);

    // Input time of output sample n is n*p/q input samples; the fractional
    // part cycles with period q, so q phase kernels cover every output.
    const long long g = std::gcd(static_cast<long long>(in.sample_rate),
                                 static_cast<long long>(target_rate));
    const long long p = in.sample_rate / g;   // input step numerator
    const long long q = target_rate / g;      // phase count
    const int taps = 2 * kernel.half_width + 1;

    std::vector<std::vector<double>> phase_taps;
    const bool cache_phases = q <= 8192;
    if (cache_phases) {
        phase_taps.assign(static_cast<std::size_t>(q), std::vector<double>(taps));
        for (long long phase = 0; phase < q; ++phase) {
            const double frac = static_cast<double>(phase * p % q) / static_cast<double>(q);
            for (int j = 0; j < taps; ++j)
                phase_taps[phase][j] = kernel.tap(frac - (j - kernel.half_width));
        }
    }

    for (std::size_t c = 0; c < in.channel_count(); ++c) {
        const auto& x = in.channels[c];
        auto& y = out.channels[c];
        for (std::size_t n = 0; n < out_len; ++n) {
            const long long num = static_cast<long long>(n) * p;
            const long long base = num / q;
            double acc = 0.0;
            if (cache_phases) {
                const auto& h = phase_taps[static_cast<std::size_t>(n % q)];
                const long long k0 = base - kernel.half_width;
                const long long lo = std::max<long long>(0, -k0);
                const long long hi = std::min<long long>(taps, static_cast<long long>(in_len) - k0);
                for (long long j = lo; j < hi; ++j) acc += x[k0 + j] * h[j];
            } else {
                const double t = static_cast<double>(num) / q;
                for (long long k = base - kernel.half_width; k <= base + kernel.half_width; ++k) {
                    if (k < 0 || k >= static_cast<long long>(in_len)) continue;
                    acc += x[k] * kernel.tap(t - k);
                }
            }
            y[n] = acc;
        }
    }
    return out;
}

}  // namespace droneaudio
