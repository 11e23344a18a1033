#include <doctest.h>

#include <cmath>
#include <numbers>

#include "droneaudio/resample.hpp"
#include "test_helpers.hpp"

using namespace droneaudio;

namespace {

AudioBuffer sine(double freq_hz, double duration_s, int rate, double amplitude = 0.5) {
    const auto n = static_cast<std::size_t>(std::llround(duration_s * rate));
    AudioBuffer b(1, n, rate);
    for (std::size_t i = 0; i < n; ++i)
        b.channels[0][i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
    return b;
}

// RMS of x against an analytically generated reference sine, middle section
// only (the filter edges are excluded).
double rms_vs_reference(const AudioBuffer& x, double freq_hz, double amplitude) {
    const std::size_t trim = 2000;
    REQUIRE(x.frames() > 2 * trim);
    double err = 0.0, ref_energy = 0.0;
    for (std::size_t i = trim; i < x.frames() - trim; ++i) {
        const double ref =
            amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / x.sample_rate);
        err += (x.channels[0][i] - ref) * (x.channels[0][i] - ref);
        ref_energy += ref * ref;
    }
    return std::sqrt(err / ref_energy);
}

double band_rms(const AudioBuffer& x) {
    const std::size_t trim = 2000;
    double e = 0.0;
    for (std::size_t i = trim; i < x.frames() - trim; ++i)
        e += x.channels[0][i] * x.channels[0][i];
    return std::sqrt(e / static_cast<double>(x.frames() - 2 * trim));
}

}  // namespace

TEST_CASE("resample: 48 kHz 6 s -> 8 kHz gives 48000 samples") {
    const AudioBuffer b = testutil::random_buffer(2, 6 * 48000, 48000, 1);
    const AudioBuffer r = resample(b, 8000);
    CHECK(r.frames() == 48000);
    CHECK(r.sample_rate == 8000);
    CHECK(r.channel_count() == 2);
}

TEST_CASE("resample: 100 Hz sine survives 48k->8k within 1%") {
    const AudioBuffer in = sine(100.0, 6.0, 48000);
    const AudioBuffer out = resample(in, 8000);
    CHECK(rms_vs_reference(out, 100.0, 0.5) < 0.01);
}

TEST_CASE("resample: 3 kHz passes within 1%, 5 kHz attenuated > 40 dB") {
    const AudioBuffer pass = resample(sine(3000.0, 6.0, 48000), 8000);
    CHECK(rms_vs_reference(pass, 3000.0, 0.5) < 0.01);

    const AudioBuffer stop = resample(sine(5000.0, 6.0, 48000), 8000);
    const double residual = band_rms(stop);
    const double input_rms = 0.5 / std::numbers::sqrt2;
    CHECK(20.0 * std::log10(input_rms / residual) > 40.0);
}

TEST_CASE("resample: zero in, zero out") {
    const AudioBuffer z(3, 48000, 48000);
    const AudioBuffer r = resample(z, 8000);
    for (const auto& ch : r.channels)
        for (double x : ch) CHECK(x == 0.0);
}

TEST_CASE("resample: linearity within 1e-6") {
    const AudioBuffer x = testutil::random_buffer(1, 48000, 48000, 11);
    const AudioBuffer y = testutil::random_buffer(1, 48000, 48000, 22);
    const double a = 0.7, b = -1.3;

    AudioBuffer combo(1, x.frames(), 48000);
    for (std::size_t i = 0; i < x.frames(); ++i)
        combo.channels[0][i] = a * x.channels[0][i] + b * y.channels[0][i];

    const AudioBuffer rc = resample(combo, 8000);
    const AudioBuffer rx = resample(x, 8000);
    const AudioBuffer ry = resample(y, 8000);
    for (std::size_t i = 0; i < rc.frames(); ++i)
        CHECK(rc.channels[0][i] ==
              doctest::Approx(a * rx.channels[0][i] + b * ry.channels[0][i]).epsilon(1e-6));
}

TEST_CASE("resample: identity when rates match, invalid rate throws") {
    const AudioBuffer x = testutil::random_buffer(1, 1000, 8000, 5);
    const AudioBuffer same = resample(x, 8000);
    for (std::size_t i = 0; i < x.frames(); ++i)
        CHECK(same.channels[0][i] == x.channels[0][i]);
    CHECK_THROWS(resample(x, 0));
    CHECK_THROWS(resample(x, -100));
}

TEST_CASE("resample: upsampling path keeps a tone intact") {
    const AudioBuffer in = sine(440.0, 2.0, 8000);
    const AudioBuffer out = resample(in, 48000);
    CHECK(out.frames() == 96000);
    CHECK(rms_vs_reference(out, 440.0, 0.5) < 0.01);
}
