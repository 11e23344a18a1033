#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "droneaudio/stft.hpp"
#include "test_helpers.hpp"

using namespace droneaudio;

TEST_CASE("stft config: 128 ms at 8 kHz is a 1024-sample window, half overlap") {
    const StftConfig c = StftConfig::for_rate(8000);
    CHECK(c.window_length == 1024);
    CHECK(c.hop == 512);
    CHECK(c.num_bins() == 513);
}

TEST_CASE("stft: 1 kHz sine peaks at bin 128 of 513 in every frame") {
    const int rate = 8000;
    AudioBuffer b(1, 4 * rate, rate);
    for (std::size_t i = 0; i < b.frames(); ++i)
        b.channels[0][i] = std::sin(2.0 * std::numbers::pi * 1000.0 * i / rate);

    const Spectrogram spec = stft(b, StftConfig::for_rate(rate));
    CHECK(spec.num_bins == 513);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        std::size_t peak = 0;
        double best = 0.0;
        for (std::size_t f = 0; f < spec.num_bins; ++f) {
            const double mag = std::abs(spec.at(0, t, f));
            if (mag > best) {
                best = mag;
                peak = f;
            }
        }
        CHECK(peak == 128);  // 1000 / (8000/1024)
    }
}

TEST_CASE("stft: zero signal gives an all-zero spectrogram") {
    const AudioBuffer z(2, 8000, 8000);
    const Spectrogram spec = stft(z, StftConfig::for_rate(8000));
    for (const auto& v : spec.bins) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("stft: empty or too-short signals throw") {
    CHECK_THROWS(stft(AudioBuffer{}, StftConfig::for_rate(8000)));
    CHECK_THROWS(stft(AudioBuffer(1, 100, 8000), StftConfig::for_rate(8000)));
}

TEST_CASE("istft(stft(x)) reconstructs x within 1e-6 on the interior") {
    const StftConfig config = StftConfig::for_rate(8000);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const AudioBuffer x = testutil::random_buffer(2, 3 * 8000 + 777, 8000, seed);
        const AudioBuffer y = istft(stft(x, config));
        REQUIRE(y.frames() == x.frames());
        const std::size_t frames = stft_frame_count(x.frames(), config);
        const std::size_t interior_end = frames * config.hop;
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(testutil::relative_error(y.channels[c], x.channels[c], config.hop,
                                           interior_end) < 1e-6);
    }
}

TEST_CASE("istft: linearity") {
    const StftConfig config = StftConfig::for_rate(8000);
    const AudioBuffer x = testutil::random_buffer(1, 2 * 8000, 8000, 5);
    const AudioBuffer y = testutil::random_buffer(1, 2 * 8000, 8000, 6);
    Spectrogram sx = stft(x, config);
    const Spectrogram sy = stft(y, config);

    const double a = 1.7, b = -0.4;
    for (std::size_t i = 0; i < sx.bins.size(); ++i) sx.bins[i] = a * sx.bins[i] + b * sy.bins[i];
    const AudioBuffer combined = istft(sx);
    const AudioBuffer ix = istft(stft(x, config));
    const AudioBuffer iy = istft(stft(y, config));
    for (std::size_t i = 0; i < combined.frames(); ++i)
        CHECK(combined.channels[0][i] ==
              doctest::Approx(a * ix.channels[0][i] + b * iy.channels[0][i]).epsilon(1e-6));
}

TEST_CASE("istft: zero spectrogram gives zero signal") {
    const AudioBuffer x = testutil::random_buffer(1, 8000, 8000, 9);
    Spectrogram spec = stft(x, StftConfig::for_rate(8000));
    for (auto& v : spec.bins) v = 0.0;
    const AudioBuffer y = istft(spec);
    for (double v : y.channels[0]) CHECK(v == 0.0);
}

TEST_CASE("Parseval: bin energy matches windowed frame energy within 1e-6") {
    const StftConfig config = StftConfig::for_rate(8000);
    const AudioBuffer x = testutil::random_buffer(1, 3 * 8000, 8000, 13);
    const Spectrogram spec = stft(x, config);
    const auto window = periodic_hann(config.window_length);
    const int n = config.window_length;

    for (std::size_t t = 0; t < spec.num_frames; t += 7) {
        double time_energy = 0.0;
        for (int i = 0; i < n; ++i) {
            const double w = window[i] * x.channels[0][t * config.hop + i];
            time_energy += w * w;
        }
        double bin_energy = std::norm(spec.at(0, t, 0)) + std::norm(spec.at(0, t, spec.num_bins - 1));
        for (std::size_t f = 1; f + 1 < spec.num_bins; ++f)
            bin_energy += 2.0 * std::norm(spec.at(0, t, f));
        bin_energy /= n;
        CHECK(bin_energy == doctest::Approx(time_energy).epsilon(1e-6));
    }
}

TEST_CASE("stft: frame times are window centers") {
    const AudioBuffer x = testutil::random_buffer(1, 8000, 8000, 21);
    const Spectrogram spec = stft(x, StftConfig::for_rate(8000));
    CHECK(spec.frame_time(0) == doctest::Approx(512.0 / 8000.0));
    CHECK(spec.frame_time(1) == doctest::Approx((512.0 + 512.0) / 8000.0));
    CHECK(spec.nearest_frame(spec.frame_time(3)) == 3);
}
