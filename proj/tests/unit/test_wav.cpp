#include <doctest.h>

#include <fstream>

#include "droneaudio/wav.hpp"
#include "test_helpers.hpp"

using namespace droneaudio;

TEST_CASE("quantize: fixed-point scaling identity") {
    CHECK(quantize_sample(0.5) == 16384);
    CHECK(quantize_sample(-0.5) == -16384);
    CHECK(dequantize_sample(16384) == doctest::Approx(0.5));
    CHECK(quantize_sample(0.0) == 0);
    // clamp, never wrap
    CHECK(quantize_sample(1.5) == 32767);
    CHECK(quantize_sample(-1.5) == -32768);
}

TEST_CASE("quantize-dequantize-quantize is idempotent over all int16 values") {
    for (int q = -32768; q <= 32767; ++q) {
        const auto q16 = static_cast<std::int16_t>(q);
        CHECK(quantize_sample(dequantize_sample(q16)) == q16);
    }
}

TEST_CASE("wav: first frame (16384, -16384) reads as (0.5, -0.5)") {
    testutil::TempDir dir("wav_frame");
    AudioBuffer b(2, 4, 48000);
    b.channels[0][0] = 0.5;
    b.channels[1][0] = -0.5;
    const auto path = dir.path() / "two.wav";
    write_wav(b, path);
    const AudioBuffer r = read_wav(path);
    CHECK(r.channel_count() == 2);
    CHECK(r.sample_rate == 48000);
    CHECK(r.channels[0][0] == doctest::Approx(0.5));
    CHECK(r.channels[1][0] == doctest::Approx(-0.5));
}

TEST_CASE("wav: write(read(f)) reproduces the data chunk byte for byte") {
    testutil::TempDir dir("wav_roundtrip");
    const AudioBuffer b = testutil::random_buffer(3, 1000, 44100, 42);
    const auto path1 = dir.path() / "a.wav";
    const auto path2 = dir.path() / "b.wav";
    write_wav(b, path1);
    write_wav(read_wav(path1), path2);

    std::ifstream f1(path1, std::ios::binary), f2(path2, std::ios::binary);
    const std::string c1((std::istreambuf_iterator<char>(f1)), {});
    const std::string c2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(c1 == c2);
    CHECK(c1.size() == 44 + 1000 * 3 * 2);
}

TEST_CASE("wav: 8-channel 48kHz 1s buffer writes 48000 frames, data chunk 768000 bytes") {
    testutil::TempDir dir("wav_size");
    const AudioBuffer b = testutil::random_buffer(8, 48000, 48000, 7);
    const auto path = dir.path() / "eight.wav";
    CHECK(write_wav(b, path) == 48000);
    CHECK(std::filesystem::file_size(path) == 44 + 48000 * 8 * 2);
}

TEST_CASE("wav: silence writes an all-zero data chunk") {
    testutil::TempDir dir("wav_silence");
    const AudioBuffer b(2, 100, 8000);
    const auto path = dir.path() / "silent.wav";
    write_wav(b, path);
    std::ifstream f(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(f)), {});
    for (std::size_t i = 44; i < content.size(); ++i) CHECK(content[i] == 0);
}

TEST_CASE("wav: round trip is identity on quantized data, channels 1..8") {
    testutil::TempDir dir("wav_identity");
    for (std::size_t channels = 1; channels <= 8; ++channels) {
        const AudioBuffer original =
            testutil::random_buffer(channels, 777 + channels * 11, 16000, channels);
        const AudioBuffer q = quantized(original);
        const auto path = dir.path() / ("ch" + std::to_string(channels) + ".wav");
        write_wav(original, path);
        const AudioBuffer r = read_wav(path);
        REQUIRE(r.channel_count() == channels);
        REQUIRE(r.frames() == q.frames());
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t n = 0; n < q.frames(); ++n)
                CHECK(r.channels[c][n] == q.channels[c][n]);
    }
}

TEST_CASE("wav: zero-frame file is valid and reads back empty") {
    testutil::TempDir dir("wav_zero");
    const auto path = dir.path() / "empty.wav";
    auto writer = WavStreamWriter::open_truncate(path, 4, 48000);
    writer->finalize();
    const AudioBuffer r = read_wav(path);
    CHECK(r.channel_count() == 4);
    CHECK(r.frames() == 0);
}

TEST_CASE("wav: malformed and unsupported inputs are rejected") {
    testutil::TempDir dir("wav_bad");
    const auto garbage = dir.path() / "garbage.wav";
    {
        std::ofstream f(garbage, std::ios::binary);
        f << "this is not a wav file at all, not even close";
    }
    CHECK_THROWS(read_wav(garbage));
    CHECK_THROWS(read_wav(dir.path() / "missing.wav"));
}

TEST_CASE("wav: truncated data chunk recovers whole frames and reports it") {
    testutil::TempDir dir("wav_trunc");
    const AudioBuffer b = testutil::random_buffer(2, 100, 8000, 3);
    const auto path = dir.path() / "full.wav";
    write_wav(b, path);

    // Chop the file mid-frame: 44-byte header + 50 frames + 1 extra sample.
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    in.close();
    content.resize(44 + 50 * 4 + 2);
    const auto cut = dir.path() / "cut.wav";
    std::ofstream out(cut, std::ios::binary);
    out << content;
    out.close();

    WavReadStats stats;
    const AudioBuffer r = read_wav(cut, &stats);
    CHECK(r.frames() == 50);
    CHECK(stats.truncated);
    CHECK(stats.declared_frames == 100);
    CHECK(stats.recovered_frames == 50);
}

TEST_CASE("wav: clip counting on write") {
    testutil::TempDir dir("wav_clip");
    AudioBuffer b(1, 4, 8000);
    b.channels[0] = {0.0, 1.7, -2.0, 0.25};
    std::uint64_t clipped = 0;
    write_wav(b, dir.path() / "clip.wav", &clipped);
    CHECK(clipped == 2);
    const AudioBuffer r = read_wav(dir.path() / "clip.wav");
    CHECK(r.channels[0][1] == doctest::Approx(32767.0 / 32768.0));
    CHECK(r.channels[0][2] == doctest::Approx(-1.0));
}
