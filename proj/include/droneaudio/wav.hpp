#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "droneaudio/audio_buffer.hpp"

namespace droneaudio {

/// Only 16-bit integer PCM RIFF/WAVE is supported, 1..8 channels.
struct WavSpec {
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bit_depth = 16;
};

struct WavReadStats {
    std::uint64_t declared_frames = 0;
    std::uint64_t recovered_frames = 0;
    bool truncated = false;
};

/// De-interleaves to float channels, sample = int16 / 32768. A truncated data
/// chunk is not fatal: whole frames present in the file are recovered and
/// reported through `stats`.
AudioBuffer read_wav(const std::filesystem::path& path, WavReadStats* stats = nullptr);

/// Interleaved PCM16 little-endian. Out-of-range samples are clamped, never
/// wrapped; the clip count is reported through `clipped`. Returns frames written.
std::uint64_t write_wav(const AudioBuffer& buffer, const std::filesystem::path& path,
                        std::uint64_t* clipped = nullptr);

/// Incremental PCM16 writer used by the recording pipeline. The header is
/// written with provisional lengths on open and patched on finalize, so a
/// file that was finalized is always self-consistent.
class WavStreamWriter {
  public:
    /// Fails with nullptr iff the path already exists (O_EXCL semantics).
    /// Other I/O problems throw.
    static std::unique_ptr<WavStreamWriter> open_exclusive(const std::filesystem::path& path,
                                                           std::uint16_t channels,
                                                           std::uint32_t sample_rate);

    static std::unique_ptr<WavStreamWriter> open_truncate(const std::filesystem::path& path,
                                                          std::uint16_t channels,
                                                          std::uint32_t sample_rate);

    ~WavStreamWriter();
    WavStreamWriter(const WavStreamWriter&) = delete;
    WavStreamWriter& operator=(const WavStreamWriter&) = delete;

    /// samples.size() must be a whole number of frames.
    void append(std::span<const std::int16_t> samples);

    /// Patches header sizes and closes the file. Idempotent.
    void finalize();

    std::uint64_t frames_written() const { return frames_written_; }
    const std::filesystem::path& path() const { return path_; }

  private:
    WavStreamWriter(std::FILE* file, std::filesystem::path path, std::uint16_t channels,
                    std::uint32_t sample_rate);
    void write_header(std::uint32_t data_bytes);

    std::FILE* file_ = nullptr;
    std::filesystem::path path_;
    std::uint16_t channels_;
    std::uint32_t sample_rate_;
    std::uint64_t frames_written_ = 0;
    bool finalized_ = false;
};

}  // namespace droneaudio
