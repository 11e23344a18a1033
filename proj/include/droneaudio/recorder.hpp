#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "droneaudio/audio_buffer.hpp"
#include "droneaudio/wav.hpp"

namespace droneaudio {

/// Mirrors the on-device recording task: small callback blocks, a 64 KiB
/// byte-capacity pipe between the real-time and disk sides.
struct RecorderConfig {
    int channels = 8;
    int sample_rate = 48000;
    int block_frames = 4;
    std::size_t queue_capacity_bytes = 65536;
    std::filesystem::path output_dir = ".";
    std::string base_filename = "audioCh.wav";
};

/// Smallest non-colliding name: `base` itself, else stem + 1, 2, ... before
/// the extension.
std::filesystem::path generate_unique_filename(const std::filesystem::path& dir,
                                               const std::string& base);

/// Lock-free single-producer/single-consumer ring of interleaved int16
/// samples. Capacity is fixed at construction; push never blocks.
class SpscSampleQueue {
  public:
    explicit SpscSampleQueue(std::size_t capacity_samples);

    std::size_t capacity() const { return capacity_; }
    std::size_t free_samples() const;       // producer-side view (conservative)
    std::size_t available_samples() const;  // consumer-side view

    /// Producer only. Quantizes and stores up to a whole number of frames;
    /// returns samples actually stored. No allocation, no blocking.
    std::size_t push_quantized(std::span<const double> samples, std::size_t frame_samples);

    /// Consumer only. Pops up to out.size() samples, returns count.
    std::size_t pop(std::span<std::int16_t> out);

  private:
    std::vector<std::int16_t> ring_;
    std::size_t capacity_;
    std::atomic<std::uint64_t> head_{0};  // total pushed
    std::atomic<std::uint64_t> tail_{0};  // total popped
};

enum class SessionState : int { Idle = 0, Recording = 1, Closed = 2 };

struct StatusSnapshot {
    SessionState state = SessionState::Idle;
    std::filesystem::path path;
    std::uint64_t frames_written = 0;
    std::uint64_t frames_dropped = 0;
    std::uint64_t frames_pushed = 0;
    double elapsed_s = 0.0;
    std::uint64_t file_size_bytes = 0;
    int channels = 0;
    int sample_rate = 0;
    bool io_error = false;
};

struct PushResult {
    std::size_t accepted_frames = 0;
    std::size_t dropped_frames = 0;
    bool rejected = false;  // session was not recording
};

/// One capture lifecycle: Idle -> Recording -> Closed. The producer role
/// calls push_block (constant-bounded work, never blocks, never allocates);
/// the consumer role calls drain (may block on disk); any observer may call
/// status() without perturbing either.
class RecordingSession {
  public:
    static std::unique_ptr<RecordingSession> open(const RecorderConfig& config);
    ~RecordingSession();

    /// Producer. block.size() must be block_frames*channels; whole frames
    /// that do not fit are dropped and counted.
    PushResult push_block(std::span<const double> interleaved);

    /// Consumer. Flushes everything queued to the WAV file; returns frames.
    std::size_t drain();

    /// Final drain + header finalization. Idempotent.
    void close();

    StatusSnapshot status() const;
    std::size_t queue_free_frames() const;
    const RecorderConfig& config() const { return config_; }
    const std::filesystem::path& path() const { return path_; }

  private:
    RecordingSession(const RecorderConfig& config, std::unique_ptr<WavStreamWriter> writer);

    RecorderConfig config_;
    std::filesystem::path path_;
    std::unique_ptr<WavStreamWriter> writer_;
    SpscSampleQueue queue_;
    std::vector<std::int16_t> drain_scratch_;  // consumer-owned
    std::mutex consumer_mutex_;                // drain/close exclusion

    std::atomic<int> state_{static_cast<int>(SessionState::Recording)};
    std::atomic<std::uint64_t> frames_written_{0};
    std::atomic<std::uint64_t> frames_dropped_{0};
    std::atomic<std::uint64_t> frames_pushed_{0};
    std::atomic<bool> io_error_{false};
    std::chrono::steady_clock::time_point started_at_;
};

/// Pull-based block source feeding the producer thread.
class AudioSource {
  public:
    virtual ~AudioSource() = default;
    /// Fills interleaved frames; returning fewer than requested ends the feed.
    virtual std::size_t fill(std::span<double> interleaved, std::size_t frames) = 0;
};

/// Plays an in-memory buffer (file playback or synthesized input).
class BufferSource final : public AudioSource {
  public:
    explicit BufferSource(AudioBuffer buffer) : buffer_(std::move(buffer)) {}
    std::size_t fill(std::span<double> interleaved, std::size_t frames) override;

  private:
    AudioBuffer buffer_;
    std::size_t position_ = 0;
};

enum class Pacing {
    Realtime,   // pushes at wall-clock rate; overruns drop (flight behavior)
    Throttled,  // waits for queue room; lossless, for deterministic captures
};

/// Drives one producer and one consumer thread over a RecordingSession.
class Recorder {
  public:
    Recorder() = default;
    ~Recorder();
    Recorder(const Recorder&) = delete;
    Recorder& operator=(const Recorder&) = delete;

    /// Throws if already recording.
    StatusSnapshot start(const RecorderConfig& config, std::unique_ptr<AudioSource> source,
                         Pacing pacing);
    /// Stops the producer, flushes, closes. No-op when idle.
    StatusSnapshot stop();
    /// Blocks until the source is exhausted and the session closed.
    StatusSnapshot wait_until_done();

    StatusSnapshot status() const;
    bool recording() const;
    std::filesystem::path last_path() const;

  private:
    void join_threads();

    mutable std::mutex control_mutex_;
    std::shared_ptr<RecordingSession> session_;
    std::thread producer_;
    std::thread consumer_;
    std::atomic<bool> stop_requested_{false};
    std::atomic<bool> producer_done_{true};
    std::filesystem::path last_path_;
    StatusSnapshot last_status_;
};

}  // namespace droneaudio
