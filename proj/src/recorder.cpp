#include "droneaudio/recorder.hpp"

#include <algorithm>
#include <stdexcept>

namespace droneaudio {

namespace {

void validate(const RecorderConfig& config) {
    if (config.channels < 1 || config.channels > 8)
        throw std::invalid_argument("recorder: channels must be 1..8");
    if (config.sample_rate <= 0) throw std::invalid_argument("recorder: invalid sample rate");
    if (config.block_frames < 1) throw std::invalid_argument("recorder: invalid block size");
    const std::size_t block_bytes =
        static_cast<std::size_t>(config.block_frames) * config.channels * 2;
    if (config.queue_capacity_bytes < block_bytes)
        throw std::invalid_argument("recorder: queue capacity below one block");
}

}  // namespace

std::filesystem::path generate_unique_filename(const std::filesystem::path& dir,
                                               const std::string& base) {
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error("not a directory: " + dir.string());

    const std::filesystem::path base_path(base);
    std::string stem = base_path.stem().string();
    std::string ext = base_path.extension().string();
    if (ext.empty()) ext = ".wav";

    std::filesystem::path candidate = dir / (stem + ext);
    if (!std::filesystem::exists(candidate)) return candidate;
    for (unsigned n = 1;; ++n) {
        candidate = dir / (stem + std::to_string(n) + ext);
        if (!std::filesystem::exists(candidate)) return candidate;
    }
}

SpscSampleQueue::SpscSampleQueue(std::size_t capacity_samples)
    : ring_(capacity_samples), capacity_(capacity_samples) {
    if (capacity_samples == 0) throw std::invalid_argument("queue capacity must be positive");
}

std::size_t SpscSampleQueue::free_samples() const {
    return capacity_ - (head_.load(std::memory_order_relaxed) -
                        tail_.load(std::memory_order_acquire));
}

std::size_t SpscSampleQueue::available_samples() const {
    return head_.load(std::memory_order_acquire) - tail_.load(std::memory_order_relaxed);
}

std::size_t SpscSampleQueue::push_quantized(std::span<const double> samples,
                                            std::size_t frame_samples) {
    const std::size_t free = free_samples();
    const std::size_t fit_frames = std::min(samples.size(), free) / frame_samples;
    const std::size_t count = fit_frames * frame_samples;
    const std::uint64_t head = head_.load(std::memory_order_relaxed);
    for (std::size_t i = 0; i < count; ++i)
        ring_[(head + i) % capacity_] = quantize_sample(samples[i]);
    head_.store(head + count, std::memory_order_release);
    return count;
}

std::size_t SpscSampleQueue::pop(std::span<std::int16_t> out) {
    const std::size_t count = std::min(out.size(), available_samples());
    const std::uint64_t tail = tail_.load(std::memory_order_relaxed);
    for (std::size_t i = 0; i < count; ++i) out[i] = ring_[(tail + i) % capacity_];
    tail_.store(tail + count, std::memory_order_release);
    return count;
}

RecordingSession::RecordingSession(const RecorderConfig& config,
                                   std::unique_ptr<WavStreamWriter> writer)
    : config_(config),
      path_(writer->path()),
      writer_(std::move(writer)),
      queue_(config.queue_capacity_bytes / 2),
      drain_scratch_(config.queue_capacity_bytes / 2),
      started_at_(std::chrono::steady_clock::now()) {}

RecordingSession::~RecordingSession() {
    try {
        close();
    } catch (...) {
    }
}

std::unique_ptr<RecordingSession> RecordingSession::open(const RecorderConfig& config) {
    validate(config);
    // The unique-name check and the exclusive create race against concurrent
    // sessions; losing the race just moves to the next suffix.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const auto path = generate_unique_filename(config.output_dir, config.base_filename);
        auto writer = WavStreamWriter::open_exclusive(
            path, static_cast<std::uint16_t>(config.channels),
            static_cast<std::uint32_t>(config.sample_rate));
        if (writer)
            return std::unique_ptr<RecordingSession>(
                new RecordingSession(config, std::move(writer)));
    }
    throw std::runtime_error("recorder: could not create a unique file in " +
                             config.output_dir.string());
}

PushResult RecordingSession::push_block(std::span<const double> interleaved) {
    const auto frame_samples = static_cast<std::size_t>(config_.channels);
    const std::size_t frames = interleaved.size() / frame_samples;
    PushResult result;
    if (state_.load(std::memory_order_relaxed) != static_cast<int>(SessionState::Recording)) {
        // Rejected, but the producer's accounting still sees these as drops.
        result.rejected = true;
        result.dropped_frames = frames;
        frames_pushed_.fetch_add(frames, std::memory_order_relaxed);
        frames_dropped_.fetch_add(frames, std::memory_order_relaxed);
        return result;
    }
    const std::size_t stored = queue_.push_quantized(interleaved, frame_samples);
    result.accepted_frames = stored / frame_samples;
    result.dropped_frames = frames - result.accepted_frames;
    frames_pushed_.fetch_add(frames, std::memory_order_relaxed);
    if (result.dropped_frames > 0)
        frames_dropped_.fetch_add(result.dropped_frames, std::memory_order_relaxed);
    return result;
}

std::size_t RecordingSession::drain() {
    std::lock_guard lock(consumer_mutex_);
    if (!writer_) return 0;
    std::size_t total_samples = 0;
    while (true) {
        const std::size_t got = queue_.pop(drain_scratch_);
        if (got == 0) break;
        try {
            writer_->append(std::span<const std::int16_t>(drain_scratch_.data(), got));
        } catch (const std::exception&) {
            io_error_.store(true, std::memory_order_relaxed);
            state_.store(static_cast<int>(SessionState::Closed), std::memory_order_relaxed);
            writer_.reset();  // partial data is preserved; header patched by finalize attempt
            return total_samples / config_.channels;
        }
        total_samples += got;
        frames_written_.store(writer_->frames_written(), std::memory_order_relaxed);
    }
    return total_samples / config_.channels;
}

void RecordingSession::close() {
    drain();
    std::lock_guard lock(consumer_mutex_);
    if (writer_) {
        try {
            writer_->finalize();
        } catch (const std::exception&) {
            io_error_.store(true, std::memory_order_relaxed);
        }
        writer_.reset();
    }
    state_.store(static_cast<int>(SessionState::Closed), std::memory_order_relaxed);
}

StatusSnapshot RecordingSession::status() const {
    StatusSnapshot s;
    s.state = static_cast<SessionState>(state_.load(std::memory_order_relaxed));
    s.path = path_;
    s.frames_written = frames_written_.load(std::memory_order_relaxed);
    s.frames_dropped = frames_dropped_.load(std::memory_order_relaxed);
    s.frames_pushed = frames_pushed_.load(std::memory_order_relaxed);
    s.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_at_)
                      .count();
    s.file_size_bytes = 44 + s.frames_written * config_.channels * 2;
    s.channels = config_.channels;
    s.sample_rate = config_.sample_rate;
    s.io_error = io_error_.load(std::memory_order_relaxed);
    return s;
}

std::size_t RecordingSession::queue_free_frames() const {
    return queue_.free_samples() / static_cast<std::size_t>(config_.channels);
}

std::size_t BufferSource::fill(std::span<double> interleaved, std::size_t frames) {
    const std::size_t channels = buffer_.channel_count();
    const std::size_t available = buffer_.frames() - position_;
    const std::size_t n = std::min(frames, available);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels; ++c)
            interleaved[i * channels + c] = buffer_.channels[c][position_ + i];
    position_ += n;
    return n;
}

Recorder::~Recorder() {
    try {
        stop();
    } catch (...) {
    }
}

StatusSnapshot Recorder::start(const RecorderConfig& config, std::unique_ptr<AudioSource> source,
                               Pacing pacing) {
    std::lock_guard lock(control_mutex_);
    if (session_ && session_->status().state == SessionState::Recording)
        throw std::runtime_error("recorder: already recording");
    join_threads();

    auto session = std::shared_ptr<RecordingSession>(RecordingSession::open(config).release());
    session_ = session;
    last_path_ = session->path();
    stop_requested_.store(false);
    producer_done_.store(false);

    auto shared_source = std::shared_ptr<AudioSource>(source.release());
    producer_ = std::thread([this, session, shared_source, config, pacing] {
        const std::size_t block_samples =
            static_cast<std::size_t>(config.block_frames) * config.channels;
        std::vector<double> block(block_samples);
        const auto start_time = std::chrono::steady_clock::now();
        std::uint64_t frames_sent = 0;
        while (!stop_requested_.load(std::memory_order_relaxed)) {
            if (session->status().state != SessionState::Recording) break;
            const std::size_t got = shared_source->fill(block, config.block_frames);
            if (got == 0) break;
            if (pacing == Pacing::Throttled) {
                while (session->queue_free_frames() < got &&
                       !stop_requested_.load(std::memory_order_relaxed) &&
                       session->status().state == SessionState::Recording)
                    std::this_thread::sleep_for(std::chrono::microseconds(200));
            } else {
                const auto ideal =
                    start_time + std::chrono::nanoseconds(
                                     frames_sent * 1'000'000'000ULL /
                                     static_cast<std::uint64_t>(config.sample_rate));
                std::this_thread::sleep_until(ideal);
            }
            session->push_block(
                std::span<const double>(block.data(), got * config.channels));
            frames_sent += got;
            if (got < static_cast<std::size_t>(config.block_frames)) break;  // source exhausted
        }
        producer_done_.store(true, std::memory_order_release);
    });

    consumer_ = std::thread([this, session] {
        while (true) {
            const std::size_t flushed = session->drain();
            if (producer_done_.load(std::memory_order_acquire)) {
                if (session->drain() == 0) break;
                continue;
            }
            if (flushed == 0) std::this_thread::sleep_for(std::chrono::microseconds(500));
        }
        session->close();
    });

    return session->status();
}

StatusSnapshot Recorder::stop() {
    std::lock_guard lock(control_mutex_);
    if (!session_) return last_status_;
    stop_requested_.store(true);
    join_threads();
    session_->close();
    last_status_ = session_->status();
    session_.reset();
    return last_status_;
}

StatusSnapshot Recorder::wait_until_done() {
    {
        std::lock_guard lock(control_mutex_);
        if (!session_) return last_status_;
    }
    if (producer_.joinable()) producer_.join();
    if (consumer_.joinable()) consumer_.join();
    std::lock_guard lock(control_mutex_);
    if (session_) {
        session_->close();
        last_status_ = session_->status();
        session_.reset();
    }
    return last_status_;
}

StatusSnapshot Recorder::status() const {
    std::lock_guard lock(control_mutex_);
    if (session_) return session_->status();
    return last_status_;
}

bool Recorder::recording() const {
    std::lock_guard lock(control_mutex_);
    return session_ && session_->status().state == SessionState::Recording;
}

std::filesystem::path Recorder::last_path() const {
    std::lock_guard lock(control_mutex_);
    return last_path_;
}

void Recorder::join_threads() {
    stop_requested_.store(true);
    if (producer_.joinable()) producer_.join();
    if (consumer_.joinable()) consumer_.join();
    stop_requested_.store(false);
}

}  // namespace droneaudio
