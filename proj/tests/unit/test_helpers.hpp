#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "droneaudio/audio_buffer.hpp"
#include "droneaudio/rng.hpp"

namespace testutil {

/// Unique scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("droneaudio_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline droneaudio::AudioBuffer random_buffer(std::size_t channels, std::size_t frames, int rate,
                                             std::uint64_t seed) {
    droneaudio::AudioBuffer b(channels, frames, rate);
    droneaudio::Rng rng(seed);
    for (auto& ch : b.channels)
        for (double& x : ch) x = rng.uniform(-0.9, 0.9);
    return b;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             std::size_t begin, std::size_t end) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace testutil
