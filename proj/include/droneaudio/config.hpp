#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "droneaudio/eval.hpp"
#include "droneaudio/recorder.hpp"
#include "droneaudio/spatial.hpp"
#include "droneaudio/stft.hpp"
#include "droneaudio/synth.hpp"

namespace droneaudio {

/// Everything numeric lives here; precedence is flag > file > default.
struct AppConfig {
    RecorderConfig recorder;
    EgoNoiseModel ego_noise;
    SpeechSurrogateConfig speech;
    FilterParams filter;
    double block_s = 4.0;
    int processing_rate = 8000;  // capture is downsampled to this before processing
    std::vector<double> grid = SweepConfig::default_grid();
    std::string serve_host = "127.0.0.1";
    int serve_port = 5705;

    StftConfig stft_at(int rate) const { return StftConfig::for_rate(rate); }
};

/// Defaults overlaid with the optional JSON file; unknown keys rejected.
AppConfig load_app_config(const std::optional<std::filesystem::path>& file);

/// "a:step:b" inclusive; throws on malformed input or zero step.
std::vector<double> parse_grid(const std::string& text);

/// Resolves a data file: an existing path wins, otherwise it is looked up
/// under $DRONE_AUDITION_DATA (default ./data).
std::filesystem::path resolve_data_path(const std::string& name);

std::filesystem::path data_dir();

}  // namespace droneaudio
