#include "droneaudio/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace droneaudio {

namespace {

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& section) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key))
            throw std::runtime_error("config: unknown key \"" + key + "\" in " + section);
}

void apply_recorder(const nlohmann::json& j, RecorderConfig& c) {
    check_keys(j, {"channels", "sample_rate", "block_frames", "queue_capacity_bytes",
                   "output_dir", "base_filename"},
               "recorder");
    c.channels = j.value("channels", c.channels);
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.block_frames = j.value("block_frames", c.block_frames);
    c.queue_capacity_bytes = j.value("queue_capacity_bytes", c.queue_capacity_bytes);
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    c.base_filename = j.value("base_filename", c.base_filename);
}

void apply_ego_noise(const nlohmann::json& j, EgoNoiseModel& m) {
    check_keys(j,
               {"rotor_fundamentals_hz", "harmonic_count", "harmonic_rolloff_db",
                "broadband_floor_db", "pitch_drift_hz_per_s", "pitch_drift_bound_hz", "channels",
                "channel_gain_spread", "output_rms", "seed"},
               "ego_noise");
    if (j.contains("rotor_fundamentals_hz"))
        m.rotor_fundamentals_hz = j["rotor_fundamentals_hz"].get<std::vector<double>>();
    m.harmonic_count = j.value("harmonic_count", m.harmonic_count);
    m.harmonic_rolloff_db = j.value("harmonic_rolloff_db", m.harmonic_rolloff_db);
    m.broadband_floor_db = j.value("broadband_floor_db", m.broadband_floor_db);
    m.pitch_drift_hz_per_s = j.value("pitch_drift_hz_per_s", m.pitch_drift_hz_per_s);
    m.pitch_drift_bound_hz = j.value("pitch_drift_bound_hz", m.pitch_drift_bound_hz);
    m.channels = j.value("channels", m.channels);
    m.channel_gain_spread = j.value("channel_gain_spread", m.channel_gain_spread);
    m.output_rms = j.value("output_rms", m.output_rms);
    m.seed = j.value("seed", m.seed);
}

void apply_speech(const nlohmann::json& j, SpeechSurrogateConfig& c) {
    check_keys(j,
               {"band_low_hz", "band_high_hz", "syllable_s", "silence_prob", "max_delay_samples",
                "output_rms", "seed"},
               "speech");
    c.band_low_hz = j.value("band_low_hz", c.band_low_hz);
    c.band_high_hz = j.value("band_high_hz", c.band_high_hz);
    c.syllable_s = j.value("syllable_s", c.syllable_s);
    c.silence_prob = j.value("silence_prob", c.silence_prob);
    c.max_delay_samples = j.value("max_delay_samples", c.max_delay_samples);
    c.output_rms = j.value("output_rms", c.output_rms);
    c.seed = j.value("seed", c.seed);
}

void apply_filter(const nlohmann::json& j, FilterParams& f) {
    check_keys(j, {"loading", "bss_iterations", "seed", "reference_channel"}, "filter");
    f.loading = j.value("loading", f.loading);
    f.bss_iterations = j.value("bss_iterations", f.bss_iterations);
    f.seed = j.value("seed", f.seed);
    f.reference_channel = j.value("reference_channel", f.reference_channel);
}

}  // namespace

AppConfig load_app_config(const std::optional<std::filesystem::path>& file) {
    AppConfig config;
    if (!file) return config;

    std::ifstream in(*file);
    if (!in) throw std::runtime_error("cannot open config: " + file->string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + file->string() + ": " + e.what());
    }

    check_keys(j, {"recorder", "ego_noise", "speech", "filter", "eval", "serve"}, "top level");
    if (j.contains("recorder")) apply_recorder(j["recorder"], config.recorder);
    if (j.contains("ego_noise")) apply_ego_noise(j["ego_noise"], config.ego_noise);
    if (j.contains("speech")) apply_speech(j["speech"], config.speech);
    if (j.contains("filter")) apply_filter(j["filter"], config.filter);
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        check_keys(e, {"block_s", "processing_rate", "grid"}, "eval");
        config.block_s = e.value("block_s", config.block_s);
        config.processing_rate = e.value("processing_rate", config.processing_rate);
        if (e.contains("grid")) {
            if (e["grid"].is_string())
                config.grid = parse_grid(e["grid"].get<std::string>());
            else
                config.grid = e["grid"].get<std::vector<double>>();
        }
    }
    if (j.contains("serve")) {
        const auto& s = j["serve"];
        check_keys(s, {"host", "port"}, "serve");
        config.serve_host = s.value("host", config.serve_host);
        config.serve_port = s.value("port", config.serve_port);
    }
    return config;
}

std::vector<double> parse_grid(const std::string& text) {
    const auto first = text.find(':');
    const auto second = text.find(':', first == std::string::npos ? first : first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw std::invalid_argument("grid must be a:step:b, got \"" + text + "\"");
    double a, step, b;
    try {
        std::size_t used = 0;
        a = std::stod(text.substr(0, first), &used);
        if (used != first) throw std::invalid_argument("");
        const std::string mid = text.substr(first + 1, second - first - 1);
        step = std::stod(mid, &used);
        if (used != mid.size()) throw std::invalid_argument("");
        const std::string last = text.substr(second + 1);
        b = std::stod(last, &used);
        if (used != last.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw std::invalid_argument("grid must be a:step:b, got \"" + text + "\"");
    }
    if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
    if (b < a) throw std::invalid_argument("grid end below start");

    std::vector<double> grid;
    for (double v = a; v <= b + 1e-9; v += step) grid.push_back(v);
    return grid;
}

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("DRONE_AUDITION_DATA")) return env;
    return "data";
}

std::filesystem::path resolve_data_path(const std::string& name) {
    if (std::filesystem::exists(name)) return name;
    const auto candidate = data_dir() / name;
    if (std::filesystem::exists(candidate)) return candidate;
    throw std::runtime_error("cannot find \"" + name + "\" (also looked in " +
                             data_dir().string() + ")");
}

}  // namespace droneaudio
