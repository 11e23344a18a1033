#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "droneaudio/recorder.hpp"

namespace droneaudio {

std::string sha256_hex_file(const std::filesystem::path& path);

nlohmann::json status_to_json(const StatusSnapshot& status);

struct ControlServiceConfig {
    std::string bind_host = "127.0.0.1";
    int port = 0;  // 0 picks an ephemeral port
    std::filesystem::path output_dir = ".";
    double monitor_interval_s = 1.0;
    RecorderConfig recorder_defaults;
    std::uint64_t default_seed = 1;
};

/// Remote start/stop/progress/download over newline-delimited JSON.
/// Requests: {"verb": "START|STOP|STATUS|LIST|FETCH", "args": {...}}.
/// Responses: {"ok": true, "data": {...}} or {"ok": false, "error": "..."}.
/// STATUS with {"monitor": true} streams one report per interval and ends
/// with the terminal report once the session closes. FETCH answers with
/// {"size", "sha256"} then exactly size raw bytes.
///
/// Clients may connect, vanish, and reconnect freely; the recorder never
/// notices. START/STOP are serialized; STATUS never touches the producer.
class ControlService {
  public:
    ControlService(Recorder& recorder, ControlServiceConfig config);
    ~ControlService();
    ControlService(const ControlService&) = delete;
    ControlService& operator=(const ControlService&) = delete;

    /// Binds and starts accepting. Throws on bind failure.
    void start();
    void stop();
    int port() const { return port_; }

    /// Protocol logic for one request, independent of any socket. When the
    /// request is a valid FETCH, fetch_path receives the file to stream.
    nlohmann::json handle(const nlohmann::json& request, std::filesystem::path* fetch_path);

  private:
    void accept_loop();
    void serve_connection(int fd);
    bool send_all(int fd, const void* data, std::size_t size);
    bool send_line(int fd, const nlohmann::json& message);

    nlohmann::json cmd_start(const nlohmann::json& args);
    nlohmann::json cmd_stop();
    nlohmann::json cmd_status();
    nlohmann::json cmd_list();
    nlohmann::json cmd_fetch(const nlohmann::json& args, std::filesystem::path* fetch_path);

    Recorder& recorder_;
    ControlServiceConfig config_;
    int listen_fd_ = -1;
    int port_ = 0;
    std::atomic<bool> shutdown_{false};
    std::thread accept_thread_;
    std::mutex clients_mutex_;
    std::vector<std::pair<int, std::thread>> clients_;
    std::mutex command_mutex_;  // one mutating command at a time
};

}  // namespace droneaudio
