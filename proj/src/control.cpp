#include "droneaudio/control.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <openssl/evp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "droneaudio/synth.hpp"
#include "droneaudio/wav.hpp"

namespace droneaudio {

std::string sha256_hex_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for hashing: " + path.string());

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);

    char buf[65536];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

nlohmann::json status_to_json(const StatusSnapshot& status) {
    const char* state = "Idle";
    if (status.state == SessionState::Recording) state = "Recording";
    if (status.state == SessionState::Closed) state = "Closed";
    return {
        {"state", state},
        {"current_path", status.path.string()},
        {"frames_written", status.frames_written},
        {"frames_dropped", status.frames_dropped},
        {"elapsed_s", status.elapsed_s},
        {"file_size_bytes", status.file_size_bytes},
        {"io_error", status.io_error},
    };
}

namespace {

nlohmann::json error_response(const std::string& message) {
    return {{"ok", false}, {"error", message}};
}

nlohmann::json ok_response(nlohmann::json data) {
    return {{"ok", true}, {"data", std::move(data)}};
}

}  // namespace

ControlService::ControlService(Recorder& recorder, ControlServiceConfig config)
    : recorder_(recorder), config_(std::move(config)) {}

ControlService::~ControlService() { stop(); }

void ControlService::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(config_.port));
    if (::inet_pton(AF_INET, config_.bind_host.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("invalid bind address: " + config_.bind_host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
        ::listen(listen_fd_, 8) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("cannot bind " + config_.bind_host + ":" +
                                 std::to_string(config_.port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    shutdown_.store(false);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void ControlService::stop() {
    if (listen_fd_ < 0 && !accept_thread_.joinable()) return;
    shutdown_.store(true);
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::pair<int, std::thread>> clients;
    {
        std::lock_guard lock(clients_mutex_);
        clients.swap(clients_);
    }
    for (auto& [fd, thread] : clients) {
        ::shutdown(fd, SHUT_RDWR);
        if (thread.joinable()) thread.join();
        ::close(fd);
    }
}

void ControlService::accept_loop() {
    while (!shutdown_.load()) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (shutdown_.load()) break;
            continue;
        }
        std::lock_guard lock(clients_mutex_);
        clients_.emplace_back(fd, std::thread([this, fd] { serve_connection(fd); }));
    }
}

bool ControlService::send_all(int fd, const void* data, std::size_t size) {
    const char* p = static_cast<const char*>(data);
    while (size > 0) {
        const ssize_t sent = ::send(fd, p, size, MSG_NOSIGNAL);
        if (sent <= 0) return false;
        p += sent;
        size -= static_cast<std::size_t>(sent);
    }
    return true;
}

bool ControlService::send_line(int fd, const nlohmann::json& message) {
    const std::string line = message.dump() + "\n";
    return send_all(fd, line.data(), line.size());
}

void ControlService::serve_connection(int fd) {
    std::string pending;
    char buf[4096];
    while (!shutdown_.load()) {
        const std::size_t newline = pending.find('\n');
        if (newline == std::string::npos) {
            const ssize_t got = ::recv(fd, buf, sizeof buf, 0);
            if (got <= 0) break;  // client gone; recording is unaffected
            pending.append(buf, static_cast<std::size_t>(got));
            continue;
        }
        const std::string line = pending.substr(0, newline);
        pending.erase(0, newline + 1);
        if (line.empty()) continue;

        nlohmann::json request = nlohmann::json::parse(line, nullptr, false);
        if (request.is_discarded()) {
            if (!send_line(fd, error_response("malformed JSON"))) break;
            continue;
        }

        // Monitor mode streams reports until the session leaves Recording.
        const auto& args = request.contains("args") ? request["args"] : nlohmann::json::object();
        if (request.value("verb", "") == "STATUS" && args.value("monitor", false)) {
            const double interval = args.value("interval_s", config_.monitor_interval_s);
            bool alive = true;
            while (alive && !shutdown_.load()) {
                const StatusSnapshot status = recorder_.status();
                alive = send_line(fd, ok_response(status_to_json(status)));
                if (status.state != SessionState::Recording) break;  // terminal report sent
                std::this_thread::sleep_for(std::chrono::duration<double>(interval));
            }
            break;  // end of stream
        }

        std::filesystem::path fetch_path;
        const nlohmann::json response = handle(request, &fetch_path);
        if (!send_line(fd, response)) break;
        if (!fetch_path.empty()) {
            std::ifstream in(fetch_path, std::ios::binary);
            bool alive = true;
            while (in && alive) {
                in.read(buf, sizeof buf);
                if (in.gcount() > 0)
                    alive = send_all(fd, buf, static_cast<std::size_t>(in.gcount()));
            }
            if (!alive) break;
        }
    }
    ::close(fd);
}

nlohmann::json ControlService::handle(const nlohmann::json& request,
                                      std::filesystem::path* fetch_path) {
    if (!request.is_object() || !request.contains("verb") || !request["verb"].is_string())
        return error_response("request must be {\"verb\": ..., \"args\": {...}}");
    const std::string verb = request["verb"];
    const nlohmann::json args =
        request.contains("args") ? request["args"] : nlohmann::json::object();

    try {
        if (verb == "START") {
            std::lock_guard lock(command_mutex_);
            return cmd_start(args);
        }
        if (verb == "STOP") {
            std::lock_guard lock(command_mutex_);
            return cmd_stop();
        }
        if (verb == "STATUS") return cmd_status();
        if (verb == "LIST") return cmd_list();
        if (verb == "FETCH") return cmd_fetch(args, fetch_path);
    } catch (const std::exception& e) {
        return error_response(e.what());
    }
    return error_response("unknown verb: " + verb);
}

nlohmann::json ControlService::cmd_start(const nlohmann::json& args) {
    if (recorder_.recording()) return error_response("already recording");

    RecorderConfig config = config_.recorder_defaults;
    config.output_dir = config_.output_dir;
    config.channels = args.value("channels", config.channels);
    config.sample_rate = args.value("sample_rate", config.sample_rate);
    config.block_frames = args.value("block_frames", config.block_frames);
    config.queue_capacity_bytes = args.value("queue_capacity_bytes", config.queue_capacity_bytes);
    config.base_filename = args.value("base_filename", config.base_filename);

    const std::string source_kind = args.value("source", "synth");
    const double duration_s = args.value("duration_s", 5.0);
    const std::uint64_t seed = args.value("seed", config_.default_seed);
    const std::string pacing_name = args.value("pacing", "realtime");
    const Pacing pacing = pacing_name == "throttled" ? Pacing::Throttled : Pacing::Realtime;

    std::unique_ptr<AudioSource> source;
    if (source_kind == "synth") {
        EgoNoiseModel model;
        model.channels = config.channels;
        model.seed = seed;
        source = std::make_unique<BufferSource>(
            synth_ego_noise(model, duration_s, config.sample_rate));
    } else if (source_kind == "file") {
        if (!args.contains("source_path")) return error_response("file source needs source_path");
        AudioBuffer buffer = read_wav(args["source_path"].get<std::string>());
        config.channels = static_cast<int>(buffer.channel_count());
        config.sample_rate = buffer.sample_rate;
        source = std::make_unique<BufferSource>(std::move(buffer));
    } else {
        return error_response("unknown source: " + source_kind);
    }

    const StatusSnapshot status = recorder_.start(config, std::move(source), pacing);
    return ok_response(status_to_json(status));
}

nlohmann::json ControlService::cmd_stop() {
    if (!recorder_.recording()) return error_response("not recording");
    return ok_response(status_to_json(recorder_.stop()));
}

nlohmann::json ControlService::cmd_status() {
    return ok_response(status_to_json(recorder_.status()));
}

nlohmann::json ControlService::cmd_list() {
    nlohmann::json files = nlohmann::json::array();
    std::vector<std::filesystem::directory_entry> entries;
    for (const auto& entry : std::filesystem::directory_iterator(config_.output_dir))
        if (entry.is_regular_file()) entries.push_back(entry);
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    for (const auto& entry : entries)
        files.push_back({{"name", entry.path().filename().string()},
                         {"size", entry.file_size()}});
    return ok_response({{"files", files}});
}

nlohmann::json ControlService::cmd_fetch(const nlohmann::json& args,
                                         std::filesystem::path* fetch_path) {
    if (!args.contains("file")) return error_response("FETCH needs a file argument");
    const std::string name = args["file"].get<std::string>();
    if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
        return error_response("invalid filename");
    const std::filesystem::path path = config_.output_dir / name;
    if (!std::filesystem::is_regular_file(path)) return error_response("no such file: " + name);

    const StatusSnapshot status = recorder_.status();
    if (status.state == SessionState::Recording && status.path == path)
        return error_response("file is currently being recorded");

    const std::uint64_t size = std::filesystem::file_size(path);
    const std::string digest = sha256_hex_file(path);
    if (fetch_path) *fetch_path = path;
    return ok_response({{"size", size}, {"sha256", digest}});
}

}  // namespace droneaudio
