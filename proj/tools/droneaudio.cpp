// droneaudio: multichannel drone-audio capture, analysis, and enhancement
// front end. Subcommands: record, serve, analyze, synth, mix, enhance,
// eval, fetch.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "droneaudio/analysis.hpp"
#include "droneaudio/config.hpp"
#include "droneaudio/control.hpp"
#include "droneaudio/eval.hpp"
#include "droneaudio/recorder.hpp"
#include "droneaudio/resample.hpp"
#include "droneaudio/spatial.hpp"
#include "droneaudio/stft.hpp"
#include "droneaudio/synth.hpp"
#include "droneaudio/wav.hpp"

namespace {

using namespace droneaudio;

std::atomic<bool> g_terminate{false};

void handle_signal(int) { g_terminate.store(true); }

struct GlobalOptions {
    std::optional<std::filesystem::path> config_file;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
    bool json_errors = false;
};

AppConfig resolve_config(const GlobalOptions& global) {
    AppConfig config = load_app_config(global.config_file);
    if (global.seed) {
        // One seed drives all deterministic components, offset per role.
        config.ego_noise.seed = *global.seed;
        config.speech.seed = *global.seed + 1000003;
        config.filter.seed = *global.seed + 2000003;
    }
    return config;
}

AudioBuffer load_at_rate(const std::string& name, int rate) {
    AudioBuffer buffer = read_wav(resolve_data_path(name));
    if (buffer.sample_rate != rate) buffer = resample(buffer, rate);
    return buffer;
}

std::vector<EnhanceMethod> parse_methods(const std::string& text) {
    if (text == "all") return {EnhanceMethod::Mwf, EnhanceMethod::Bss};
    std::vector<EnhanceMethod> methods;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma - pos);
        if (item == "mwf")
            methods.push_back(EnhanceMethod::Mwf);
        else if (item == "bss")
            methods.push_back(EnhanceMethod::Bss);
        else if (item == "unprocessed")
            methods.push_back(EnhanceMethod::Unprocessed);
        else
            throw std::invalid_argument("unknown method: " + item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return methods;
}

int cmd_record(const GlobalOptions& global, const std::string& source_kind,
               const std::string& input, double duration_s, bool realtime) {
    AppConfig config = resolve_config(global);
    RecorderConfig rec = config.recorder;
    rec.output_dir = global.out_dir;

    std::unique_ptr<AudioSource> source;
    if (source_kind == "synth") {
        EgoNoiseModel model = config.ego_noise;
        model.channels = rec.channels;
        source = std::make_unique<BufferSource>(
            synth_ego_noise(model, duration_s, rec.sample_rate));
    } else if (source_kind == "file") {
        AudioBuffer buffer = read_wav(resolve_data_path(input));
        rec.channels = static_cast<int>(buffer.channel_count());
        rec.sample_rate = buffer.sample_rate;
        const auto want = static_cast<std::size_t>(duration_s * buffer.sample_rate);
        if (duration_s > 0 && buffer.frames() > want)
            for (auto& ch : buffer.channels) ch.resize(want);
        else if (duration_s > 0 && buffer.frames() < want)
            std::fprintf(stderr, "note: source is %.2f s, shorter than requested %.2f s\n",
                         buffer.duration_s(), duration_s);
        source = std::make_unique<BufferSource>(std::move(buffer));
    } else {
        throw std::invalid_argument("--source must be synth or file");
    }

    Recorder recorder;
    recorder.start(rec, std::move(source), realtime ? Pacing::Realtime : Pacing::Throttled);
    const StatusSnapshot final_status = recorder.wait_until_done();
    std::cout << status_to_json(final_status).dump() << "\n";
    return final_status.io_error ? 1 : 0;
}

int cmd_serve(const GlobalOptions& global, const std::string& host, int port) {
    AppConfig config = resolve_config(global);

    Recorder recorder;
    ControlServiceConfig service_config;
    service_config.bind_host = host.empty() ? config.serve_host : host;
    service_config.port = port >= 0 ? port : config.serve_port;
    service_config.output_dir = global.out_dir;
    service_config.recorder_defaults = config.recorder;
    service_config.default_seed = config.ego_noise.seed;

    ControlService service(recorder, service_config);
    service.start();
    std::cout << nlohmann::json({{"listening", service_config.bind_host},
                                 {"port", service.port()}})
                     .dump()
              << std::endl;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_terminate.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));

    service.stop();
    if (recorder.recording()) recorder.stop();  // finalize the file before exit
    return 0;
}

int cmd_analyze(const GlobalOptions& global, const std::string& input, double t_start,
                double t_end, double spectrum_time, int channel) {
    AppConfig config = resolve_config(global);
    const AudioBuffer buffer = load_at_rate(input, config.processing_rate);
    const StftConfig stft_config = config.stft_at(buffer.sample_rate);

    const auto powers = frame_power_db(buffer, stft_config);
    if (t_end <= t_start) t_end = buffer.duration_s();
    const PowerStats stats = power_stats(powers, t_start, t_end);

    const Spectrogram spec = stft(buffer, stft_config);
    if (spectrum_time < 0.0) spectrum_time = buffer.duration_s() / 2.0;
    const auto spectrum = spectrum_at(spec, spectrum_time, channel);
    const auto fundamentals =
        estimate_fundamentals(spec, spec.nearest_frame(spectrum_time));

    std::filesystem::create_directories(global.out_dir);
    write_power_csv(global.out_dir / "power.csv", powers);
    write_spectrum_csv(global.out_dir / "spectrum.csv", spectrum);
    write_fundamentals_csv(global.out_dir / "fundamentals.csv", fundamentals);

    nlohmann::json report{{"mean_db", stats.mean_db},
                          {"std_db", stats.std_db},
                          {"frames", stats.frame_count},
                          {"t_start", t_start},
                          {"t_end", t_end},
                          {"fundamentals_hz", fundamentals}};
    std::cout << report.dump() << "\n";
    return 0;
}

int cmd_synth(const GlobalOptions& global, const std::string& kind, double duration_s, int rate,
              int channels, const std::string& out_name, bool moving) {
    AppConfig config = resolve_config(global);
    AudioBuffer buffer;
    if (kind == "ego") {
        EgoNoiseModel model = config.ego_noise;
        model.channels = channels;
        if (moving && model.pitch_drift_hz_per_s <= 0.0) model.pitch_drift_hz_per_s = 2.0;
        buffer = synth_ego_noise(model, duration_s, rate);
    } else if (kind == "speech") {
        buffer = synth_speech_surrogate(duration_s, rate, channels, config.speech);
    } else {
        throw std::invalid_argument("--kind must be ego or speech");
    }
    std::filesystem::create_directories(global.out_dir);
    const auto path = global.out_dir / out_name;
    std::uint64_t clipped = 0;
    const std::uint64_t frames = write_wav(buffer, path, &clipped);
    std::cout << nlohmann::json({{"path", path.string()},
                                 {"frames", frames},
                                 {"clipped_samples", clipped}})
                     .dump()
              << "\n";
    return 0;
}

int cmd_mix(const GlobalOptions& global, const std::string& speech_path,
            const std::string& noise_path, double snr_target, bool scale_speech) {
    AppConfig config = resolve_config(global);
    const AudioBuffer speech = load_at_rate(speech_path, config.processing_rate);
    const AudioBuffer noise = load_at_rate(noise_path, config.processing_rate);

    MixSpec spec;
    spec.input_snr_db = snr_target;
    spec.reference =
        scale_speech ? MixSpec::Reference::ScaleSpeech : MixSpec::Reference::ScaleNoise;
    const Mix mix = mix_at_snr(speech, noise, spec);

    std::filesystem::create_directories(global.out_dir);
    std::uint64_t clipped = 0;
    write_wav(mix.mixture, global.out_dir / "mixture.wav", &clipped);
    write_wav(mix.speech, global.out_dir / "speech_scaled.wav");
    write_wav(mix.noise, global.out_dir / "noise_scaled.wav");
    std::cout << nlohmann::json({{"measured_snr_db", snr_db(mix.speech, mix.noise)},
                                 {"clipped_samples", clipped}})
                     .dump()
              << "\n";
    return 0;
}

int cmd_enhance(const GlobalOptions& global, const std::string& mixture_path,
                const std::string& speech_path, const std::string& noise_path,
                const std::string& method_name_arg) {
    AppConfig config = resolve_config(global);
    const int rate = config.processing_rate;
    const AudioBuffer mixture = load_at_rate(mixture_path, rate);
    const AudioBuffer speech = load_at_rate(speech_path, rate);
    const AudioBuffer noise = load_at_rate(noise_path, rate);

    const auto methods = parse_methods(method_name_arg);
    if (methods.size() != 1) throw std::invalid_argument("enhance takes exactly one method");

    const BlockPlan plan = BlockPlan::make(mixture.frames(), rate, config.block_s);
    const EnhanceResult result = blockwise_enhance(mixture, speech, noise, methods[0], plan,
                                                   config.stft_at(rate), config.filter);
    const BlockSnr block = block_output_snr(result.shadow_speech, result.shadow_noise, plan);

    std::filesystem::create_directories(global.out_dir);
    write_wav(result.enhanced, global.out_dir / "enhanced.wav");
    std::cout << nlohmann::json({{"method", method_name(methods[0])},
                                 {"output_snr_db", block.mean_db},
                                 {"per_block_db", block.per_block_db},
                                 {"blocks", result.blocks_processed}})
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const GlobalOptions& global, const std::string& speech_arg,
             const std::string& noise_arg, const std::string& grid_arg,
             const std::string& methods_arg, double duration_s) {
    AppConfig config = resolve_config(global);
    const int rate = config.processing_rate;

    AudioBuffer speech, noise;
    if (speech_arg == "synth") {
        SpeechSurrogateConfig sc = config.speech;
        speech = synth_speech_surrogate(duration_s, rate, config.ego_noise.channels, sc);
    } else {
        speech = load_at_rate(speech_arg, rate);
    }
    if (noise_arg == "synth") {
        noise = synth_ego_noise(config.ego_noise, duration_s, rate);
    } else {
        noise = load_at_rate(noise_arg, rate);
    }

    SweepConfig sweep_config;
    sweep_config.grid = grid_arg.empty() ? config.grid : parse_grid(grid_arg);
    sweep_config.methods = parse_methods(methods_arg);
    sweep_config.stft = config.stft_at(rate);
    sweep_config.filter = config.filter;
    sweep_config.block_s = config.block_s;

    const SweepResult result = sweep(speech, noise, sweep_config);

    std::filesystem::create_directories(global.out_dir);
    emit_csv(result, global.out_dir / "sweep.csv");
    emit_summary_json(result, global.out_dir / "summary.json");

    std::ifstream summary(global.out_dir / "summary.json");
    std::cout << summary.rdbuf();
    return 0;
}

int cmd_fetch(const GlobalOptions& global, const std::string& host, int port,
              const std::string& file, const std::string& out_name) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw std::runtime_error("invalid host: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(fd);
        throw std::runtime_error("cannot connect to " + host + ":" + std::to_string(port));
    }

    const std::string request =
        nlohmann::json({{"verb", "FETCH"}, {"args", {{"file", file}}}}).dump() + "\n";
    if (::send(fd, request.data(), request.size(), MSG_NOSIGNAL) !=
        static_cast<ssize_t>(request.size())) {
        ::close(fd);
        throw std::runtime_error("send failed");
    }

    std::string line;
    char ch;
    while (::recv(fd, &ch, 1, 0) == 1 && ch != '\n') line.push_back(ch);
    const nlohmann::json response = nlohmann::json::parse(line);
    if (!response.value("ok", false)) {
        ::close(fd);
        throw std::runtime_error("server: " + response.value("error", "unknown error"));
    }
    const std::uint64_t size = response["data"]["size"];
    const std::string expected_sha = response["data"]["sha256"];

    std::filesystem::create_directories(global.out_dir);
    const auto out_path = global.out_dir / (out_name.empty() ? file : out_name);
    std::ofstream out(out_path, std::ios::binary);
    std::uint64_t received = 0;
    char buf[65536];
    while (received < size) {
        const ssize_t got =
            ::recv(fd, buf, std::min<std::uint64_t>(sizeof buf, size - received), 0);
        if (got <= 0) break;
        out.write(buf, got);
        received += static_cast<std::uint64_t>(got);
    }
    out.close();
    ::close(fd);
    if (received != size) throw std::runtime_error("transfer truncated");
    const std::string actual_sha = sha256_hex_file(out_path);
    if (actual_sha != expected_sha) throw std::runtime_error("checksum mismatch after transfer");

    std::cout << nlohmann::json({{"path", out_path.string()},
                                 {"size", size},
                                 {"sha256", actual_sha}})
                     .dump()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multichannel drone-audio recorder, analyzer, and enhancer"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_file, "JSON configuration file");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "seed for all deterministic components");
    app.add_option("--out", global.out_dir, "output directory");
    app.add_flag("--json", global.json_errors, "errors to stderr as single-line JSON");

    // record
    auto* record = app.add_subcommand("record", "run the capture pipeline to a WAV file");
    std::string rec_source = "synth", rec_input;
    double rec_duration = 5.0;
    bool rec_realtime = false;
    record->add_option("--source", rec_source, "synth | file");
    record->add_option("--input", rec_input, "input WAV for --source file");
    record->add_option("--duration", rec_duration, "seconds to record");
    record->add_flag("--realtime", rec_realtime,
                     "pace pushes at wall-clock rate (drops under overload)");

    // serve
    auto* serve = app.add_subcommand("serve", "run the remote-control service");
    std::string serve_host;
    int serve_port = -1;
    serve->add_option("--host", serve_host, "bind address");
    serve->add_option("--port", serve_port, "bind port (0 = ephemeral)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "power/spectrum/pitch analysis of a WAV");
    std::string ana_input;
    double ana_t_start = 0.0, ana_t_end = 0.0, ana_spectrum_time = -1.0;
    int ana_channel = 0;
    analyze->add_option("--input", ana_input, "WAV file (or name under $DRONE_AUDITION_DATA)")
        ->required();
    analyze->add_option("--t-start", ana_t_start, "stats range start (s)");
    analyze->add_option("--t-end", ana_t_end, "stats range end (s)");
    analyze->add_option("--spectrum-at", ana_spectrum_time, "spectrum/pitch time (s)");
    analyze->add_option("--channel", ana_channel, "channel for the spectrum CSV");

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize ego-noise or a speech surrogate");
    std::string syn_kind = "ego", syn_out = "synth.wav";
    double syn_duration = 25.0;
    int syn_rate = 8000, syn_channels = 8;
    bool syn_moving = false;
    synth->add_option("--kind", syn_kind, "ego | speech");
    synth->add_option("--duration", syn_duration, "seconds");
    synth->add_option("--rate", syn_rate, "sample rate");
    synth->add_option("--channels", syn_channels, "channel count");
    synth->add_option("--name", syn_out, "output filename");
    synth->add_flag("--moving", syn_moving, "moving regime (pitch drift) for ego noise");

    // mix
    auto* mix = app.add_subcommand("mix", "mix speech and noise at a target input SNR");
    std::string mix_speech, mix_noise;
    double mix_snr = 0.0;
    bool mix_scale_speech = false;
    mix->add_option("--speech", mix_speech)->required();
    mix->add_option("--noise", mix_noise)->required();
    mix->add_option("--snr", mix_snr, "target input SNR (dB)")->required();
    mix->add_flag("--scale-speech", mix_scale_speech, "scale speech instead of noise");

    // enhance
    auto* enhance = app.add_subcommand("enhance", "block-wise enhancement of a mixture");
    std::string enh_mixture, enh_speech, enh_noise, enh_method = "mwf";
    enhance->add_option("--mixture", enh_mixture)->required();
    enhance->add_option("--speech", enh_speech, "oracle speech-only WAV")->required();
    enhance->add_option("--noise", enh_noise, "oracle noise-only WAV")->required();
    enhance->add_option("--method", enh_method, "mwf | bss | unprocessed");

    // eval
    auto* eval = app.add_subcommand("eval", "input-SNR sweep benchmark");
    std::string eval_speech = "synth", eval_noise = "synth", eval_grid, eval_methods = "all";
    double eval_duration = 25.0;
    eval->add_option("--speech", eval_speech, "WAV path or \"synth\"");
    eval->add_option("--noise", eval_noise, "WAV path or \"synth\"");
    eval->add_option("--grid", eval_grid, "input SNR grid a:step:b (dB)");
    eval->add_option("--method", eval_methods, "mwf | bss | all | comma list");
    eval->add_option("--duration", eval_duration, "synthetic signal length (s)");

    // fetch
    auto* fetch = app.add_subcommand("fetch", "download a recording from a running service");
    std::string fetch_host = "127.0.0.1", fetch_file, fetch_out;
    int fetch_port = 5705;
    fetch->add_option("--host", fetch_host);
    fetch->add_option("--port", fetch_port);
    fetch->add_option("--file", fetch_file)->required();
    fetch->add_option("--name", fetch_out, "local filename (defaults to remote name)");

    CLI11_PARSE(app, argc, argv);
    if (!seed_opt->empty()) global.seed = seed_value;

    try {
        if (*record) return cmd_record(global, rec_source, rec_input, rec_duration, rec_realtime);
        if (*serve) return cmd_serve(global, serve_host, serve_port);
        if (*analyze)
            return cmd_analyze(global, ana_input, ana_t_start, ana_t_end, ana_spectrum_time,
                               ana_channel);
        if (*synth)
            return cmd_synth(global, syn_kind, syn_duration, syn_rate, syn_channels, syn_out,
                             syn_moving);
        if (*mix) return cmd_mix(global, mix_speech, mix_noise, mix_snr, mix_scale_speech);
        if (*enhance) return cmd_enhance(global, enh_mixture, enh_speech, enh_noise, enh_method);
        if (*eval)
            return cmd_eval(global, eval_speech, eval_noise, eval_grid, eval_methods,
                            eval_duration);
        if (*fetch) return cmd_fetch(global, fetch_host, fetch_port, fetch_file, fetch_out);
    } catch (const std::exception& e) {
        if (global.json_errors)
            std::cerr << nlohmann::json({{"error", e.what()}}).dump() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
