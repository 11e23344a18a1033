#include "droneaudio/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "droneaudio/synth.hpp"

namespace droneaudio {

namespace {

constexpr double kReportFloorDb = 120.0;

double ratio_db(double speech_energy, double noise_energy) {
    if (noise_energy <= 0.0) return std::numeric_limits<double>::infinity();
    if (speech_energy <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(speech_energy / noise_energy);
}

double clamp_report(double db) {
    return std::clamp(db, -kReportFloorDb, kReportFloorDb);
}

double segment_energy(const AudioBuffer& b, std::size_t start, std::size_t end) {
    double e = 0.0;
    for (const auto& ch : b.channels)
        for (std::size_t i = start; i < end; ++i) e += ch[i] * ch[i];
    return e;
}

}  // namespace

double snr_db(const AudioBuffer& speech, const AudioBuffer& noise) {
    if (speech.channel_count() != noise.channel_count() || speech.frames() != noise.frames())
        throw std::invalid_argument("snr_db: shape mismatch");
    return ratio_db(total_energy(speech), total_energy(noise));
}

BlockSnr block_output_snr(const AudioBuffer& shadow_speech, const AudioBuffer& shadow_noise,
                          const BlockPlan& plan) {
    if (shadow_speech.frames() != shadow_noise.frames())
        throw std::invalid_argument("block_output_snr: shadows not aligned");
    if (plan.blocks.empty()) throw std::invalid_argument("block_output_snr: empty plan");
    if (plan.covered_samples() > shadow_speech.frames())
        throw std::invalid_argument("block_output_snr: plan exceeds shadow length");

    BlockSnr out;
    double sum = 0.0;
    std::size_t counted = 0;
    for (const auto& [start, end] : plan.blocks) {
        const double es = segment_energy(shadow_speech, start, end);
        const double ev = segment_energy(shadow_noise, start, end);
        if (es <= 0.0) {  // silent block: excluded from the mean
            ++out.excluded_blocks;
            out.per_block_db.push_back(-kReportFloorDb);
            continue;
        }
        const double db = clamp_report(ratio_db(es, ev));
        out.per_block_db.push_back(db);
        sum += db;
        ++counted;
    }
    out.mean_db = counted > 0 ? sum / static_cast<double>(counted) : -kReportFloorDb;
    return out;
}

std::vector<double> SweepConfig::default_grid() {
    std::vector<double> g;
    for (double v = -35.0; v <= 0.0 + 1e-9; v += 5.0) g.push_back(v);
    return g;
}

SweepResult sweep(const AudioBuffer& speech, const AudioBuffer& noise, const SweepConfig& config) {
    if (config.grid.empty()) throw std::invalid_argument("sweep: empty grid");
    if (config.methods.empty()) throw std::invalid_argument("sweep: no methods");

    SweepResult result;
    {
        nlohmann::json snapshot;
        snapshot["seed"] = config.filter.seed;
        snapshot["loading"] = config.filter.loading;
        snapshot["bss_iterations"] = config.filter.bss_iterations;
        snapshot["reference_channel"] = config.filter.reference_channel;
        snapshot["block_s"] = config.block_s;
        snapshot["stft_window"] = config.stft.window_length;
        snapshot["stft_hop"] = config.stft.hop;
        result.config_snapshot = snapshot.dump();
    }

    for (double input_snr : config.grid) {
        Mix mix;
        bool mixed = false;
        std::string mix_error;
        try {
            MixSpec spec;
            spec.input_snr_db = input_snr;
            mix = mix_at_snr(speech, noise, spec);
            mixed = true;
        } catch (const std::exception& e) {
            mix_error = e.what();
        }

        for (EnhanceMethod method : config.methods) {
            SnrPoint point;
            point.input_snr_db = input_snr;
            point.method = method_name(method);
            if (!mixed) {
                point.failed = true;
                point.error = mix_error;
                result.points.push_back(std::move(point));
                continue;
            }
            try {
                const BlockPlan plan =
                    BlockPlan::make(mix.mixture.frames(), mix.mixture.sample_rate, config.block_s);
                const EnhanceResult enh =
                    blockwise_enhance(mix.mixture, mix.speech, mix.noise, method, plan,
                                      config.stft, config.filter);
                const BlockSnr block = block_output_snr(enh.shadow_speech, enh.shadow_noise, plan);
                point.output_snr_db = block.mean_db;
                point.per_block_db = block.per_block_db;
                point.excluded_blocks = block.excluded_blocks;
            } catch (const std::exception& e) {
                point.failed = true;
                point.error = e.what();
            }
            result.points.push_back(std::move(point));
        }
    }
    return result;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
    if (result.points.empty()) throw std::invalid_argument("emit_csv: empty sweep result");

    std::vector<const SnrPoint*> ordered;
    ordered.reserve(result.points.size());
    for (const auto& p : result.points) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const SnrPoint* a, const SnrPoint* b) {
        if (a->input_snr_db != b->input_snr_db) return a->input_snr_db < b->input_snr_db;
        return a->method < b->method;
    });

    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write CSV: " + path.string());
    std::fprintf(f, "input_snr_db,method,output_snr_db,block_index,block_snr_db\n");
    for (const SnrPoint* p : ordered) {
        if (p->failed) continue;
        for (std::size_t b = 0; b < p->per_block_db.size(); ++b)
            std::fprintf(f, "%.6f,%s,%.6f,%zu,%.6f\n", p->input_snr_db, p->method.c_str(),
                         p->output_snr_db, b, p->per_block_db[b]);
    }
    std::fclose(f);
}

void emit_summary_json(const SweepResult& result, const std::filesystem::path& path) {
    if (result.points.empty()) throw std::invalid_argument("emit_summary_json: empty sweep result");

    std::map<std::string, std::vector<const SnrPoint*>> by_method;
    for (const auto& p : result.points)
        if (!p.failed) by_method[p.method].push_back(&p);

    nlohmann::json summary;
    summary["config"] = nlohmann::json::parse(result.config_snapshot);
    for (const auto& [method, points] : by_method) {
        double improvement = 0.0, output = 0.0;
        for (const SnrPoint* p : points) {
            improvement += p->output_snr_db - p->input_snr_db;
            output += p->output_snr_db;
        }
        const auto n = static_cast<double>(points.size());
        nlohmann::json m;
        m["points"] = points.size();
        m["mean_output_snr_db"] = output / n;
        m["mean_improvement_db"] = improvement / n;
        summary["methods"][method] = m;
    }
    int failed = 0;
    for (const auto& p : result.points) failed += p.failed ? 1 : 0;
    summary["failed_points"] = failed;

    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write summary: " + path.string());
    const std::string text = summary.dump(2);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fputc('\n', f);
    std::fclose(f);
}

}  // namespace droneaudio
