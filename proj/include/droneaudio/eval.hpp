#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "droneaudio/audio_buffer.hpp"
#include "droneaudio/spatial.hpp"
#include "droneaudio/stft.hpp"

namespace droneaudio {

/// 10*log10(sum s^2 / sum v^2) over all samples and channels. Zero noise
/// energy returns +infinity, zero speech -infinity; reports floor at +/-120.
double snr_db(const AudioBuffer& speech, const AudioBuffer& noise);

struct BlockSnr {
    double mean_db = 0.0;                // arithmetic mean of the per-block dB values
    std::vector<double> per_block_db;
    int excluded_blocks = 0;             // silent-speech blocks left out of the mean
};

BlockSnr block_output_snr(const AudioBuffer& shadow_speech, const AudioBuffer& shadow_noise,
                          const BlockPlan& plan);

struct SnrPoint {
    double input_snr_db = 0.0;
    std::string method;
    double output_snr_db = 0.0;
    std::vector<double> per_block_db;
    int excluded_blocks = 0;
    bool failed = false;
    std::string error;
};

struct SweepConfig {
    std::vector<double> grid;  // input SNRs in dB
    std::vector<EnhanceMethod> methods;
    StftConfig stft;
    FilterParams filter;
    double block_s = 4.0;

    static std::vector<double> default_grid();  // -35..0 dB step 5
};

struct SweepResult {
    std::vector<SnrPoint> points;
    std::string config_snapshot;  // JSON text of seeds and filter parameters
};

/// For each grid point and method: mix at the target SNR, run the block-wise
/// enhancer, evaluate the shadow components per block. Per-point failures are
/// flagged, never fatal.
SweepResult sweep(const AudioBuffer& speech, const AudioBuffer& noise, const SweepConfig& config);

/// columns: input_snr_db,method,output_snr_db,block_index,block_snr_db
/// ordered by input asc, method name asc, block asc. Byte-deterministic.
void emit_csv(const SweepResult& result, const std::filesystem::path& path);

/// Per-method mean output SNR and mean improvement over the grid.
void emit_summary_json(const SweepResult& result, const std::filesystem::path& path);

}  // namespace droneaudio
