#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "droneaudio/audio_buffer.hpp"
#include "droneaudio/stft.hpp"

namespace droneaudio {

/// Non-overlapping equal-length processing blocks; a trailing partial block
/// is discarded.
struct BlockPlan {
    double block_s = 4.0;
    std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [start, end) sample ranges

    static BlockPlan make(std::size_t total_samples, int sample_rate, double block_s = 4.0);
    std::size_t covered_samples() const {
        return blocks.empty() ? 0 : blocks.back().second;
    }
};

/// Per-bin Hermitian target/noise correlation matrices.
struct CovarianceSet {
    std::vector<Eigen::MatrixXcd> Rss;
    std::vector<Eigen::MatrixXcd> Rvv;
    std::size_t frame_count = 0;
    bool low_rank = false;  // fewer frames than channels; loading still makes it usable
};

struct BeamformerWeights {
    std::vector<Eigen::VectorXcd> w;  // per bin
    int reference_channel = 0;
};

/// Per-bin demixing with the post-alignment output choice and
/// minimal-distortion rescaling.
struct DemixingSet {
    std::vector<Eigen::MatrixXcd> demix;          // per bin, M x M
    std::vector<int> selected;                    // per bin output index
    std::vector<std::complex<double>> rescale;    // per bin
    bool converged = true;
    bool aligned = false;
};

/// Rss(f) = (1/T) sum_t S(f,t) S(f,t)^H over the spectrogram's frames,
/// Rvv likewise from the noise spectrogram.
CovarianceSet estimate_covariances(const Spectrogram& speech_spec, const Spectrogram& noise_spec);

/// w(f) = (Rss + Rvv + delta*(tr(Rvv)/M)*I)^-1 Rss e_ref. Singular systems
/// escalate the loading x10 up to three times. When the noise covariance is
/// identically zero the loading falls back to tr(Rss+Rvv)/M so the
/// noise-free limit stays solvable.
BeamformerWeights mwf_weights(const CovarianceSet& cov, int reference_channel,
                              double loading = 1e-3);

/// Y(f,t) = w(f)^H X(f,t); single-channel output spectrogram.
Spectrogram apply_weights(const BeamformerWeights& weights, const Spectrogram& spec);

/// Per-bin complex ICA: whitening then natural-gradient updates with the
/// circular super-Gaussian contrast. Deterministic given the seed.
DemixingSet bss_separate(const Spectrogram& mixture_spec, int iterations = 200,
                         std::uint64_t seed = 1);

/// Resolves the per-bin permutation against the speech-only spectrogram
/// (envelope correlation at the reference channel) and applies
/// minimal-distortion rescaling via the demixing inverse.
void oracle_permutation_align(DemixingSet& demix, const Spectrogram& mixture_spec,
                              const Spectrogram& oracle_speech_spec, int reference_channel);

/// Selected, rescaled output; requires an aligned DemixingSet.
Spectrogram apply_demixing(const DemixingSet& demix, const Spectrogram& spec);

enum class EnhanceMethod { Mwf, Bss, Unprocessed };

std::string method_name(EnhanceMethod m);

struct FilterParams {
    double loading = 1e-3;
    int bss_iterations = 200;
    std::uint64_t seed = 1;
    int reference_channel = 0;
};

struct EnhanceResult {
    AudioBuffer enhanced;       // single channel, plan.covered_samples() long
    AudioBuffer shadow_speech;  // same filter applied to the clean speech
    AudioBuffer shadow_noise;   // same filter applied to the clean noise
    int blocks_processed = 0;
    int blocks_skipped = 0;
};

/// Fits the chosen filter independently on each block (oracle covariances
/// for MWF; BSS + oracle alignment for BSS), applies it identically to the
/// mixture and to both clean components, and concatenates the ISTFT per
/// block. Unprocessed = reference-channel passthrough.
EnhanceResult blockwise_enhance(const AudioBuffer& mixture, const AudioBuffer& oracle_speech,
                                const AudioBuffer& oracle_noise, EnhanceMethod method,
                                const BlockPlan& plan, const StftConfig& stft_config,
                                const FilterParams& params = {});

}  // namespace droneaudio
