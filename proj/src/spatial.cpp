#include "droneaudio/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "droneaudio/rng.hpp"

namespace droneaudio {

namespace {

Eigen::MatrixXcd gather_bin(const Spectrogram& spec, std::size_t bin) {
    Eigen::MatrixXcd x(spec.num_channels, spec.num_frames);
    for (std::size_t c = 0; c < spec.num_channels; ++c)
        for (std::size_t t = 0; t < spec.num_frames; ++t) x(c, t) = spec.at(c, t, bin);
    return x;
}

Eigen::MatrixXcd hermitianized(const Eigen::MatrixXcd& a) {
    return 0.5 * (a + a.adjoint().eval());
}

Spectrogram single_channel_like(const Spectrogram& spec) {
    Spectrogram out;
    out.config = spec.config;
    out.num_channels = 1;
    out.num_frames = spec.num_frames;
    out.num_bins = spec.num_bins;
    out.signal_length = spec.signal_length;
    out.bins.assign(out.num_frames * out.num_bins, {0.0, 0.0});
    return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double ma = a.mean(), mb = b.mean();
    const Eigen::VectorXd da = a.array() - ma;
    const Eigen::VectorXd db = b.array() - mb;
    const double na = da.norm(), nb = db.norm();
    if (na <= 0.0 || nb <= 0.0) return -2.0;  // degenerate, never preferred
    return da.dot(db) / (na * nb);
}

}  // namespace

BlockPlan BlockPlan::make(std::size_t total_samples, int sample_rate, double block_s) {
    if (sample_rate <= 0 || block_s <= 0.0) throw std::invalid_argument("BlockPlan: invalid config");
    BlockPlan plan;
    plan.block_s = block_s;
    const auto block_len = static_cast<std::size_t>(std::llround(block_s * sample_rate));
    if (block_len == 0) throw std::invalid_argument("BlockPlan: empty block");
    for (std::size_t start = 0; start + block_len <= total_samples; start += block_len)
        plan.blocks.emplace_back(start, start + block_len);
    return plan;
}

std::string method_name(EnhanceMethod m) {
    switch (m) {
        case EnhanceMethod::Mwf: return "mwf";
        case EnhanceMethod::Bss: return "bss";
        case EnhanceMethod::Unprocessed: return "unprocessed";
    }
    return "?";
}

CovarianceSet estimate_covariances(const Spectrogram& speech_spec, const Spectrogram& noise_spec) {
    if (speech_spec.num_channels != noise_spec.num_channels ||
        speech_spec.num_frames != noise_spec.num_frames ||
        speech_spec.num_bins != noise_spec.num_bins)
        throw std::invalid_argument("estimate_covariances: spectrogram shape mismatch");
    const auto m = static_cast<Eigen::Index>(speech_spec.num_channels);
    const std::size_t frames = speech_spec.num_frames;
    if (frames == 0) throw std::invalid_argument("estimate_covariances: no frames");

    CovarianceSet cov;
    cov.frame_count = frames;
    cov.low_rank = frames < speech_spec.num_channels;
    cov.Rss.resize(speech_spec.num_bins);
    cov.Rvv.resize(speech_spec.num_bins);
    const double inv_t = 1.0 / static_cast<double>(frames);
    for (std::size_t f = 0; f < speech_spec.num_bins; ++f) {
        const Eigen::MatrixXcd s = gather_bin(speech_spec, f);
        const Eigen::MatrixXcd v = gather_bin(noise_spec, f);
        cov.Rss[f] = hermitianized((s * s.adjoint()) * inv_t);
        cov.Rvv[f] = hermitianized((v * v.adjoint()) * inv_t);
        (void)m;
    }
    return cov;
}

BeamformerWeights mwf_weights(const CovarianceSet& cov, int reference_channel, double loading) {
    if (cov.Rss.empty()) throw std::invalid_argument("mwf_weights: empty covariance set");
    const Eigen::Index m = cov.Rss[0].rows();
    if (reference_channel < 0 || reference_channel >= m)
        throw std::invalid_argument("mwf_weights: reference channel out of range");

    BeamformerWeights weights;
    weights.reference_channel = reference_channel;
    weights.w.resize(cov.Rss.size());

    for (std::size_t f = 0; f < cov.Rss.size(); ++f) {
        const Eigen::MatrixXcd& rss = cov.Rss[f];
        const Eigen::MatrixXcd& rvv = cov.Rvv[f];
        const Eigen::VectorXcd b = rss.col(reference_channel);

        if (rss.norm() == 0.0) {  // no target at this bin: total suppression
            weights.w[f] = Eigen::VectorXcd::Zero(m);
            continue;
        }

        double base = rvv.trace().real() / static_cast<double>(m);
        if (base <= 0.0) base = (rss + rvv).trace().real() / static_cast<double>(m);

        const Eigen::MatrixXcd a = rss + rvv;
        double delta = loading;
        bool solved = false;
        for (int attempt = 0; attempt <= 3; ++attempt) {
            const Eigen::MatrixXcd loaded =
                a + delta * base * Eigen::MatrixXcd::Identity(m, m);
            const Eigen::LDLT<Eigen::MatrixXcd> ldlt(loaded);
            if (ldlt.info() == Eigen::Success) {
                const Eigen::VectorXcd w = ldlt.solve(b);
                const double residual = (loaded * w - b).norm();
                if (w.allFinite() && residual <= 1e-8 * (b.norm() + 1e-300)) {
                    weights.w[f] = w;
                    solved = true;
                    break;
                }
            }
            delta *= 10.0;
        }
        if (!solved)
            throw std::runtime_error("mwf_weights: singular covariance at bin " +
                                     std::to_string(f) + " even after loading escalation");
    }
    return weights;
}

Spectrogram apply_weights(const BeamformerWeights& weights, const Spectrogram& spec) {
    if (weights.w.size() != spec.num_bins)
        throw std::invalid_argument("apply_weights: bin count mismatch");
    if (weights.w[0].size() != static_cast<Eigen::Index>(spec.num_channels))
        throw std::invalid_argument("apply_weights: channel count mismatch");

    Spectrogram out = single_channel_like(spec);
    const std::size_t m = spec.num_channels;
    for (std::size_t f = 0; f < spec.num_bins; ++f) {
        const Eigen::VectorXcd& w = weights.w[f];
        for (std::size_t t = 0; t < spec.num_frames; ++t) {
            std::complex<double> acc = 0.0;
            for (std::size_t c = 0; c < m; ++c) acc += std::conj(w(c)) * spec.at(c, t, f);
            out.at(0, t, f) = acc;
        }
    }
    return out;
}

DemixingSet bss_separate(const Spectrogram& mixture_spec, int iterations, std::uint64_t seed) {
    const auto m = static_cast<Eigen::Index>(mixture_spec.num_channels);
    if (m < 2) throw std::invalid_argument("bss_separate: need at least 2 channels");
    const std::size_t frames = mixture_spec.num_frames;
    if (frames == 0) throw std::invalid_argument("bss_separate: no frames");
    const double inv_t = 1.0 / static_cast<double>(frames);

    DemixingSet result;
    result.demix.resize(mixture_spec.num_bins);
    result.selected.assign(mixture_spec.num_bins, 0);
    result.rescale.assign(mixture_spec.num_bins, {1.0, 0.0});

    constexpr double kStep = 0.1;
    constexpr double kNonlinEps = 1e-12;
    const double tol = 1e-6 * static_cast<double>(m);

    for (std::size_t f = 0; f < mixture_spec.num_bins; ++f) {
        const Eigen::MatrixXcd x = gather_bin(mixture_spec, f);

        // Whitening from the regularized bin covariance.
        const Eigen::MatrixXcd c = hermitianized((x * x.adjoint()) * inv_t);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(c);
        const double lambda_max = std::max(eig.eigenvalues().maxCoeff(), 0.0);
        const double lambda_floor = std::max(lambda_max * 1e-9, 1e-300);
        Eigen::VectorXd inv_sqrt(m);
        for (Eigen::Index i = 0; i < m; ++i)
            inv_sqrt(i) = 1.0 / std::sqrt(std::max(eig.eigenvalues()(i), lambda_floor));
        const Eigen::MatrixXcd q = inv_sqrt.asDiagonal() * eig.eigenvectors().adjoint();
        const Eigen::MatrixXcd z = q * x;

        // Small seeded perturbation so symmetric starting points still break.
        Rng rng(seed + 0x9e3779b97f4a7c15ULL * (f + 1));
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Identity(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j)
                w(i, j) += 1e-3 * std::complex<double>(rng.normal(), rng.normal());

        // Natural gradient: W <- W + mu (I - E[phi(y) y^H]) W, phi(y) = y/|y|.
        const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(m, m);
        bool bin_converged = false;
        double mu = kStep;
        double prev_err = -1.0;
        for (int it = 0; it < iterations; ++it) {
            const Eigen::MatrixXcd y = w * z;
            Eigen::MatrixXcd phi(m, static_cast<Eigen::Index>(frames));
            for (Eigen::Index i = 0; i < m; ++i)
                for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(frames); ++t) {
                    const std::complex<double> v = y(i, t);
                    phi(i, t) = v / std::max(std::abs(v), kNonlinEps);
                }
            const Eigen::MatrixXcd g = identity - (phi * y.adjoint()) * inv_t;
            const double err = g.norm();
            if (err < tol) {
                bin_converged = true;
                break;
            }
            if (prev_err >= 0.0 && err > prev_err) mu *= 0.7;  // simple annealing
            prev_err = err;
            w += mu * g * w;
        }
        if (!bin_converged && iterations > 0) result.converged = false;

        result.demix[f] = w * q;
    }
    return result;
}

void oracle_permutation_align(DemixingSet& demix, const Spectrogram& mixture_spec,
                              const Spectrogram& oracle_speech_spec, int reference_channel) {
    if (demix.demix.size() != mixture_spec.num_bins)
        throw std::invalid_argument("oracle_permutation_align: bin count mismatch");
    if (oracle_speech_spec.num_frames != mixture_spec.num_frames ||
        oracle_speech_spec.num_bins != mixture_spec.num_bins)
        throw std::invalid_argument("oracle_permutation_align: oracle not frame-aligned");
    const auto m = static_cast<Eigen::Index>(mixture_spec.num_channels);
    if (reference_channel < 0 || reference_channel >= m)
        throw std::invalid_argument("oracle_permutation_align: reference channel out of range");
    const auto frames = static_cast<Eigen::Index>(mixture_spec.num_frames);

    int previous_choice = 0;
    for (std::size_t f = 0; f < mixture_spec.num_bins; ++f) {
        const Eigen::MatrixXcd& w = demix.demix[f];
        const Eigen::MatrixXcd x = gather_bin(mixture_spec, f);
        const Eigen::MatrixXcd y = w * x;
        const Eigen::MatrixXcd mixing = w.inverse();  // column i = image of output i

        Eigen::VectorXd oracle_env(frames);
        for (Eigen::Index t = 0; t < frames; ++t)
            oracle_env(t) = std::abs(oracle_speech_spec.at(reference_channel, t, f));

        int choice;
        if (oracle_env.maxCoeff() <= 0.0) {
            choice = previous_choice;  // continuity fallback for silent oracle bins
        } else {
            Eigen::VectorXd corr(m);
            Eigen::VectorXd ref_energy(m);
            for (Eigen::Index i = 0; i < m; ++i) {
                Eigen::VectorXd env(frames);
                double energy = 0.0;
                for (Eigen::Index t = 0; t < frames; ++t) {
                    env(t) = std::abs(y(i, t));
                    energy += env(t) * env(t);
                }
                corr(i) = pearson(env, oracle_env);
                ref_energy(i) = std::norm(mixing(reference_channel, i)) * energy;
            }
            const double best = corr.maxCoeff();
            // Near-ties resolved toward the output carrying most energy into
            // the reference channel.
            choice = 0;
            double best_energy = -1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (corr(i) >= best - 1e-9 && ref_energy(i) > best_energy) {
                    best_energy = ref_energy(i);
                    choice = static_cast<int>(i);
                }
            }
        }
        demix.selected[f] = choice;
        demix.rescale[f] = mixing(reference_channel, choice);
        previous_choice = choice;
    }
    demix.aligned = true;
}

Spectrogram apply_demixing(const DemixingSet& demix, const Spectrogram& spec) {
    if (!demix.aligned)
        throw std::logic_error("apply_demixing: demixing set has not been aligned");
    if (demix.demix.size() != spec.num_bins)
        throw std::invalid_argument("apply_demixing: bin count mismatch");

    Spectrogram out = single_channel_like(spec);
    const auto m = static_cast<Eigen::Index>(spec.num_channels);
    for (std::size_t f = 0; f < spec.num_bins; ++f) {
        const Eigen::RowVectorXcd row = demix.demix[f].row(demix.selected[f]);
        const std::complex<double> scale = demix.rescale[f];
        for (std::size_t t = 0; t < spec.num_frames; ++t) {
            std::complex<double> acc = 0.0;
            for (Eigen::Index c = 0; c < m; ++c) acc += row(c) * spec.at(c, t, f);
            out.at(0, t, f) = scale * acc;
        }
    }
    return out;
}

namespace {

// Zero-pads a block so analysis frames tile it exactly: hop zeros in front,
// then up to the next frame-aligned length. Every block sample ends up
// covered by the overlap-add.
struct PaddedBlock {
    AudioBuffer padded;
    std::size_t left;
};

PaddedBlock pad_block(const AudioBuffer& src, std::size_t start, std::size_t end,
                      const StftConfig& config) {
    const std::size_t len = end - start;
    const auto hop = static_cast<std::size_t>(config.hop);
    const auto window = static_cast<std::size_t>(config.window_length);
    const std::size_t covered = hop + len;  // left pad + payload
    std::size_t frames = covered <= window ? 1 : (covered - window + hop - 1) / hop + 1;
    const std::size_t padded_len = (frames - 1) * hop + window;

    PaddedBlock out{AudioBuffer(src.channel_count(), padded_len, src.sample_rate), hop};
    for (std::size_t c = 0; c < src.channel_count(); ++c)
        std::copy(src.channels[c].begin() + start, src.channels[c].begin() + end,
                  out.padded.channels[c].begin() + hop);
    return out;
}

}  // namespace

EnhanceResult blockwise_enhance(const AudioBuffer& mixture, const AudioBuffer& oracle_speech,
                                const AudioBuffer& oracle_noise, EnhanceMethod method,
                                const BlockPlan& plan, const StftConfig& stft_config,
                                const FilterParams& params) {
    if (mixture.channel_count() != oracle_speech.channel_count() ||
        mixture.channel_count() != oracle_noise.channel_count())
        throw std::invalid_argument("blockwise_enhance: channel counts differ");
    if (mixture.frames() != oracle_speech.frames() || mixture.frames() != oracle_noise.frames())
        throw std::invalid_argument("blockwise_enhance: signals not aligned");
    if (plan.blocks.empty())
        throw std::invalid_argument("blockwise_enhance: signal shorter than one block");

    const std::size_t out_len = plan.covered_samples();
    EnhanceResult result;
    result.enhanced = AudioBuffer(1, out_len, mixture.sample_rate);
    result.shadow_speech = AudioBuffer(1, out_len, mixture.sample_rate);
    result.shadow_noise = AudioBuffer(1, out_len, mixture.sample_rate);

    for (std::size_t b = 0; b < plan.blocks.size(); ++b) {
        const auto [start, end] = plan.blocks[b];
        const PaddedBlock mix_b = pad_block(mixture, start, end, stft_config);
        const PaddedBlock spe_b = pad_block(oracle_speech, start, end, stft_config);
        const PaddedBlock noi_b = pad_block(oracle_noise, start, end, stft_config);

        const Spectrogram mix_spec = stft(mix_b.padded, stft_config);
        if (mix_spec.num_frames < 2) {
            ++result.blocks_skipped;
            continue;
        }
        const Spectrogram spe_spec = stft(spe_b.padded, stft_config);
        const Spectrogram noi_spec = stft(noi_b.padded, stft_config);

        Spectrogram enh_spec, sse_spec, ssn_spec;
        switch (method) {
            case EnhanceMethod::Mwf: {
                const CovarianceSet cov = estimate_covariances(spe_spec, noi_spec);
                const BeamformerWeights w = mwf_weights(cov, params.reference_channel,
                                                        params.loading);
                enh_spec = apply_weights(w, mix_spec);
                sse_spec = apply_weights(w, spe_spec);
                ssn_spec = apply_weights(w, noi_spec);
                break;
            }
            case EnhanceMethod::Bss: {
                DemixingSet demix = bss_separate(mix_spec, params.bss_iterations,
                                                 params.seed + b);
                oracle_permutation_align(demix, mix_spec, spe_spec, params.reference_channel);
                enh_spec = apply_demixing(demix, mix_spec);
                sse_spec = apply_demixing(demix, spe_spec);
                ssn_spec = apply_demixing(demix, noi_spec);
                break;
            }
            case EnhanceMethod::Unprocessed: {
                BeamformerWeights w;
                w.reference_channel = params.reference_channel;
                Eigen::VectorXcd sel = Eigen::VectorXcd::Zero(
                    static_cast<Eigen::Index>(mixture.channel_count()));
                sel(params.reference_channel) = 1.0;
                w.w.assign(mix_spec.num_bins, sel);
                enh_spec = apply_weights(w, mix_spec);
                sse_spec = apply_weights(w, spe_spec);
                ssn_spec = apply_weights(w, noi_spec);
                break;
            }
        }

        const AudioBuffer enh = istft(enh_spec);
        const AudioBuffer sse = istft(sse_spec);
        const AudioBuffer ssn = istft(ssn_spec);
        const std::size_t len = end - start;
        for (std::size_t i = 0; i < len; ++i) {
            result.enhanced.channels[0][start + i] = enh.channels[0][mix_b.left + i];
            result.shadow_speech.channels[0][start + i] = sse.channels[0][mix_b.left + i];
            result.shadow_noise.channels[0][start + i] = ssn.channels[0][mix_b.left + i];
        }
        ++result.blocks_processed;
    }
    return result;
}

}  // namespace droneaudio
