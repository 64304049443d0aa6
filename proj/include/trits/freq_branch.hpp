#pragma once

// Frequency-domain branch: multilevel DWT of the normalized window, one
// independent resolution branch per wavelet component (A_m, D_m, ..., D_1),
// each predicting that component's future coefficients, then IDWT to [B, T, C].
//
// Inside the graph the transforms are applied as constant linear operators
// (see analysis_matrices / synthesis_matrices), so gradients flow through them.

#include <random>
#include <string>
#include <vector>

#include "trits/layers.hpp"
#include "trits/wavelet.hpp"

namespace trits {

struct FreqConfig {
    std::string wavelet = "db2";
    std::size_t levels = 3;
    std::size_t patch_len = 16;
    std::size_t d_model = 32;
    double eps = 1e-5;
};

/// [..., n_patch, d] -> same shape: mix along the patch axis, with a residual.
Var patch_mixer(const Var& z, const FeedForward& mlp);
/// [..., n_patch, d] -> same shape: mix along the embedding axis, plus z.
Var embedding_mixer(const Var& z, const FeedForward& mlp);

std::size_t patch_count(std::size_t length, std::size_t patch_len);

struct ResolutionBranch {
    std::size_t in_len = 0;
    std::size_t out_len = 0;
    std::size_t n_patch = 0;
    std::size_t patch_len = 0;
    Var gamma;  // [C, 1]
    Var beta;   // [C, 1]
    Linear embed;       // patch_len -> d
    FeedForward patch_mix;  // n_patch -> 2 n_patch -> n_patch
    FeedForward emb_mix;    // d -> 2d -> d
    Linear head;        // n_patch * d -> out_len

    static ResolutionBranch make(std::size_t in_len, std::size_t out_len, std::size_t channels,
                                 const FreqConfig& cfg, std::mt19937_64& rng);

    /// coefficients [B, C, in_len] -> predicted future coefficients [B, C, out_len]
    Var operator()(const Var& coeffs, double eps) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

class FreqBranch {
public:
    static FreqBranch make(const FreqConfig& cfg, std::size_t lookback, std::size_t horizon,
                           std::size_t channels, std::mt19937_64& rng);

    /// [B, L, C] -> [B, T, C]
    Var operator()(const Var& x) const;
    /// Future coefficients per component, [B, C, len_k], before synthesis.
    std::vector<Var> components(const Var& x) const;

    const std::vector<ResolutionBranch>& branches() const noexcept { return branches_; }
    std::vector<ResolutionBranch>& branches() noexcept { return branches_; }
    const WaveletFilter& filter() const noexcept { return filter_; }
    void collect(const std::string& prefix, ParamList& out) const;

private:
    FreqConfig cfg_;
    WaveletFilter filter_;
    std::size_t lookback_ = 0, horizon_ = 0, channels_ = 0;
    std::vector<Var> analysis_;   // constants [L, len_k]
    std::vector<Var> synthesis_;  // constants [len'_k, T]
    std::vector<ResolutionBranch> branches_;
};

}  // namespace trits
