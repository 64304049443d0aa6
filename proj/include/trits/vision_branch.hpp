#pragma once

// Vision-domain branch: fold the window by its dominant period into an S x P
// "temporal image", cut square patches, and run a stack of bidirectional
// selective state-space blocks over the token sequence.

#include <random>
#include <string>
#include <vector>

#include "trits/layers.hpp"

namespace trits {

inline constexpr std::size_t kDefaultPeriod = 24;

struct PeriodEstimate {
    std::size_t period = kDefaultPeriod;
    double acf_score = 0.0;
    std::size_t rows = 0;   // S = floor(L / P)
    bool fallback = false;  // input had no variance; period is the default
};

/// Mean-removed autocorrelation averaged over batch and channels, lags 0..max_lag.
std::vector<double> mean_acf(const Tensor& x, std::size_t max_lag);

/// x: [B, L, C] with L >= 8. The period is the highest-ACF lag in [2, L/2]
/// once the ACF has first dipped below zero (the lags before that are just the
/// main lobe of lag 0); ties go to the smaller lag.
PeriodEstimate detect_period(const Tensor& x, std::size_t fallback = kDefaultPeriod);

/// [B, L, C] -> [B, S, P, C], dropping the oldest L mod P steps.
Var reshape_to_image(const Var& x, std::size_t period);
/// [B, S, P, C] -> [B, S*P, C]
Var unfold_image(const Var& image);

struct ZohResult {
    Tensor a_bar;
    Tensor b_bar;
};

/// Elementwise zero-order hold for diagonal A; all three tensors share one shape.
ZohResult zoh_discretize(const Tensor& a, const Tensor& b, const Tensor& delta);

enum class Direction { Forward, Backward };

/// u, delta: [B, N, D]; a_log: [D, n]; b, c: [B, N, n]. The backward direction
/// scans the time-reversed sequence and reverses the result.
Var selective_scan(const Var& u, const Var& delta, const Var& a_log, const Var& b, const Var& c,
                   Direction dir);

struct VimConfig {
    std::size_t d_model = 64;
    std::size_t d_state = 16;
    std::size_t expand = 2;
    std::size_t dt_rank = 0;  // 0: ceil(d_model / 16)
    double norm_eps = 1e-5;
};

struct ScanProjection {
    Linear x_proj;   // d_inner -> dt_rank + 2 n, no bias
    Linear dt_proj;  // dt_rank -> d_inner, bias is the softplus-inverse of the initial step
    Var d_skip;      // [d_inner]
};

struct ScanInputs {
    Var delta;
    Var b;
    Var c;
};

class VimBlock {
public:
    static VimBlock make(const VimConfig& cfg, std::mt19937_64& rng);

    /// [B, N, d] -> [B, N, d]
    Var operator()(const Var& h) const;

    /// Per-direction scan outputs (including the D skip) for a normalized,
    /// activated token sequence u: [B, N, d_inner].
    std::pair<Var, Var> scan_directions(const Var& u) const;
    ScanInputs scan_inputs(const Var& u, const ScanProjection& proj) const;

    std::size_t d_inner() const { return a_log->shape()[0]; }
    std::size_t d_state() const { return a_log->shape()[1]; }
    void collect(const std::string& prefix, ParamList& out) const;

    Var norm_weight;
    Linear in_proj;  // d -> 2 d_inner (x, z), no bias
    Var a_log;       // [d_inner, n], shared by both directions
    ScanProjection fwd;
    ScanProjection bwd;
    Linear out_proj;  // d_inner -> d, no bias

private:
    std::size_t dt_rank_ = 1;
    double eps_ = 1e-5;
};

struct VisionConfig {
    std::size_t patch = 8;
    std::size_t depth = 2;
    VimConfig vim;
};

struct ImageGeometry {
    std::size_t period = 0;
    std::size_t rows = 0;        // S
    std::size_t padded_rows = 0;
    std::size_t padded_cols = 0;
    std::size_t tokens = 0;      // N
    std::size_t patch_dim = 0;   // p * p * C
};

ImageGeometry image_geometry(std::size_t lookback, std::size_t period, std::size_t patch, std::size_t channels);

class VisionBranch {
public:
    static VisionBranch make(const VisionConfig& cfg, std::size_t lookback, std::size_t horizon,
                             std::size_t channels, std::size_t period, std::mt19937_64& rng);

    /// [B, L, C] -> [B, N, p*p*C]
    Var patchify(const Var& x) const;
    /// [B, L, C] -> [B, T, C]
    Var operator()(const Var& x) const;

    const ImageGeometry& geometry() const noexcept { return geo_; }
    std::vector<VimBlock>& blocks() noexcept { return blocks_; }
    void collect(const std::string& prefix, ParamList& out) const;

private:
    VisionConfig cfg_;
    ImageGeometry geo_;
    std::size_t lookback_ = 0, horizon_ = 0, channels_ = 0;
    Linear embed_;
    Var pos_;  // [N, d]
    std::vector<VimBlock> blocks_;
    Var final_norm_;
    Linear head_;
};

}  // namespace trits
