#pragma once

// Reversible instance normalization over the time axis of [B, L, C] windows.
// The mean/std are statistics of the data, not trainable: they enter the graph
// as constants. The affine pair (gamma, beta) is learnable.

#include "trits/params.hpp"

namespace trits {

struct RevinParams {
    Var gamma;  // [C], starts at 1
    Var beta;   // [C], starts at 0

    static RevinParams make(std::size_t channels);
    void collect(const std::string& prefix, ParamList& out) const;
};

struct InstanceStats {
    Tensor mean;    // [B, C]
    Tensor stddev;  // [B, C], population std over L
    double eps = 1e-5;
};

struct Normalized {
    Var value;
    InstanceStats stats;
};

InstanceStats instance_stats(const Tensor& x, double eps = 1e-5);

/// gamma * (x - mean) / (std + eps) + beta
Normalized revin_normalize(const Var& x, const RevinParams& affine, double eps = 1e-5);

/// ((y - beta) / gamma) * (std + eps) + mean, with y of shape [B, T, C].
Var revin_denormalize(const Var& y, const InstanceStats& stats, const RevinParams& affine);

}  // namespace trits
