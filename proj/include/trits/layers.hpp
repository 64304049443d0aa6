#pragma once

// Small building blocks shared by the branches. Each owns its parameters as
// Vars and can append them to a ParamList under a dotted prefix.

#include <cstdint>
#include <random>
#include <string>

#include "trits/params.hpp"

namespace trits {

/// Deterministic per-component RNG: the same (seed, component) always yields the
/// same stream, independent of which other components exist.
std::mt19937_64 component_rng(std::uint64_t seed, const std::string& component);

/// Affine map on the last axis: x[..., in] -> x @ W[in, out] + b[out].
struct Linear {
    Var weight;
    Var bias;  // null when constructed without bias

    static Linear make(std::size_t in, std::size_t out, std::mt19937_64& rng, bool with_bias = true);
    static Linear zeros(std::size_t in, std::size_t out, bool with_bias = true);

    std::size_t in_features() const { return weight->shape()[0]; }
    std::size_t out_features() const { return weight->shape()[1]; }

    Var operator()(const Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Two-layer feed-forward map with GELU in between.
struct FeedForward {
    Linear fc1;
    Linear fc2;

    static FeedForward make(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng);

    Var operator()(const Var& x) const { return fc2(gelu(fc1(x))); }
    void collect(const std::string& prefix, ParamList& out) const;
};

/// x / sqrt(mean(x^2) + eps) * weight over the last axis.
Var rms_norm(const Var& x, const Var& weight, double eps = 1e-5);

}  // namespace trits
