#pragma once

// Time-domain branch: EMA trend followed by a channel-shared affine map from
// the lookback axis to the horizon axis. No activation anywhere.

#include <random>

#include "trits/params.hpp"

namespace trits {

class EmaConfig {
public:
    /// Throws ConfigError unless 0 < alpha < 1.
    explicit EmaConfig(double alpha = 0.3);
    double alpha() const noexcept { return alpha_; }

private:
    double alpha_;
};

/// [B, L, C] -> [B, L, C]; trend_0 = x_0, trend_t = a x_t + (1 - a) trend_{t-1}.
Var ema_decompose(const Var& x, const EmaConfig& cfg);

struct StreamingLinear {
    Var weight;  // [L, T]
    Var bias;    // [T]

    static StreamingLinear make(std::size_t lookback, std::size_t horizon, std::mt19937_64& rng);
    void collect(const std::string& prefix, ParamList& out) const;
};

/// [B, L, C] -> [B, T, C], the same map applied to every channel.
Var time_forward(const Var& trend, const StreamingLinear& lin);

}  // namespace trits
