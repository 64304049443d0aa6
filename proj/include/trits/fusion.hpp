#pragma once

// Gated fusion of k branch outputs (k = 3 normally, 2 under a branch ablation).
// Gate weights live per batch item, time step and channel: G is [B, T, C, k]
// and sums to one over the last axis.

#include <random>
#include <vector>

#include "trits/layers.hpp"

namespace trits {

struct GateNetwork {
    std::size_t branches = 3;
    std::size_t channels = 1;
    FeedForward mlp;  // k*C -> hidden -> k*C, output layer zero-initialized

    static GateNetwork make(std::size_t branches, std::size_t channels, std::size_t hidden, std::mt19937_64& rng);
    void collect(const std::string& prefix, ParamList& out) const;
};

/// Branch outputs [B, T, C] each -> logits [B, T, C, k].
Var gate_logits(const std::vector<Var>& outputs, const GateNetwork& net);
/// Softmax over the modality axis.
Var gate_from_logits(const Var& logits);
Var gate(const std::vector<Var>& outputs, const GateNetwork& net);
/// Fixed 1/k weights with the shape gate() would produce.
Var equal_gate(const std::vector<Var>& outputs);

/// H_fuse[b,t,c] = sum_k G[b,t,c,k] * H_k[b,t,c]
Var fuse(const std::vector<Var>& outputs, const Var& weights);

/// Average weight per modality over every batch item, step and channel.
std::vector<double> mean_gate_report(const std::vector<Tensor>& gates);

}  // namespace trits
