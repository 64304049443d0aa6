#pragma once

// The assembled forecaster: global RevIN -> {time, freq, vision} branches ->
// gated fusion -> single RevIN inversion.

#include <optional>

#include "trits/config.hpp"
#include "trits/fusion.hpp"
#include "trits/instnorm.hpp"
#include "trits/time_branch.hpp"

namespace trits {

enum class Modality { Time, Freq, Vision };
const char* modality_name(Modality m);

struct ForwardResult {
    Var prediction;                  // [B, T, C] in input units
    Var gates;                       // [B, T, C, k]
    std::vector<Modality> order;     // modality of each gate slot
    std::vector<Var> branch_outputs; // normalized-space H_k, [B, T, C]
};

class TriTS {
public:
    /// cfg.vision_period must already be resolved (>= 2) when the vision branch is on.
    static TriTS make(const Config& cfg, std::size_t channels);

    ForwardResult forward(const Var& x) const;
    Var operator()(const Var& x) const { return forward(x).prediction; }

    /// Every trainable tensor, in a fixed construction order.
    ParamList params() const;

    const Config& config() const noexcept { return cfg_; }
    std::size_t channels() const noexcept { return channels_; }
    std::vector<Modality> modalities() const;

    RevinParams& revin() noexcept { return revin_; }
    GateNetwork& gate_network() noexcept { return gate_; }
    std::optional<FreqBranch>& freq() noexcept { return freq_; }
    std::optional<VisionBranch>& vision() noexcept { return vision_; }

private:
    Config cfg_;
    std::size_t channels_ = 0;
    RevinParams revin_;
    std::optional<EmaConfig> ema_;
    std::optional<StreamingLinear> time_;
    std::optional<FreqBranch> freq_;
    std::optional<VisionBranch> vision_;
    GateNetwork gate_;
};

}  // namespace trits
