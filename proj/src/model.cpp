#include "trits/model.hpp"

namespace trits {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Time: return "time";
        case Modality::Freq: return "freq";
        case Modality::Vision: return "vision";
    }
    return "?";
}

TriTS TriTS::make(const Config& cfg, std::size_t channels) {
    cfg.validate();
    if (channels == 0) throw ContractError("model needs at least one channel");
    TriTS m;
    m.cfg_ = cfg;
    m.channels_ = channels;
    m.revin_ = RevinParams::make(channels);
    const std::size_t L = cfg.lookback, T = cfg.horizon;
    // each component draws from its own stream so ablations share the surviving weights
    if (cfg.time_enabled) {
        auto rng = component_rng(cfg.seed, "time");
        m.ema_.emplace(cfg.ema_alpha);
        m.time_ = StreamingLinear::make(L, T, rng);
    }
    if (cfg.freq_enabled) {
        auto rng = component_rng(cfg.seed, "freq");
        FreqConfig fc = cfg.freq;
        fc.eps = cfg.revin_eps;
        m.freq_ = FreqBranch::make(fc, L, T, channels, rng);
    }
    if (cfg.vision_enabled) {
        if (cfg.vision_period < 2) throw ContractError("vision branch needs a resolved period (vision.period >= 2)");
        auto rng = component_rng(cfg.seed, "vision");
        m.vision_ = VisionBranch::make(cfg.vision, L, T, channels, cfg.vision_period, rng);
    }
    auto rng = component_rng(cfg.seed, "gate");
    m.gate_ = GateNetwork::make(cfg.enabled_branches(), channels, cfg.gate_hidden, rng);
    return m;
}

std::vector<Modality> TriTS::modalities() const {
    std::vector<Modality> out;
    if (time_) out.push_back(Modality::Time);
    if (freq_) out.push_back(Modality::Freq);
    if (vision_) out.push_back(Modality::Vision);
    return out;
}

ForwardResult TriTS::forward(const Var& x) const {
    const auto& s = x->shape();
    if (s.size() != 3 || s[1] != cfg_.lookback || s[2] != channels_) {
        throw ShapeError("model input", s, Shape{s.empty() ? 0 : s[0], cfg_.lookback, channels_});
    }
    auto norm = revin_normalize(x, revin_, cfg_.revin_eps);
    ForwardResult r;
    r.order = modalities();
    if (time_) r.branch_outputs.push_back(time_forward(ema_decompose(norm.value, *ema_), *time_));
    if (freq_) r.branch_outputs.push_back((*freq_)(norm.value));
    if (vision_) r.branch_outputs.push_back((*vision_)(norm.value));
    r.gates = cfg_.gated ? gate(r.branch_outputs, gate_) : equal_gate(r.branch_outputs);
    r.prediction = revin_denormalize(fuse(r.branch_outputs, r.gates), norm.stats, revin_);
    return r;
}

ParamList TriTS::params() const {
    ParamList out;
    revin_.collect("revin", out);
    if (time_) time_->collect("time.linear", out);
    if (freq_) freq_->collect("freq", out);
    if (vision_) vision_->collect("vision", out);
    if (cfg_.gated) gate_.collect("gate", out);
    return out;
}

}  // namespace trits
