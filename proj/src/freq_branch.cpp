#include "trits/freq_branch.hpp"

namespace trits {

Var patch_mixer(const Var& z, const FeedForward& mlp) {
    return add(transpose_last(mlp(transpose_last(z))), z);
}

Var embedding_mixer(const Var& z, const FeedForward& mlp) { return add(mlp(z), z); }

std::size_t patch_count(std::size_t length, std::size_t patch_len) {
    return (length + patch_len - 1) / patch_len;
}

ResolutionBranch ResolutionBranch::make(std::size_t in_len, std::size_t out_len, std::size_t channels,
                                        const FreqConfig& cfg, std::mt19937_64& rng) {
    if (cfg.patch_len == 0 || cfg.d_model == 0) throw ConfigError("freq.patch_len and freq.d_model must be >= 1");
    ResolutionBranch r;
    r.in_len = in_len;
    r.out_len = out_len;
    r.patch_len = cfg.patch_len;
    r.n_patch = patch_count(in_len, cfg.patch_len);
    r.gamma = parameter(Tensor({channels, 1}, 1.0));
    r.beta = parameter(Tensor({channels, 1}, 0.0));
    const std::size_t d = cfg.d_model;
    r.embed = Linear::make(cfg.patch_len, d, rng);
    r.patch_mix = FeedForward::make(r.n_patch, 2 * r.n_patch, r.n_patch, rng);
    r.emb_mix = FeedForward::make(d, 2 * d, d, rng);
    r.head = Linear::make(r.n_patch * d, out_len, rng);
    return r;
}

Var ResolutionBranch::operator()(const Var& coeffs, double eps) const {
    const auto& s = coeffs->shape();
    if (s.size() != 3 || s[2] != in_len || s[1] != gamma->shape()[0]) {
        throw ShapeError("resolution branch input", s, Shape{gamma->shape()[0], in_len});
    }
    const std::size_t B = s[0], C = s[1];

    // per-window, per-channel normalization of this coefficient sequence
    auto mu = reduce_mean(coeffs, 2, true);  // [B, C, 1]
    auto centered = sub(coeffs, expand_last(mu, in_len));
    auto sd = sqrt(add_scalar(reduce_mean(mul(centered, centered), 2, true), eps));
    auto z = div(centered, expand_last(sd, in_len));
    z = add(mul(z, expand_last(gamma, in_len)), expand_last(beta, in_len));

    const std::size_t padded = n_patch * patch_len;
    if (padded > in_len) {
        auto last = slice(z, 2, in_len - 1, in_len);
        z = concat({z, expand_last(last, padded - in_len)}, 2);
    }
    auto patches = reshape(z, {B, C, n_patch, patch_len});
    auto h = embed(patches);  // [B, C, n_patch, d]
    h = patch_mixer(h, patch_mix);
    h = embedding_mixer(h, emb_mix);
    const std::size_t d = h->shape().back();
    auto out = head(reshape(h, {B, C, n_patch * d}));  // [B, C, out_len]

    auto restored = div(sub(out, expand_last(beta, out_len)), expand_last(gamma, out_len));
    return add(mul(restored, expand_last(sd, out_len)), expand_last(mu, out_len));
}

void ResolutionBranch::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".revin.gamma", gamma});
    out.push_back({prefix + ".revin.beta", beta});
    embed.collect(prefix + ".embed", out);
    patch_mix.collect(prefix + ".patch_mix", out);
    emb_mix.collect(prefix + ".emb_mix", out);
    head.collect(prefix + ".head", out);
}

FreqBranch FreqBranch::make(const FreqConfig& cfg, std::size_t lookback, std::size_t horizon,
                            std::size_t channels, std::mt19937_64& rng) {
    FreqBranch f;
    f.cfg_ = cfg;
    f.filter_ = wavelet_by_name(cfg.wavelet);
    check_levels(lookback, f.filter_, cfg.levels);
    f.lookback_ = lookback;
    f.horizon_ = horizon;
    f.channels_ = channels;
    for (auto& m : analysis_matrices(lookback, f.filter_, cfg.levels)) f.analysis_.push_back(constant(std::move(m)));
    for (auto& m : synthesis_matrices(horizon, f.filter_, cfg.levels)) f.synthesis_.push_back(constant(std::move(m)));
    const auto in_lens = component_lengths(lookback, f.filter_.taps(), cfg.levels);
    const auto out_lens = component_lengths(horizon, f.filter_.taps(), cfg.levels);
    for (std::size_t k = 0; k < in_lens.size(); ++k) {
        f.branches_.push_back(ResolutionBranch::make(in_lens[k], out_lens[k], channels, cfg, rng));
    }
    return f;
}

std::vector<Var> FreqBranch::components(const Var& x) const {
    const auto& s = x->shape();
    if (s.size() != 3 || s[1] != lookback_ || s[2] != channels_) {
        throw ShapeError("freq_forward", s, Shape{s.empty() ? 0 : s[0], lookback_, channels_});
    }
    auto rows = permute(x, {0, 2, 1});  // [B, C, L]
    std::vector<Var> out;
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        out.push_back(branches_[k](matmul(rows, analysis_[k]), cfg_.eps));
    }
    return out;
}

Var FreqBranch::operator()(const Var& x) const {
    auto comps = components(x);
    Var acc;
    for (std::size_t k = 0; k < comps.size(); ++k) {
        auto part = matmul(comps[k], synthesis_[k]);  // [B, C, T]
        acc = acc ? add(acc, part) : part;
    }
    return permute(acc, {0, 2, 1});
}

void FreqBranch::collect(const std::string& prefix, ParamList& out) const {
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        branches_[k].collect(prefix + ".b" + std::to_string(k), out);
    }
}

}  // namespace trits
