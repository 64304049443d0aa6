#include "trits/layers.hpp"

#include <cmath>

namespace trits {

std::mt19937_64 component_rng(std::uint64_t seed, const std::string& component) {
    // FNV-1a over the component name keeps streams stable across builds
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : component) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

Linear Linear::make(std::size_t in, std::size_t out, std::mt19937_64& rng, bool with_bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Linear l;
    l.weight = parameter(Tensor::uniform({in, out}, -bound, bound, rng));
    if (with_bias) l.bias = parameter(Tensor::uniform({out}, -bound, bound, rng));
    return l;
}

Linear Linear::zeros(std::size_t in, std::size_t out, bool with_bias) {
    Linear l;
    l.weight = parameter(Tensor({in, out}));
    if (with_bias) l.bias = parameter(Tensor({out}));
    return l;
}

Var Linear::operator()(const Var& x) const {
    auto y = matmul(x, weight);
    return bias ? add(y, bias) : y;
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight});
    if (bias) out.push_back({prefix + ".bias", bias});
}

FeedForward FeedForward::make(std::size_t in, std::size_t hidden, std::size_t out, std::mt19937_64& rng) {
    FeedForward f;
    f.fc1 = Linear::make(in, hidden, rng);
    f.fc2 = Linear::make(hidden, out, rng);
    return f;
}

void FeedForward::collect(const std::string& prefix, ParamList& out) const {
    fc1.collect(prefix + ".fc1", out);
    fc2.collect(prefix + ".fc2", out);
}

Var rms_norm(const Var& x, const Var& weight, double eps) {
    const std::size_t d = x->shape().back();
    const std::size_t r = x->shape().size();
    auto ms = reduce_mean(mul(x, x), r - 1, true);
    auto denom = expand_last(sqrt(add_scalar(ms, eps)), d);
    return mul(div(x, denom), weight);
}

}  // namespace trits
