#include "trits/time_branch.hpp"

#include <cmath>

namespace trits {

EmaConfig::EmaConfig(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("time.ema_alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
}

Var ema_decompose(const Var& x, const EmaConfig& cfg) {
    if (x->shape().size() != 3) throw ShapeError("ema_decompose: expected [B, L, C], got " + shape_str(x->shape()));
    return permute(ema_scan(permute(x, {0, 2, 1}), cfg.alpha()), {0, 2, 1});
}

StreamingLinear StreamingLinear::make(std::size_t lookback, std::size_t horizon, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(lookback));
    return {parameter(Tensor::uniform({lookback, horizon}, -bound, bound, rng)),
            parameter(Tensor::uniform({horizon}, -bound, bound, rng))};
}

void StreamingLinear::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
}

Var time_forward(const Var& trend, const StreamingLinear& lin) {
    const auto& s = trend->shape();
    if (s.size() != 3 || s[1] != lin.weight->shape()[0]) {
        throw ShapeError("time_forward", s, lin.weight->shape());
    }
    auto rows = permute(trend, {0, 2, 1});  // [B, C, L]
    return permute(add(matmul(rows, lin.weight), lin.bias), {0, 2, 1});
}

}  // namespace trits
