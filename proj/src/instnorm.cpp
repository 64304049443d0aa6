#include "trits/instnorm.hpp"

#include <cmath>

namespace trits {

namespace {

// [B, C] statistics laid out over a [B, n, C] grid.
Tensor broadcast_time(const Tensor& s, std::size_t n) {
    const std::size_t B = s.dim(0), C = s.dim(1);
    Tensor out({B, n, C});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t c = 0; c < C; ++c) out[(b * n + t) * C + c] = s[b * C + c];
    return out;
}

}  // namespace

RevinParams RevinParams::make(std::size_t channels) {
    return {parameter(Tensor({channels}, 1.0)), parameter(Tensor({channels}, 0.0))};
}

void RevinParams::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".gamma", gamma});
    out.push_back({prefix + ".beta", beta});
}

InstanceStats instance_stats(const Tensor& x, double eps) {
    if (x.rank() != 3) throw ShapeError("revin_normalize: expected [B, L, C], got " + shape_str(x.shape()));
    const std::size_t B = x.dim(0), L = x.dim(1), C = x.dim(2);
    if (L < 2) throw ContractError("revin_normalize: need L >= 2, got " + std::to_string(L));
    InstanceStats st{Tensor({B, C}), Tensor({B, C}), eps};
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            double mu = 0.0;
            for (std::size_t t = 0; t < L; ++t) mu += x[(b * L + t) * C + c];
            mu /= static_cast<double>(L);
            double var = 0.0;
            for (std::size_t t = 0; t < L; ++t) {
                const double d = x[(b * L + t) * C + c] - mu;
                var += d * d;
            }
            st.mean[b * C + c] = mu;
            st.stddev[b * C + c] = std::sqrt(var / static_cast<double>(L));
        }
    }
    return st;
}

Normalized revin_normalize(const Var& x, const RevinParams& affine, double eps) {
    Normalized out{nullptr, instance_stats(x->value, eps)};
    const std::size_t L = x->shape()[1];
    if (affine.gamma->shape() != Shape{x->shape()[2]}) {
        throw ShapeError("revin_normalize affine", affine.gamma->shape(), x->shape());
    }
    Tensor scale = out.stats.stddev;
    for (double& v : scale.data()) v += eps;
    auto centered = sub(x, constant(broadcast_time(out.stats.mean, L)));
    auto z = div(centered, constant(broadcast_time(scale, L)));
    out.value = add(mul(z, affine.gamma), affine.beta);
    return out;
}

Var revin_denormalize(const Var& y, const InstanceStats& stats, const RevinParams& affine) {
    if (y->shape().size() != 3 || y->shape()[0] != stats.mean.dim(0) || y->shape()[2] != stats.mean.dim(1)) {
        throw ShapeError("revin_denormalize", y->shape(), stats.mean.shape());
    }
    const std::size_t T = y->shape()[1];
    Tensor scale = stats.stddev;
    for (double& v : scale.data()) v += stats.eps;
    auto z = div(sub(y, affine.beta), affine.gamma);
    return add(mul(z, constant(broadcast_time(scale, T))), constant(broadcast_time(stats.mean, T)));
}

}  // namespace trits
