#pragma once

#include <cstdint>
#include <vector>

#include "trits/params.hpp"

namespace trits {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are sized lazily on the first step
/// and must keep matching the parameter shapes afterwards.
class AdamState {
public:
    explicit AdamState(AdamOptions options = {});

    /// One update over every param, then clears their grads.
    /// Throws ContractError if any param has no grad.
    void step(const ParamList& params);

    std::uint64_t step_count() const noexcept { return step_; }
    double lr() const noexcept { return options_.lr; }
    void set_lr(double lr) { options_.lr = lr; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
    AdamOptions options_;
    std::uint64_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace trits
