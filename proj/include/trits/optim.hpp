#pragma once

#include "trits/params.hpp"

namespace trits {

/// Adam with bias correction. Moment buffers follow the parameter list order.
class Adam {
public:
    explicit Adam(const ParamList& params, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    /// Applies one update from the current grads; params without a grad are skipped.
    void step();
    void set_lr(double lr) noexcept { lr_ = lr; }
    double lr() const noexcept { return lr_; }
    std::size_t steps() const noexcept { return t_; }

private:
    ParamList params_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace trits
