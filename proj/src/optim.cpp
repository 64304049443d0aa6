#include "trits/optim.hpp"

#include <cmath>

namespace trits {

Adam::Adam(const ParamList& params, double lr, double beta1, double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.var->shape());
        v_.emplace_back(p.var->shape());
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Node& n = *params_[i].var;
        if (!n.has_grad()) continue;
        auto w = n.value.data();
        auto g = n.grad.data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
            w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
}

}  // namespace trits
