#include "trits/params.hpp"

#include <cmath>

#include "trits/adam.hpp"

namespace trits {

std::size_t param_count(const ParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.var->value.numel();
    return n;
}

void zero_grads(const ParamList& params) {
    for (const auto& p : params) p.var->zero_grad();
}

std::vector<Tensor> snapshot(const ParamList& params) {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(p.var->value);
    return out;
}

void restore(const ParamList& params, const std::vector<Tensor>& values) {
    if (values.size() != params.size()) {
        throw ContractError("restore: " + std::to_string(values.size()) + " tensors for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (values[i].shape() != params[i].var->shape()) {
            throw ShapeError("restore " + params[i].name, params[i].var->shape(), values[i].shape());
        }
        params[i].var->value = values[i];
    }
}

double clip_grad_norm(const ParamList& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (!p.var->has_grad()) continue;
        for (double g : p.var->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (const auto& p : params) {
            if (!p.var->has_grad()) continue;
            for (double& g : p.var->grad.data()) g *= factor;
        }
    }
    return norm;
}

AdamState::AdamState(AdamOptions options) : options_(options) {
    if (!(options_.lr >= 0.0) || !(options_.beta1 >= 0.0 && options_.beta1 < 1.0) ||
        !(options_.beta2 >= 0.0 && options_.beta2 < 1.0) || !(options_.eps > 0.0)) {
        throw ContractError("invalid Adam hyperparameters");
    }
}

void AdamState::step(const ParamList& params) {
    for (const auto& p : params) {
        if (!p.var->has_grad()) throw ContractError("adam_step: parameter '" + p.name + "' has no grad");
    }
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.var->shape());
            v_.emplace_back(p.var->shape());
        }
    }
    if (m_.size() != params.size()) {
        throw ContractError("adam_step: parameter list changed size between steps");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double c1 = 1.0 - std::pow(options_.beta1, t);
    const double c2 = 1.0 - std::pow(options_.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Node& node = *params[i].var;
        if (m_[i].shape() != node.shape()) throw ShapeError("adam moments", m_[i].shape(), node.shape());
        auto w = node.value.data();
        const auto g = node.grad.data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * g[j];
            v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * g[j] * g[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            w[j] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
        }
        node.zero_grad();
    }
}

}  // namespace trits
