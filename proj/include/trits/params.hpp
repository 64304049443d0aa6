#pragma once

#include <string>
#include <vector>

#include "trits/autograd.hpp"

namespace trits {

struct NamedParam {
    std::string name;
    Var var;
};

using ParamList = std::vector<NamedParam>;

std::size_t param_count(const ParamList& params);
void zero_grads(const ParamList& params);

/// Deep copy of the current parameter values, in list order.
std::vector<Tensor> snapshot(const ParamList& params);
void restore(const ParamList& params, const std::vector<Tensor>& values);

/// Rescales grads in place so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

}  // namespace trits
