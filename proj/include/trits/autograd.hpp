#pragma once

// Define-by-run reverse-mode differentiation over a fixed op vocabulary.
//
// Every forward call builds a fresh DAG of Nodes; leaves are either constants
// or parameters (requires_grad). backward() walks the DAG from a scalar root
// in reverse topological order and accumulates into leaf grads.
//
// Elementwise binary ops broadcast only along leading dimensions: the smaller
// operand's shape must equal a suffix of the larger one (rank-0 scalars
// broadcast to anything).

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "trits/tensor.hpp"

namespace trits {

enum class OpKind {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    Div,
    Permute,
    Reshape,
    Softmax,
    Silu,
    Gelu,
    Exp,
    Softplus,
    Sqrt,
    Slice,
    Concat,
    Flip,
    ReduceMean,
    ReduceSum,
    EmaScan,
    SelectiveScan,
};

const char* op_name(OpKind op);

struct Node {
    Tensor value;
    Tensor grad;  // empty until first accumulation
    bool requires_grad = false;
    OpKind op = OpKind::Leaf;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;

    bool has_grad() const noexcept { return !grad.empty(); }
    const Shape& shape() const noexcept { return value.shape(); }
    void zero_grad() { grad = Tensor(); }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
Var parameter(Tensor value);

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled() noexcept;

// --- primitives -----------------------------------------------------------

/// [..., m, k] x [k, n], or batched [..., m, k] x [..., k, n] with equal batch dims.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var permute(const Var& x, const std::vector<std::size_t>& perm);
Var reshape(const Var& x, Shape shape);
/// Softmax over the last axis.
Var softmax(const Var& x);
Var silu(const Var& x);
/// Exact (erf) GELU.
Var gelu(const Var& x);
Var exp(const Var& x);
Var softplus(const Var& x);
Var sqrt(const Var& x);
/// Half-open range [begin, end) on one axis.
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);
Var concat(const std::vector<Var>& parts, std::size_t axis);
Var flip(const Var& x, std::size_t axis);
Var reduce_mean(const Var& x, std::size_t axis, bool keepdim = false);
Var reduce_sum(const Var& x, std::size_t axis, bool keepdim = false);
/// y_0 = x_0, y_t = alpha*x_t + (1-alpha)*y_{t-1} along the last axis.
Var ema_scan(const Var& x, double alpha);

/// Fused diagonal selective scan with zero-order-hold discretization.
///   u, delta: [B, N, D]; a_log: [D, n]; b, c: [B, N, n]  ->  y: [B, N, D]
/// with A = -exp(a_log), Abar = exp(delta*A), Bbar = expm1(delta*A)/A * b,
/// h_t = Abar_t * h_{t-1} + Bbar_t * u_t, y_t = <c_t, h_t>, h_0 = 0.
Var selective_scan_op(const Var& u, const Var& delta, const Var& a_log, const Var& b,
                      const Var& c);

// --- composed helpers -----------------------------------------------------

Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double value);
Var transpose_last(const Var& x);
/// [..., 1] -> [..., n] by multiplying with a row of ones.
Var expand_last(const Var& x, std::size_t n);
Var mean_all(const Var& x);
Var sum_all(const Var& x);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }

/// Reverse pass from a scalar root. Intermediate grads are reset first,
/// leaf grads accumulate.
void backward(const Var& root);

/// Number of worker threads for data-parallel kernels (TRITS_THREADS, default 1).
std::size_t worker_threads();

}  // namespace trits
