#pragma once

// Step-by-step reference for the diagonal selective scan, written directly
// from the recurrence with no shared code paths beyond <cmath>.

#include <cmath>
#include <vector>

#include "trits/tensor.hpp"

namespace trits::testing {

/// u, delta: [B, N, D]; a_log: [D, n]; b, c: [B, N, n]. reverse=true walks t from N-1 down to 0.
inline Tensor naive_scan(const Tensor& u, const Tensor& delta, const Tensor& a_log, const Tensor& b,
                         const Tensor& c, bool reverse) {
    const std::size_t B = u.dim(0), N = u.dim(1), D = u.dim(2), n = a_log.dim(1);
    Tensor y(u.shape());
    for (std::size_t bi = 0; bi < B; ++bi) {
        for (std::size_t d = 0; d < D; ++d) {
            std::vector<double> h(n, 0.0);
            for (std::size_t step = 0; step < N; ++step) {
                const std::size_t t = reverse ? N - 1 - step : step;
                const double dt = delta[(bi * N + t) * D + d];
                const double x = u[(bi * N + t) * D + d];
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double A = -std::exp(a_log[d * n + j]);
                    const double abar = std::exp(dt * A);
                    const double bbar = (abar - 1.0) / A * b[(bi * N + t) * n + j];
                    h[j] = abar * h[j] + bbar * x;
                    acc += c[(bi * N + t) * n + j] * h[j];
                }
                y[(bi * N + t) * D + d] = acc;
            }
        }
    }
    return y;
}

}  // namespace trits::testing
