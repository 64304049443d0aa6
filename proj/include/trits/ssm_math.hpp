#pragma once

#include <cmath>

namespace trits::ssm {

struct ZohPair {
    double a_bar;
    double b_bar;
};

/// Zero-order hold for a scalar (diagonal) system:
///   Abar = exp(dt*A),  Bbar = (dt*A)^-1 (exp(dt*A) - 1) * dt*B = expm1(dt*A)/A * B.
/// expm1 keeps Bbar accurate as dt -> 0 (Bbar -> dt*B).
inline ZohPair zoh_scalar(double a, double b, double dt) {
    const double z = dt * a;
    const double phi = a != 0.0 ? std::expm1(z) / a : dt;
    return {std::exp(z), phi * b};
}

/// d/dA of expm1(dt*A)/A, i.e. dt^2 * (z e^z - expm1(z)) / z^2 with z = dt*A.
inline double zoh_phi_dA(double a, double dt) {
    const double z = dt * a;
    if (std::abs(z) < 1e-3) {
        // series: 1/2 + z/3 + z^2/8 + z^3/30
        return dt * dt * (0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z / 30.0)));
    }
    return (z * std::exp(z) - std::expm1(z)) / (a * a);
}

}  // namespace trits::ssm
