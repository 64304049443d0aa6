#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "trits/dataio.hpp"

namespace trits::testing {

/// Noiseless sin(2*pi*t/period) + slope*t, phase-shifted per channel.
inline Dataset sine_trend(std::size_t rows, std::size_t channels = 1, std::size_t period = 24, double slope = 0.002) {
    std::vector<double> v;
    v.reserve(rows * channels);
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double ph = 2.0 * std::numbers::pi * (static_cast<double>(t) / static_cast<double>(period) +
                                                        0.25 * static_cast<double>(c));
            v.push_back(std::sin(ph) + slope * static_cast<double>(t));
        }
    }
    return dataset_from_values("sine_trend", channels, std::move(v));
}

}  // namespace trits::testing
