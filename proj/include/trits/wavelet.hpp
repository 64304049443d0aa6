#pragma once

// Discrete wavelet transform with symmetric (half-sample) boundary extension.
//
// Conventions follow the usual filter-bank layout: for an input of length N and
// a filter of F taps, one analysis stage yields floor((N + F - 1) / 2)
// coefficients per band, and one synthesis stage yields 2N - F + 2 samples,
// which the multilevel inverse crops back to the previous level's length.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trits/tensor.hpp"

namespace trits {

struct WaveletFilter {
    std::string name;
    std::vector<double> dec_lo;
    std::vector<double> dec_hi;
    std::vector<double> rec_lo;
    std::vector<double> rec_hi;

    std::size_t taps() const noexcept { return dec_lo.size(); }
};

/// "haar" (alias "db1") or "db2". Unknown names raise ConfigError.
WaveletFilter wavelet_by_name(const std::string& name);
std::vector<std::string> supported_wavelets();

std::size_t dwt_length(std::size_t n, std::size_t taps);
std::size_t idwt_length(std::size_t n, std::size_t taps);

/// Coefficient lengths l_1..l_m for a signal of length n.
std::vector<std::size_t> level_lengths(std::size_t n, std::size_t taps, std::size_t levels);

/// Largest m with l_m >= taps (0 if even one level is infeasible).
std::size_t max_feasible_levels(std::size_t n, std::size_t taps);

/// Throws ConfigError naming the maximum feasible level count.
void check_levels(std::size_t n, const WaveletFilter& filter, std::size_t levels);

struct DwtBands {
    std::vector<double> approx;
    std::vector<double> detail;
};

DwtBands dwt_1d(std::span<const double> x, const WaveletFilter& filter);
/// Either band may be empty (treated as zeros). Output length 2N - F + 2.
std::vector<double> idwt_1d(std::span<const double> approx, std::span<const double> detail,
                            const WaveletFilter& filter);

/// Top-level approximation plus details; details[0] is D_1 (finest), details[m-1] is D_m.
/// Every tensor is laid out [B, length, C].
struct WaveletPyramid {
    Tensor approx;
    std::vector<Tensor> details;

    std::size_t levels() const noexcept { return details.size(); }
};

WaveletPyramid dwt_multilevel(const Tensor& x, const WaveletFilter& filter, std::size_t levels);
Tensor idwt_multilevel(const WaveletPyramid& pyramid, const WaveletFilter& filter,
                       std::size_t target_length);

/// Component order used by the frequency branch: k = 0 is A_m, then D_m, ..., D_1.
std::vector<std::size_t> component_lengths(std::size_t n, std::size_t taps, std::size_t levels);

/// Linear-operator form of the transforms, built by pushing unit vectors through
/// the standalone routines above.
///   analysis[k]:  [n, len_k]   coefficients_k = signal_row @ analysis[k]
///   synthesis[k]: [len_k, n]   signal_row = sum_k coefficients_k @ synthesis[k]
/// with len_k = component_lengths(n, taps, levels)[k] on both sides.
std::vector<Tensor> analysis_matrices(std::size_t n, const WaveletFilter& filter, std::size_t levels);
std::vector<Tensor> synthesis_matrices(std::size_t n, const WaveletFilter& filter, std::size_t levels);

}  // namespace trits
