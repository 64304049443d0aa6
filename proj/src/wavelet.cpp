#include "trits/wavelet.hpp"

#include <cmath>

namespace trits {

namespace {

// Half-sample symmetric extension: x[-1-k] = x[k], x[n+k] = x[n-1-k], repeated.
std::size_t reflect(long long i, std::size_t n) {
    const long long period = 2 * static_cast<long long>(n);
    long long r = i % period;
    if (r < 0) r += period;
    return r < static_cast<long long>(n) ? static_cast<std::size_t>(r)
                                          : static_cast<std::size_t>(period - 1 - r);
}

WaveletFilter from_rec_lo(std::string name, std::vector<double> rec_lo) {
    const std::size_t f = rec_lo.size();
    WaveletFilter w;
    w.name = std::move(name);
    w.rec_lo = rec_lo;
    w.dec_lo.assign(rec_lo.rbegin(), rec_lo.rend());
    w.rec_hi.resize(f);
    for (std::size_t i = 0; i < f; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        w.rec_hi[i] = sign * rec_lo[f - 1 - i];
    }
    w.dec_hi.assign(w.rec_hi.rbegin(), w.rec_hi.rend());
    return w;
}

void check_rank3(const Tensor& t, const char* what) {
    if (t.rank() != 3) throw ShapeError(std::string(what) + ": expected [B, length, C], got " + shape_str(t.shape()));
}

}  // namespace

WaveletFilter wavelet_by_name(const std::string& name) {
    if (name == "haar" || name == "db1") {
        const double h = 1.0 / std::sqrt(2.0);
        return from_rec_lo(name, {h, h});
    }
    if (name == "db2") {
        const double s3 = std::sqrt(3.0);
        const double norm = 4.0 * std::sqrt(2.0);
        return from_rec_lo(name, {(1.0 + s3) / norm, (3.0 + s3) / norm, (3.0 - s3) / norm, (1.0 - s3) / norm});
    }
    std::string msg = "unknown wavelet '" + name + "' (supported:";
    for (const auto& s : supported_wavelets()) msg += " " + s;
    throw ConfigError(msg + ")");
}

std::vector<std::string> supported_wavelets() { return {"haar", "db1", "db2"}; }

std::size_t dwt_length(std::size_t n, std::size_t taps) { return (n + taps - 1) / 2; }

std::size_t idwt_length(std::size_t n, std::size_t taps) { return 2 * n + 2 - taps; }

std::vector<std::size_t> level_lengths(std::size_t n, std::size_t taps, std::size_t levels) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < levels; ++i) {
        n = dwt_length(n, taps);
        out.push_back(n);
    }
    return out;
}

std::size_t max_feasible_levels(std::size_t n, std::size_t taps) {
    std::size_t m = 0;
    while (true) {
        const std::size_t next = dwt_length(n, taps);
        if (next < taps || next >= n) return m;
        n = next;
        ++m;
    }
}

void check_levels(std::size_t n, const WaveletFilter& filter, std::size_t levels) {
    if (levels == 0) throw ConfigError("wavelet levels must be >= 1");
    const std::size_t max_m = max_feasible_levels(n, filter.taps());
    if (levels > max_m) {
        throw ConfigError("length " + std::to_string(n) + " is too short for " + std::to_string(levels) +
                          " " + filter.name + " levels; maximum feasible is " + std::to_string(max_m));
    }
}

DwtBands dwt_1d(std::span<const double> x, const WaveletFilter& filter) {
    const std::size_t n = x.size();
    const std::size_t f = filter.taps();
    if (n == 0) throw ContractError("dwt_1d: empty signal");
    const std::size_t out = dwt_length(n, f);
    DwtBands r{std::vector<double>(out), std::vector<double>(out)};
    for (std::size_t o = 0; o < out; ++o) {
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            const double v = x[reflect(static_cast<long long>(2 * o + 1) - static_cast<long long>(j), n)];
            a += filter.dec_lo[j] * v;
            d += filter.dec_hi[j] * v;
        }
        r.approx[o] = a;
        r.detail[o] = d;
    }
    return r;
}

std::vector<double> idwt_1d(std::span<const double> approx, std::span<const double> detail,
                            const WaveletFilter& filter) {
    if (!approx.empty() && !detail.empty() && approx.size() != detail.size()) {
        throw ShapeError("idwt_1d", Shape{approx.size()}, Shape{detail.size()});
    }
    const std::size_t n = approx.empty() ? detail.size() : approx.size();
    const std::size_t f = filter.taps();
    if (n == 0 || 2 * n + 2 <= f) throw ContractError("idwt_1d: too few coefficients");
    const std::size_t out = idwt_length(n, f);
    std::vector<double> y(out, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = approx.empty() ? 0.0 : approx[k];
        const double d = detail.empty() ? 0.0 : detail[k];
        // sample n' = 2k - f + 2 + i receives tap i
        for (std::size_t i = 0; i < f; ++i) {
            const long long pos = static_cast<long long>(2 * k + i) - static_cast<long long>(f) + 2;
            if (pos < 0 || pos >= static_cast<long long>(out)) continue;
            y[static_cast<std::size_t>(pos)] += a * filter.rec_lo[i] + d * filter.rec_hi[i];
        }
    }
    return y;
}

WaveletPyramid dwt_multilevel(const Tensor& x, const WaveletFilter& filter, std::size_t levels) {
    check_rank3(x, "dwt_multilevel");
    const std::size_t B = x.dim(0), L = x.dim(1), C = x.dim(2);
    check_levels(L, filter, levels);
    const auto lens = level_lengths(L, filter.taps(), levels);

    WaveletPyramid pyr;
    for (auto len : lens) pyr.details.emplace_back(Shape{B, len, C});
    pyr.approx = Tensor({B, lens.back(), C});

    std::vector<double> cur;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            cur.resize(L);
            for (std::size_t t = 0; t < L; ++t) cur[t] = x[(b * L + t) * C + c];
            for (std::size_t lvl = 0; lvl < levels; ++lvl) {
                auto bands = dwt_1d(cur, filter);
                Tensor& d = pyr.details[lvl];
                const std::size_t len = lens[lvl];
                for (std::size_t t = 0; t < len; ++t) d[(b * len + t) * C + c] = bands.detail[t];
                cur = std::move(bands.approx);
            }
            const std::size_t len = lens.back();
            for (std::size_t t = 0; t < len; ++t) pyr.approx[(b * len + t) * C + c] = cur[t];
        }
    }
    return pyr;
}

Tensor idwt_multilevel(const WaveletPyramid& pyramid, const WaveletFilter& filter,
                       std::size_t target_length) {
    const std::size_t m = pyramid.levels();
    if (m == 0) throw ContractError("idwt_multilevel: pyramid has no levels");
    check_rank3(pyramid.approx, "idwt_multilevel");
    const std::size_t B = pyramid.approx.dim(0), C = pyramid.approx.dim(2);
    const std::size_t f = filter.taps();
    for (const auto& d : pyramid.details) {
        check_rank3(d, "idwt_multilevel");
        if (d.dim(0) != B || d.dim(2) != C) throw ShapeError("idwt_multilevel", pyramid.approx.shape(), d.shape());
    }
    if (pyramid.details.back().dim(1) != pyramid.approx.dim(1)) {
        throw ShapeError("idwt_multilevel: A_m vs D_m", pyramid.approx.shape(), pyramid.details.back().shape());
    }
    // output length of level i must be l_{i-1} or l_{i-1} + 1
    std::vector<std::size_t> out_len(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t produced = idwt_length(pyramid.details[i].dim(1), f);
        const std::size_t wanted = (i == 0) ? target_length : pyramid.details[i - 1].dim(1);
        if (produced != wanted && produced != wanted + 1) {
            throw ShapeError("idwt_multilevel: level " + std::to_string(i + 1) + " reconstructs " +
                             std::to_string(produced) + " samples but the next level needs " +
                             std::to_string(wanted));
        }
        out_len[i] = wanted;
    }

    Tensor y({B, target_length, C});
    std::vector<double> a, d;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t top = pyramid.approx.dim(1);
            a.resize(top);
            for (std::size_t t = 0; t < top; ++t) a[t] = pyramid.approx[(b * top + t) * C + c];
            for (std::size_t lvl = m; lvl-- > 0;) {
                const Tensor& dt = pyramid.details[lvl];
                const std::size_t len = dt.dim(1);
                d.resize(len);
                for (std::size_t t = 0; t < len; ++t) d[t] = dt[(b * len + t) * C + c];
                a = idwt_1d(a, d, filter);
                a.resize(out_len[lvl]);
            }
            for (std::size_t t = 0; t < target_length; ++t) y[(b * target_length + t) * C + c] = a[t];
        }
    }
    return y;
}

std::vector<std::size_t> component_lengths(std::size_t n, std::size_t taps, std::size_t levels) {
    auto lens = level_lengths(n, taps, levels);
    std::vector<std::size_t> out{lens.back()};
    for (std::size_t i = levels; i-- > 0;) out.push_back(lens[i]);
    return out;
}

std::vector<Tensor> analysis_matrices(std::size_t n, const WaveletFilter& filter, std::size_t levels) {
    const auto comp = component_lengths(n, filter.taps(), levels);
    std::vector<Tensor> mats;
    for (auto len : comp) mats.emplace_back(Shape{n, len});
    // no feasibility check: short horizons are legitimately decomposed past l_m < taps
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> cur(n, 0.0);
        cur[i] = 1.0;
        std::vector<std::vector<double>> details;
        for (std::size_t lvl = 0; lvl < levels; ++lvl) {
            auto bands = dwt_1d(cur, filter);
            details.push_back(std::move(bands.detail));
            cur = std::move(bands.approx);
        }
        for (std::size_t j = 0; j < comp[0]; ++j) mats[0][i * comp[0] + j] = cur[j];
        for (std::size_t k = 1; k <= levels; ++k) {
            const auto& det = details[levels - k];
            for (std::size_t j = 0; j < comp[k]; ++j) mats[k][i * comp[k] + j] = det[j];
        }
    }
    return mats;
}

std::vector<Tensor> synthesis_matrices(std::size_t n, const WaveletFilter& filter, std::size_t levels) {
    const auto comp = component_lengths(n, filter.taps(), levels);
    const auto lens = level_lengths(n, filter.taps(), levels);
    std::vector<Tensor> mats;
    for (std::size_t k = 0; k <= levels; ++k) {
        mats.emplace_back(Shape{comp[k], n});
        for (std::size_t j = 0; j < comp[k]; ++j) {
            WaveletPyramid pyr;
            pyr.approx = Tensor({1, lens.back(), 1});
            for (auto len : lens) pyr.details.emplace_back(Shape{1, len, 1});
            if (k == 0) {
                pyr.approx[j] = 1.0;
            } else {
                pyr.details[levels - k][j] = 1.0;
            }
            Tensor y = idwt_multilevel(pyr, filter, n);
            for (std::size_t t = 0; t < n; ++t) mats[k][j * n + t] = y[t];
        }
    }
    return mats;
}

}  // namespace trits
