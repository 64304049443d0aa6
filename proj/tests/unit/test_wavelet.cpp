#include <cmath>
#include <numbers>
#include <random>

#include "../common/db2_reference.hpp"
#include "doctest.h"
#include "trits/wavelet.hpp"

using namespace trits;

namespace {

Tensor as_batch(const std::vector<double>& v) { return Tensor({1, v.size(), 1}, v); }

Tensor random_batch(std::size_t B, std::size_t L, std::size_t C, std::mt19937_64& rng) {
    return Tensor::randn({B, L, C}, 1.0, rng);
}

double energy(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data()) s += v * v;
    return s;
}

}  // namespace

TEST_CASE("dwt: constant signal under Haar has zero details") {
    auto pyr = dwt_multilevel(Tensor({1, 8, 1}, 2.5), wavelet_by_name("haar"), 1);
    for (double d : pyr.details[0].data()) CHECK(std::abs(d) < 1e-15);
    for (double a : pyr.approx.data()) CHECK(a == doctest::Approx(std::sqrt(2.0) * 2.5).epsilon(1e-15));
}

TEST_CASE("dwt: Haar on [1,2,3,4]") {
    auto pyr = dwt_multilevel(as_batch({1, 2, 3, 4}), wavelet_by_name("haar"), 1);
    const double r = std::sqrt(2.0);
    REQUIRE(pyr.approx.numel() == 2);
    CHECK(pyr.approx[0] == doctest::Approx(3 / r).epsilon(1e-15));
    CHECK(pyr.approx[1] == doctest::Approx(7 / r).epsilon(1e-15));
    CHECK(pyr.details[0][0] == doctest::Approx(-1 / r).epsilon(1e-15));
    CHECK(pyr.details[0][1] == doctest::Approx(-1 / r).epsilon(1e-15));
}

TEST_CASE("dwt: db2 three levels match the frozen reference") {
    namespace ref = trits::testing::db2_ref;
    auto pyr = dwt_multilevel(as_batch(ref::kSignal), wavelet_by_name("db2"), 3);
    auto close = [](const Tensor& got, const std::vector<double>& want) {
        REQUIRE(got.numel() == want.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
        CHECK(worst < 1e-10);
    };
    close(pyr.approx, ref::kA3);
    close(pyr.details[2], ref::kD3);
    close(pyr.details[1], ref::kD2);
    close(pyr.details[0], ref::kD1);
}

TEST_CASE("dwt: level lengths follow the recursion") {
    CHECK(level_lengths(96, 4, 3) == std::vector<std::size_t>{49, 26, 14});
    CHECK(level_lengths(8, 4, 3) == std::vector<std::size_t>{5, 4, 3});
    CHECK(component_lengths(192, 4, 3) == std::vector<std::size_t>{26, 26, 50, 97});
}

TEST_CASE("dwt: too many levels names the feasible maximum") {
    try {
        dwt_multilevel(Tensor({1, 16, 1}), wavelet_by_name("db2"), 5);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("maximum feasible is 3") != std::string::npos);
    }
    CHECK_THROWS_AS(wavelet_by_name("sym9"), ConfigError);
}

TEST_CASE("idwt: round trip for benchmark lengths and both families") {
    std::mt19937_64 rng(12);
    for (const char* fam : {"haar", "db2"}) {
        const auto w = wavelet_by_name(fam);
        for (std::size_t L : {96, 192, 336, 720}) {
            auto x = random_batch(2, L, 3, rng);
            auto y = idwt_multilevel(dwt_multilevel(x, w, 3), w, L);
            CAPTURE(fam);
            CAPTURE(L);
            CHECK(max_abs_diff(x, y) < 1e-10);
        }
    }
}

TEST_CASE("idwt: zero pyramid gives zero signal") {
    const auto w = wavelet_by_name("db2");
    auto pyr = dwt_multilevel(Tensor({2, 40, 2}), w, 2);
    auto y = idwt_multilevel(pyr, w, 40);
    for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("idwt: approximation-only Haar pyramid of a constant rebuilds it") {
    const auto w = wavelet_by_name("haar");
    auto pyr = dwt_multilevel(Tensor({1, 24, 1}, -1.75), w, 3);
    for (auto& d : pyr.details) d.fill(0.0);
    auto y = idwt_multilevel(pyr, w, 24);
    for (double v : y.data()) CHECK(v == doctest::Approx(-1.75).epsilon(1e-14));
}

TEST_CASE("idwt: inconsistent level lengths are rejected") {
    const auto w = wavelet_by_name("db2");
    auto pyr = dwt_multilevel(Tensor({1, 96, 1}), w, 3);
    pyr.details[1] = Tensor({1, 20, 1});
    CHECK_THROWS_AS(idwt_multilevel(pyr, w, 96), ShapeError);
    auto ok = dwt_multilevel(Tensor({1, 96, 1}), w, 3);
    CHECK_THROWS_AS(idwt_multilevel(ok, w, 120), ShapeError);
}

TEST_CASE("dwt: Haar preserves energy on dyadic-friendly lengths") {
    std::mt19937_64 rng(3);
    const auto w = wavelet_by_name("haar");
    for (std::size_t L : {96, 192, 336, 720}) {
        auto x = random_batch(1, L, 2, rng);
        auto pyr = dwt_multilevel(x, w, 3);
        double e = energy(pyr.approx);
        for (const auto& d : pyr.details) e += energy(d);
        CHECK(e == doctest::Approx(energy(x)).epsilon(1e-12));
    }
}

TEST_CASE("dwt: high-frequency energy lands in the two finest detail bands") {
    const std::size_t L = 96;
    std::vector<double> high(L);
    for (std::size_t t = 0; t < L; ++t) high[t] = std::sin(2.0 * std::numbers::pi * t / 3.0);
    const auto w = wavelet_by_name("db2");
    auto pyr = dwt_multilevel(as_batch(high), w, 3);
    const double fine = energy(pyr.details[0]) + energy(pyr.details[1]);
    const double total = fine + energy(pyr.details[2]) + energy(pyr.approx);
    CHECK(fine / total >= 0.8);

    // the low component (period 24, three octaves down) stays out of D1
    std::vector<double> low(L);
    for (std::size_t t = 0; t < L; ++t) low[t] = std::sin(2.0 * std::numbers::pi * t / 24.0);
    auto lp = dwt_multilevel(as_batch(low), w, 3);
    CHECK(energy(lp.details[0]) < 0.05 * energy(as_batch(low)));
}

TEST_CASE("operator form agrees with the standalone transforms") {
    std::mt19937_64 rng(9);
    const auto w = wavelet_by_name("db2");
    const std::size_t L = 40, m = 3;
    auto x = random_batch(1, L, 1, rng);
    auto pyr = dwt_multilevel(x, w, m);
    auto an = analysis_matrices(L, w, m);
    auto syn = synthesis_matrices(L, w, m);
    REQUIRE(an.size() == m + 1);
    std::vector<const Tensor*> comps{&pyr.approx, &pyr.details[2], &pyr.details[1], &pyr.details[0]};
    std::vector<double> rebuilt(L, 0.0);
    for (std::size_t k = 0; k <= m; ++k) {
        const std::size_t len = an[k].dim(1);
        REQUIRE(comps[k]->numel() == len);
        for (std::size_t j = 0; j < len; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < L; ++i) s += x[i] * an[k][i * len + j];
            CHECK(std::abs(s - (*comps[k])[j]) < 1e-12);
            for (std::size_t t = 0; t < L; ++t) rebuilt[t] += s * syn[k][j * L + t];
        }
    }
    for (std::size_t t = 0; t < L; ++t) CHECK(std::abs(rebuilt[t] - x[t]) < 1e-10);
}
