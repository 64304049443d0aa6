#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "../common/gradcheck.hpp"
#include "doctest.h"
#include "trits/adam.hpp"
#include "trits/autograd.hpp"
#include "trits/checkpoint.hpp"

using namespace trits;
using trits::testing::gradcheck;
using trits::testing::weighted_sum;

namespace {

Var rand_param(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    return parameter(Tensor::uniform(std::move(s), lo, hi, rng));
}

void check_op(const char* name, const std::function<Var()>& f, const std::vector<Var>& inputs) {
    CAPTURE(name);
    auto r = gradcheck([&] { return weighted_sum(f(), 99); }, inputs);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-6);
}

}  // namespace

TEST_CASE("evaluate: identity-padded matmul gives the plain product") {
    auto a = constant(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    auto b = constant(Tensor({3, 2}, {1, 0, 0, 1, 0, 0}));
    auto c = matmul(a, b);
    CHECK(c->shape() == Shape{2, 2});
    CHECK(c->value.vec() == std::vector<double>{1, 2, 4, 5});
}

TEST_CASE("evaluate: softmax of zeros is uniform") {
    auto y = softmax(constant(Tensor({3}, 0.0)));
    for (double v : y->value.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("evaluate: shape mismatch names both shapes") {
    auto a = constant(Tensor({2, 3}));
    auto b = constant(Tensor({2, 2}));
    try {
        matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[2x2]") != std::string::npos);
    }
    CHECK_THROWS_AS(add(constant(Tensor({3, 4})), constant(Tensor({3}))), ShapeError);
    // trailing broadcast is fine
    CHECK_NOTHROW(add(constant(Tensor({3, 4})), constant(Tensor({4}))));
}

TEST_CASE("backward: d/dx x^2 at 3 is 6") {
    auto x = parameter(Tensor::scalar(3.0));
    backward(mul(x, x));
    CHECK(x->grad.item() == doctest::Approx(6.0));
}

TEST_CASE("backward: sum of softmax has zero gradient") {
    auto logits = rand_param({5}, 3);
    backward(sum_all(softmax(logits)));
    for (double g : logits->grad.data()) CHECK(std::abs(g) < 1e-15);
}

TEST_CASE("backward: non-scalar root is a contract violation") {
    auto x = rand_param({2, 2}, 1);
    CHECK_THROWS_AS(backward(mul(x, x)), ContractError);
}

TEST_CASE("backward: deterministic over the same cached graph") {
    auto w = rand_param({4, 3}, 5);
    auto x = constant(Tensor({2, 4}, 0.5));
    auto loss = sum_all(gelu(matmul(x, w)));
    backward(loss);
    Tensor first = w->grad;
    w->zero_grad();
    backward(loss);
    CHECK(first.vec() == w->grad.vec());
}

TEST_CASE("no-grad mode records nothing") {
    auto w = rand_param({3}, 2);
    NoGradGuard guard;
    auto y = mul(w, w);
    CHECK_FALSE(y->requires_grad);
    CHECK(y->inputs.empty());
}

TEST_CASE("primitive gradients: linear algebra and elementwise") {
    auto a = rand_param({2, 3, 4}, 11);
    auto w = rand_param({4, 5}, 12);
    auto b = rand_param({2, 4, 3}, 13);
    auto v = rand_param({4}, 14);
    auto pos = rand_param({2, 3, 4}, 15, 0.5, 2.0);
    check_op("matmul rhs-2d", [&] { return matmul(a, w); }, {a, w});
    check_op("matmul batched", [&] { return matmul(a, b); }, {a, b});
    check_op("add broadcast", [&] { return add(a, v); }, {a, v});
    check_op("sub broadcast", [&] { return sub(v, a); }, {a, v});
    check_op("mul broadcast", [&] { return mul(a, v); }, {a, v});
    check_op("div", [&] { return div(a, pos); }, {a, pos});
    check_op("div broadcast", [&] { return div(pos, add_scalar(mul(v, v), 0.5)); }, {pos, v});
    check_op("silu", [&] { return silu(a); }, {a});
    check_op("gelu", [&] { return gelu(a); }, {a});
    check_op("exp", [&] { return exp(a); }, {a});
    check_op("softplus", [&] { return softplus(scale(a, 4.0)); }, {a});
    check_op("sqrt", [&] { return sqrt(pos); }, {pos});
    check_op("softmax", [&] { return softmax(scale(a, 3.0)); }, {a});
}

TEST_CASE("primitive gradients: shape manipulation and reductions") {
    auto a = rand_param({2, 3, 4}, 21);
    auto c = rand_param({2, 2, 4}, 22);
    check_op("permute", [&] { return permute(a, {2, 0, 1}); }, {a});
    check_op("reshape", [&] { return reshape(a, {6, 4}); }, {a});
    check_op("slice", [&] { return slice(a, 1, 1, 3); }, {a});
    check_op("concat", [&] { return concat({a, c, a}, 1); }, {a, c});
    check_op("flip", [&] { return flip(a, 1); }, {a});
    check_op("reduce_mean", [&] { return reduce_mean(a, 2); }, {a});
    check_op("reduce_sum keepdim", [&] { return reduce_sum(a, 0, true); }, {a});
    check_op("ema_scan", [&] { return ema_scan(a, 0.3); }, {a});
    check_op("expand_last", [&] { return expand_last(reduce_mean(a, 2, true), 5); }, {a});
}

TEST_CASE("primitive gradients: selective scan") {
    const std::size_t B = 2, N = 5, D = 3, n = 4;
    auto u = rand_param({B, N, D}, 31);
    auto draw = rand_param({B, N, D}, 32);
    auto a_log = rand_param({D, n}, 33, -0.5, 1.0);
    auto bm = rand_param({B, N, n}, 34);
    auto cm = rand_param({B, N, n}, 35);
    check_op("selective_scan",
             [&] { return selective_scan_op(u, softplus(draw), a_log, bm, cm); },
             {u, draw, a_log, bm, cm});
}

TEST_CASE("permute then inverse permute is bit-exact") {
    std::mt19937_64 rng(4);
    auto x = constant(Tensor::randn({3, 4, 5, 2}, 1.0, rng));
    auto y = permute(permute(x, {2, 0, 3, 1}), {1, 3, 0, 2});
    CHECK(y->value.vec() == x->value.vec());
    CHECK(y->shape() == x->shape());
}

TEST_CASE("softmax rows are nonnegative and sum to one") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto y = softmax(constant(Tensor::randn({7, 9}, 5.0, rng)));
        for (std::size_t r = 0; r < 7; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j < 9; ++j) {
                const double v = y->value[r * 9 + j];
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(std::abs(s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("adam: first step moves a unit-gradient scalar by about lr") {
    auto p = parameter(Tensor::scalar(1.0));
    ParamList params{{"p", p}};
    p->grad = Tensor::scalar(1.0);
    AdamState adam({.lr = 0.1});
    adam.step(params);
    // m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
    CHECK(p->value.item() == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-14));
    CHECK(adam.step_count() == 1);
    CHECK_FALSE(p->has_grad());
}

TEST_CASE("adam: zero grad leaves the parameter unchanged and decays moments") {
    auto p = parameter(Tensor::scalar(2.0));
    ParamList params{{"p", p}};
    AdamState adam({.lr = 0.1});
    p->grad = Tensor::scalar(1.0);
    adam.step(params);
    const double after_first = p->value.item();
    const double m1 = adam.first_moments()[0].item();
    p->grad = Tensor::scalar(0.0);
    adam.step(params);
    // the bias-corrected first moment is still nonzero, so a zero grad keeps moving
    // the parameter; from fresh state it must not move
    CHECK(adam.first_moments()[0].item() == doctest::Approx(0.9 * m1));
    CHECK(adam.step_count() == 2);
    CHECK(p->value.item() < after_first);

    auto q = parameter(Tensor::scalar(2.0));
    ParamList qs{{"q", q}};
    AdamState fresh({.lr = 0.1});
    q->grad = Tensor::scalar(0.0);
    fresh.step(qs);
    CHECK(q->value.item() == 2.0);
    CHECK(fresh.first_moments()[0].item() == 0.0);
}

TEST_CASE("adam: missing grad is a contract violation") {
    auto p = parameter(Tensor::scalar(1.0));
    AdamState adam;
    CHECK_THROWS_AS(adam.step({{"p", p}}), ContractError);
}

TEST_CASE("adam: two seeded runs are bit-identical after 10 steps") {
    auto run = [] {
        auto w = rand_param({3, 2}, 77);
        auto x = constant(Tensor({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1}));
        ParamList params{{"w", w}};
        AdamState adam({.lr = 0.05});
        for (int i = 0; i < 10; ++i) {
            backward(mean_all(gelu(matmul(x, w))));
            adam.step(params);
        }
        return w->value.vec();
    };
    CHECK(run() == run());
}

TEST_CASE("checkpoint: byte layout and round trip") {
    const auto path = std::filesystem::temp_directory_path() / "trits_ckpt_test.trts";
    auto w = parameter(Tensor({2, 1}, {1.5, -2.0}));
    auto s = parameter(Tensor::scalar(0.25));
    save_checkpoint(path, {{"w", w}, {"s", s}});

    std::ifstream is(path, std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), {});
    REQUIRE(bytes.size() == 5 + (8 + 1 + 8 + 16 + 16) + (8 + 1 + 8 + 8));
    CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "TRTS1");
    CHECK(bytes[5] == 1);  // name length, little-endian u64
    CHECK(bytes[13] == 'w');
    CHECK(bytes[14] == 2);  // rank
    CHECK(bytes[22] == 2);  // extent 0
    // 1.5 == 0x3FF8000000000000, little-endian
    CHECK(bytes[38] == 0x00);
    CHECK(bytes[44] == 0xF8);
    CHECK(bytes[45] == 0x3F);

    auto w2 = parameter(Tensor({2, 1}));
    auto s2 = parameter(Tensor::scalar(0.0));
    load_checkpoint(path, {{"s", s2}, {"w", w2}});
    CHECK(w2->value.vec() == w->value.vec());
    CHECK(s2->value.item() == 0.25);

    auto wrong = parameter(Tensor({3}));
    CHECK_THROWS_AS(load_checkpoint(path, {{"w", wrong}, {"s", s2}}), ShapeError);
    CHECK_THROWS_AS(load_checkpoint(path, {{"w", w2}}), FormatError);
    std::filesystem::remove(path);
}
