#include "trits/fusion.hpp"

namespace trits {

namespace {

const Shape& common_shape(const std::vector<Var>& outputs, const char* op) {
    if (outputs.empty()) throw ContractError(std::string(op) + ": no branch outputs");
    const Shape& s = outputs.front()->shape();
    if (s.size() != 3) throw ShapeError(std::string(op) + ": expected [B, T, C], got " + shape_str(s));
    for (const auto& o : outputs) {
        if (o->shape() != s) throw ShapeError(op, s, o->shape());
    }
    return s;
}

}  // namespace

GateNetwork GateNetwork::make(std::size_t branches, std::size_t channels, std::size_t hidden,
                              std::mt19937_64& rng) {
    if (branches < 1 || hidden < 1) throw ConfigError("gate needs >= 1 branch and hidden width >= 1");
    GateNetwork g;
    g.branches = branches;
    g.channels = channels;
    g.mlp.fc1 = Linear::make(branches * channels, hidden, rng);
    g.mlp.fc2 = Linear::zeros(hidden, branches * channels);
    return g;
}

void GateNetwork::collect(const std::string& prefix, ParamList& out) const { mlp.collect(prefix, out); }

Var gate_logits(const std::vector<Var>& outputs, const GateNetwork& net) {
    const Shape s = common_shape(outputs, "gate");
    if (outputs.size() != net.branches || s[2] != net.channels) {
        throw ShapeError("gate network", s, Shape{net.branches, net.channels});
    }
    auto features = outputs.size() == 1 ? outputs.front() : concat(outputs, 2);  // [B, T, k*C]
    return reshape(net.mlp(features), {s[0], s[1], s[2], outputs.size()});
}

Var gate_from_logits(const Var& logits) { return softmax(logits); }

Var gate(const std::vector<Var>& outputs, const GateNetwork& net) {
    return gate_from_logits(gate_logits(outputs, net));
}

Var equal_gate(const std::vector<Var>& outputs) {
    const Shape s = common_shape(outputs, "equal_gate");
    const double w = 1.0 / static_cast<double>(outputs.size());
    return constant(Tensor({s[0], s[1], s[2], outputs.size()}, w));
}

Var fuse(const std::vector<Var>& outputs, const Var& weights) {
    const Shape s = common_shape(outputs, "fuse");
    const Shape ws{s[0], s[1], s[2], outputs.size()};
    if (weights->shape() != ws) throw ShapeError("fuse", ws, weights->shape());
    std::vector<Var> cols;
    for (const auto& o : outputs) cols.push_back(reshape(o, {s[0], s[1], s[2], 1}));
    auto stacked = cols.size() == 1 ? cols.front() : concat(cols, 3);
    return reduce_sum(mul(weights, stacked), 3);
}

std::vector<double> mean_gate_report(const std::vector<Tensor>& gates) {
    if (gates.empty()) throw ContractError("mean_gate_report: no gate tensors");
    const std::size_t k = gates.front().shape().back();
    std::vector<double> sum(k, 0.0);
    std::size_t rows = 0;
    for (const auto& g : gates) {
        if (g.rank() != 4 || g.shape().back() != k) throw ShapeError("mean_gate_report", gates.front().shape(), g.shape());
        const std::size_t n = g.numel() / k;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) sum[j] += g[i * k + j];
        rows += n;
    }
    for (double& v : sum) v /= static_cast<double>(rows);
    return sum;
}

}  // namespace trits
