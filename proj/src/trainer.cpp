#include "trits/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "trits/log.hpp"
#include "trits/optim.hpp"

namespace trits {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path.string());
    return os;
}

}  // namespace

PreparedData prepare_data(const Dataset& raw, const Config& cfg) {
    PreparedData d;
    d.name = raw.name;
    d.spec = standard_split(cfg.split, raw.name, raw.rows());
    auto parts = split(raw, d.spec, cfg.lookback);
    d.scaler = Scaler::fit(parts.train);
    d.splits = {d.scaler.apply(parts.train), d.scaler.apply(parts.val), d.scaler.apply(parts.test)};
    return d;
}

Config resolve_period(Config cfg, const Dataset& train, PeriodEstimate* estimate) {
    if (cfg.vision_period != 0) return cfg;
    const std::size_t L = cfg.lookback, C = train.channels();
    const std::size_t windows = train.rows() / L;
    if (windows == 0) throw ContractError("training split is shorter than one lookback window");
    Tensor x({windows, L, C});
    std::copy(train.values.begin(), train.values.begin() + static_cast<std::ptrdiff_t>(windows * L * C),
              x.data().begin());
    const auto est = detect_period(x);
    cfg.vision_period = est.period;
    if (estimate) *estimate = est;
    return cfg;
}

void MetricAccumulator::add(const Tensor& pred, const Tensor& target) {
    if (pred.shape() != target.shape() || pred.shape().size() != 3 || pred.shape()[1] != step_sq_.size()) {
        throw ShapeError("metric batch", pred.shape(), target.shape());
    }
    const std::size_t B = pred.shape()[0], T = pred.shape()[1], C = pred.shape()[2];
    auto p = pred.data();
    auto y = target.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t c = 0; c < C; ++c) {
                const std::size_t i = (b * T + t) * C + c;
                const double e = p[i] - y[i];
                step_sq_[t] += e * e;
                abs_ += std::abs(e);
            }
            step_n_[t] += C;
        }
    }
    windows_ += B;
}

MetricReport MetricAccumulator::report(const std::string& split) const {
    MetricReport r;
    r.split = split;
    r.windows = windows_;
    const double sq = std::accumulate(step_sq_.begin(), step_sq_.end(), 0.0);
    const auto n = std::accumulate(step_n_.begin(), step_n_.end(), std::size_t{0});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mse = n ? sq / static_cast<double>(n) : nan;
    r.mae = n ? abs_ / static_cast<double>(n) : nan;
    for (std::size_t t = 0; t < step_sq_.size(); ++t)
        r.step_mse.push_back(step_n_[t] ? step_sq_[t] / static_cast<double>(step_n_[t]) : nan);
    return r;
}

Evaluation evaluate(const TriTS& model, const Dataset& split, const std::string& split_name, std::size_t batch,
                    bool keep_predictions) {
    const auto t0 = Clock::now();
    const auto& cfg = model.config();
    if (split.channels() != model.channels()) {
        throw ShapeError("evaluate: model has " + std::to_string(model.channels()) + " channels, split '" +
                         split_name + "' has " + std::to_string(split.channels()));
    }
    NoGradGuard no_grad;
    WindowStream ws(split, cfg.lookback, cfg.horizon, 1, batch);
    MetricAccumulator acc(cfg.horizon);
    Evaluation ev;
    ev.order = model.modalities();
    ev.gate_means.assign(ev.order.size(), 0.0);
    const std::size_t C = split.channels(), T = cfg.horizon, k = ev.order.size();
    std::vector<double> preds, targets;
    std::size_t gate_rows = 0;
    while (auto b = ws.next()) {
        auto r = model.forward(constant(b->x));
        acc.add(r.prediction->value, b->y);
        auto g = r.gates->value.data();
        for (std::size_t i = 0; i < g.size(); ++i) ev.gate_means[i % k] += g[i];
        gate_rows += g.size() / k;
        if (keep_predictions) {
            ev.starts.insert(ev.starts.end(), b->starts.begin(), b->starts.end());
            auto pv = r.prediction->value.data();
            auto yv = b->y.data();
            preds.insert(preds.end(), pv.begin(), pv.end());
            targets.insert(targets.end(), yv.begin(), yv.end());
        }
    }
    for (double& g : ev.gate_means) g = gate_rows ? g / static_cast<double>(gate_rows) : 0.0;
    if (keep_predictions) {
        const std::size_t W = ev.starts.size();
        ev.predictions = Tensor({W, T, C}, std::move(preds));
        ev.targets = Tensor({W, T, C}, std::move(targets));
    }
    ev.report = acc.report(split_name);
    ev.report.parameters = param_count(model.params());
    ev.report.seconds = seconds_since(t0);
    return ev;
}

MetricReport repeat_last_baseline(const Dataset& split, const std::string& split_name, std::size_t lookback,
                                  std::size_t horizon) {
    const auto t0 = Clock::now();
    WindowStream ws(split, lookback, horizon, 1, 256);
    MetricAccumulator acc(horizon);
    const std::size_t C = split.channels();
    while (auto b = ws.next()) {
        const std::size_t B = b->starts.size();
        Tensor pred({B, horizon, C});
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t t = 0; t < horizon; ++t)
                for (std::size_t c = 0; c < C; ++c) pred.at({i, t, c}) = b->x.at({i, lookback - 1, c});
        acc.add(pred, b->y);
    }
    auto r = acc.report(split_name);
    r.seconds = seconds_since(t0);
    return r;
}

double scheduled_lr(const Config& cfg, std::size_t epoch) {
    if (epoch <= cfg.decay_after) return cfg.lr;
    return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch - cfg.decay_after));
}

TrainResult train(const Config& cfg_in, const PreparedData& data, const TrainOptions& options) {
    TrainResult res;
    PeriodEstimate est;
    res.config = resolve_period(cfg_in, data.splits.train, &est);
    if (cfg_in.vision_period == 0) res.period = est;
    const Config& cfg = res.config;
    const std::size_t C = data.splits.train.channels();
    res.model = TriTS::make(cfg, C);
    const auto params = res.model.params();

    WindowStream train_ws(data.splits.train, cfg.lookback, cfg.horizon, cfg.stride, cfg.batch_size, true);
    if (train_ws.size() == 0) throw ContractError("training split yields no windows");
    if (window_count(data.splits.val.rows(), cfg.lookback, cfg.horizon, 1) == 0) {
        throw ContractError("validation split yields no windows");
    }
    if (train_ws.size() < cfg.batch_size) {
        log_warning("only " + std::to_string(train_ws.size()) + " training windows; using them as one batch");
        train_ws = WindowStream(data.splits.train, cfg.lookback, cfg.horizon, cfg.stride, train_ws.size(), true);
    }

    Adam opt(params, cfg.lr);
    auto shuffle_rng = component_rng(cfg.seed, "shuffle");
    std::vector<std::size_t> order(train_ws.size());
    std::vector<Tensor> best = snapshot(params);
    res.best_val_mse = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = Clock::now();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = scheduled_lr(cfg, epoch);
        opt.set_lr(rec.lr);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        train_ws.set_order(order);

        double loss_sum = 0.0, abs_sum = 0.0;
        std::size_t batches = 0, elems = 0;
        while (auto b = train_ws.next()) {
            Var diff, loss;
            std::string failure;
            try {
                auto pred = res.model(constant(b->x));
                diff = sub(pred, constant(b->y));
                loss = mean_all(mul(diff, diff));
                if (!std::isfinite(loss->value[0])) failure = "non-finite training loss";
            } catch (const NumericalError& e) {
                failure = std::string("non-finite state (") + e.what() + ")";
            }
            if (!failure.empty()) {
                res.diverged = true;
                res.diagnostic = failure + " at epoch " + std::to_string(epoch) + ", batch " +
                                 std::to_string(batches + 1) + "; restored the last good weights";
                break;
            }
            const double lv = loss->value[0];
            zero_grads(params);
            backward(loss);
            clip_grad_norm(params, cfg.clip_norm);
            opt.step();
            loss_sum += lv;
            for (double d : diff->value.data()) abs_sum += std::abs(d);
            elems += diff->value.numel();
            ++batches;
        }
        if (res.diverged) break;
        rec.train_mse = loss_sum / static_cast<double>(batches);
        rec.train_mae = abs_sum / static_cast<double>(elems);
        try {
            rec.val = evaluate(res.model, data.splits.val, "val", cfg.batch_size).report;
        } catch (const NumericalError&) {
            rec.val.split = "val";
            rec.val.mse = rec.val.mae = std::numeric_limits<double>::quiet_NaN();
        }
        rec.seconds = seconds_since(t0);
        if (!std::isfinite(rec.val.mse)) {
            res.diverged = true;
            res.diagnostic = "non-finite validation MSE at epoch " + std::to_string(epoch) +
                             "; restored the last good weights";
            res.history.push_back(rec);
            if (options.on_epoch) options.on_epoch(rec);
            break;
        }
        if (rec.val.mse < res.best_val_mse) {
            res.best_val_mse = rec.val.mse;
            res.best_epoch = epoch;
            best = snapshot(params);
            bad_epochs = 0;
        } else {
            ++bad_epochs;
        }
        res.history.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec);
        if (bad_epochs >= cfg.patience) break;
        if (options.stop_when && options.stop_when(rec)) break;
    }
    if (res.diverged) log_warning(res.diagnostic);
    restore(params, best);
    return res;
}

std::vector<AblationVariant> standard_variants() {
    return {
        {"TriTS (Full Model)", true, true, true, true},
        {"w/o Time Branch", false, true, true, true},
        {"w/o Freq Branch", true, false, true, true},
        {"w/o Vision Branch", true, true, false, true},
        {"w/o Gating Fusion", true, true, true, false},
    };
}

Config apply_variant(Config cfg, const AblationVariant& v) {
    cfg.time_enabled = v.time;
    cfg.freq_enabled = v.freq;
    cfg.vision_enabled = v.vision;
    cfg.gated = v.gated;
    return cfg;
}

std::vector<AblationRow> ablate(const Config& cfg, const PreparedData& data,
                                const std::vector<AblationVariant>& variants, const TrainOptions& options) {
    // one period for every variant, so "w/o Vision" is the only one that changes the image path
    Config base = cfg;
    base.vision_period = resolve_period(cfg, data.splits.train).vision_period;
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        Config vc = apply_variant(base, v);
        vc.validate();
        auto tr = train(vc, data, options);
        auto ev = evaluate(tr.model, data.splits.test, "test", vc.batch_size);
        rows.push_back({v, ev.report, tr.history.size(), ev.gate_means});
    }
    return rows;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history,
                       const std::vector<std::pair<std::size_t, MetricReport>>& final_rows) {
    auto os = open_out(path);
    os << "epoch,split,mse,mae\n";
    for (const auto& r : history) {
        os << r.epoch << ",train," << fmt(r.train_mse) << ',' << fmt(r.train_mae) << '\n';
        os << r.epoch << ",val," << fmt(r.val.mse) << ',' << fmt(r.val.mae) << '\n';
    }
    for (const auto& [epoch, r] : final_rows) os << epoch << ',' << r.split << ',' << fmt(r.mse) << ',' << fmt(r.mae) << '\n';
}

void write_gates_csv(const std::filesystem::path& path, const std::string& dataset, const Evaluation& eval) {
    auto os = open_out(path);
    os << "dataset,split,modality,weight\n";
    for (std::size_t i = 0; i < eval.order.size(); ++i) {
        os << dataset << ',' << eval.report.split << ',' << modality_name(eval.order[i]) << ','
           << fmt(eval.gate_means[i]) << '\n';
    }
}

void write_predictions_csv(const std::filesystem::path& path, const Evaluation& eval) {
    auto os = open_out(path);
    os << "window_id,step,channel,y_true,y_pred\n";
    if (eval.predictions.empty()) return;
    const auto& s = eval.predictions.shape();
    for (std::size_t w = 0; w < s[0]; ++w)
        for (std::size_t t = 0; t < s[1]; ++t)
            for (std::size_t c = 0; c < s[2]; ++c)
                os << w << ',' << t << ',' << c << ',' << fmt(eval.targets.at({w, t, c})) << ','
                   << fmt(eval.predictions.at({w, t, c})) << '\n';
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
    auto os = open_out(path);
    os << "variant,mse,mae,epochs\n";
    for (const auto& r : rows)
        os << '"' << r.variant.name << "\"," << fmt(r.test.mse) << ',' << fmt(r.test.mae) << ',' << r.epochs << '\n';
}

}  // namespace trits
