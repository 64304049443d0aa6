#include "trits/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "trits/checkpoint.hpp"
#include "trits/trainer.hpp"

namespace trits {

namespace fs = std::filesystem;

namespace {

struct RunArgs {
    std::vector<std::string> data;
    std::string config;
    std::string out;
    std::string checkpoint;
    std::vector<std::string> overrides;
    std::string horizons;
    std::optional<std::uint64_t> seed;
    bool scaling = false;
    std::size_t windows = 4;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Config effective_config(const RunArgs& a) {
    Config cfg = a.config.empty() ? Config{} : load_config(a.config);
    for (const auto& o : a.overrides) apply_override(cfg, o);
    if (a.seed) cfg.seed = *a.seed;
    cfg.validate();
    return cfg;
}

std::vector<std::size_t> parse_horizons(const std::string& list) {
    std::vector<std::size_t> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("--horizons: '" + item + "' is not a positive integer");
        }
    }
    if (out.empty()) throw ConfigError("--horizons: empty list");
    return out;
}

/// (horizon, directory) pairs: one subdirectory per horizon when a list was given.
std::vector<std::pair<std::size_t, fs::path>> run_dirs(const RunArgs& a, const fs::path& root, std::size_t horizon) {
    if (a.horizons.empty()) return {{horizon, root}};
    std::vector<std::pair<std::size_t, fs::path>> out;
    for (auto h : parse_horizons(a.horizons)) out.emplace_back(h, root / ("T" + std::to_string(h)));
    return out;
}

void print_epoch(std::ostream& out, const EpochRecord& r) {
    out << "epoch " << r.epoch << "  lr " << fmt("%.3g", r.lr) << "  train_mse " << fmt("%.6f", r.train_mse)
        << "  val_mse " << fmt("%.6f", r.val.mse) << "  val_mae " << fmt("%.6f", r.val.mae) << "  ("
        << fmt("%.1f", r.seconds) << " s)\n";
}

struct LoadedRun {
    Config cfg;
    TriTS model;
};

LoadedRun load_run(const fs::path& dir, std::size_t channels) {
    const auto cfg_path = dir / "config.txt";
    const auto ckpt_path = dir / "model.ckpt";
    if (!fs::exists(ckpt_path)) throw FormatError("checkpoint not found: " + ckpt_path.string());
    if (!fs::exists(cfg_path)) throw FormatError("run config not found: " + cfg_path.string());
    LoadedRun run{load_config(cfg_path), {}};
    run.model = TriTS::make(run.cfg, channels);
    load_checkpoint(ckpt_path, run.model.params());
    return run;
}

int cmd_train(const RunArgs& a, std::ostream& out) {
    Config base = effective_config(a);
    const Dataset raw = load_csv(a.data.front(), base.date_column);
    for (const auto& [h, dir] : run_dirs(a, a.out, base.horizon)) {
        Config cfg = base;
        cfg.horizon = h;
        fs::create_directories(dir);
        auto data = prepare_data(raw, cfg);
        out << raw.name << "  L=" << cfg.lookback << "  T=" << h << "  channels=" << raw.channels() << '\n';
        TrainOptions opts;
        opts.on_epoch = [&out](const EpochRecord& r) { print_epoch(out, r); };
        auto res = train(cfg, data, opts);
        if (res.period) {
            out << "period " << res.period->period << (res.period->fallback ? " (fallback)" : "") << '\n';
        }
        if (res.diverged) out << res.diagnostic << '\n';
        save_checkpoint(dir / "model.ckpt", res.model.params());
        save_config(dir / "config.txt", res.config);
        auto test = evaluate(res.model, data.splits.test, "test", cfg.batch_size, true);
        auto base_line = repeat_last_baseline(data.splits.test, "baseline_test", cfg.lookback, h);
        write_metrics_csv(dir / "metrics.csv", res.history, {{res.best_epoch, test.report}, {0, base_line}});
        write_gates_csv(dir / "gates.csv", raw.name, test);
        write_predictions_csv(dir / "predictions.csv", test);
        out << "best epoch " << res.best_epoch << "  test_mse " << fmt("%.6f", test.report.mse) << "  test_mae "
            << fmt("%.6f", test.report.mae) << "  baseline_mse " << fmt("%.6f", base_line.mse) << '\n';
    }
    return 0;
}

int cmd_eval(const RunArgs& a, std::ostream& out) {
    if (a.checkpoint.empty()) throw ConfigError("eval needs --checkpoint DIR");
    const fs::path root = a.checkpoint;
    if (!fs::exists(root)) throw FormatError("checkpoint not found: " + root.string());
    std::optional<Dataset> raw;
    out << "dataset,horizon,mse,mae\n";
    for (const auto& [h, dir] : run_dirs(a, root, 0)) {
        const Config saved = load_config(dir / "config.txt");
        if (!raw) raw = load_csv(a.data.front(), saved.date_column);
        auto run = load_run(dir, raw->channels());
        if (h != 0 && run.cfg.horizon != h) {
            throw ShapeError("checkpoint in " + dir.string() + " was trained for T=" +
                             std::to_string(run.cfg.horizon) + ", not " + std::to_string(h));
        }
        auto data = prepare_data(*raw, run.cfg);
        auto ev = evaluate(run.model, data.splits.test, "test", run.cfg.batch_size);
        out << raw->name << ',' << run.cfg.horizon << ',' << fmt("%.6f", ev.report.mse) << ','
            << fmt("%.6f", ev.report.mae) << '\n';
    }
    return 0;
}

int cmd_predict(const RunArgs& a, std::ostream& out) {
    if (a.checkpoint.empty()) throw ConfigError("predict needs --checkpoint DIR");
    const fs::path dir = a.checkpoint;
    if (!fs::exists(dir / "config.txt")) throw FormatError("checkpoint not found: " + dir.string());
    const Config saved = load_config(dir / "config.txt");
    const Dataset raw = load_csv(a.data.front(), saved.date_column);
    auto run = load_run(dir, raw.channels());
    const std::size_t L = run.cfg.lookback, T = run.cfg.horizon, C = raw.channels();
    if (raw.rows() < L) throw ContractError("dataset has fewer rows than the lookback window");
    // same scaling the model was trained under
    auto scaler = prepare_data(raw, run.cfg).scaler;
    auto tail = scaler.apply(raw.slice_rows(raw.rows() - L, raw.rows()));
    NoGradGuard no_grad;
    auto y = run.model(constant(Tensor({1, L, C}, tail.values)));
    std::ostringstream csv;
    csv << "step,channel,value\n";
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c)
            csv << t << ',' << raw.channel_names[c] << ','
                << fmt("%.17g", y->value.at({0, t, c}) * scaler.stddev[c] + scaler.mean[c]) << '\n';
    if (a.out.empty()) {
        out << csv.str();
    } else {
        fs::create_directories(a.out);
        std::ofstream(fs::path(a.out) / "forecast.csv") << csv.str();
        out << "wrote " << (fs::path(a.out) / "forecast.csv").string() << '\n';
    }
    return 0;
}

int cmd_ablate(const RunArgs& a, std::ostream& out) {
    Config cfg = effective_config(a);
    const Dataset raw = load_csv(a.data.front(), cfg.date_column);
    auto data = prepare_data(raw, cfg);
    TrainOptions opts;
    opts.on_epoch = [&out](const EpochRecord& r) { print_epoch(out, r); };
    auto variants = standard_variants();
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        out << "== " << v.name << '\n';
        auto r = ablate(cfg, data, {v}, opts);
        rows.push_back(r.front());
    }
    fs::create_directories(a.out);
    write_ablation_csv(fs::path(a.out) / "ablation.csv", rows);
    out << "variant                 mse        mae\n";
    for (const auto& r : rows) {
        std::string name = r.variant.name;
        name.resize(std::max<std::size_t>(name.size(), 22), ' ');
        out << name << "  " << fmt("%.6f", r.test.mse) << "  " << fmt("%.6f", r.test.mae) << '\n';
    }
    return 0;
}

int cmd_stats(const RunArgs& a, std::ostream& out) {
    Config cfg = effective_config(a);
    out << "dataset,dim,rows,train,val,test,cov_ratio\n";
    for (const auto& path : a.data) {
        const Dataset ds = load_csv(path, cfg.date_column);
        const auto spec = standard_split(cfg.split, ds.name, ds.rows());
        const std::size_t L = cfg.lookback;
        // sizes count forecast origins; val/test carry L rows of context
        out << ds.name << ',' << ds.channels() << ',' << ds.rows() << ',' << window_origins(spec.train, L) << ','
            << window_origins(spec.val + L, L) << ',' << window_origins(spec.test + L, L) << ','
            << fmt("%.6f", season_trend_cov_ratio(ds, cfg.sma_window)) << '\n';
    }
    return 0;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("missing input: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        rows.push_back(std::move(f));
    }
    if (rows.empty()) throw FormatError("empty input: " + path.string());
    return rows;
}

int cmd_plot(const RunArgs& a, std::ostream& out) {
    const fs::path dir = a.out;
    std::vector<fs::path> runs;
    if (fs::exists(dir / "gates.csv")) runs.push_back(dir);
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && fs::exists(e.path() / "gates.csv")) runs.push_back(e.path());
    }
    if (runs.empty() && !a.scaling) throw FormatError("no gates.csv under " + dir.string());
    std::sort(runs.begin(), runs.end());

    if (!runs.empty()) {
        std::ofstream gates(dir / "plot_gates.csv");
        gates << "x,y,series\n";
        std::ofstream fc(dir / "plot_forecast.csv");
        fc << "x,y_true,y_pred,series\n";
        for (const auto& run : runs) {
            const auto label = run == dir ? std::string() : "/" + run.filename().string();
            auto g = read_csv_rows(run / "gates.csv");
            for (std::size_t i = 1; i < g.size(); ++i) gates << g[i][0] << label << ',' << g[i][3] << ',' << g[i][2] << '\n';

            auto p = read_csv_rows(run / "predictions.csv");
            // last channel of a few evenly spaced windows
            std::size_t windows = 0, last_channel = 0;
            for (std::size_t i = 1; i < p.size(); ++i) {
                windows = std::max(windows, std::stoul(p[i][0]) + 1);
                last_channel = std::max(last_channel, std::stoul(p[i][2]));
            }
            const std::size_t want = std::min(a.windows, windows);
            std::vector<std::size_t> picks;
            for (std::size_t k = 0; k < want; ++k) picks.push_back(want == 1 ? 0 : k * (windows - 1) / (want - 1));
            for (std::size_t i = 1; i < p.size(); ++i) {
                const auto w = std::stoul(p[i][0]);
                if (std::stoul(p[i][2]) != last_channel || !std::binary_search(picks.begin(), picks.end(), w)) continue;
                fc << p[i][1] << ',' << p[i][3] << ',' << p[i][4] << ",w" << w << label << '\n';
            }
        }
        out << "wrote " << (dir / "plot_gates.csv").string() << " and " << (dir / "plot_forecast.csv").string()
            << '\n';
    }

    if (a.scaling) {
        Config cfg = effective_config(a);
        fs::create_directories(dir);
        std::ofstream sc(dir / "plot_scaling.csv");
        sc << "x,y,series\n";
        const std::size_t P = cfg.vision_period ? cfg.vision_period : kDefaultPeriod;
        for (std::size_t L : {240, 480, 960, 1920}) {
            const double s = vision_forward_seconds(cfg.vision, L, cfg.horizon, 1, P, 8, 5, cfg.seed);
            sc << L << ',' << fmt("%.6g", s) << ",vision\n";
        }
        out << "wrote " << (dir / "plot_scaling.csv").string() << '\n';
    }
    return 0;
}

}  // namespace

double vision_forward_seconds(const VisionConfig& cfg, std::size_t lookback, std::size_t horizon,
                              std::size_t channels, std::size_t period, std::size_t batch, std::size_t repeats,
                              std::uint64_t seed) {
    auto rng = component_rng(seed, "vision");
    auto branch = VisionBranch::make(cfg, lookback, horizon, channels, period, rng);
    auto x = constant(Tensor::randn({batch, lookback, channels}, 1.0, rng));
    NoGradGuard no_grad;
    branch(x);  // warm-up
    std::vector<double> times;
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        auto y = branch(x);
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-branch (time, wavelet, vision-SSM) time series forecaster", "trits"};
    app.require_subcommand(1);
    RunArgs a;

    auto add_common = [&a](CLI::App* c) {
        c->add_option("--config", a.config, "flat key = value config file")->check(CLI::ExistingFile);
        c->add_option("--override", a.overrides, "KEY=VALUE, repeatable")->take_all();
        c->add_option("--seed", a.seed, "shorthand for trainer.seed");
    };
    auto* train_cmd = app.add_subcommand("train", "train and write checkpoint, metrics, gates, predictions");
    train_cmd->add_option("--data", a.data, "CSV dataset")->required()->expected(1);
    train_cmd->add_option("--out", a.out, "output directory")->required();
    train_cmd->add_option("--horizons", a.horizons, "comma list; one run per horizon in OUT/T<h>");
    add_common(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "test-split MSE/MAE of a trained run");
    eval_cmd->add_option("--data", a.data, "CSV dataset")->required()->expected(1);
    eval_cmd->add_option("--checkpoint", a.checkpoint, "run directory written by train")->required();
    eval_cmd->add_option("--horizons", a.horizons, "comma list of per-horizon runs");

    auto* predict_cmd = app.add_subcommand("predict", "forecast past the end of the dataset");
    predict_cmd->add_option("--data", a.data, "CSV dataset")->required()->expected(1);
    predict_cmd->add_option("--checkpoint", a.checkpoint, "run directory written by train")->required();
    predict_cmd->add_option("--out", a.out, "write forecast.csv here instead of stdout");

    auto* ablate_cmd = app.add_subcommand("ablate", "full model plus four ablations");
    ablate_cmd->add_option("--data", a.data, "CSV dataset")->required()->expected(1);
    ablate_cmd->add_option("--out", a.out, "output directory")->required();
    add_common(ablate_cmd);

    auto* stats_cmd = app.add_subcommand("stats", "dimension, split sizes and season/trend ratio");
    stats_cmd->add_option("--data", a.data, "CSV dataset, repeatable")->required();
    add_common(stats_cmd);

    auto* plot_cmd = app.add_subcommand("plot", "plot-ready tables from a run directory");
    plot_cmd->add_option("--out", a.out, "run directory (or a parent of per-horizon runs)")->required();
    plot_cmd->add_flag("--scaling", a.scaling, "also time the vision branch over growing L");
    plot_cmd->add_option("--windows", a.windows, "forecast windows to overlay")->check(CLI::PositiveNumber);
    add_common(plot_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(a, out);
        if (eval_cmd->parsed()) return cmd_eval(a, out);
        if (predict_cmd->parsed()) return cmd_predict(a, out);
        if (ablate_cmd->parsed()) return cmd_ablate(a, out);
        if (stats_cmd->parsed()) return cmd_stats(a, out);
        if (plot_cmd->parsed()) return cmd_plot(a, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace trits
