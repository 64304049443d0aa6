#include "trits/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "trits/error.hpp"
#include "trits/log.hpp"

namespace trits {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string f = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto b = f.find_first_not_of(" \t\"");
        const auto e = f.find_last_not_of(" \t\"\r");
        out.push_back(b == std::string::npos ? std::string() : f.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_cell(const std::string& s, double& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset Dataset::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) {
        throw std::out_of_range("rows [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
                                std::to_string(rows()) + " rows");
    }
    Dataset d;
    d.name = name;
    d.channel_names = channel_names;
    if (!timestamps.empty()) d.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
    const std::size_t C = channels();
    d.values.assign(values.begin() + begin * C, values.begin() + end * C);
    return d;
}

Dataset Dataset::scaled(double k) const {
    Dataset d = *this;
    for (double& v : d.values) v *= k;
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& date_column) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.find_first_not_of(" \t\r") == std::string::npos) {
        throw FormatError(path.string() + ": empty file");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_fields(line);
    const auto date_it = std::find(header.begin(), header.end(), date_column);
    if (date_it == header.end()) {
        throw FormatError(path.string() + ": header has no '" + date_column + "' column");
    }
    const std::size_t date_idx = static_cast<std::size_t>(date_it - header.begin());

    Dataset ds;
    ds.name = path.stem().string();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != date_idx) ds.channel_names.push_back(header[i]);
    if (ds.channel_names.empty()) throw FormatError(path.string() + ": no value columns");

    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, header has " + std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == date_idx) {
                ds.timestamps.push_back(fields[i]);
                continue;
            }
            double v = 0.0;
            if (!parse_cell(fields[i], v)) {
                throw FormatError(path.string() + ": row " + std::to_string(row) + ", column " +
                                  std::to_string(i + 1) + " ('" + header[i] + "'): cannot parse '" + fields[i] + "'");
            }
            ds.values.push_back(v);
        }
    }
    if (row == 0) throw FormatError(path.string() + ": no data rows");
    return ds;
}

Dataset dataset_from_values(std::string name, std::size_t channels, std::vector<double> values) {
    if (channels == 0 || values.size() % channels != 0) {
        throw ShapeError("dataset_from_values: " + std::to_string(values.size()) + " values for " +
                         std::to_string(channels) + " channels");
    }
    Dataset d;
    d.name = std::move(name);
    for (std::size_t c = 0; c < channels; ++c) d.channel_names.push_back("c" + std::to_string(c));
    d.values = std::move(values);
    return d;
}

SplitSpec standard_split(const std::string& preset, const std::string& dataset_name, std::size_t rows) {
    std::string mode = preset;
    if (mode == "auto") {
        if (dataset_name.rfind("ETTh", 0) == 0) {
            mode = "etth";
        } else if (dataset_name.rfind("ETTm", 0) == 0) {
            mode = "ettm";
        } else {
            mode = "ratio";
        }
    }
    constexpr std::size_t kMonth = 30 * 24;
    if (mode == "etth") return {12 * kMonth, 4 * kMonth, 4 * kMonth};
    if (mode == "ettm") return {4 * 12 * kMonth, 4 * 4 * kMonth, 4 * 4 * kMonth};
    if (mode == "ratio") {
        const auto train = static_cast<std::size_t>(0.7 * static_cast<double>(rows));
        const auto test = static_cast<std::size_t>(0.2 * static_cast<double>(rows));
        return {train, rows - train - test, test};
    }
    throw ConfigError("unknown split preset '" + preset + "'");
}

Splits split(const Dataset& ds, const SplitSpec& spec, std::size_t context) {
    const std::size_t total = spec.train + spec.val + spec.test;
    if (total > ds.rows()) {
        throw std::out_of_range("split needs " + std::to_string(total) + " rows but dataset has " +
                                std::to_string(ds.rows()));
    }
    const std::size_t v0 = spec.train, t0 = spec.train + spec.val;
    auto with_context = [&](std::size_t begin, std::size_t len) {
        if (len == 0) return ds.slice_rows(begin, begin);
        const std::size_t from = begin >= context ? begin - context : 0;
        return ds.slice_rows(from, begin + len);
    };
    return {ds.slice_rows(0, spec.train), with_context(v0, spec.val), with_context(t0, spec.test)};
}

std::size_t window_origins(std::size_t rows, std::size_t lookback) {
    return rows >= lookback ? rows - lookback + 1 : 0;
}

Scaler Scaler::fit(const Dataset& ds) {
    const std::size_t R = ds.rows(), C = ds.channels();
    if (R == 0) throw ContractError("Scaler::fit on an empty dataset");
    Scaler s{std::vector<double>(C, 0.0), std::vector<double>(C, 0.0)};
    for (std::size_t c = 0; c < C; ++c) {
        double mu = 0.0;
        for (std::size_t r = 0; r < R; ++r) mu += ds.at(r, c);
        mu /= static_cast<double>(R);
        double var = 0.0;
        for (std::size_t r = 0; r < R; ++r) var += (ds.at(r, c) - mu) * (ds.at(r, c) - mu);
        const double sd = std::sqrt(var / static_cast<double>(R));
        s.mean[c] = mu;
        // a flat training channel is only centered
        s.stddev[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Dataset Scaler::apply(const Dataset& ds) const {
    if (ds.channels() != mean.size()) throw ShapeError("Scaler::apply", Shape{mean.size()}, Shape{ds.channels()});
    Dataset out = ds;
    const std::size_t C = ds.channels();
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const std::size_t c = i % C;
        out.values[i] = (out.values[i] - mean[c]) / stddev[c];
    }
    return out;
}

std::size_t window_count(std::size_t rows, std::size_t lookback, std::size_t horizon, std::size_t stride) {
    if (stride == 0) throw ContractError("window stride must be >= 1");
    if (rows < lookback + horizon) return 0;
    return (rows - lookback - horizon) / stride + 1;
}

WindowStream::WindowStream(const Dataset& ds, std::size_t lookback, std::size_t horizon, std::size_t stride,
                           std::size_t batch, bool drop_last)
    : ds_(&ds), lookback_(lookback), horizon_(horizon), stride_(stride), batch_(batch), drop_last_(drop_last) {
    if (lookback == 0 || horizon == 0 || stride == 0 || batch == 0) {
        throw ContractError("make_windows: lookback, horizon, stride and batch must be >= 1");
    }
    count_ = window_count(ds.rows(), lookback, horizon, stride);
    if (count_ == 0) {
        warning_ = "dataset '" + ds.name + "' has " + std::to_string(ds.rows()) + " rows, fewer than L+T = " +
                   std::to_string(lookback + horizon) + "; no windows";
        log_warning(warning_);
    }
    order_.resize(count_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
}

void WindowStream::set_order(std::vector<std::size_t> order) {
    if (order.size() != count_) throw ContractError("window order must list every window once");
    order_ = std::move(order);
    cursor_ = 0;
}

WindowBatch WindowStream::gather(const std::vector<std::size_t>& ids) const {
    const std::size_t C = ds_->channels(), B = ids.size();
    WindowBatch wb{Tensor({B, lookback_, C}), Tensor({B, horizon_, C}), {}};
    for (std::size_t i = 0; i < B; ++i) {
        if (ids[i] >= count_) throw std::out_of_range("window id " + std::to_string(ids[i]));
        const std::size_t start = ids[i] * stride_;
        wb.starts.push_back(start);
        const double* src = ds_->values.data() + start * C;
        std::copy(src, src + lookback_ * C, wb.x.data().begin() + static_cast<std::ptrdiff_t>(i * lookback_ * C));
        std::copy(src + lookback_ * C, src + (lookback_ + horizon_) * C,
                  wb.y.data().begin() + static_cast<std::ptrdiff_t>(i * horizon_ * C));
    }
    return wb;
}

std::optional<WindowBatch> WindowStream::next() {
    if (cursor_ >= count_) return std::nullopt;
    const std::size_t take = std::min(batch_, count_ - cursor_);
    if (drop_last_ && take < batch_) {
        cursor_ = count_;
        return std::nullopt;
    }
    std::vector<std::size_t> ids(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + take));
    cursor_ += take;
    return gather(ids);
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t window) {
    const std::size_t n = x.size();
    if (window < 2 || window >= n) {
        throw ContractError("sma window must satisfy 2 <= window < rows (" + std::to_string(window) + " vs " +
                            std::to_string(n) + ")");
    }
    const std::size_t front = (window - 1) / 2;
    std::vector<double> padded;
    padded.reserve(n + window - 1);
    padded.insert(padded.end(), front, x.front());
    padded.insert(padded.end(), x.begin(), x.end());
    padded.insert(padded.end(), window - 1 - front, x.back());
    std::vector<double> out(n);
    double acc = std::accumulate(padded.begin(), padded.begin() + static_cast<std::ptrdiff_t>(window), 0.0);
    out[0] = acc / static_cast<double>(window);
    for (std::size_t i = 1; i < n; ++i) {
        acc += padded[i + window - 1] - padded[i - 1];
        out[i] = acc / static_cast<double>(window);
    }
    return out;
}

double season_trend_cov_ratio(const Dataset& ds, std::size_t sma_window) {
    const std::size_t R = ds.rows(), C = ds.channels();
    auto variance = [](const std::vector<double>& v) {
        const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - mu) * (x - mu);
        return s / static_cast<double>(v.size());
    };
    double sum = 0.0;
    std::vector<double> series(R), season(R);
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t r = 0; r < R; ++r) series[r] = ds.at(r, c);
        const auto trend = moving_average(series, sma_window);
        for (std::size_t r = 0; r < R; ++r) season[r] = series[r] - trend[r];
        const double vt = variance(trend);
        if (!(vt > 0.0)) {
            log_warning("channel '" + ds.channel_names[c] + "' has a flat trend; covariance ratio is infinite");
            return std::numeric_limits<double>::infinity();
        }
        sum += variance(season) / vt;
    }
    return sum / static_cast<double>(C);
}

}  // namespace trits
