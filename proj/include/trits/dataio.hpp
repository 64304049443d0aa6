#pragma once

// Tabular series ingestion, chronological splits, sliding windows and the
// season/trend covariance statistic.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trits/tensor.hpp"

namespace trits {

struct Dataset {
    std::string name;
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps;  // empty when the source had none
    std::vector<double> values;           // rows x channels, row-major

    std::size_t rows() const noexcept { return channel_names.empty() ? 0 : values.size() / channel_names.size(); }
    std::size_t channels() const noexcept { return channel_names.size(); }
    double at(std::size_t row, std::size_t channel) const { return values[row * channels() + channel]; }

    /// Rows [begin, end) as a new dataset.
    Dataset slice_rows(std::size_t begin, std::size_t end) const;
    /// Values scaled by k (timestamps and names unchanged).
    Dataset scaled(double k) const;
};

/// Header row required and must contain date_column; every other column is a
/// channel. Bad cells raise FormatError naming the data row (1-based) and column.
Dataset load_csv(const std::filesystem::path& path, const std::string& date_column = "date");
Dataset dataset_from_values(std::string name, std::size_t channels, std::vector<double> values);

struct SplitSpec {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// Row counts for a preset: "etth" (12/4/4 months of hourly rows), "ettm"
/// (the same months at 15-minute resolution), "ratio" (70/10/20), or "auto",
/// which picks etth/ettm from an ETTh*/ETTm* dataset name and ratio otherwise.
SplitSpec standard_split(const std::string& preset, const std::string& dataset_name, std::size_t rows);

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Chronological segments. Val and test start `context` rows early so their
/// first forecast origin sits on the split boundary. Throws std::out_of_range
/// when the counts exceed the dataset.
Splits split(const Dataset& ds, const SplitSpec& spec, std::size_t context = 0);

/// Number of lookback origins in a segment of `rows` rows (0 if rows < lookback).
std::size_t window_origins(std::size_t rows, std::size_t lookback);

struct Scaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static Scaler fit(const Dataset& ds);
    Dataset apply(const Dataset& ds) const;
};

struct WindowBatch {
    Tensor x;  // [B, L, C]
    Tensor y;  // [B, T, C]
    std::vector<std::size_t> starts;  // first row of each lookback window
};

std::size_t window_count(std::size_t rows, std::size_t lookback, std::size_t horizon, std::size_t stride);

/// Chronological (or caller-ordered) batches of (lookback, target) pairs.
/// Holds a reference to the dataset, which must outlive the stream.
class WindowStream {
public:
    WindowStream(const Dataset& ds, std::size_t lookback, std::size_t horizon, std::size_t stride,
                 std::size_t batch, bool drop_last = false);

    std::size_t size() const noexcept { return count_; }
    /// Replaces the visiting order (a permutation of 0..size()-1).
    void set_order(std::vector<std::size_t> order);
    void reset() noexcept { cursor_ = 0; }
    std::optional<WindowBatch> next();
    WindowBatch gather(const std::vector<std::size_t>& window_ids) const;
    const std::string& warning() const noexcept { return warning_; }

private:
    const Dataset* ds_;
    std::size_t lookback_, horizon_, stride_, batch_;
    bool drop_last_;
    std::size_t count_ = 0;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::string warning_;
};

/// Replicate-padded simple moving average of one series, same length as x.
std::vector<double> moving_average(const std::vector<double>& x, std::size_t window);

/// var(x - SMA(x)) / var(SMA(x)) per channel, averaged. +inf (with a warning)
/// when any channel has a flat trend.
double season_trend_cov_ratio(const Dataset& ds, std::size_t sma_window);

}  // namespace trits
