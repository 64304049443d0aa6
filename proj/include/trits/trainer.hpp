#pragma once

// Training loop, evaluation, the repeat-last-value baseline and branch
// ablations, plus the CSV records they emit.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "trits/dataio.hpp"
#include "trits/model.hpp"

namespace trits {

/// Chronological splits in z-scored units (scaler fitted on train only).
struct PreparedData {
    std::string name;
    SplitSpec spec;
    Scaler scaler;
    Splits splits;
};

/// Val and test keep `cfg.lookback` rows of context in front of their boundary.
PreparedData prepare_data(const Dataset& raw, const Config& cfg);

/// Fills cfg.vision_period from non-overlapping lookback windows of `train`
/// when it is 0. Leaves an explicit period untouched.
Config resolve_period(Config cfg, const Dataset& train, PeriodEstimate* estimate = nullptr);

struct MetricReport {
    std::string split;
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> step_mse;  // per horizon step
    std::size_t windows = 0;
    double seconds = 0.0;
    std::size_t parameters = 0;
};

/// Streaming sums of squared and absolute error over [B, T, C] batches.
class MetricAccumulator {
public:
    explicit MetricAccumulator(std::size_t horizon) : step_sq_(horizon, 0.0), step_n_(horizon, 0) {}
    void add(const Tensor& pred, const Tensor& target);
    MetricReport report(const std::string& split) const;

private:
    std::vector<double> step_sq_;
    std::vector<std::size_t> step_n_;
    double abs_ = 0.0;
    std::size_t windows_ = 0;
};

struct Evaluation {
    MetricReport report;
    std::vector<Modality> order;
    std::vector<double> gate_means;  // per modality, over windows, steps and channels
    // filled only when requested
    std::vector<std::size_t> starts;
    Tensor predictions;  // [W, T, C]
    Tensor targets;      // [W, T, C]
};

Evaluation evaluate(const TriTS& model, const Dataset& split, const std::string& split_name, std::size_t batch,
                    bool keep_predictions = false);

/// Forecasts every horizon step with the last lookback value.
MetricReport repeat_last_baseline(const Dataset& split, const std::string& split_name, std::size_t lookback,
                                  std::size_t horizon);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double lr = 0.0;
    double train_mse = 0.0;  // mean batch loss
    double train_mae = 0.0;
    MetricReport val;
    double seconds = 0.0;
};

struct TrainOptions {
    std::function<void(const EpochRecord&)> on_epoch;
    /// Checked after each epoch's bookkeeping; true ends training early.
    std::function<bool(const EpochRecord&)> stop_when;
};

struct TrainResult {
    Config config;  // with the period resolved
    TriTS model;    // best-validation weights
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    bool diverged = false;
    std::string diagnostic;
    std::optional<PeriodEstimate> period;
};

/// Learning rate in effect during a 1-based epoch.
double scheduled_lr(const Config& cfg, std::size_t epoch);

TrainResult train(const Config& cfg, const PreparedData& data, const TrainOptions& options = {});

struct AblationVariant {
    std::string name;
    bool time = true;
    bool freq = true;
    bool vision = true;
    bool gated = true;
};

/// Full model, then one branch removed at a time, then fixed equal weights.
std::vector<AblationVariant> standard_variants();
Config apply_variant(Config cfg, const AblationVariant& v);

struct AblationRow {
    AblationVariant variant;
    MetricReport test;
    std::size_t epochs = 0;
    std::vector<double> gate_means;
};

std::vector<AblationRow> ablate(const Config& cfg, const PreparedData& data,
                                const std::vector<AblationVariant>& variants, const TrainOptions& options = {});

// --- records ---------------------------------------------------------------

/// epoch,split,mse,mae (train and val per epoch, then the final rows).
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history,
                       const std::vector<std::pair<std::size_t, MetricReport>>& final_rows);
/// dataset,split,modality,weight
void write_gates_csv(const std::filesystem::path& path, const std::string& dataset, const Evaluation& eval);
/// window_id,step,channel,y_true,y_pred
void write_predictions_csv(const std::filesystem::path& path, const Evaluation& eval);
/// variant,mse,mae,epochs
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace trits
