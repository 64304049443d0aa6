#pragma once

// Flat "dotted.key = value" run configuration. Every key belongs to a fixed
// schema; unknown keys are rejected with a nearest-match suggestion.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trits/freq_branch.hpp"
#include "trits/vision_branch.hpp"

namespace trits {

struct Config {
    // data
    std::string date_column = "date";
    std::string split = "auto";  // auto | etth | ettm | ratio
    std::size_t lookback = 96;
    std::size_t horizon = 96;

    // branches
    bool time_enabled = true;
    double ema_alpha = 0.3;
    bool freq_enabled = true;
    FreqConfig freq;
    bool vision_enabled = true;
    VisionConfig vision;
    std::size_t vision_period = 0;  // 0: detect on the training split
    bool gated = true;
    std::size_t gate_hidden = 32;
    double revin_eps = 1e-5;

    // training
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::size_t max_epochs = 20;
    std::size_t patience = 5;
    std::uint64_t seed = 2024;
    double lr_decay = 0.9;
    std::size_t decay_after = 3;
    double clip_norm = 5.0;
    std::size_t stride = 1;

    // statistics
    std::size_t sma_window = 25;

    std::size_t enabled_branches() const;
    /// Throws ConfigError on inconsistent values (no branch enabled, patience 0, ...).
    void validate() const;
};

/// Error for a key outside the schema; exit code 2 at the command line.
class UnknownKeyError : public ConfigError {
public:
    UnknownKeyError(const std::string& key, const std::string& suggestion);
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

std::vector<std::string> config_keys();
std::string suggest_key(const std::string& key);

void set_config_value(Config& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const Config& cfg, const std::string& key);

/// "key=value" as given on the command line.
void apply_override(Config& cfg, const std::string& assignment);

Config parse_config(const std::string& text, Config base = {});
Config load_config(const std::filesystem::path& path, Config base = {});
std::string serialize_config(const Config& cfg);
void save_config(const std::filesystem::path& path, const Config& cfg);

}  // namespace trits
