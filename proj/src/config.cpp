#include "trits/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace trits {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&, const std::string&)> set;
};

template <typename M>
Field size_field(M Config::*member) {
    return {[member](const Config& c) { return std::to_string(c.*member); },
            [member](Config& c, const std::string& k, const std::string& v) { c.*member = parse_size(k, v); }};
}

Field double_field(double Config::*member) {
    return {[member](const Config& c) { return fmt_double(c.*member); },
            [member](Config& c, const std::string& k, const std::string& v) { c.*member = parse_double(k, v); }};
}

Field bool_field(bool Config::*member) {
    return {[member](const Config& c) { return std::string(c.*member ? "true" : "false"); },
            [member](Config& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); }};
}

Field string_field(std::string Config::*member) {
    return {[member](const Config& c) { return c.*member; },
            [member](Config& c, const std::string&, const std::string& v) { c.*member = v; }};
}

// nested members
Field nested_size(std::function<std::size_t&(Config&)> ref) {
    return {[ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); },
            [ref](Config& c, const std::string& k, const std::string& v) { ref(c) = parse_size(k, v); }};
}

const std::vector<std::pair<std::string, Field>>& schema() {
    static const std::vector<std::pair<std::string, Field>> fields = {
        {"data.date_column", string_field(&Config::date_column)},
        {"data.split", string_field(&Config::split)},
        {"model.lookback", size_field(&Config::lookback)},
        {"model.horizon", size_field(&Config::horizon)},
        {"time.enabled", bool_field(&Config::time_enabled)},
        {"time.ema_alpha", double_field(&Config::ema_alpha)},
        {"freq.enabled", bool_field(&Config::freq_enabled)},
        {"freq.wavelet", {[](const Config& c) { return c.freq.wavelet; },
                          [](Config& c, const std::string&, const std::string& v) { c.freq.wavelet = v; }}},
        {"freq.levels", nested_size([](Config& c) -> std::size_t& { return c.freq.levels; })},
        {"freq.patch_len", nested_size([](Config& c) -> std::size_t& { return c.freq.patch_len; })},
        {"freq.d_model", nested_size([](Config& c) -> std::size_t& { return c.freq.d_model; })},
        {"vision.enabled", bool_field(&Config::vision_enabled)},
        {"vision.patch", nested_size([](Config& c) -> std::size_t& { return c.vision.patch; })},
        {"vision.depth", nested_size([](Config& c) -> std::size_t& { return c.vision.depth; })},
        {"vision.d_model", nested_size([](Config& c) -> std::size_t& { return c.vision.vim.d_model; })},
        {"vision.d_state", nested_size([](Config& c) -> std::size_t& { return c.vision.vim.d_state; })},
        {"vision.expand", nested_size([](Config& c) -> std::size_t& { return c.vision.vim.expand; })},
        {"vision.period", size_field(&Config::vision_period)},
        {"fusion.gated", bool_field(&Config::gated)},
        {"fusion.hidden", size_field(&Config::gate_hidden)},
        {"revin.eps", double_field(&Config::revin_eps)},
        {"trainer.batch_size", size_field(&Config::batch_size)},
        {"trainer.lr", double_field(&Config::lr)},
        {"trainer.max_epochs", size_field(&Config::max_epochs)},
        {"trainer.patience", size_field(&Config::patience)},
        {"trainer.seed", size_field(&Config::seed)},
        {"trainer.lr_decay", double_field(&Config::lr_decay)},
        {"trainer.decay_after", size_field(&Config::decay_after)},
        {"trainer.clip_norm", double_field(&Config::clip_norm)},
        {"trainer.stride", size_field(&Config::stride)},
        {"stats.sma_window", size_field(&Config::sma_window)},
    };
    return fields;
}

const Field* find_field(const std::string& key) {
    for (const auto& [k, f] : schema())
        if (k == key) return &f;
    return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::size_t Config::enabled_branches() const {
    return static_cast<std::size_t>(time_enabled) + static_cast<std::size_t>(freq_enabled) +
           static_cast<std::size_t>(vision_enabled);
}

void Config::validate() const {
    if (enabled_branches() == 0) throw ConfigError("at least one of time/freq/vision must be enabled");
    if (lookback < 2) throw ConfigError("model.lookback must be >= 2");
    if (horizon < 1) throw ConfigError("model.horizon must be >= 1");
    if (patience < 1) throw ConfigError("trainer.patience must be >= 1");
    if (batch_size < 1) throw ConfigError("trainer.batch_size must be >= 1");
    if (stride < 1) throw ConfigError("trainer.stride must be >= 1");
    if (!(lr >= 0.0)) throw ConfigError("trainer.lr must be >= 0");
    if (!(clip_norm > 0.0)) throw ConfigError("trainer.clip_norm must be > 0");
    if (!(revin_eps > 0.0)) throw ConfigError("revin.eps must be > 0");
    if (sma_window < 2) throw ConfigError("stats.sma_window must be >= 2");
    if (vision_period == 1) throw ConfigError("vision.period must be 0 (auto) or >= 2");
    if (split != "auto" && split != "etth" && split != "ettm" && split != "ratio") {
        throw ConfigError("data.split must be one of auto, etth, ettm, ratio; got '" + split + "'");
    }
}

UnknownKeyError::UnknownKeyError(const std::string& key, const std::string& suggestion)
    : ConfigError("unknown config key '" + key + "'" +
                  (suggestion.empty() ? std::string() : "; did you mean '" + suggestion + "'?")),
      key_(key) {}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, f] : schema()) keys.push_back(k);
    return keys;
}

std::string suggest_key(const std::string& key) {
    std::string best;
    std::size_t best_d = std::string::npos;
    for (const auto& [k, f] : schema()) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best_d <= std::max<std::size_t>(3, key.size() / 4) ? best : std::string();
}

void set_config_value(Config& cfg, const std::string& key, const std::string& value) {
    const Field* f = find_field(key);
    if (!f) throw UnknownKeyError(key, suggest_key(key));
    f->set(cfg, key, value);
}

std::string get_config_value(const Config& cfg, const std::string& key) {
    const Field* f = find_field(key);
    if (!f) throw UnknownKeyError(key, suggest_key(key));
    return f->get(cfg);
}

void apply_override(Config& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override must look like key=value, got '" + assignment + "'");
    set_config_value(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

Config parse_config(const std::string& text, Config base) {
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

Config load_config(const std::filesystem::path& path, Config base) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string serialize_config(const Config& cfg) {
    std::string out;
    for (const auto& [k, f] : schema()) out += k + " = " + f.get(cfg) + "\n";
    return out;
}

void save_config(const std::filesystem::path& path, const Config& cfg) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write config file " + path.string());
    os << serialize_config(cfg);
}

}  // namespace trits
