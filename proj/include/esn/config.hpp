#pragma once

#include "esn/common.hpp"
#include "esn/features.hpp"
#include "esn/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace esn {

/// Dotted-key configuration: one `key = value` per line, `#` comments,
/// lists in brackets (`grid.layer.size = [500, 1000, 2000]`). Values are
/// kept as strings until a typed getter asks for them.
class ConfigMap {
public:
    static ConfigMap parse_file(const std::filesystem::path& path);
    static ConfigMap parse_string(const std::string& text, const std::string& origin = "<string>");

    /// Sets a scalar (or, with brackets, a list); used for CLI overrides.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    bool is_list(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;
    std::vector<double> get_double_list(const std::string& key) const;

    /// Keys in insertion order.
    std::vector<std::string> keys() const;
    /// Keys starting with the prefix, in insertion order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

private:
    struct Value {
        std::vector<std::string> items;
        bool list = false;
    };
    const Value& at(const std::string& key) const;

    std::map<std::string, Value> values_;
    std::vector<std::string> order_;
};

/// Resolved experiment settings: model shape, front-end, readout, protocol.
struct ExperimentConfig {
    Variant variant = Variant::shallow;

    std::vector<int> layer_sizes = {100};
    double spectral_radius = 0.3;
    double leak_rate = 0.5;
    double input_scale = 0.1;
    double bias_scale = 0.1;
    double connectivity = 0.1;
    bool leak_on_activation = true;
    std::vector<int> delays;       // hetero_deep: per layer; hetero_shallow: per group
    std::vector<int> group_sizes;  // hetero_shallow only; empty = equal thirds

    int context_width = 14;
    int context_center = -1;  // -1: floor(width/2)
    int washout = 0;
    double gamma = 1e-4;
    int n_classes = 35;

    int n_seeds = 5;
    std::uint64_t master_seed = 1;

    int train_speakers = 0;  // 0: no split requested, use manifest assignments
    int test_speakers = 0;
    double val_fraction = 0.2;
    std::uint64_t split_seed = 1;

    dsp::FeatureConfig features;

    /// Reads every known key, rejecting unknown non-grid keys.
    static ExperimentConfig from_map(const ConfigMap& map);

    void validate() const;

    /// Per-layer configs for one weight draw. Layer i uses
    /// seed + 100003 * (i + 1) so stacked layers get distinct streams.
    std::vector<LayerConfig> layer_configs(std::uint64_t seed) const;

    /// Initializes a model with the given input dimension and weight seed.
    ReservoirModel build_model(int feature_dim, std::uint64_t seed) const;
};

}  // namespace esn
