#include "esn/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace esn {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

/// Strips a trailing comment: '#' at line start or preceded by whitespace.
std::string strip_comment(const std::string& line)
{
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t'))
            return line.substr(0, i);
    }
    return line;
}

std::vector<std::string> parse_list_body(const std::string& body, const std::string& where)
{
    std::vector<std::string> items;
    std::string item;
    std::istringstream ss(body);
    while (std::getline(ss, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) throw config_error(where + ": empty list element");
        items.push_back(t);
    }
    return items;
}

int to_int(const std::string& v, const std::string& key)
{
    try {
        std::size_t used = 0;
        const int value = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return value;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': '" + v + "' is not an integer");
    }
}

double to_double(const std::string& v, const std::string& key)
{
    try {
        std::size_t used = 0;
        const double value = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return value;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': '" + v + "' is not a number");
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& key)
{
    try {
        std::size_t used = 0;
        const unsigned long long value = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(value);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': '" + v + "' is not an unsigned integer");
    }
}

bool to_bool(const std::string& v, const std::string& key)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error("key '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace

ConfigMap ConfigMap::parse_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path.string());
}

ConfigMap ConfigMap::parse_string(const std::string& text, const std::string& origin)
{
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(strip_comment(line));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error(origin + ":" + std::to_string(line_no)
                               + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw config_error(origin + ":" + std::to_string(line_no) + ": empty key");
        map.set(key, value);
    }
    return map;
}

void ConfigMap::set(const std::string& key, const std::string& value)
{
    Value v;
    if (!value.empty() && value.front() == '[') {
        if (value.back() != ']')
            throw config_error("key '" + key + "': unterminated list");
        v.list = true;
        const std::string body = value.substr(1, value.size() - 2);
        if (!trim(body).empty()) v.items = parse_list_body(body, "key '" + key + "'");
    } else {
        v.items.push_back(value);
    }
    if (values_.find(key) == values_.end()) order_.push_back(key);
    values_[key] = std::move(v);
}

bool ConfigMap::has(const std::string& key) const
{
    return values_.find(key) != values_.end();
}

bool ConfigMap::is_list(const std::string& key) const
{
    return at(key).list;
}

const ConfigMap::Value& ConfigMap::at(const std::string& key) const
{
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing config key '" + key + "'");
    return it->second;
}

std::string ConfigMap::get_string(const std::string& key) const
{
    const Value& v = at(key);
    if (v.list) throw config_error("key '" + key + "' is a list, expected a scalar");
    return v.items.front();
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? get_string(key) : fallback;
}

double ConfigMap::get_double(const std::string& key, double fallback) const
{
    return has(key) ? to_double(get_string(key), key) : fallback;
}

int ConfigMap::get_int(const std::string& key, int fallback) const
{
    return has(key) ? to_int(get_string(key), key) : fallback;
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) const
{
    return has(key) ? to_u64(get_string(key), key) : fallback;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const
{
    return has(key) ? to_bool(get_string(key), key) : fallback;
}

std::vector<std::string> ConfigMap::get_list(const std::string& key) const
{
    const Value& v = at(key);
    if (!v.list) throw config_error("key '" + key + "' is a scalar, expected a list");
    return v.items;
}

std::vector<int> ConfigMap::get_int_list(const std::string& key) const
{
    std::vector<int> out;
    for (const auto& s : get_list(key)) out.push_back(to_int(s, key));
    return out;
}

std::vector<double> ConfigMap::get_double_list(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& s : get_list(key)) out.push_back(to_double(s, key));
    return out;
}

std::vector<std::string> ConfigMap::keys() const
{
    return order_;
}

std::vector<std::string> ConfigMap::keys_with_prefix(const std::string& prefix) const
{
    std::vector<std::string> out;
    for (const auto& k : order_)
        if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

namespace {

const std::set<std::string>& known_experiment_keys()
{
    static const std::set<std::string> keys = {
        "model.variant",
        "layer.size",
        "layer.sizes",
        "layers.count",
        "layer.rho",
        "layer.leak",
        "layer.input_scale",
        "layer.bias_scale",
        "layer.connectivity",
        "layer.leak_on_activation",
        "layer.delay",
        "layer.delays",
        "groups.sizes",
        "groups.delays",
        "context.width",
        "context.center",
        "washout",
        "ridge.gamma",
        "classes.count",
        "trial.n_seeds",
        "trial.master_seed",
        "split.train_speakers",
        "split.test_speakers",
        "split.val_fraction",
        "split.seed",
        "features.frame_ms",
        "features.overlap_ms",
        "features.fft_size",
        "features.n_filters",
        "features.log_floor",
        "features.normalize",
    };
    return keys;
}

std::vector<int> default_odd_delays(std::size_t count)
{
    std::vector<int> delays(count);
    for (std::size_t i = 0; i < count; ++i) delays[i] = static_cast<int>(2 * i + 1);
    return delays;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_map(const ConfigMap& map)
{
    for (const auto& key : map.keys()) {
        if (key.rfind("grid.", 0) == 0 || key.rfind("bench.", 0) == 0) continue;
        if (known_experiment_keys().count(key) == 0)
            throw config_error("unknown config key '" + key + "'");
    }

    ExperimentConfig cfg;
    cfg.variant = variant_from_string(map.get_string("model.variant", "shallow"));

    const bool deep_like = cfg.variant == Variant::deep || cfg.variant == Variant::hetero_deep;
    if (map.has("layer.sizes")) {
        cfg.layer_sizes = map.get_int_list("layer.sizes");
    } else {
        const int size = map.get_int("layer.size", deep_like ? 100 : 100);
        int count = map.get_int("layers.count", deep_like ? 3 : 1);
        if (!deep_like) count = 1;
        cfg.layer_sizes.assign(count, size);
    }
    if (!deep_like && cfg.layer_sizes.size() != 1)
        throw config_error("shallow variants take a single layer size");

    cfg.spectral_radius = map.get_double("layer.rho", cfg.spectral_radius);
    cfg.leak_rate = map.get_double("layer.leak", cfg.leak_rate);
    cfg.input_scale = map.get_double("layer.input_scale", cfg.input_scale);
    // A single reservoir has no bias term by default; stacked layers keep one.
    cfg.bias_scale = map.get_double("layer.bias_scale", deep_like ? 0.1 : 0.0);
    cfg.connectivity = map.get_double("layer.connectivity", cfg.connectivity);
    cfg.leak_on_activation = map.get_bool("layer.leak_on_activation", true);

    if (map.has("layer.delays"))
        cfg.delays = map.get_int_list("layer.delays");
    else if (map.has("layer.delay"))
        cfg.delays.assign(cfg.layer_sizes.size(), map.get_int("layer.delay", 0));

    if (map.has("groups.sizes")) cfg.group_sizes = map.get_int_list("groups.sizes");
    if (map.has("groups.delays")) cfg.delays = map.get_int_list("groups.delays");

    cfg.context_width = map.get_int("context.width", cfg.context_width);
    cfg.context_center = map.get_int("context.center", cfg.context_center);
    cfg.washout = map.get_int("washout", cfg.washout);
    cfg.gamma = map.get_double("ridge.gamma", cfg.gamma);
    cfg.n_classes = map.get_int("classes.count", cfg.n_classes);
    cfg.n_seeds = map.get_int("trial.n_seeds", cfg.n_seeds);
    cfg.master_seed = map.get_u64("trial.master_seed", cfg.master_seed);

    cfg.train_speakers = map.get_int("split.train_speakers", cfg.train_speakers);
    cfg.test_speakers = map.get_int("split.test_speakers", cfg.test_speakers);
    cfg.val_fraction = map.get_double("split.val_fraction", cfg.val_fraction);
    cfg.split_seed = map.get_u64("split.seed", cfg.split_seed);

    cfg.features.frame.frame_ms = map.get_double("features.frame_ms", cfg.features.frame.frame_ms);
    cfg.features.frame.overlap_ms =
        map.get_double("features.overlap_ms", cfg.features.frame.overlap_ms);
    cfg.features.frame.fft_size = map.get_int("features.fft_size", cfg.features.frame.fft_size);
    cfg.features.n_filters = map.get_int("features.n_filters", cfg.features.n_filters);
    cfg.features.log_floor = map.get_double("features.log_floor", cfg.features.log_floor);
    cfg.features.normalize = map.get_bool("features.normalize", cfg.features.normalize);

    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const
{
    if (layer_sizes.empty()) throw config_error("at least one layer size required");
    for (int s : layer_sizes)
        if (s < 1) throw config_error("layer sizes must be positive");
    if (n_seeds < 1) throw config_error("trial.n_seeds must be >= 1");
    if (n_classes < 2) throw config_error("classes.count must be >= 2");
    if (context_width < 1) throw config_error("context.width must be >= 1");
    if (context_center >= context_width)
        throw config_error("context.center must lie inside the window");
    if (washout < 0) throw config_error("washout must be nonnegative");
    if (gamma < 0) throw config_error("ridge.gamma must be >= 0");
    if (variant == Variant::hetero_deep && !delays.empty()
        && delays.size() != layer_sizes.size())
        throw config_error("layer.delays length must match the layer count");
    if (variant == Variant::hetero_shallow && !group_sizes.empty() && !delays.empty()
        && group_sizes.size() != delays.size())
        throw config_error("groups.sizes and groups.delays lengths differ");
    features.frame.validate();
}

std::vector<LayerConfig> ExperimentConfig::layer_configs(std::uint64_t seed) const
{
    std::vector<int> layer_delays(layer_sizes.size(), 0);
    if (variant == Variant::hetero_deep) {
        layer_delays = delays.empty() ? default_odd_delays(layer_sizes.size()) : delays;
    }

    std::vector<LayerConfig> configs;
    for (std::size_t i = 0; i < layer_sizes.size(); ++i) {
        LayerConfig lc;
        lc.size = layer_sizes[i];
        lc.spectral_radius = spectral_radius;
        lc.leak_rate = leak_rate;
        lc.input_scale = input_scale;
        lc.bias_scale = bias_scale;
        lc.connectivity = connectivity;
        lc.leak_on_activation = leak_on_activation;
        lc.delay = layer_delays[i];
        lc.seed = seed + 100003ull * (i + 1);
        configs.push_back(lc);
    }
    return configs;
}

ReservoirModel ExperimentConfig::build_model(int feature_dim, std::uint64_t seed) const
{
    const int n_in = feature_dim * context_width;
    if (variant == Variant::hetero_shallow) {
        SubGroupPartition partition;
        std::vector<int> sizes = group_sizes;
        std::vector<int> group_delays = delays;
        const std::size_t n_groups =
            !sizes.empty() ? sizes.size() : (!group_delays.empty() ? group_delays.size() : 3);
        if (sizes.empty()) {
            // Equal sub-groups; the remainder goes to the leading groups.
            const int total = layer_sizes[0];
            const int base = total / static_cast<int>(n_groups);
            const int extra = total % static_cast<int>(n_groups);
            for (std::size_t g = 0; g < n_groups; ++g)
                sizes.push_back(base + (static_cast<int>(g) < extra ? 1 : 0));
        }
        if (group_delays.empty()) group_delays = default_odd_delays(n_groups);
        if (sizes.size() != group_delays.size())
            throw config_error("group sizes and delays lengths differ");
        partition.group_sizes = sizes;
        partition.group_delays = group_delays;
        int total = 0;
        for (int s : sizes) total += s;
        if (total != layer_sizes[0])
            throw config_error("groups.sizes must sum to layer.size");
        return make_model(variant, layer_configs(seed), n_in, partition);
    }
    return make_model(variant, layer_configs(seed), n_in);
}

}  // namespace esn
