// Command-line front end: feature extraction, training, evaluation, grid
// search and the desk-scale benchmarks, all driven by dotted-key config
// files. Logs go to stderr, results to files or stdout.

#include "esn/benchmarks.hpp"
#include "esn/common.hpp"
#include "esn/config.hpp"
#include "esn/features.hpp"
#include "esn/manifest.hpp"
#include "esn/model_io.hpp"
#include "esn/pipeline.hpp"
#include "esn/wav.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct SharedArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    std::optional<std::uint64_t> seed;
    std::string out_path;
    int jobs = 1;
    std::string log_level = "warn";
};

void add_shared(CLI::App* cmd, SharedArgs& args)
{
    cmd->add_option("--config", args.config_path, "Config file (dotted keys)");
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set layer.size=500");
    cmd->add_option("--seed", args.seed, "Override trial.master_seed");
    cmd->add_option("--out", args.out_path, "Output path");
    cmd->add_option("--jobs", args.jobs, "Worker threads for independent jobs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--log-level", args.log_level, "error|warn|info|debug");
}

esn::ConfigMap resolve_config(const SharedArgs& args)
{
    esn::ConfigMap map;
    if (!args.config_path.empty()) map = esn::ConfigMap::parse_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw esn::config_error("--set expects key=value, got '" + kv + "'");
        map.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.seed) map.set("trial.master_seed", std::to_string(*args.seed));
    esn::set_log_level(esn::log_level_from_string(args.log_level));
    return map;
}

std::string format_rate(double percent)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", percent);
    return buffer;
}

void print_rate(double percent)
{
    std::cout << "mean_frame_rate=" << format_rate(percent) << "%\n";
}

// ---------------------------------------------------------------- extract --

int run_extract(const SharedArgs& shared, const std::string& in_path)
{
    const esn::ConfigMap map = resolve_config(shared);
    const esn::ExperimentConfig cfg = esn::ExperimentConfig::from_map(map);
    if (shared.out_path.empty()) throw esn::config_error("extract needs --out <feature dir>");

    esn::DatasetManifest manifest;
    const fs::path input(in_path);
    if (fs::is_directory(input)) {
        std::vector<fs::path> wavs;
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.is_regular_file() && entry.path().extension() == ".wav")
                wavs.push_back(entry.path());
        std::sort(wavs.begin(), wavs.end());
        for (const auto& wav : wavs) {
            esn::ManifestEntry e;
            e.utterance_id = wav.stem().string();
            e.data_path = wav;
            e.label_path = "-";
            e.speaker_id = wav.stem().string();
            manifest.entries.push_back(std::move(e));
        }
        if (manifest.entries.empty())
            throw esn::config_error("no .wav files found in " + input.string());
    } else {
        manifest = esn::load_manifest(input);
    }

    const fs::path out_dir(shared.out_path);
    fs::create_directories(out_dir);

    // One filterbank per (sample rate, fft size) pair.
    std::map<std::pair<int, int>, esn::dsp::FilterBank> banks;
    std::mutex bank_mutex;
    const auto bank_for = [&](int sample_rate) -> const esn::dsp::FilterBank& {
        const int fft = cfg.features.frame.resolved_fft_size(sample_rate);
        std::lock_guard<std::mutex> lock(bank_mutex);
        const auto key = std::make_pair(sample_rate, fft);
        auto it = banks.find(key);
        if (it == banks.end())
            it = banks
                     .emplace(key, esn::dsp::build_bark_filterbank(sample_rate,
                                                                   cfg.features.n_filters, fft))
                     .first;
        return it->second;
    };

    std::vector<std::string> failures(manifest.entries.size());
    esn::DatasetManifest out_manifest = manifest;
    esn::parallel_for(static_cast<long>(manifest.entries.size()), shared.jobs, [&](long i) {
        const auto& entry = manifest.entries[i];
        try {
            const esn::dsp::AudioSignal audio = esn::dsp::read_wav(entry.data_path);
            const auto& bank = bank_for(audio.sample_rate);
            esn::dsp::FeatureMatrix features =
                esn::dsp::extract_features(audio, cfg.features, &bank);
            features.utterance_id = entry.utterance_id;
            const fs::path feat_path = out_dir / (entry.utterance_id + ".feat");
            esn::dsp::write_feat1(feat_path, features);
            out_manifest.entries[i].data_path = entry.utterance_id + ".feat";
        } catch (const std::exception& e) {
            failures[i] = entry.data_path.string() + ": " + e.what();
        }
    });

    esn::DatasetManifest kept;
    long failed = 0;
    for (std::size_t i = 0; i < out_manifest.entries.size(); ++i) {
        if (failures[i].empty()) {
            kept.entries.push_back(out_manifest.entries[i]);
        } else {
            ++failed;
            esn::log_error("extract failed for " + failures[i]);
        }
    }
    esn::save_manifest(out_dir / "manifest.tsv", kept);
    std::cout << "extracted=" << kept.entries.size() << " failed=" << failed << "\n";
    return failed == 0 ? 0 : 1;
}

// ------------------------------------------------------------- train/eval --

esn::DatasetManifest load_split_manifest(const std::string& manifest_path,
                                         const esn::ExperimentConfig& cfg)
{
    esn::DatasetManifest manifest = esn::load_manifest(manifest_path);
    if (cfg.train_speakers > 0)
        esn::split_by_speaker(manifest, cfg.train_speakers, cfg.test_speakers, cfg.val_fraction,
                              cfg.split_seed);
    return manifest;
}

/// Train split if assigned; otherwise every entry (toy workflows without
/// speaker splits).
std::vector<esn::pipeline::UtteranceData> training_data(const esn::DatasetManifest& manifest)
{
    auto train = esn::pipeline::load_split(manifest, esn::Split::train);
    if (!train.empty()) return train;
    auto all = esn::pipeline::load_split(manifest, esn::Split::unassigned);
    if (all.empty()) throw esn::config_error("manifest has no training utterances");
    return all;
}

int run_train(const SharedArgs& shared, const std::string& manifest_path)
{
    const esn::ConfigMap map = resolve_config(shared);
    const esn::ExperimentConfig cfg = esn::ExperimentConfig::from_map(map);
    if (shared.out_path.empty()) throw esn::config_error("train needs --out <model file>");

    const esn::DatasetManifest manifest = load_split_manifest(manifest_path, cfg);
    const auto train_set = training_data(manifest);
    const esn::ModelContainer model =
        esn::pipeline::train_model(cfg, train_set, cfg.master_seed);
    esn::save_model(shared.out_path, model);

    const auto validation = esn::pipeline::load_split(manifest, esn::Split::validation);
    const double rate = esn::pipeline::evaluate(model, validation.empty() ? train_set : validation);
    esn::log_info(validation.empty() ? "rate measured on the training utterances"
                                     : "rate measured on the validation split");
    print_rate(rate);
    return 0;
}

int run_eval(const SharedArgs& shared, const std::string& manifest_path,
             const std::string& model_path, const std::string& split_name)
{
    const esn::ConfigMap map = resolve_config(shared);
    const esn::ExperimentConfig cfg = esn::ExperimentConfig::from_map(map);

    const esn::ModelContainer model = esn::load_model(model_path);
    if (!model.readout) throw esn::config_error("model file has no trained readout");

    const esn::DatasetManifest manifest = load_split_manifest(manifest_path, cfg);
    const esn::Split split = esn::split_from_string(split_name);
    auto data = esn::pipeline::load_split(manifest, split);
    if (data.empty() && split == esn::Split::test)
        data = esn::pipeline::load_split(manifest, esn::Split::unassigned);
    if (data.empty())
        throw esn::config_error("no utterances in split '" + split_name + "'");

    const esn::pipeline::EvalCounts counts = esn::pipeline::evaluate_counts(model, data);
    if (!shared.out_path.empty())
        esn::pipeline::write_eval_csv(shared.out_path, fs::path(model_path).filename().string(),
                                      split_name, counts);
    print_rate(counts.rate_percent());
    return 0;
}

int run_grid(const SharedArgs& shared, const std::string& manifest_path)
{
    const esn::ConfigMap map = resolve_config(shared);
    const esn::ExperimentConfig base_cfg = esn::ExperimentConfig::from_map(map);
    if (shared.out_path.empty()) throw esn::config_error("grid needs --out <csv>");

    const auto axes = esn::pipeline::grid_axes(map);
    const esn::DatasetManifest manifest = load_split_manifest(manifest_path, base_cfg);
    const auto train_set = training_data(manifest);
    auto validation = esn::pipeline::load_split(manifest, esn::Split::validation);
    if (validation.empty())
        throw esn::config_error("grid search needs a validation split");

    auto points = esn::pipeline::grid_search(map, axes, train_set, validation, shared.jobs);
    esn::pipeline::write_grid_csv(shared.out_path, axes, points, base_cfg.n_seeds);

    const auto best = std::max_element(points.begin(), points.end(),
                                       [](const auto& a, const auto& b) {
                                           if (a.ok != b.ok) return !a.ok;
                                           return a.trial.mean < b.trial.mean;
                                       });
    if (best == points.end() || !best->ok)
        throw esn::error("every grid point failed");
    std::ostringstream best_desc;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        if (a) best_desc << ' ';
        best_desc << axes[a].key << '=' << best->values[a];
    }
    std::cout << "best_config: " << best_desc.str() << "\n";
    print_rate(best->trial.mean);
    return 0;
}

// -------------------------------------------------------------- benchmarks --

esn::ExperimentConfig mc_model_config(esn::ExperimentConfig cfg)
{
    cfg.context_width = 1;  // the memory task feeds the raw scalar
    cfg.context_center = -1;
    return cfg;
}

int run_bench_mc(const SharedArgs& shared)
{
    const esn::ConfigMap map = resolve_config(shared);
    const esn::ExperimentConfig cfg = mc_model_config(esn::ExperimentConfig::from_map(map));

    const int length = map.get_int("bench.mc.length", 4000);
    const int max_lag = map.get_int("bench.mc.max_lag", 10);
    const double train_fraction = map.get_double("bench.mc.train_fraction", 0.7);
    const double gamma = map.get_double("bench.mc.gamma", 1e-6);
    const std::uint64_t task_seed = map.get_u64("bench.mc.seed", 99);
    const esn::bench::MCTask task = esn::bench::generate_mc_task(length, max_lag, task_seed);

    const auto mc_total = [&](const esn::ExperimentConfig& c, std::uint64_t seed) {
        const esn::ReservoirModel model = c.build_model(1, seed);
        return esn::bench::memory_capacity(model, task, train_fraction, gamma).total;
    };

    if (map.has("bench.mc.compare_delays")) {
        // Paired comparison: base config vs a heterogeneous-shallow copy with
        // the given sub-group delays.
        esn::ExperimentConfig hetero = cfg;
        hetero.variant = esn::Variant::hetero_shallow;
        hetero.group_sizes.clear();
        hetero.delays = map.get_int_list("bench.mc.compare_delays");
        const auto report = esn::bench::compare_variants(
            mc_total, {"base", "hetero"}, {cfg, hetero}, cfg.n_seeds, cfg.master_seed);
        if (!shared.out_path.empty())
            esn::bench::write_comparison_csv(shared.out_path, report);
        std::cout << "total_mc=" << format_rate(report.variants[0].mean)
                  << " hetero_total_mc=" << format_rate(report.variants[1].mean)
                  << " hetero_wins=" << report.variants[1].wins_vs_first << "/" << cfg.n_seeds
                  << "\n";
        return 0;
    }

    std::vector<esn::bench::MCResult> results;
    double total = 0;
    for (int k = 0; k < cfg.n_seeds; ++k) {
        const esn::ReservoirModel model =
            cfg.build_model(1, cfg.master_seed + static_cast<std::uint64_t>(k));
        results.push_back(esn::bench::memory_capacity(model, task, train_fraction, gamma));
        total += results.back().total;
    }
    total /= cfg.n_seeds;

    if (!shared.out_path.empty()) {
        esn::bench::MCResult mean_curve;
        mean_curve.per_lag.assign(max_lag, 0.0);
        for (const auto& r : results)
            for (int k = 0; k < max_lag; ++k) mean_curve.per_lag[k] += r.per_lag[k] / cfg.n_seeds;
        mean_curve.total = total;
        esn::bench::write_mc_curve_csv(shared.out_path, mean_curve);
    }
    std::cout << "total_mc=" << format_rate(total) << "\n";
    return 0;
}

int run_bench_synth(const SharedArgs& shared)
{
    const esn::ConfigMap map = resolve_config(shared);
    esn::ExperimentConfig cfg = esn::ExperimentConfig::from_map(map);

    const int classes = map.get_int("bench.synth.classes", 5);
    const int train_per_class = map.get_int("bench.synth.train_per_class", 800);
    const int test_per_class = map.get_int("bench.synth.test_per_class", 200);
    const std::uint64_t task_seed = map.get_u64("bench.synth.seed", 7);

    cfg.n_classes = classes;
    const esn::bench::SyntheticTask task = esn::bench::make_synthetic_task(classes, task_seed);
    const auto train_set =
        esn::bench::generate_synthetic_frames(task, train_per_class, task_seed + 1);
    const auto test_set =
        esn::bench::generate_synthetic_frames(task, test_per_class, task_seed + 2);

    const esn::pipeline::TrialResult result = esn::pipeline::run_trials(cfg, train_set, test_set);
    if (!shared.out_path.empty())
        esn::pipeline::write_trial_csv(shared.out_path, cfg, result);
    print_rate(result.mean);
    return 0;
}

// ----------------------------------------------------------------- inspect --

int run_inspect(const SharedArgs& shared, const std::string& model_path)
{
    esn::set_log_level(esn::log_level_from_string(shared.log_level));
    const esn::ModelContainer model = esn::load_model(model_path);
    if (!shared.out_path.empty()) {
        if (!model.readout) throw esn::config_error("model has no readout to export");
        esn::write_readout_csv(shared.out_path, *model.readout);
    }
    std::cout << "variant: " << esn::to_string(model.reservoir.variant) << "\n";
    std::cout << "input_dim: " << model.reservoir.n_in << "\n";
    std::cout << "layers:";
    for (std::size_t i = 0; i < model.reservoir.layers.size(); ++i) {
        const auto& cfg = model.reservoir.configs[i];
        std::cout << " [size=" << cfg.size << " rho=" << cfg.spectral_radius
                  << " leak=" << cfg.leak_rate << " delay=" << cfg.delay << "]";
    }
    std::cout << "\n";
    if (model.reservoir.partition) {
        std::cout << "sub_groups:";
        const auto& p = *model.reservoir.partition;
        for (std::size_t g = 0; g < p.group_sizes.size(); ++g)
            std::cout << " (" << p.group_sizes[g] << ", tau=" << p.group_delays[g] << ")";
        std::cout << "\n";
    }
    std::cout << "context_width: " << model.context_width << "\n";
    std::cout << "context_center: " << model.context_center << "\n";
    std::cout << "washout: " << model.washout << "\n";
    std::cout << "classes: " << model.n_classes << "\n";
    if (model.readout)
        std::cout << "readout: " << model.readout->n_classes() << " x " << model.readout->z_dim()
                  << " (" << model.readout->n_classes() * model.readout->z_dim()
                  << " trainable parameters)\n";
    else
        std::cout << "readout: none\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Heterogeneous echo state network toolkit"};
    app.require_subcommand(1);

    SharedArgs extract_args, train_args, eval_args, grid_args, mc_args, synth_args,
        inspect_args;
    std::string extract_in, train_manifest, eval_manifest, eval_model, eval_split = "test";
    std::string grid_manifest, inspect_model;

    auto* extract = app.add_subcommand("extract", "WAV -> FEAT1 feature files");
    extract->add_option("--in", extract_in, "Audio directory or manifest")->required();
    add_shared(extract, extract_args);

    auto* train = app.add_subcommand("train", "Train a model on the training split");
    train->add_option("--manifest", train_manifest, "Feature manifest")->required();
    add_shared(train, train_args);

    auto* eval = app.add_subcommand("eval", "Evaluate a trained model");
    eval->add_option("--manifest", eval_manifest, "Feature manifest")->required();
    eval->add_option("--model", eval_model, "ESNM1 model file")->required();
    eval->add_option("--split", eval_split, "train|validation|test (default test)");
    add_shared(eval, eval_args);

    auto* grid = app.add_subcommand("grid", "Grid search over grid.* config axes");
    grid->add_option("--manifest", grid_manifest, "Feature manifest")->required();
    add_shared(grid, grid_args);

    auto* bench_mc = app.add_subcommand("bench-mc", "Short-term memory capacity benchmark");
    add_shared(bench_mc, mc_args);

    auto* bench_synth =
        app.add_subcommand("bench-synth", "Synthetic frame classification benchmark");
    add_shared(bench_synth, synth_args);

    auto* inspect = app.add_subcommand("inspect",
                                       "Print a model summary; --out exports the readout CSV");
    inspect->add_option("--model", inspect_model, "ESNM1 model file")->required();
    add_shared(inspect, inspect_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad flags are validation failures
    }

    try {
        if (extract->parsed()) return run_extract(extract_args, extract_in);
        if (train->parsed()) return run_train(train_args, train_manifest);
        if (eval->parsed()) return run_eval(eval_args, eval_manifest, eval_model, eval_split);
        if (grid->parsed()) return run_grid(grid_args, grid_manifest);
        if (bench_mc->parsed()) return run_bench_mc(mc_args);
        if (bench_synth->parsed()) return run_bench_synth(synth_args);
        if (inspect->parsed()) return run_inspect(inspect_args, inspect_model);
    } catch (const esn::config_error& e) {
        esn::log_error(e.what());
        return 2;
    } catch (const esn::shape_error& e) {
        esn::log_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        esn::log_error(e.what());
        return 1;
    }
    return 2;
}
