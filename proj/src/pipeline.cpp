#include "esn/pipeline.hpp"

#include "esn/readout.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace esn::pipeline {

namespace {

int feature_dim_of(const std::vector<UtteranceData>& data)
{
    if (data.empty()) throw config_error("empty utterance set");
    const int dim = static_cast<int>(data.front().features.cols());
    for (const auto& u : data)
        if (u.features.cols() != dim)
            throw shape_error("utterance '" + u.id + "' has " + std::to_string(u.features.cols())
                              + " feature channels, expected " + std::to_string(dim));
    return dim;
}

/// Full context rows + labels for one utterance. The washout is applied
/// later: the reservoir still warms up on the washout frames, only the
/// design/evaluation rows drop them.
std::pair<Eigen::MatrixXd, std::vector<int>> context_rows(const UtteranceData& utterance,
                                                          int width, int center)
{
    dsp::FeatureMatrix features;
    features.values = utterance.features;
    features.utterance_id = utterance.id;
    auto [ctx, labels] = dsp::stack_context(features, width, utterance.labels, center);
    return {std::move(ctx.rows), std::move(labels)};
}

std::string format_double(double v, int precision = 6)
{
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(precision);
    ss << v;
    return ss.str();
}

}  // namespace

std::vector<UtteranceData> load_split(const DatasetManifest& manifest, Split split)
{
    std::vector<UtteranceData> out;
    for (const ManifestEntry* entry : manifest.split_entries(split)) {
        UtteranceData u;
        u.id = entry->utterance_id;
        if (entry->label_path == "-")
            throw config_error("utterance '" + entry->utterance_id + "' has no label file");
        const dsp::FeatureMatrix features = dsp::read_feat1(entry->data_path);
        u.features = features.values;
        u.labels = dsp::read_labels(entry->label_path);
        if (static_cast<long>(u.labels.size()) != u.features.rows())
            throw shape_error("utterance '" + u.id + "': " + std::to_string(u.labels.size())
                              + " labels for " + std::to_string(u.features.rows()) + " frames");
        out.push_back(std::move(u));
    }
    return out;
}

double frame_recognition_rate(const std::vector<int>& predicted,
                              const std::vector<int>& reference)
{
    if (predicted.size() != reference.size())
        throw shape_error("frame_recognition_rate: lengths differ ("
                          + std::to_string(predicted.size()) + " vs "
                          + std::to_string(reference.size()) + ")");
    if (predicted.empty()) throw config_error("frame_recognition_rate: empty label vectors");
    long correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == reference[i]) ++correct;
    return 100.0 * static_cast<double>(correct) / static_cast<double>(predicted.size());
}

ModelContainer train_model(const ExperimentConfig& config,
                           const std::vector<UtteranceData>& train_set, std::uint64_t seed)
{
    config.validate();
    const int feature_dim = feature_dim_of(train_set);

    ModelContainer model;
    model.reservoir = config.build_model(feature_dim, seed);
    model.context_width = config.context_width;
    model.context_center =
        config.context_center < 0 ? config.context_width / 2 : config.context_center;
    model.washout = config.washout;
    model.n_classes = config.n_classes;

    const int z_dim = model.reservoir.n_in + model.reservoir.state_dim();
    RidgeAccumulator accumulator(z_dim, config.n_classes);

    for (const auto& utterance : train_set) {
        try {
            auto [ctx, labels] = context_rows(utterance, config.context_width,
                                              config.context_center);
            if (config.washout >= ctx.rows())
                throw config_error("utterance shorter than the washout");
            const Eigen::MatrixXd states =
                run_sequence(model.reservoir, ctx, config.washout);
            const long kept = ctx.rows() - config.washout;
            Eigen::MatrixXd z_rows(kept, z_dim);
            z_rows << ctx.bottomRows(kept), states;
            Eigen::MatrixXd y_rows = Eigen::MatrixXd::Zero(kept, config.n_classes);
            for (long t = 0; t < kept; ++t) {
                const int label = labels[config.washout + t];
                if (label < 0 || label >= config.n_classes)
                    throw config_error("label " + std::to_string(label) + " outside [0, "
                                       + std::to_string(config.n_classes) + ")");
                y_rows(t, label) = 1.0;
            }
            accumulator.add_rows(z_rows, y_rows);
        } catch (const error& e) {
            throw error("utterance '" + utterance.id + "': " + e.what());
        }
    }

    model.readout = accumulator.solve(RidgeConfig{config.gamma});
    return model;
}

std::vector<int> predict_labels(const ModelContainer& model, const UtteranceData& utterance)
{
    if (!model.readout) throw config_error("model has no trained readout");
    UtteranceData padded = utterance;
    if (padded.labels.empty()) padded.labels.assign(padded.features.rows(), 0);
    auto [ctx, labels] = context_rows(padded, model.context_width, model.context_center);
    if (model.washout >= ctx.rows())
        throw config_error("utterance '" + utterance.id + "' shorter than the washout");
    const Eigen::MatrixXd states = run_sequence(model.reservoir, ctx, model.washout);
    const Eigen::MatrixXd inputs = ctx.bottomRows(ctx.rows() - model.washout);
    const Eigen::MatrixXd scores =
        inputs * model.readout->W_out.leftCols(inputs.cols()).transpose()
        + states * model.readout->W_out.rightCols(states.cols()).transpose();
    std::vector<int> predicted(scores.rows());
    for (long t = 0; t < scores.rows(); ++t) {
        int best = 0;
        for (int c = 1; c < scores.cols(); ++c)
            if (scores(t, c) > scores(t, best)) best = c;
        predicted[t] = best;
    }
    return predicted;
}

EvalCounts evaluate_counts(const ModelContainer& model, const std::vector<UtteranceData>& data)
{
    if (data.empty()) throw config_error("evaluate: empty utterance set");
    EvalCounts counts;
    for (const auto& utterance : data) {
        const std::vector<int> predicted = predict_labels(model, utterance);
        const std::vector<int> reference(utterance.labels.begin() + model.washout,
                                         utterance.labels.end());
        if (predicted.size() != reference.size())
            throw shape_error("evaluate: prediction/label length mismatch for '" + utterance.id
                              + "'");
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            ++counts.total;
            if (predicted[i] == reference[i]) ++counts.correct;
        }
    }
    return counts;
}

double evaluate(const ModelContainer& model, const std::vector<UtteranceData>& data)
{
    return evaluate_counts(model, data).rate_percent();
}

TrialResult run_trials(const ExperimentConfig& config,
                       const std::vector<UtteranceData>& train_set,
                       const std::vector<UtteranceData>& eval_set)
{
    config.validate();
    TrialResult result;
    for (int k = 0; k < config.n_seeds; ++k) {
        const std::uint64_t seed = config.master_seed + static_cast<std::uint64_t>(k);
        try {
            const auto start = std::chrono::steady_clock::now();
            const ModelContainer model = train_model(config, train_set, seed);
            const auto end = std::chrono::steady_clock::now();
            result.train_seconds += std::chrono::duration<double>(end - start).count();
            result.rates.push_back(evaluate(model, eval_set));
            if (k == 0)
                result.n_params = static_cast<long>(model.readout->n_classes())
                                  * model.readout->z_dim();
        } catch (const error& e) {
            throw error("trial seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    const double n = static_cast<double>(result.rates.size());
    for (double r : result.rates) result.mean += r;
    result.mean /= n;
    if (result.rates.size() > 1) {
        double ss = 0;
        for (double r : result.rates) ss += (r - result.mean) * (r - result.mean);
        result.stddev = std::sqrt(ss / (n - 1.0));
    }
    return result;
}

std::vector<GridAxis> grid_axes(const ConfigMap& map)
{
    std::vector<GridAxis> axes;
    for (const auto& key : map.keys_with_prefix("grid.")) {
        GridAxis axis;
        axis.key = key.substr(5);
        if (axis.key.empty()) throw config_error("grid axis with empty key");
        if (axis.key == "trial.n_seeds")
            throw config_error("trial.n_seeds cannot be a grid axis");
        axis.values = map.is_list(key) ? map.get_list(key)
                                       : std::vector<std::string>{map.get_string(key)};
        if (axis.values.empty()) throw config_error("grid axis '" + axis.key + "' is empty");
        axes.push_back(std::move(axis));
    }
    return axes;
}

std::vector<GridPointResult> grid_search(const ConfigMap& base,
                                         const std::vector<GridAxis>& axes,
                                         const std::vector<UtteranceData>& train_set,
                                         const std::vector<UtteranceData>& validation_set,
                                         int jobs)
{
    if (axes.empty()) throw config_error("grid_search: no grid.* axes configured");
    long n_points = 1;
    for (const auto& axis : axes) n_points *= static_cast<long>(axis.values.size());

    std::vector<GridPointResult> points(n_points);
    parallel_for(n_points, jobs, [&](long index) {
        GridPointResult& point = points[index];
        ConfigMap local = base;
        long rest = index;
        for (const auto& axis : axes) {
            const auto pick = rest % static_cast<long>(axis.values.size());
            rest /= static_cast<long>(axis.values.size());
            local.set(axis.key, axis.values[pick]);
            point.values.push_back(axis.values[pick]);
        }
        try {
            const ExperimentConfig cfg = ExperimentConfig::from_map(local);
            point.trial = run_trials(cfg, train_set, validation_set);
            point.ok = true;
        } catch (const std::exception& e) {
            point.error = e.what();
            log_warn("grid point failed: " + point.error);
        }
    });
    return points;
}

void write_trial_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                     const TrialResult& result)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create CSV " + path.string());
    out << "variant,layers,rho,leak,gamma,context_width,washout";
    for (std::size_t k = 0; k < result.rates.size(); ++k) out << ",seed" << k;
    out << ",mean,std,train_seconds,n_params\n";

    std::string layers;
    for (std::size_t i = 0; i < config.layer_sizes.size(); ++i) {
        if (i) layers += ';';
        layers += std::to_string(config.layer_sizes[i]);
    }
    out << to_string(config.variant) << ',' << layers << ',' << config.spectral_radius << ','
        << config.leak_rate << ',' << config.gamma << ',' << config.context_width << ','
        << config.washout;
    for (double r : result.rates) out << ',' << format_double(r);
    out << ',' << format_double(result.mean) << ',' << format_double(result.stddev) << ','
        << format_double(result.train_seconds, 3) << ',' << result.n_params << '\n';
    if (!out) throw io_error("failed writing CSV " + path.string());
}

void write_grid_csv(const std::filesystem::path& path, const std::vector<GridAxis>& axes,
                    std::vector<GridPointResult> points, int n_seeds)
{
    std::stable_sort(points.begin(), points.end(),
                     [](const GridPointResult& a, const GridPointResult& b) {
                         if (a.ok != b.ok) return a.ok;
                         return a.trial.mean > b.trial.mean;
                     });

    std::ofstream out(path);
    if (!out) throw io_error("cannot create CSV " + path.string());
    for (const auto& axis : axes) out << axis.key << ',';
    for (int k = 0; k < n_seeds; ++k) out << "seed" << k << ',';
    out << "mean,std,train_seconds,n_params,status\n";

    for (const auto& point : points) {
        for (const auto& v : point.values) out << v << ',';
        for (int k = 0; k < n_seeds; ++k) {
            if (point.ok && k < static_cast<int>(point.trial.rates.size()))
                out << format_double(point.trial.rates[k]);
            out << ',';
        }
        if (point.ok) {
            out << format_double(point.trial.mean) << ',' << format_double(point.trial.stddev)
                << ',' << format_double(point.trial.train_seconds, 3) << ','
                << point.trial.n_params << ",ok\n";
        } else {
            std::string cleaned = point.error;
            std::replace(cleaned.begin(), cleaned.end(), ',', ';');
            std::replace(cleaned.begin(), cleaned.end(), '\n', ' ');
            out << ",,,,\"" << cleaned << "\"\n";
        }
    }
    if (!out) throw io_error("failed writing CSV " + path.string());
}

void write_eval_csv(const std::filesystem::path& path, const std::string& model_name,
                    const std::string& split_name, const EvalCounts& counts)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create CSV " + path.string());
    out << "model,split,frames,correct,rate\n";
    out << model_name << ',' << split_name << ',' << counts.total << ',' << counts.correct << ','
        << format_double(counts.rate_percent()) << '\n';
    if (!out) throw io_error("failed writing CSV " + path.string());
}

}  // namespace esn::pipeline
