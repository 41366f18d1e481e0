#pragma once

#include "esn/config.hpp"
#include "esn/features.hpp"
#include "esn/manifest.hpp"
#include "esn/model_io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace esn::pipeline {

/// One utterance ready for training/evaluation: feature rows plus one label
/// per frame.
struct UtteranceData {
    std::string id;
    Eigen::MatrixXd features;  // T x n_features
    std::vector<int> labels;
};

/// Reads FEAT1 features and labels for every manifest entry in the split.
std::vector<UtteranceData> load_split(const DatasetManifest& manifest, Split split);

/// Percent of positions where the two label vectors agree.
double frame_recognition_rate(const std::vector<int>& predicted,
                              const std::vector<int>& reference);

/// Builds the reservoir for this seed, harvests states over the training
/// utterances, accumulates the extended-state normal equations and solves the
/// readout once. Reservoir weights are frozen; only the readout is fitted.
ModelContainer train_model(const ExperimentConfig& config,
                           const std::vector<UtteranceData>& train_set, std::uint64_t seed);

/// Frame predictions for one utterance (frames past the washout).
std::vector<int> predict_labels(const ModelContainer& model, const UtteranceData& utterance);

struct EvalCounts {
    long total = 0;
    long correct = 0;
    double rate_percent() const { return total == 0 ? 0.0 : 100.0 * correct / total; }
};

/// Micro-averaged frame recognition over all utterances: pooled
/// correct / pooled total, so longer utterances weigh more.
EvalCounts evaluate_counts(const ModelContainer& model,
                           const std::vector<UtteranceData>& data);
double evaluate(const ModelContainer& model, const std::vector<UtteranceData>& data);

/// Seed-averaged outcome of one configuration. Seeds are master_seed + k.
struct TrialResult {
    std::vector<double> rates;  // percent, one per seed
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single seed
    double train_seconds = 0.0;
    long n_params = 0;  // readout entries: n_classes * z_dim
};

TrialResult run_trials(const ExperimentConfig& config,
                       const std::vector<UtteranceData>& train_set,
                       const std::vector<UtteranceData>& eval_set);

/// One grid axis: a config key and the values it sweeps.
struct GridAxis {
    std::string key;
    std::vector<std::string> values;
};

/// Collects grid.* keys from a config map, stripping the prefix.
std::vector<GridAxis> grid_axes(const ConfigMap& map);

struct GridPointResult {
    std::vector<std::string> values;  // aligned with the axes
    TrialResult trial;
    bool ok = false;
    std::string error;
};

/// Cartesian product of the axes; each point is scored with run_trials
/// against the validation data. Failing points are recorded and the sweep
/// continues.
std::vector<GridPointResult> grid_search(const ConfigMap& base,
                                         const std::vector<GridAxis>& axes,
                                         const std::vector<UtteranceData>& train_set,
                                         const std::vector<UtteranceData>& validation_set,
                                         int jobs = 1);

/// CSV writers. Grid rows are sorted by mean rate descending, failed points
/// last.
void write_trial_csv(const std::filesystem::path& path, const ExperimentConfig& config,
                     const TrialResult& result);
void write_grid_csv(const std::filesystem::path& path, const std::vector<GridAxis>& axes,
                    std::vector<GridPointResult> points, int n_seeds);
void write_eval_csv(const std::filesystem::path& path, const std::string& model_name,
                    const std::string& split_name, const EvalCounts& counts);

}  // namespace esn::pipeline
