#pragma once

#include "esn/config.hpp"
#include "esn/pipeline.hpp"
#include "esn/reservoir.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace esn::bench {

/// Short-term memory task: an i.i.d. uniform scalar sequence whose k-step
/// delayed copies the readouts must reconstruct. The first max_lag steps are
/// reserved so every target u(t-k) is defined.
struct MCTask {
    Eigen::VectorXd input;
    int max_lag = 0;
    std::uint64_t seed = 0;
};

MCTask generate_mc_task(int length, int max_lag, std::uint64_t seed, double amplitude = 0.8);

/// Per-lag scores: squared Pearson correlation between the lag-k readout and
/// u(t-k) on held-out data, clamped to [0, 1]; total is their sum.
struct MCResult {
    std::vector<double> per_lag;  // index k-1 holds lag k
    double total = 0.0;

    double sum_lags(int from_lag, int to_lag) const;
};

/// Scores memory capacity from already-harvested design rows (row t is the
/// extended state aligned with input[t]). One ridge readout per lag, trained
/// on the leading train_fraction of the usable samples and scored on the
/// rest. Samples start at `reserve` (>= max_lag) so score comparisons across
/// different lag counts see identical data. Degenerate prediction or target
/// variance scores 0.
MCResult memory_capacity_from_states(const Eigen::MatrixXd& design_rows,
                                     const Eigen::VectorXd& input, int max_lag,
                                     double train_fraction = 0.7, double gamma = 1e-6,
                                     int reserve = -1);

/// Runs the model over the task input and scores it. The design row is
/// [u(t); states(t)], reusing the extended-state convention.
MCResult memory_capacity(const ReservoirModel& model, const MCTask& task,
                         double train_fraction = 0.7, double gamma = 1e-6);

/// Writes the per-lag curve as CSV (lag, score).
void write_mc_curve_csv(const std::filesystem::path& path, const MCResult& result);

/// Frozen per-class generator parameters: each class drives the channels
/// with its own stable second-order autoregression (unit stationary
/// variance) plus a per-channel mean offset.
struct SyntheticTask {
    struct ClassParams {
        Eigen::VectorXd ar1, ar2;  // per-channel AR(2) coefficients
        Eigen::VectorXd gain;      // scales innovations to unit output variance
        Eigen::VectorXd mean;
    };
    int n_classes = 0;
    int n_channels = 0;
    std::uint64_t seed = 0;
    std::vector<ClassParams> classes;
};

SyntheticTask make_synthetic_task(int n_classes, std::uint64_t seed, int n_channels = 18);

/// Draws labeled frames: contiguous class segments of 20-50 frames are
/// concatenated into utterance-like sequences until every class has exactly
/// frames_per_class frames. Deterministic in the stream seed.
std::vector<pipeline::UtteranceData> generate_synthetic_frames(const SyntheticTask& task,
                                                               int frames_per_class,
                                                               std::uint64_t stream_seed);

/// Convenience draw: task parameters from `seed`, frame stream from seed + 1.
std::vector<pipeline::UtteranceData> generate_synthetic_frames(int n_classes,
                                                               int frames_per_class,
                                                               std::uint64_t seed);

/// Paired comparison: every variant is scored with the same seed sequence
/// (master_seed + k), so per-seed differences isolate the architecture.
/// Differences and win counts are taken against the first variant.
struct ComparisonReport {
    struct Entry {
        std::string name;
        std::vector<double> scores;
        double mean = 0.0;
        std::vector<double> diff_vs_first;  // per seed
        int wins_vs_first = 0;
    };
    std::vector<Entry> variants;
};

using ScoreFn = std::function<double(const ExperimentConfig&, std::uint64_t seed)>;

ComparisonReport compare_variants(const ScoreFn& score, const std::vector<std::string>& names,
                                  const std::vector<ExperimentConfig>& configs, int n_seeds,
                                  std::uint64_t master_seed);

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report);

}  // namespace esn::bench
