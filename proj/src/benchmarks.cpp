#include "esn/benchmarks.hpp"

#include "esn/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace esn::bench {

MCTask generate_mc_task(int length, int max_lag, std::uint64_t seed, double amplitude)
{
    if (max_lag < 1) throw config_error("mc task: max_lag must be >= 1");
    if (length < 10 * max_lag)
        throw config_error("mc task: length must be >= 10 * max_lag ("
                           + std::to_string(length) + " < " + std::to_string(10 * max_lag) + ")");
    if (amplitude <= 0) throw config_error("mc task: amplitude must be positive");
    MCTask task;
    task.max_lag = max_lag;
    task.seed = seed;
    task.input.resize(length);
    Rng rng(seed);
    for (int t = 0; t < length; ++t) task.input[t] = rng.uniform(-amplitude, amplitude);
    return task;
}

double MCResult::sum_lags(int from_lag, int to_lag) const
{
    if (from_lag < 1 || to_lag > static_cast<int>(per_lag.size()) || from_lag > to_lag)
        throw config_error("sum_lags: lag range outside the computed lags");
    double sum = 0;
    for (int k = from_lag; k <= to_lag; ++k) sum += per_lag[k - 1];
    return sum;
}

namespace {

double squared_correlation(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target)
{
    const long n = prediction.size();
    if (n < 2) return 0.0;
    const double mp = prediction.mean();
    const double mt = target.mean();
    const Eigen::VectorXd dp = prediction.array() - mp;
    const Eigen::VectorXd dt = target.array() - mt;
    const double var_p = dp.squaredNorm();
    const double var_t = dt.squaredNorm();
    if (!(var_p > 1e-24) || !(var_t > 1e-24)) return 0.0;
    const double cov = dp.dot(dt);
    const double r2 = (cov * cov) / (var_p * var_t);
    if (!std::isfinite(r2)) return 0.0;
    return std::clamp(r2, 0.0, 1.0);
}

}  // namespace

MCResult memory_capacity_from_states(const Eigen::MatrixXd& design_rows,
                                     const Eigen::VectorXd& input, int max_lag,
                                     double train_fraction, double gamma, int reserve)
{
    if (max_lag < 1) throw config_error("memory capacity: max_lag must be >= 1");
    if (design_rows.rows() != input.size())
        throw shape_error("memory capacity: design rows and input lengths differ");
    if (reserve < 0) reserve = max_lag;
    if (reserve < max_lag) throw config_error("memory capacity: reserve must be >= max_lag");
    if (train_fraction <= 0 || train_fraction >= 1)
        throw config_error("memory capacity: train_fraction must lie in (0, 1)");

    const long usable = input.size() - reserve;
    const long n_train = std::lround(train_fraction * static_cast<double>(usable));
    const long n_test = usable - n_train;
    if (n_train < 2 || n_test < 2)
        throw config_error("memory capacity: too few samples after the reserve");

    const long z_dim = design_rows.cols();
    Eigen::MatrixXd z_train = design_rows.middleRows(reserve, n_train);
    Eigen::MatrixXd y_train(n_train, max_lag);
    for (long i = 0; i < n_train; ++i) {
        const long t = reserve + i;
        for (int k = 1; k <= max_lag; ++k) y_train(i, k - 1) = input[t - k];
    }

    RidgeAccumulator accumulator(static_cast<int>(z_dim), max_lag);
    accumulator.add_rows(z_train, y_train);
    const ReadoutWeights readout = accumulator.solve(RidgeConfig{gamma});

    const Eigen::MatrixXd z_test = design_rows.middleRows(reserve + n_train, n_test);
    const Eigen::MatrixXd predictions = z_test * readout.W_out.transpose();  // n_test x max_lag

    MCResult result;
    result.per_lag.resize(max_lag);
    for (int k = 1; k <= max_lag; ++k) {
        Eigen::VectorXd target(n_test);
        for (long i = 0; i < n_test; ++i) target[i] = input[reserve + n_train + i - k];
        result.per_lag[k - 1] = squared_correlation(predictions.col(k - 1), target);
    }
    result.total = std::accumulate(result.per_lag.begin(), result.per_lag.end(), 0.0);
    return result;
}

MCResult memory_capacity(const ReservoirModel& model, const MCTask& task, double train_fraction,
                         double gamma)
{
    Eigen::MatrixXd inputs(task.input.size(), 1);
    inputs.col(0) = task.input;
    const Eigen::MatrixXd states = run_sequence(model, inputs, 0);
    Eigen::MatrixXd design(task.input.size(), 1 + states.cols());
    design << inputs, states;
    return memory_capacity_from_states(design, task.input, task.max_lag, train_fraction, gamma);
}

void write_mc_curve_csv(const std::filesystem::path& path, const MCResult& result)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create CSV " + path.string());
    out << "lag,score\n";
    out.precision(10);
    for (std::size_t k = 0; k < result.per_lag.size(); ++k)
        out << (k + 1) << ',' << result.per_lag[k] << '\n';
    if (!out) throw io_error("failed writing CSV " + path.string());
}

SyntheticTask make_synthetic_task(int n_classes, std::uint64_t seed, int n_channels)
{
    if (n_classes < 2) throw config_error("synthetic task: need at least 2 classes");
    if (n_channels < 1) throw config_error("synthetic task: need at least 1 channel");

    SyntheticTask task;
    task.n_classes = n_classes;
    task.n_channels = n_channels;
    task.seed = seed;
    Rng rng(seed);

    for (int c = 0; c < n_classes; ++c) {
        SyntheticTask::ClassParams params;
        params.ar1.resize(n_channels);
        params.ar2.resize(n_channels);
        params.gain.resize(n_channels);
        params.mean.resize(n_channels);
        // Classes occupy distinct resonance bands; channels jitter around the
        // class band so no single channel gives the class away.
        const double base_angle =
            std::numbers::pi * (0.15 + 0.7 * (c + 0.5) / static_cast<double>(n_classes));
        for (int j = 0; j < n_channels; ++j) {
            const double angle = base_angle * (1.0 + 0.08 * rng.uniform(-1.0, 1.0));
            const double radius = rng.uniform(0.55, 0.9);
            const double a1 = 2.0 * radius * std::cos(angle);
            const double a2 = -radius * radius;
            params.ar1[j] = a1;
            params.ar2[j] = a2;
            // Stationary variance of AR(2) with unit innovations.
            const double variance =
                (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
            params.gain[j] = 1.0 / std::sqrt(std::max(variance, 1e-12));
            params.mean[j] = rng.uniform(-0.6, 0.6);
        }
        task.classes.push_back(std::move(params));
    }
    return task;
}

std::vector<pipeline::UtteranceData> generate_synthetic_frames(const SyntheticTask& task,
                                                               int frames_per_class,
                                                               std::uint64_t stream_seed)
{
    if (frames_per_class < 1) throw config_error("frames_per_class must be >= 1");
    constexpr int kMinSegment = 20;
    constexpr int kMaxSegment = 50;
    constexpr int kUtteranceFrames = 400;

    Rng rng(stream_seed);
    std::vector<int> remaining(task.n_classes, frames_per_class);
    std::vector<pipeline::UtteranceData> utterances;

    Eigen::MatrixXd rows(kUtteranceFrames + kMaxSegment, task.n_channels);
    std::vector<int> labels;
    long row_count = 0;
    int utterance_index = 0;

    const auto flush = [&]() {
        if (row_count == 0) return;
        pipeline::UtteranceData u;
        u.id = "synth" + std::to_string(utterance_index++);
        u.features = rows.topRows(row_count);
        u.labels = labels;
        utterances.push_back(std::move(u));
        labels.clear();
        row_count = 0;
    };

    long total_remaining = static_cast<long>(frames_per_class) * task.n_classes;
    int last_class = -1;
    std::vector<int> candidates;
    while (total_remaining > 0) {
        // Pick a class with quota left, avoiding back-to-back segments of the
        // same class so observed label runs stay within one segment.
        candidates.clear();
        for (int c = 0; c < task.n_classes; ++c)
            if (remaining[c] > 0 && c != last_class) candidates.push_back(c);
        if (candidates.empty()) {
            flush();  // only last_class remains; bound the run with a new utterance
            last_class = -1;
            for (int c = 0; c < task.n_classes; ++c)
                if (remaining[c] > 0) candidates.push_back(c);
        }
        const int c = candidates[rng.uniform_int(0, static_cast<long>(candidates.size()) - 1)];
        const int seg = std::min<int>(
            static_cast<int>(rng.uniform_int(kMinSegment, kMaxSegment)), remaining[c]);
        remaining[c] -= seg;
        total_remaining -= seg;

        const auto& params = task.classes[c];
        Eigen::VectorXd prev1 = Eigen::VectorXd::Zero(task.n_channels);
        Eigen::VectorXd prev2 = Eigen::VectorXd::Zero(task.n_channels);
        // Warm-up so segments start from the stationary regime.
        for (int t = 0; t < 30 + seg; ++t) {
            Eigen::VectorXd x(task.n_channels);
            for (int j = 0; j < task.n_channels; ++j)
                x[j] = params.ar1[j] * prev1[j] + params.ar2[j] * prev2[j] + rng.normal();
            prev2 = prev1;
            prev1 = x;
            if (t >= 30) {
                for (int j = 0; j < task.n_channels; ++j)
                    rows(row_count, j) = params.mean[j] + params.gain[j] * x[j];
                labels.push_back(c);
                ++row_count;
            }
        }
        last_class = c;
        if (row_count >= kUtteranceFrames) {
            flush();
            last_class = -1;
        }
    }
    flush();
    return utterances;
}

std::vector<pipeline::UtteranceData> generate_synthetic_frames(int n_classes,
                                                               int frames_per_class,
                                                               std::uint64_t seed)
{
    return generate_synthetic_frames(make_synthetic_task(n_classes, seed), frames_per_class,
                                     seed + 1);
}

ComparisonReport compare_variants(const ScoreFn& score, const std::vector<std::string>& names,
                                  const std::vector<ExperimentConfig>& configs, int n_seeds,
                                  std::uint64_t master_seed)
{
    if (configs.size() < 2) throw config_error("compare_variants: need at least 2 variants");
    if (names.size() != configs.size())
        throw config_error("compare_variants: names and configs differ in length");
    if (n_seeds < 1) throw config_error("compare_variants: n_seeds must be >= 1");

    ComparisonReport report;
    for (std::size_t v = 0; v < configs.size(); ++v) {
        ComparisonReport::Entry entry;
        entry.name = names[v];
        for (int k = 0; k < n_seeds; ++k)
            entry.scores.push_back(score(configs[v], master_seed + static_cast<std::uint64_t>(k)));
        entry.mean = std::accumulate(entry.scores.begin(), entry.scores.end(), 0.0)
                     / static_cast<double>(n_seeds);
        report.variants.push_back(std::move(entry));
    }
    for (auto& entry : report.variants) {
        for (int k = 0; k < n_seeds; ++k) {
            const double diff = entry.scores[k] - report.variants.front().scores[k];
            entry.diff_vs_first.push_back(diff);
            if (diff > 0) ++entry.wins_vs_first;
        }
    }
    return report;
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create CSV " + path.string());
    out << "variant";
    const std::size_t n_seeds =
        report.variants.empty() ? 0 : report.variants.front().scores.size();
    for (std::size_t k = 0; k < n_seeds; ++k) out << ",seed" << k;
    out << ",mean,wins_vs_first\n";
    out.precision(10);
    for (const auto& entry : report.variants) {
        out << entry.name;
        for (double s : entry.scores) out << ',' << s;
        out << ',' << entry.mean << ',' << entry.wins_vs_first << '\n';
    }
    if (!out) throw io_error("failed writing CSV " + path.string());
}

}  // namespace esn::bench
