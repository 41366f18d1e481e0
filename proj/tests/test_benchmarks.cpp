#include "esn/benchmarks.hpp"
#include "esn/common.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace esn;
using namespace esn::bench;

namespace {

/// Shift-register oracle: row t holds [u(t), u(t-1), ..., u(t-K)].
Eigen::MatrixXd delay_line_states(const Eigen::VectorXd& input, int max_lag)
{
    Eigen::MatrixXd rows(input.size(), max_lag + 1);
    for (long t = 0; t < input.size(); ++t)
        for (int k = 0; k <= max_lag; ++k) rows(t, k) = t - k >= 0 ? input[t - k] : 0.0;
    return rows;
}

}  // namespace

TEST_CASE("mc task generation")
{
    const MCTask task = generate_mc_task(4000, 10, 5);
    CHECK(task.input.size() == 4000);
    CHECK(task.max_lag == 10);
    CHECK(task.input.maxCoeff() <= 0.8);
    CHECK(task.input.minCoeff() >= -0.8);

    // Same seed, same sequence; different seed differs.
    const MCTask again = generate_mc_task(4000, 10, 5);
    CHECK((task.input - again.input).cwiseAbs().maxCoeff() == 0.0);
    const MCTask other = generate_mc_task(4000, 10, 6);
    CHECK((task.input - other.input).cwiseAbs().maxCoeff() > 0.0);

    // Empirical mean within 3 sigma of the uniform-distribution bound:
    // sigma_mean = sqrt((1.6^2 / 12) / 4000) ~ 0.0073.
    CHECK(std::abs(task.input.mean()) <= 3.0 * 0.0073031);

    CHECK_THROWS_AS(generate_mc_task(50, 10, 1), config_error);
}

TEST_CASE("delay-line reservoir recalls perfectly up to its depth")
{
    const int max_lag = 10;
    const MCTask task = generate_mc_task(3000, max_lag, 17);
    const Eigen::MatrixXd states = delay_line_states(task.input, max_lag);

    const MCResult result = memory_capacity_from_states(states, task.input, max_lag, 0.7, 1e-10);
    for (int k = 1; k <= max_lag; ++k) CHECK(result.per_lag[k - 1] >= 0.99);
    CHECK(result.total >= 0.99 * max_lag);
    CHECK(result.total <= max_lag + 1e-9);

    // Beyond the register depth the capacity collapses: score 15 lags with a
    // 10-register line.
    const MCResult beyond =
        memory_capacity_from_states(delay_line_states(task.input, 10), task.input, 15, 0.7,
                                    1e-10, 15);
    for (int k = 1; k <= 10; ++k) CHECK(beyond.per_lag[k - 1] >= 0.99);
    for (int k = 11; k <= 15; ++k) CHECK(beyond.per_lag[k - 1] <= 0.05);
}

TEST_CASE("shuffled targets score nothing")
{
    const int max_lag = 8;
    const MCTask task = generate_mc_task(3000, max_lag, 23);
    const Eigen::MatrixXd states = delay_line_states(task.input, max_lag);

    // Destroy the temporal pairing between states and targets.
    Eigen::VectorXd shuffled = task.input;
    Rng rng(29);
    for (long i = shuffled.size(); i > 1; --i) {
        const long j = rng.uniform_int(0, i - 1);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    const MCResult null_scores =
        memory_capacity_from_states(states, shuffled, max_lag, 0.7, 1e-10);
    for (double s : null_scores.per_lag) CHECK(s <= 0.05);
}

TEST_CASE("memory capacity respects bounds and monotonicity in the lag count")
{
    LayerConfig cfg;
    cfg.size = 20;
    cfg.seed = 3;
    cfg.spectral_radius = 0.9;
    cfg.leak_rate = 1.0;
    cfg.input_scale = 0.5;
    cfg.bias_scale = 0.0;
    cfg.connectivity = 0.5;
    const ReservoirModel model = make_model(Variant::shallow, {cfg}, 1);

    const MCTask task = generate_mc_task(3000, 30, 31);
    const MCResult result = memory_capacity(model, task, 0.7, 1e-8);
    for (double s : result.per_lag) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
    // Theoretical capacity bound: total <= N (5% slack for estimation noise).
    CHECK(result.total <= cfg.size * 1.05);

    // Fixed reserve: scoring fewer lags on identical samples can only shed
    // nonnegative terms.
    Eigen::MatrixXd inputs(task.input.size(), 1);
    inputs.col(0) = task.input;
    const Eigen::MatrixXd states = run_sequence(model, inputs, 0);
    Eigen::MatrixXd design(task.input.size(), 1 + states.cols());
    design << inputs, states;
    const MCResult k12 = memory_capacity_from_states(design, task.input, 12, 0.7, 1e-8, 12);
    const MCResult k6 = memory_capacity_from_states(design, task.input, 6, 0.7, 1e-8, 12);
    for (int k = 1; k <= 6; ++k)
        CHECK(k6.per_lag[k - 1] == doctest::Approx(k12.per_lag[k - 1]).epsilon(1e-9));
    CHECK(k12.total >= k6.total - 1e-12);

    CHECK(k12.sum_lags(3, 10) == doctest::Approx([&] {
              double s = 0;
              for (int k = 3; k <= 10; ++k) s += k12.per_lag[k - 1];
              return s;
          }()));
    CHECK_THROWS_AS(k6.sum_lags(3, 10), config_error);
}

TEST_CASE("degenerate prediction variance scores zero")
{
    const MCTask task = generate_mc_task(500, 3, 41);
    // Constant design rows: the readout can only predict a constant, whose
    // variance is (numerically) zero.
    const Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(task.input.size(), 4);
    const MCResult result = memory_capacity_from_states(constant, task.input, 3, 0.7, 1e-6);
    for (double s : result.per_lag) CHECK(s == 0.0);
    CHECK(result.total == 0.0);
}

TEST_CASE("synthetic task generation: counts, balance, determinism")
{
    const auto data = generate_synthetic_frames(5, 1000, 77);
    long total = 0;
    std::map<int, long> per_class;
    for (const auto& u : data) {
        total += u.features.rows();
        CHECK(u.features.cols() == 18);
        CHECK(static_cast<long>(u.labels.size()) == u.features.rows());
        for (int label : u.labels) ++per_class[label];
    }
    CHECK(total == 5000);
    for (int c = 0; c < 5; ++c) CHECK(per_class[c] == 1000);

    // Deterministic in the seed.
    const auto again = generate_synthetic_frames(5, 1000, 77);
    REQUIRE(again.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(data[i].labels == again[i].labels);
        CHECK((data[i].features - again[i].features).cwiseAbs().maxCoeff() == 0.0);
    }

    // Segments are contiguous runs of 20..50 frames (shorter only when a
    // class quota runs out).
    std::map<int, int> short_runs;
    for (const auto& u : data) {
        long run = 1;
        for (std::size_t t = 1; t <= u.labels.size(); ++t) {
            if (t < u.labels.size() && u.labels[t] == u.labels[t - 1]) {
                ++run;
            } else {
                CHECK(run <= 50);
                if (run < 20) ++short_runs[u.labels[t - 1]];
                run = 1;
            }
        }
    }
    for (const auto& [label, count] : short_runs) CHECK(count <= 2);
}

TEST_CASE("synthetic classes are statistically distinguishable")
{
    const SyntheticTask task = make_synthetic_task(5, 123);
    const auto data = generate_synthetic_frames(task, 800, 124);

    // Class-conditional channel means.
    std::map<int, Eigen::VectorXd> sums;
    std::map<int, long> counts;
    for (const auto& u : data)
        for (long t = 0; t < u.features.rows(); ++t) {
            const int c = u.labels[t];
            if (!sums.count(c)) sums[c] = Eigen::VectorXd::Zero(18);
            sums[c] += u.features.row(t).transpose();
            counts[c] += 1;
        }
    // Two-sample statistic: with 800 frames per class the channel-mean
    // standard error is ~0.05, so a max gap above 0.2 separates the pair.
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            const Eigen::VectorXd diff = sums[a] / counts[a] - sums[b] / counts[b];
            CHECK(diff.cwiseAbs().maxCoeff() > 0.2);
        }
}

TEST_CASE("paired comparison contract")
{
    ExperimentConfig cfg_a;
    cfg_a.layer_sizes = {10};
    ExperimentConfig cfg_b = cfg_a;
    cfg_b.layer_sizes = {20};

    // Score that depends only on (config, seed): identical configs tie
    // exactly, and pairing is per-seed.
    const ScoreFn score = [](const ExperimentConfig& c, std::uint64_t seed) {
        return static_cast<double>(c.layer_sizes[0]) + 0.001 * static_cast<double>(seed % 97);
    };

    const ComparisonReport self =
        compare_variants(score, {"a", "a2"}, {cfg_a, cfg_a}, 5, 1000);
    for (double d : self.variants[1].diff_vs_first) CHECK(d == 0.0);
    CHECK(self.variants[1].wins_vs_first == 0);

    const ComparisonReport cross =
        compare_variants(score, {"a", "b"}, {cfg_a, cfg_b}, 5, 1000);
    CHECK(cross.variants[1].wins_vs_first == 5);
    for (int k = 0; k < 5; ++k)
        CHECK(cross.variants[1].diff_vs_first[k] == doctest::Approx(10.0));
    CHECK(cross.variants[0].scores[0]
          == doctest::Approx(10.0 + 0.001 * (1000 % 97)));

    CHECK_THROWS_AS(compare_variants(score, {"a"}, {cfg_a}, 5, 1), config_error);
}

TEST_CASE("csv writers produce files")
{
    const auto dir = std::filesystem::temp_directory_path() / "esn_bench_tests";
    std::filesystem::create_directories(dir);

    MCResult result;
    result.per_lag = {0.9, 0.5, 0.1};
    result.total = 1.5;
    write_mc_curve_csv(dir / "curve.csv", result);
    CHECK(std::filesystem::exists(dir / "curve.csv"));

    ExperimentConfig cfg;
    const ScoreFn score = [](const ExperimentConfig&, std::uint64_t seed) {
        return static_cast<double>(seed);
    };
    const ComparisonReport report = compare_variants(score, {"x", "y"}, {cfg, cfg}, 3, 5);
    write_comparison_csv(dir / "cmp.csv", report);
    CHECK(std::filesystem::exists(dir / "cmp.csv"));
}
