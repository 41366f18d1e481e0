#include "esn/common.hpp"
#include "esn/readout.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

using namespace esn;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed, double amp = 1.0)
{
    Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-amp, amp);
    return m;
}

/// Independent dense normal-equation oracle: explicit LU inverse of
/// (Z Z^T + gamma^2 I), no shared code with the solver under test.
Eigen::MatrixXd ridge_oracle(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y, double gamma)
{
    Eigen::MatrixXd gram = Z * Z.transpose();
    gram += gamma * gamma * Eigen::MatrixXd::Identity(Z.rows(), Z.rows());
    return Y * Z.transpose() * Eigen::FullPivLU<Eigen::MatrixXd>(gram).inverse();
}

double ridge_objective(const Eigen::MatrixXd& W, const Eigen::MatrixXd& Z,
                       const Eigen::MatrixXd& Y, double gamma)
{
    return (Y - W * Z).squaredNorm() + gamma * gamma * W.squaredNorm();
}

}  // namespace

TEST_CASE("extended state assembly dimensions")
{
    const Eigen::VectorXd u = Eigen::VectorXd::Ones(252);
    const Eigen::VectorXd x1 = Eigen::VectorXd::Constant(2000, 2.0);
    CHECK(assemble_extended(u, {x1}).size() == 2252);
    CHECK(assemble_extended(u, {x1, x1, x1}).size() == 6252);

    // Empty layer list degenerates to the input itself.
    const Eigen::VectorXd alone = assemble_extended(u, {});
    CHECK(alone.size() == 252);
    CHECK((alone - u).cwiseAbs().maxCoeff() == 0.0);

    // Order: input first, then layers.
    Eigen::VectorXd a(1), b(1);
    a << 5.0;
    b << 7.0;
    const Eigen::VectorXd z = assemble_extended(a, {b});
    CHECK(z[0] == 5.0);
    CHECK(z[1] == 7.0);
}

TEST_CASE("exact interpolation: square invertible Z at gamma 0 recovers the map")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Eigen::MatrixXd Z = random_matrix(12, 12, seed)
                                  + 3.0 * Eigen::MatrixXd::Identity(12, 12);
        const Eigen::MatrixXd A = random_matrix(4, 12, seed + 100);
        const Eigen::MatrixXd Y = A * Z;
        const ReadoutWeights w = fit_ridge(Z, Y, RidgeConfig{0.0});
        CHECK((w.W_out - A).norm() <= 1e-8 * A.norm());
        // Fit-then-predict reproduces the training targets.
        CHECK((w.W_out * Z - Y).norm() <= 1e-8 * Y.norm());
    }
}

TEST_CASE("ridge solve matches the dense normal-equation oracle")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Eigen::MatrixXd Z = random_matrix(5, 40, seed);
        const Eigen::MatrixXd Y = random_matrix(3, 40, seed + 50);
        for (double gamma : {0.1, 1.0}) {
            const ReadoutWeights w = fit_ridge(Z, Y, RidgeConfig{gamma});
            const Eigen::MatrixXd oracle = ridge_oracle(Z, Y, gamma);
            CHECK((w.W_out - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
        }
    }
}

TEST_CASE("regularization shrinks the solution monotonically")
{
    const Eigen::MatrixXd Z = random_matrix(8, 60, 3);
    const Eigen::MatrixXd Y = random_matrix(2, 60, 4);
    double previous = std::numeric_limits<double>::infinity();
    for (double gamma : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const double norm = fit_ridge(Z, Y, RidgeConfig{gamma}).W_out.norm();
        CHECK(norm < previous);
        previous = norm;
    }
    // gamma -> infinity drives the weights to zero.
    CHECK(fit_ridge(Z, Y, RidgeConfig{1e6}).W_out.norm() < 1e-6);
}

TEST_CASE("rank-deficient gram at gamma 0 falls back to minimum-norm least squares")
{
    // Duplicate design dimensions make Z Z^T singular.
    Eigen::MatrixXd Z(6, 30);
    const Eigen::MatrixXd base = random_matrix(3, 30, 9);
    Z.topRows(3) = base;
    Z.bottomRows(3) = base;
    const Eigen::MatrixXd Y = random_matrix(2, 30, 10);

    const ReadoutWeights w = fit_ridge(Z, Y, RidgeConfig{0.0});
    CHECK(w.W_out.allFinite());

    // Oracle: Y * pinv(Z) via a rank-revealing decomposition.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Z);
    const Eigen::MatrixXd oracle = Y * cod.pseudoInverse();
    CHECK((w.W_out - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
}

TEST_CASE("residual orthogonality at gamma 0 with full row rank")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Eigen::MatrixXd Z = random_matrix(6, 80, seed * 3);
        const Eigen::MatrixXd Y = random_matrix(3, 80, seed * 7);
        const ReadoutWeights w = fit_ridge(Z, Y, RidgeConfig{0.0});
        const Eigen::MatrixXd residual_projection = Z * (Y - w.W_out * Z).transpose();
        CHECK(residual_projection.norm() <= 1e-8 * std::max(1.0, Y.norm() * Z.norm()));
    }
}

TEST_CASE("solution minimizes the ridge objective against perturbations")
{
    const Eigen::MatrixXd Z = random_matrix(7, 50, 21);
    const Eigen::MatrixXd Y = random_matrix(3, 50, 22);
    const double gamma = 0.3;
    const ReadoutWeights w = fit_ridge(Z, Y, RidgeConfig{gamma});
    const double best = ridge_objective(w.W_out, Z, Y, gamma);
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd delta(3, 7);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 7; ++j) delta(i, j) = rng.uniform(-1e-2, 1e-2);
        CHECK(ridge_objective(w.W_out + delta, Z, Y, gamma) >= best - 1e-9);
    }
}

TEST_CASE("streaming accumulation equals the one-shot solve and merges add up")
{
    const Eigen::MatrixXd Z = random_matrix(5, 64, 31);
    const Eigen::MatrixXd Y = random_matrix(2, 64, 32);
    const RidgeConfig cfg{0.05};
    const ReadoutWeights direct = fit_ridge(Z, Y, cfg);

    // Sample-by-sample accumulation.
    RidgeAccumulator stream(5, 2);
    for (int m = 0; m < 64; ++m) stream.add(Z.col(m), Y.col(m));
    CHECK((stream.solve(cfg).W_out - direct.W_out).norm() <= 1e-10 * (1.0 + direct.W_out.norm()));
    CHECK(stream.sample_count() == 64);

    // Two partial accumulators merged.
    RidgeAccumulator left(5, 2), right(5, 2);
    left.add_rows(Z.leftCols(30).transpose(), Y.leftCols(30).transpose());
    right.add_rows(Z.rightCols(34).transpose(), Y.rightCols(34).transpose());
    left.merge(right);
    CHECK((left.solve(cfg).W_out - direct.W_out).norm() <= 1e-10 * (1.0 + direct.W_out.norm()));

    RidgeAccumulator empty(5, 2);
    CHECK_THROWS_AS(empty.solve(cfg), config_error);
    CHECK_THROWS_AS(fit_ridge(Z, Y, RidgeConfig{-1.0}), config_error);
    CHECK_THROWS_AS(fit_ridge(Z, random_matrix(2, 10, 1), cfg), shape_error);
}

TEST_CASE("non-finite inputs are rejected")
{
    Eigen::MatrixXd Z = random_matrix(3, 10, 41);
    Z(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(fit_ridge(Z, random_matrix(2, 10, 42), RidgeConfig{0.1}), numerical_error);
}

TEST_CASE("predict applies the linear readout")
{
    ReadoutWeights w;
    w.W_out.resize(2, 3);
    w.W_out << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd z(3);
    z << 1, 2, 3;
    const Eigen::VectorXd y = predict(w, z);
    CHECK(y[0] == doctest::Approx(14.0));
    CHECK(y[1] == doctest::Approx(32.0));

    CHECK(predict(w, Eigen::VectorXd::Zero(3)).isZero());

    // Identity block picks out the matching z entries.
    ReadoutWeights id;
    id.W_out = Eigen::MatrixXd::Identity(2, 3);
    const Eigen::VectorXd picked = predict(id, z);
    CHECK(picked[0] == 1.0);
    CHECK(picked[1] == 2.0);

    CHECK_THROWS_AS(predict(w, Eigen::VectorXd::Zero(4)), shape_error);
}

TEST_CASE("classify takes the argmax with low-index ties")
{
    Eigen::VectorXd y(3);
    y << 0.1, 0.9, 0.2;
    CHECK(classify(y) == 1);

    CHECK(classify(Eigen::VectorXd::Constant(5, 2.5)) == 0);

    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(35);
    onehot[17] = 1.0;
    CHECK(classify(onehot) == 17);

    CHECK_THROWS_AS(classify(Eigen::VectorXd()), config_error);

    // Invariance under positive scaling of the readout.
    ReadoutWeights w;
    w.W_out = random_matrix(4, 6, 51);
    ReadoutWeights scaled;
    scaled.W_out = 3.7 * w.W_out;
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd z(6);
        for (int i = 0; i < 6; ++i) z[i] = rng.uniform(-2.0, 2.0);
        CHECK(classify(predict(w, z)) == classify(predict(scaled, z)));
    }
}

TEST_CASE("readout CSV export")
{
    const auto dir = std::filesystem::temp_directory_path() / "esn_readout_tests";
    std::filesystem::create_directories(dir);
    ReadoutWeights w;
    w.W_out = random_matrix(3, 4, 61);
    write_readout_csv(dir / "readout.csv", w);
    CHECK(std::filesystem::exists(dir / "readout.csv"));
}
