#pragma once

#include "esn/common.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace esn {

/// Trained linear readout, one row of coefficients per class.
struct ReadoutWeights {
    Eigen::MatrixXd W_out;  // n_classes x z_dim

    int n_classes() const { return static_cast<int>(W_out.rows()); }
    int z_dim() const { return static_cast<int>(W_out.cols()); }
};

struct RidgeConfig {
    double gamma = 1e-4;
};

/// Extended state [input; layer states...], the regression row the readout
/// sees. For heterogeneous models pass the delayed states the update used
/// (the run_sequence output rows already are those).
Eigen::VectorXd assemble_extended(const Eigen::VectorXd& input,
                                  const std::vector<Eigen::VectorXd>& states);

/// Streaming normal-equation accumulator: keeps Z Z^T and Y Z^T so memory
/// stays O(z_dim^2) no matter how long the corpus is. Partial accumulators
/// from parallel workers merge by addition; merge in a fixed order when
/// bitwise reproducibility matters.
class RidgeAccumulator {
public:
    RidgeAccumulator(int z_dim, int n_targets);

    /// Adds one sample (design vector z, target y).
    void add(const Eigen::VectorXd& z, const Eigen::VectorXd& y);
    /// Adds a block of samples, one per row.
    void add_rows(const Eigen::MatrixXd& z_rows, const Eigen::MatrixXd& y_rows);
    void merge(const RidgeAccumulator& other);

    /// Solves W_out = Y Z^T (Z Z^T + gamma^2 I)^{-1} through a symmetric
    /// factorization; if that fails at gamma = 0 (rank-deficient Z Z^T), the
    /// solve falls back to minimum-norm least squares via an
    /// eigendecomposition pseudoinverse.
    ReadoutWeights solve(const RidgeConfig& config) const;

    long sample_count() const { return count_; }
    int z_dim() const { return static_cast<int>(zz_.rows()); }
    int n_targets() const { return static_cast<int>(yz_.rows()); }

private:
    Eigen::MatrixXd zz_;  // z_dim x z_dim
    Eigen::MatrixXd yz_;  // n_targets x z_dim
    long count_ = 0;
};

/// Direct solve from the collected matrices: Z is z_dim x M (one column per
/// sample), Y is n_targets x M.
ReadoutWeights fit_ridge(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                         const RidgeConfig& config);

/// y = W_out z (identity output activation).
Eigen::VectorXd predict(const ReadoutWeights& readout, const Eigen::VectorXd& z);

/// Index of the maximum score; ties break toward the smallest index.
int classify(const Eigen::VectorXd& scores);

/// One CSV row per class, for inspection.
void write_readout_csv(const std::filesystem::path& path, const ReadoutWeights& readout);

}  // namespace esn
