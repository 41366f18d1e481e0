#include "esn/readout.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>

namespace esn {

Eigen::VectorXd assemble_extended(const Eigen::VectorXd& input,
                                  const std::vector<Eigen::VectorXd>& states)
{
    long dim = input.size();
    for (const auto& s : states) dim += s.size();
    Eigen::VectorXd z(dim);
    z.head(input.size()) = input;
    long offset = input.size();
    for (const auto& s : states) {
        z.segment(offset, s.size()) = s;
        offset += s.size();
    }
    if (!z.allFinite()) throw numerical_error("non-finite extended state");
    return z;
}

RidgeAccumulator::RidgeAccumulator(int z_dim, int n_targets)
{
    if (z_dim < 1 || n_targets < 1)
        throw config_error("RidgeAccumulator: dimensions must be >= 1");
    zz_ = Eigen::MatrixXd::Zero(z_dim, z_dim);
    yz_ = Eigen::MatrixXd::Zero(n_targets, z_dim);
}

void RidgeAccumulator::add(const Eigen::VectorXd& z, const Eigen::VectorXd& y)
{
    if (z.size() != zz_.rows() || y.size() != yz_.rows())
        throw shape_error("RidgeAccumulator::add: dimension mismatch");
    zz_.selfadjointView<Eigen::Lower>().rankUpdate(z);
    yz_ += y * z.transpose();
    ++count_;
}

void RidgeAccumulator::add_rows(const Eigen::MatrixXd& z_rows, const Eigen::MatrixXd& y_rows)
{
    if (z_rows.rows() != y_rows.rows())
        throw shape_error("RidgeAccumulator::add_rows: sample counts differ");
    if (z_rows.cols() != zz_.rows() || y_rows.cols() != yz_.rows())
        throw shape_error("RidgeAccumulator::add_rows: dimension mismatch");
    zz_.selfadjointView<Eigen::Lower>().rankUpdate(z_rows.transpose());
    yz_ += y_rows.transpose() * z_rows;
    count_ += z_rows.rows();
}

void RidgeAccumulator::merge(const RidgeAccumulator& other)
{
    if (other.zz_.rows() != zz_.rows() || other.yz_.rows() != yz_.rows())
        throw shape_error("RidgeAccumulator::merge: dimension mismatch");
    zz_ += other.zz_;
    yz_ += other.yz_;
    count_ += other.count_;
}

ReadoutWeights RidgeAccumulator::solve(const RidgeConfig& config) const
{
    if (count_ == 0) throw config_error("ridge solve: no samples accumulated");
    if (config.gamma < 0) throw config_error("ridge gamma must be >= 0");

    Eigen::MatrixXd gram = Eigen::MatrixXd(zz_.selfadjointView<Eigen::Lower>());
    if (!gram.allFinite() || !yz_.allFinite())
        throw numerical_error("ridge solve: non-finite accumulated sums");
    gram.diagonal().array() += config.gamma * config.gamma;

    // Symmetric factorization first; validated by residual so a silently
    // degenerate factorization of a singular gram matrix cannot slip through.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() == Eigen::Success) {
        Eigen::MatrixXd solution = ldlt.solve(yz_.transpose());
        if (solution.allFinite()) {
            const double residual = (gram * solution - yz_.transpose()).norm();
            const double scale = std::max(1.0, yz_.norm());
            if (residual <= 1e-8 * scale) return ReadoutWeights{solution.transpose()};
        }
    }

    // Minimum-norm least squares through the eigendecomposition of the
    // symmetric PSD gram matrix.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success)
        throw numerical_error("ridge solve: eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();
    const double cutoff = values.cwiseAbs().maxCoeff() * 1e-12;
    Eigen::VectorXd inverted(values.size());
    for (long i = 0; i < values.size(); ++i)
        inverted[i] = values[i] > cutoff && values[i] > 0.0 ? 1.0 / values[i] : 0.0;
    const Eigen::MatrixXd pinv =
        eig.eigenvectors() * inverted.asDiagonal() * eig.eigenvectors().transpose();
    return ReadoutWeights{yz_ * pinv};
}

ReadoutWeights fit_ridge(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                         const RidgeConfig& config)
{
    if (Z.cols() != Y.cols())
        throw shape_error("fit_ridge: Z and Y sample counts differ");
    if (Z.cols() < 1) throw config_error("fit_ridge: need at least one sample");
    if (!Z.allFinite() || !Y.allFinite()) throw numerical_error("fit_ridge: non-finite inputs");
    RidgeAccumulator acc(static_cast<int>(Z.rows()), static_cast<int>(Y.rows()));
    acc.add_rows(Z.transpose(), Y.transpose());
    return acc.solve(config);
}

Eigen::VectorXd predict(const ReadoutWeights& readout, const Eigen::VectorXd& z)
{
    if (z.size() != readout.z_dim())
        throw shape_error("predict: extended state dimension " + std::to_string(z.size())
                          + " does not match readout " + std::to_string(readout.z_dim()));
    return readout.W_out * z;
}

int classify(const Eigen::VectorXd& scores)
{
    if (scores.size() == 0) throw config_error("classify: empty score vector");
    int best = 0;
    for (int i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

void write_readout_csv(const std::filesystem::path& path, const ReadoutWeights& readout)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create readout CSV " + path.string());
    out.precision(17);
    for (int r = 0; r < readout.n_classes(); ++r) {
        for (int c = 0; c < readout.z_dim(); ++c) {
            if (c) out << ',';
            out << readout.W_out(r, c);
        }
        out << '\n';
    }
    if (!out) throw io_error("failed writing readout CSV " + path.string());
}

}  // namespace esn
