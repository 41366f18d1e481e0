#include "esn/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace esn {

void LayerConfig::validate() const
{
    if (size < 1) throw config_error("layer size must be >= 1");
    if (spectral_radius <= 0) throw config_error("spectral_radius must be positive");
    if (leak_rate <= 0 || leak_rate > 1) throw config_error("leak_rate must lie in (0, 1]");
    if (input_scale <= 0) throw config_error("input_scale must be positive");
    if (bias_scale < 0) throw config_error("bias_scale must be nonnegative");
    if (connectivity <= 0 || connectivity > 1)
        throw config_error("connectivity must lie in (0, 1]");
    if (delay < 0) throw config_error("delay must be nonnegative");
}

namespace {

/// Spectral radius of a linear operator by power iteration over an
/// orthogonalized Krylov window (restarted Arnoldi). A plain one-vector
/// iteration stalls when several eigenvalues nearly tie in modulus, which
/// random reservoir matrices regularly produce; the windowed form keeps the
/// competing modes apart and its Ritz estimate converges for complex
/// dominant pairs too. Matrices no larger than the window terminate with an
/// exact invariant subspace.
template <typename Apply>
double power_iteration_radius(int n, const Apply& apply, double tol, int max_iterations,
                              int max_restarts)
{
    if (n == 0) return 0.0;
    const int window = std::min(n, 30);

    for (int restart = 0; restart < max_restarts; ++restart) {
        // Fresh random direction per restart, deterministic overall.
        Rng rng(0x5EEDull + 77ull * restart);
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
        v.normalize();

        double estimate = -1.0;
        int stable = 0;
        long matvecs = 0;
        Eigen::MatrixXd basis(n, window + 1);
        Eigen::MatrixXd hessenberg = Eigen::MatrixXd::Zero(window + 1, window);
        Eigen::VectorXd w(n);

        while (matvecs < max_iterations) {
            basis.col(0) = v;
            hessenberg.setZero();
            double h_scale = 0.0;
            int k = window;
            bool invariant = false;
            for (int j = 0; j < window; ++j) {
                apply(basis.col(j), w);
                ++matvecs;
                for (int i = 0; i <= j; ++i) {
                    const double h = basis.col(i).dot(w);
                    hessenberg(i, j) = h;
                    w -= h * basis.col(i);
                }
                // One re-orthogonalization pass keeps the basis clean.
                for (int i = 0; i <= j; ++i) {
                    const double c = basis.col(i).dot(w);
                    hessenberg(i, j) += c;
                    w -= c * basis.col(i);
                }
                const double h_next = w.norm();
                hessenberg(j + 1, j) = h_next;
                h_scale = std::max(h_scale, hessenberg.col(j).cwiseAbs().maxCoeff());
                if (h_next <= 1e-14 * std::max(h_scale, 1e-300)) {
                    k = j + 1;
                    invariant = true;
                    break;
                }
                basis.col(j + 1) = w / h_next;
            }

            const Eigen::MatrixXd projected = hessenberg.topLeftCorner(k, k);
            const Eigen::EigenSolver<Eigen::MatrixXd> eig(projected, true);
            Eigen::Index dominant;
            const double magnitude = eig.eigenvalues().cwiseAbs().maxCoeff(&dominant);
            if (invariant) return magnitude;  // exact invariant subspace

            if (estimate >= 0.0
                && std::abs(magnitude - estimate) <= tol * std::max(magnitude, 1e-30)) {
                if (++stable >= 2) return magnitude;
            } else {
                stable = 0;
            }
            estimate = magnitude;

            // Restart from the dominant Ritz direction.
            const Eigen::VectorXcd ritz = eig.eigenvectors().col(dominant);
            v = basis.leftCols(k) * ritz.real();
            if (v.norm() <= 1e-12) v = basis.leftCols(k) * ritz.cwiseAbs();
            const double norm = v.norm();
            if (norm <= 0.0) break;  // stagnated; re-randomize
            v /= norm;
        }
    }
    throw numerical_error("spectral radius power iteration failed to converge");
}

}  // namespace

double spectral_radius(const Eigen::SparseMatrix<double>& matrix, double tol, int max_iterations,
                       int max_restarts)
{
    if (matrix.rows() != matrix.cols()) throw shape_error("spectral_radius: matrix not square");
    const auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = matrix * x; };
    return power_iteration_radius(static_cast<int>(matrix.rows()), apply, tol, max_iterations,
                                  max_restarts);
}

double spectral_radius(const Eigen::MatrixXd& matrix, double tol, int max_iterations,
                       int max_restarts)
{
    if (matrix.rows() != matrix.cols()) throw shape_error("spectral_radius: matrix not square");
    const auto apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = matrix * x; };
    return power_iteration_radius(static_cast<int>(matrix.rows()), apply, tol, max_iterations,
                                  max_restarts);
}

LayerWeights init_layer(const LayerConfig& config, int n_in)
{
    config.validate();
    if (n_in < 1) throw config_error("init_layer: n_in must be >= 1");

    constexpr int kMaxAttempts = 10;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        // Draw order is fixed (W entries row-major, then W_in, then theta) so
        // a seed pins the weights bit for bit.
        Rng rng(config.seed + static_cast<std::uint64_t>(attempt));

        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(config.size * config.size * config.connectivity)
                         + 16);
        for (int i = 0; i < config.size; ++i)
            for (int j = 0; j < config.size; ++j)
                if (rng.unit() < config.connectivity)
                    triplets.emplace_back(i, j, rng.uniform(-1.0, 1.0));

        Eigen::SparseMatrix<double> recurrent(config.size, config.size);
        recurrent.setFromTriplets(triplets.begin(), triplets.end());
        recurrent.makeCompressed();

        // A draw whose digraph has no cycle is nilpotent: its radius is zero
        // up to estimator noise and no rescaling can fix it. Entries are
        // O(1), so anything below 1e-2 is such a degenerate sample.
        const double rho = spectral_radius(recurrent);
        if (rho <= 1e-2) continue;
        recurrent *= config.spectral_radius / rho;
        const double check = spectral_radius(recurrent);
        if (std::abs(check - config.spectral_radius)
            > 1e-7 * std::max(1.0, config.spectral_radius))
            continue;  // ill-conditioned draw; enforcement would be off

        LayerWeights weights;
        weights.W = std::move(recurrent);
        weights.W_in.resize(config.size, n_in);
        for (int i = 0; i < config.size; ++i)
            for (int j = 0; j < n_in; ++j)
                weights.W_in(i, j) = rng.uniform(-config.input_scale, config.input_scale);
        weights.theta.resize(config.size);
        for (int i = 0; i < config.size; ++i)
            weights.theta[i] = rng.uniform(-config.bias_scale, config.bias_scale);
        return weights;
    }
    throw numerical_error("init_layer: recurrent matrix kept a zero spectral radius after "
                          + std::to_string(kMaxAttempts) + " redraws");
}

int SubGroupPartition::total_size() const
{
    return std::accumulate(group_sizes.begin(), group_sizes.end(), 0);
}

int SubGroupPartition::max_delay() const
{
    return group_delays.empty() ? 0 : *std::max_element(group_delays.begin(), group_delays.end());
}

void SubGroupPartition::validate(int reservoir_size) const
{
    if (group_sizes.empty()) throw config_error("partition needs at least one sub-group");
    if (group_sizes.size() != group_delays.size())
        throw config_error("partition sizes and delays differ in length");
    for (int s : group_sizes)
        if (s < 1) throw config_error("sub-group sizes must be positive");
    for (int d : group_delays)
        if (d < 0) throw config_error("sub-group delays must be nonnegative");
    if (total_size() != reservoir_size)
        throw config_error("sub-group sizes sum to " + std::to_string(total_size())
                           + ", expected " + std::to_string(reservoir_size));
}

DelayBuffer::DelayBuffer(int capacity, int dim) : capacity_(capacity), dim_(dim)
{
    if (capacity < 1) throw config_error("DelayBuffer capacity must be >= 1");
    if (dim < 1) throw config_error("DelayBuffer dim must be >= 1");
    ring_.assign(capacity_, Eigen::VectorXd::Zero(dim_));
    zero_ = Eigen::VectorXd::Zero(dim_);
}

void DelayBuffer::push(const Eigen::VectorXd& state)
{
    if (state.size() != dim_) throw shape_error("DelayBuffer push: wrong state dimension");
    head_ = (head_ + 1) % capacity_;
    ring_[head_] = state;
    ++count_;
}

const Eigen::VectorXd& DelayBuffer::read(int delay) const
{
    if (delay < 0 || delay >= capacity_)
        throw config_error("DelayBuffer read: delay " + std::to_string(delay)
                           + " outside capacity " + std::to_string(capacity_));
    if (count_ <= delay) return zero_;
    return ring_[(head_ + capacity_ - delay) % capacity_];
}

void DelayBuffer::clear()
{
    head_ = -1;
    count_ = 0;
    for (auto& v : ring_) v.setZero();
}

std::string to_string(Variant variant)
{
    switch (variant) {
        case Variant::shallow: return "shallow";
        case Variant::deep: return "deep";
        case Variant::hetero_shallow: return "hetero_shallow";
        case Variant::hetero_deep: return "hetero_deep";
    }
    throw config_error("unknown variant tag");
}

Variant variant_from_string(const std::string& name)
{
    if (name == "shallow") return Variant::shallow;
    if (name == "deep") return Variant::deep;
    if (name == "hetero_shallow") return Variant::hetero_shallow;
    if (name == "hetero_deep") return Variant::hetero_deep;
    throw config_error("unknown model variant '" + name + "'");
}

int ReservoirModel::state_dim() const
{
    int total = 0;
    for (const auto& w : layers) total += w.size();
    return total;
}

void ReservoirModel::validate() const
{
    if (layers.empty()) throw config_error("model has no layers");
    if (configs.size() != layers.size())
        throw config_error("model configs and layers differ in length");
    if (n_in < 1) throw config_error("model input dimension must be >= 1");
    const bool shallow_like =
        variant == Variant::shallow || variant == Variant::hetero_shallow;
    if (shallow_like && layers.size() != 1)
        throw config_error("shallow variants take exactly one layer");
    if (variant == Variant::hetero_shallow) {
        if (!partition) throw config_error("hetero_shallow requires a sub-group partition");
        partition->validate(layers[0].size());
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const int expected = i == 0 ? n_in : layers[i - 1].size();
        if (layers[i].n_in() != expected)
            throw config_error("layer " + std::to_string(i + 1) + " input dimension "
                               + std::to_string(layers[i].n_in()) + ", expected "
                               + std::to_string(expected));
        if (layers[i].size() != configs[i].size)
            throw config_error("layer " + std::to_string(i + 1) + " size mismatch with config");
    }
}

ReservoirModel make_model(Variant variant, const std::vector<LayerConfig>& configs, int n_in,
                          const std::optional<SubGroupPartition>& partition)
{
    if (configs.empty()) throw config_error("make_model: need at least one layer config");
    const bool shallow_like =
        variant == Variant::shallow || variant == Variant::hetero_shallow;
    if (shallow_like && configs.size() != 1)
        throw config_error("make_model: shallow variants take exactly one layer config");
    if (variant == Variant::hetero_shallow && !partition)
        throw config_error("make_model: hetero_shallow requires a partition");

    ReservoirModel model;
    model.variant = variant;
    model.configs = configs;
    model.partition = variant == Variant::hetero_shallow ? partition : std::nullopt;
    model.n_in = n_in;
    model.layers.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i)
        model.layers.push_back(init_layer(configs[i], i == 0 ? n_in : configs[i - 1].size));
    model.validate();
    return model;
}

namespace {

/// Shared leaky update: x' = (1-a)*state_src + g*tanh(W_in*drive + W*state_src
/// + theta), g = a or 1. Every variant funnels through here so the reduction
/// identities hold bit for bit.
Eigen::VectorXd leaky_step(const LayerWeights& weights, const Eigen::VectorXd& state_src,
                           const Eigen::VectorXd& drive, double leak_rate,
                           bool leak_on_activation)
{
    if (state_src.size() != weights.size())
        throw shape_error("reservoir step: state dimension " + std::to_string(state_src.size())
                          + " does not match layer size " + std::to_string(weights.size()));
    if (drive.size() != weights.n_in())
        throw shape_error("reservoir step: input dimension " + std::to_string(drive.size())
                          + " does not match layer input size " + std::to_string(weights.n_in()));
    Eigen::VectorXd pre = weights.W_in * drive + weights.W * state_src + weights.theta;
    const double gain = leak_on_activation ? leak_rate : 1.0;
    Eigen::VectorXd next =
        (1.0 - leak_rate) * state_src + gain * pre.array().tanh().matrix();
    if (!next.allFinite()) throw numerical_error("non-finite reservoir state");
    return next;
}

Eigen::VectorXd assemble_delayed_state(const DelayBuffer& buffer,
                                       const SubGroupPartition& partition)
{
    Eigen::VectorXd mixed(buffer.dim());
    int offset = 0;
    for (std::size_t g = 0; g < partition.group_sizes.size(); ++g) {
        const int size = partition.group_sizes[g];
        mixed.segment(offset, size) = buffer.read(partition.group_delays[g]).segment(offset, size);
        offset += size;
    }
    return mixed;
}

}  // namespace

Eigen::VectorXd step_shallow(const Eigen::VectorXd& state, const Eigen::VectorXd& input,
                             const LayerWeights& weights, double leak_rate,
                             bool leak_on_activation)
{
    return leaky_step(weights, state, input, leak_rate, leak_on_activation);
}

Eigen::VectorXd step_hetero_shallow(DelayBuffer& buffer, const Eigen::VectorXd& input,
                                    const LayerWeights& weights, double leak_rate,
                                    const SubGroupPartition& partition, bool leak_on_activation)
{
    partition.validate(weights.size());
    if (buffer.capacity() < partition.max_delay() + 1)
        throw config_error("delay buffer capacity below max sub-group delay + 1");
    const Eigen::VectorXd mixed = assemble_delayed_state(buffer, partition);
    Eigen::VectorXd next = leaky_step(weights, mixed, input, leak_rate, leak_on_activation);
    buffer.push(next);
    return next;
}

std::vector<Eigen::VectorXd> step_deep(const std::vector<Eigen::VectorXd>& states,
                                       const Eigen::VectorXd& input,
                                       const std::vector<LayerWeights>& weights,
                                       const std::vector<LayerConfig>& configs)
{
    if (states.size() != weights.size() || weights.size() != configs.size())
        throw shape_error("step_deep: states, weights and configs must have equal length");
    std::vector<Eigen::VectorXd> next(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const Eigen::VectorXd& drive = i == 0 ? input : next[i - 1];
        next[i] = leaky_step(weights[i], states[i], drive, configs[i].leak_rate,
                             configs[i].leak_on_activation);
    }
    return next;
}

std::vector<Eigen::VectorXd> step_hetero_deep(std::vector<DelayBuffer>& buffers,
                                              const Eigen::VectorXd& input,
                                              const std::vector<LayerWeights>& weights,
                                              const std::vector<LayerConfig>& configs)
{
    if (buffers.size() != weights.size() || weights.size() != configs.size())
        throw shape_error("step_hetero_deep: buffers, weights and configs must have equal length");
    std::vector<Eigen::VectorXd> next(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (buffers[i].capacity() < configs[i].delay + 1)
            throw config_error("layer " + std::to_string(i + 1)
                               + " delay buffer capacity below delay + 1");
        const Eigen::VectorXd delayed = buffers[i].read(configs[i].delay);
        const Eigen::VectorXd& drive = i == 0 ? input : next[i - 1];
        next[i] = leaky_step(weights[i], delayed, drive, configs[i].leak_rate,
                             configs[i].leak_on_activation);
    }
    for (std::size_t i = 0; i < next.size(); ++i) buffers[i].push(next[i]);
    return next;
}

Eigen::MatrixXd run_sequence(const ReservoirModel& model, const Eigen::MatrixXd& inputs,
                             int washout)
{
    model.validate();
    const long t_count = inputs.rows();
    if (t_count == 0) throw config_error("run_sequence: empty input sequence");
    if (inputs.cols() != model.n_in)
        throw shape_error("run_sequence: input dimension " + std::to_string(inputs.cols())
                          + " does not match model input " + std::to_string(model.n_in));
    if (washout < 0 || washout >= t_count)
        throw config_error("washout must lie in [0, sequence length)");

    Eigen::MatrixXd out(t_count - washout, model.state_dim());
    const auto emit = [&](long t, const Eigen::VectorXd& row) {
        if (t >= washout) out.row(t - washout) = row.transpose();
    };

    long current_step = 0;
    try {
        switch (model.variant) {
            case Variant::shallow: {
                const auto& cfg = model.configs[0];
                Eigen::VectorXd state = Eigen::VectorXd::Zero(cfg.size);
                for (long t = 0; t < t_count; ++t) {
                    current_step = t;
                    state = step_shallow(state, inputs.row(t).transpose(), model.layers[0],
                                         cfg.leak_rate, cfg.leak_on_activation);
                    emit(t, state);
                }
                break;
            }
            case Variant::hetero_shallow: {
                const auto& cfg = model.configs[0];
                const auto& partition = *model.partition;
                DelayBuffer buffer(partition.max_delay() + 1, cfg.size);
                for (long t = 0; t < t_count; ++t) {
                    current_step = t;
                    step_hetero_shallow(buffer, inputs.row(t).transpose(), model.layers[0],
                                        cfg.leak_rate, partition, cfg.leak_on_activation);
                    // Readout sees each sub-group at its own delay.
                    emit(t, assemble_delayed_state(buffer, partition));
                }
                break;
            }
            case Variant::deep: {
                std::vector<Eigen::VectorXd> states;
                for (const auto& cfg : model.configs)
                    states.push_back(Eigen::VectorXd::Zero(cfg.size));
                Eigen::VectorXd row(model.state_dim());
                for (long t = 0; t < t_count; ++t) {
                    current_step = t;
                    states = step_deep(states, inputs.row(t).transpose(), model.layers,
                                       model.configs);
                    int offset = 0;
                    for (const auto& s : states) {
                        row.segment(offset, s.size()) = s;
                        offset += static_cast<int>(s.size());
                    }
                    emit(t, row);
                }
                break;
            }
            case Variant::hetero_deep: {
                std::vector<DelayBuffer> buffers;
                for (const auto& cfg : model.configs)
                    buffers.emplace_back(cfg.delay + 1, cfg.size);
                Eigen::VectorXd row(model.state_dim());
                for (long t = 0; t < t_count; ++t) {
                    current_step = t;
                    step_hetero_deep(buffers, inputs.row(t).transpose(), model.layers,
                                     model.configs);
                    int offset = 0;
                    for (std::size_t i = 0; i < buffers.size(); ++i) {
                        const auto& delayed = buffers[i].read(model.configs[i].delay);
                        row.segment(offset, delayed.size()) = delayed;
                        offset += static_cast<int>(delayed.size());
                    }
                    emit(t, row);
                }
                break;
            }
        }
    } catch (const numerical_error& e) {
        throw numerical_error(std::string(e.what()) + " at step " + std::to_string(current_step));
    }
    return out;
}

}  // namespace esn
