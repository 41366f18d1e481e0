#pragma once

#include "esn/common.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <optional>
#include <string>
#include <vector>

namespace esn {

/// Hyperparameters of one reservoir layer or sub-group host.
///
/// leak_on_activation selects between the two published update forms:
/// true scales the activation by the leak rate,
///   x' = (1-a)x + a*tanh(W_in u + W x + theta),
/// false leaves the activation unscaled,
///   x' = (1-a)x + tanh(W_in u + W x + theta).
/// The scaled form keeps states inside [-1, 1] and is the default.
struct LayerConfig {
    int size = 100;
    double spectral_radius = 0.3;
    double leak_rate = 0.5;
    double input_scale = 0.1;
    double bias_scale = 0.1;
    double connectivity = 0.1;
    int delay = 0;  // own-state delay tau, used by the heterogeneous variants
    std::uint64_t seed = 1;
    bool leak_on_activation = true;

    void validate() const;
};

/// Frozen random weights of one layer. Immutable after init_layer.
struct LayerWeights {
    Eigen::SparseMatrix<double> W;  // size x size recurrent
    Eigen::MatrixXd W_in;           // size x n_in
    Eigen::VectorXd theta;          // size

    int size() const { return static_cast<int>(W.rows()); }
    int n_in() const { return static_cast<int>(W_in.cols()); }
};

/// Largest absolute eigenvalue, estimated by power iteration with a two-term
/// recurrence fit so complex-conjugate dominant pairs converge too. Restarts
/// from a fresh random vector on stagnation; throws numerical_error after
/// max_restarts * max_iterations steps without convergence.
double spectral_radius(const Eigen::SparseMatrix<double>& matrix, double tol = 1e-9,
                       int max_iterations = 10000, int max_restarts = 10);
double spectral_radius(const Eigen::MatrixXd& matrix, double tol = 1e-9,
                       int max_iterations = 10000, int max_restarts = 10);

/// Samples the frozen weights for one layer. W is uniform [-1,1] with each
/// entry kept with probability `connectivity`, then rescaled so its spectral
/// radius equals the configured value; W_in and theta are dense uniform on
/// [-input_scale, input_scale] and [-bias_scale, bias_scale]. Fully
/// determined by config.seed. A pathological draw whose spectral radius is
/// (numerically) zero, or whose rescaled radius misses the target, is
/// redrawn with an incremented sub-seed, at most 10 times.
LayerWeights init_layer(const LayerConfig& config, int n_in);

/// Division of one reservoir into sub-groups with per-group state delays.
struct SubGroupPartition {
    std::vector<int> group_sizes;
    std::vector<int> group_delays;

    int total_size() const;
    int max_delay() const;
    void validate(int reservoir_size) const;
};

/// Ring buffer over the last (capacity) state vectors. Reads past the stored
/// history return the zero vector, consistent with the zero initial state.
class DelayBuffer {
public:
    DelayBuffer(int capacity, int dim);

    void push(const Eigen::VectorXd& state);
    /// State from `delay` steps ago; read(0) is the most recent push.
    const Eigen::VectorXd& read(int delay) const;
    void clear();
    int capacity() const { return capacity_; }
    int dim() const { return dim_; }

private:
    int capacity_;
    int dim_;
    std::vector<Eigen::VectorXd> ring_;
    Eigen::VectorXd zero_;
    long head_ = -1;
    long count_ = 0;
};

enum class Variant { shallow, deep, hetero_shallow, hetero_deep };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& name);

/// A frozen reservoir: the single layer of the shallow variants or the stack
/// of the deep ones, plus the sub-group partition for hetero_shallow.
struct ReservoirModel {
    Variant variant = Variant::shallow;
    std::vector<LayerConfig> configs;
    std::vector<LayerWeights> layers;
    std::optional<SubGroupPartition> partition;
    int n_in = 0;

    int state_dim() const;
    void validate() const;
};

/// Builds and initializes a model. Shallow variants take exactly one config;
/// hetero_shallow additionally needs the partition; hetero_deep reads each
/// layer's delay from its config.
ReservoirModel make_model(Variant variant, const std::vector<LayerConfig>& configs, int n_in,
                          const std::optional<SubGroupPartition>& partition = std::nullopt);

/// One leaky-integrator update of a single reservoir.
Eigen::VectorXd step_shallow(const Eigen::VectorXd& state, const Eigen::VectorXd& input,
                             const LayerWeights& weights, double leak_rate,
                             bool leak_on_activation);

/// Heterogeneous shallow update: assembles the mixed-delay state (each
/// sub-group's slice read from its own delay), applies the shallow update
/// with it, and pushes the result into the buffer.
Eigen::VectorXd step_hetero_shallow(DelayBuffer& buffer, const Eigen::VectorXd& input,
                                    const LayerWeights& weights, double leak_rate,
                                    const SubGroupPartition& partition, bool leak_on_activation);

/// Deep update: layer 1 consumes the input, layer i >= 2 consumes the state
/// of layer i-1 computed this same step.
std::vector<Eigen::VectorXd> step_deep(const std::vector<Eigen::VectorXd>& states,
                                       const Eigen::VectorXd& input,
                                       const std::vector<LayerWeights>& weights,
                                       const std::vector<LayerConfig>& configs);

/// Heterogeneous deep update: layer i leaks from and recurs on its own state
/// from delay_i steps ago while consuming the freshly updated layer below.
/// New states are pushed into the buffers.
std::vector<Eigen::VectorXd> step_hetero_deep(std::vector<DelayBuffer>& buffers,
                                              const Eigen::VectorXd& input,
                                              const std::vector<LayerWeights>& weights,
                                              const std::vector<LayerConfig>& configs);

/// Runs the model over a whole sequence from zero state (buffers cleared),
/// dropping the first `washout` rows. Row t holds the concatenated layer
/// states; for the heterogeneous variants these are the delayed states that
/// feed the readout, group/layer i contributing its state from delay_i steps
/// ago. Columns are laid out layer 1 first.
Eigen::MatrixXd run_sequence(const ReservoirModel& model, const Eigen::MatrixXd& inputs,
                             int washout = 0);

}  // namespace esn
