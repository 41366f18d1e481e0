#pragma once

#include "esn/wav.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace esn::dsp {

/// Framing parameters. fft_size == 0 selects the smallest power of two that
/// holds one frame.
struct FrameSpec {
    double frame_ms = 23.0;
    double overlap_ms = 12.5;
    int fft_size = 0;

    /// Frame length in samples, rounded half-up from milliseconds.
    int frame_length(int sample_rate) const;
    /// Hop (frame advance) in samples, rounded half-up.
    int hop_length(int sample_rate) const;
    /// fft_size if set, otherwise the next power of two >= frame length.
    int resolved_fft_size(int sample_rate) const;

    void validate() const;
};

/// Cuts the signal into overlapping frames. Trailing samples that do not fill
/// a complete frame are dropped.
std::vector<Eigen::VectorXd> frame_signal(const AudioSignal& signal, const FrameSpec& spec);

/// Hamming coefficients 0.54 - 0.46*cos(2*pi*n/(L-1)). A length-1 window is 1.
Eigen::VectorXd hamming_window(int length);

/// Multiplies a frame by the Hamming window of its length.
Eigen::VectorXd apply_hamming(const Eigen::VectorXd& frame);

/// Squared magnitude of the one-sided DFT of the zero-padded frame,
/// fft_size/2 + 1 bins. fft_size must be a power of two >= the frame length.
Eigen::VectorXd power_spectrum(const Eigen::VectorXd& windowed, int fft_size);

/// Invertible frequency warp used to place filter centers. to_scale maps Hz
/// to warped units, to_hz maps back.
struct FrequencyWarp {
    std::function<double(double)> to_scale;
    std::function<double(double)> to_hz;
    std::string name;
};

/// Traunmueller Bark warp: z = 26.81*f/(1960+f) - 0.53.
FrequencyWarp traunmueller_bark();

/// Triangular filters with centers equally spaced on the warped axis between
/// warp(0) and warp(sample_rate/2); each triangle spans from the previous
/// center to the next, so adjacent filters overlap at 50%.
struct FilterBank {
    Eigen::MatrixXd weights;        // n_filters x (fft_size/2 + 1), nonnegative
    std::vector<double> center_hz;  // strictly increasing

    int n_filters() const { return static_cast<int>(weights.rows()); }
    int n_bins() const { return static_cast<int>(weights.cols()); }
};

FilterBank build_bark_filterbank(int sample_rate, int n_filters, int fft_size,
                                 const FrequencyWarp& warp = traunmueller_bark());

/// Log filter energies: ln(max(sum_k weights[i,k]*spectrum[k], floor)).
Eigen::VectorXd lhcb_features(const Eigen::VectorXd& spectrum, const FilterBank& bank,
                              double log_floor = 1e-10);

/// Per-utterance feature matrix, one row per frame.
struct FeatureMatrix {
    Eigen::MatrixXd values;  // T x n_features
    std::string utterance_id;

    long frames() const { return values.rows(); }
    int n_features() const { return static_cast<int>(values.cols()); }
};

/// Per-utterance mean/variance normalization of each channel (unbiased
/// variance). Channels with variance below 1e-12 are centered only.
/// Requires at least two frames.
FeatureMatrix normalize_features(const FeatureMatrix& features);

/// Rows of `width` consecutive frames flattened together; the labeled frame
/// sits at center_index within the window.
struct ContextSequence {
    Eigen::MatrixXd rows;  // T x (n_features * width)
    int width = 1;
    int center_index = 0;
};

/// Builds the sliding context window for every frame. Out-of-range frames are
/// edge-replicated, so the row count equals the input frame count and the
/// label vector passes through unchanged. center_index < 0 selects
/// floor(width/2).
std::pair<ContextSequence, std::vector<int>> stack_context(const FeatureMatrix& features,
                                                           int width,
                                                           const std::vector<int>& labels,
                                                           int center_index = -1);

/// Front-end settings for one extraction run.
struct FeatureConfig {
    FrameSpec frame;
    int n_filters = 18;
    double log_floor = 1e-10;
    bool normalize = true;
};

/// Full front-end for one utterance: framing, Hamming window, power spectrum,
/// Bark filterbank log energies, optional per-utterance normalization.
/// Passing a prebuilt bank (matching the signal's sample rate and fft size)
/// skips rebuilding it per utterance.
FeatureMatrix extract_features(const AudioSignal& signal, const FeatureConfig& config,
                               const FilterBank* bank = nullptr);

/// FEAT1 container: "FEAT" magic, version byte 1, u32 frame and feature
/// counts, then float32 values row-major, all little-endian.
void write_feat1(const std::filesystem::path& path, const FeatureMatrix& features);
FeatureMatrix read_feat1(const std::filesystem::path& path);

/// Label files: one integer class id per line, one line per frame.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

}  // namespace esn::dsp
