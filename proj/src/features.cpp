#include "esn/features.hpp"

#include "esn/binary_io.hpp"
#include "esn/common.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

namespace esn::dsp {

namespace {

int round_half_up(double x)
{
    return static_cast<int>(std::floor(x + 0.5));
}

bool is_power_of_two(int n)
{
    return n > 0 && (n & (n - 1)) == 0;
}

int next_power_of_two(int n)
{
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

int FrameSpec::frame_length(int sample_rate) const
{
    return round_half_up(frame_ms * sample_rate / 1000.0);
}

int FrameSpec::hop_length(int sample_rate) const
{
    return round_half_up((frame_ms - overlap_ms) * sample_rate / 1000.0);
}

int FrameSpec::resolved_fft_size(int sample_rate) const
{
    return fft_size > 0 ? fft_size : next_power_of_two(frame_length(sample_rate));
}

void FrameSpec::validate() const
{
    if (frame_ms <= 0) throw config_error("frame_ms must be positive");
    if (overlap_ms <= 0) throw config_error("overlap_ms must be positive");
    if (overlap_ms >= frame_ms) throw config_error("overlap_ms must be smaller than frame_ms");
    if (fft_size != 0 && !is_power_of_two(fft_size))
        throw config_error("fft_size must be a power of two");
}

std::vector<Eigen::VectorXd> frame_signal(const AudioSignal& signal, const FrameSpec& spec)
{
    spec.validate();
    if (signal.sample_rate <= 0) throw config_error("sample_rate must be positive");
    const int frame_len = spec.frame_length(signal.sample_rate);
    const int hop = spec.hop_length(signal.sample_rate);
    if (frame_len <= 0 || hop <= 0) throw config_error("frame/hop length degenerate");
    const long n = static_cast<long>(signal.samples.size());
    if (n < frame_len)
        throw config_error("signal shorter than one frame (" + std::to_string(n) + " < "
                           + std::to_string(frame_len) + " samples)");

    const long count = (n - frame_len) / hop + 1;
    std::vector<Eigen::VectorXd> frames;
    frames.reserve(count);
    for (long f = 0; f < count; ++f) {
        Eigen::VectorXd frame(frame_len);
        const long start = f * hop;
        for (int i = 0; i < frame_len; ++i) frame[i] = signal.samples[start + i];
        frames.push_back(std::move(frame));
    }
    return frames;
}

Eigen::VectorXd hamming_window(int length)
{
    if (length < 1) throw config_error("hamming_window: length must be >= 1");
    Eigen::VectorXd w(length);
    if (length == 1) {
        w[0] = 1.0;
        return w;
    }
    for (int n = 0; n < length; ++n)
        w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
    return w;
}

Eigen::VectorXd apply_hamming(const Eigen::VectorXd& frame)
{
    if (frame.size() == 0) throw config_error("apply_hamming: empty frame");
    return frame.cwiseProduct(hamming_window(static_cast<int>(frame.size())));
}

Eigen::VectorXd power_spectrum(const Eigen::VectorXd& windowed, int fft_size)
{
    if (windowed.size() == 0) throw config_error("power_spectrum: empty frame");
    if (!is_power_of_two(fft_size)) throw config_error("fft_size must be a power of two");
    if (fft_size < windowed.size())
        throw config_error("fft_size " + std::to_string(fft_size) + " smaller than frame length "
                           + std::to_string(windowed.size()));

    std::vector<double> padded(static_cast<std::size_t>(fft_size), 0.0);
    for (long i = 0; i < windowed.size(); ++i) padded[i] = windowed[i];

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> bins;
    fft.fwd(bins, padded);

    Eigen::VectorXd power(fft_size / 2 + 1);
    for (int k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(bins[k]);
    return power;
}

FrequencyWarp traunmueller_bark()
{
    FrequencyWarp warp;
    warp.name = "traunmueller";
    warp.to_scale = [](double hz) { return 26.81 * hz / (1960.0 + hz) - 0.53; };
    warp.to_hz = [](double z) { return 1960.0 * (z + 0.53) / (26.28 - z); };
    return warp;
}

FilterBank build_bark_filterbank(int sample_rate, int n_filters, int fft_size,
                                 const FrequencyWarp& warp)
{
    if (n_filters < 1) throw config_error("n_filters must be >= 1");
    if (sample_rate <= 0) throw config_error("sample_rate must be positive");
    if (!is_power_of_two(fft_size)) throw config_error("fft_size must be a power of two");

    const int n_bins = fft_size / 2 + 1;
    const double z_lo = warp.to_scale(0.0);
    const double z_hi = warp.to_scale(sample_rate / 2.0);

    // n_filters + 2 equally spaced edge points on the warped axis; filter i
    // rises from edge i to edge i+1 and falls to edge i+2.
    std::vector<double> edge_hz(n_filters + 2);
    for (int i = 0; i < n_filters + 2; ++i) {
        const double z = z_lo + (z_hi - z_lo) * i / (n_filters + 1);
        edge_hz[i] = warp.to_hz(z);
    }

    FilterBank bank;
    bank.weights = Eigen::MatrixXd::Zero(n_filters, n_bins);
    bank.center_hz.resize(n_filters);
    const double bin_hz = static_cast<double>(sample_rate) / fft_size;

    for (int m = 0; m < n_filters; ++m) {
        const double lo = edge_hz[m];
        const double center = edge_hz[m + 1];
        const double hi = edge_hz[m + 2];
        bank.center_hz[m] = center;
        for (int k = 0; k < n_bins; ++k) {
            const double f = k * bin_hz;
            double w = 0.0;
            if (f > lo && f <= center)
                w = (f - lo) / (center - lo);
            else if (f > center && f < hi)
                w = (hi - f) / (hi - center);
            bank.weights(m, k) = w;
        }
        if (bank.weights.row(m).maxCoeff() <= 0.0)
            throw config_error("filter " + std::to_string(m)
                               + " has no FFT bin support; reduce n_filters or raise fft_size");
    }
    return bank;
}

Eigen::VectorXd lhcb_features(const Eigen::VectorXd& spectrum, const FilterBank& bank,
                              double log_floor)
{
    if (spectrum.size() != bank.n_bins())
        throw shape_error("spectrum length " + std::to_string(spectrum.size())
                          + " does not match filterbank bins " + std::to_string(bank.n_bins()));
    if (log_floor <= 0) throw config_error("log_floor must be positive");
    Eigen::VectorXd energy = bank.weights * spectrum;
    for (long i = 0; i < energy.size(); ++i) energy[i] = std::log(std::max(energy[i], log_floor));
    return energy;
}

FeatureMatrix normalize_features(const FeatureMatrix& features)
{
    const long t = features.frames();
    if (t < 2) throw config_error("normalize_features: need at least 2 frames, got "
                                  + std::to_string(t));
    FeatureMatrix out = features;
    for (int c = 0; c < features.n_features(); ++c) {
        auto col = out.values.col(c);
        const double mean = col.mean();
        col.array() -= mean;
        const double var = col.squaredNorm() / static_cast<double>(t - 1);
        if (var >= 1e-12) col /= std::sqrt(var);
    }
    return out;
}

std::pair<ContextSequence, std::vector<int>> stack_context(const FeatureMatrix& features,
                                                           int width,
                                                           const std::vector<int>& labels,
                                                           int center_index)
{
    if (width < 1) throw config_error("context width must be >= 1");
    const long t_count = features.frames();
    if (static_cast<long>(labels.size()) != t_count)
        throw shape_error("label count " + std::to_string(labels.size())
                          + " does not match frame count " + std::to_string(t_count));
    const int center = center_index < 0 ? width / 2 : center_index;
    if (center < 0 || center >= width)
        throw config_error("context center_index must lie within the window");

    const int d = features.n_features();
    ContextSequence ctx;
    ctx.width = width;
    ctx.center_index = center;
    ctx.rows.resize(t_count, static_cast<long>(d) * width);
    for (long t = 0; t < t_count; ++t) {
        for (int w = 0; w < width; ++w) {
            long src = t - center + w;
            src = std::clamp(src, 0L, t_count - 1);
            ctx.rows.block(t, static_cast<long>(w) * d, 1, d) = features.values.row(src);
        }
    }
    return {std::move(ctx), labels};
}

FeatureMatrix extract_features(const AudioSignal& signal, const FeatureConfig& config,
                               const FilterBank* bank)
{
    const int fft_size = config.frame.resolved_fft_size(signal.sample_rate);
    FilterBank local;
    if (bank == nullptr) {
        local = build_bark_filterbank(signal.sample_rate, config.n_filters, fft_size);
        bank = &local;
    } else if (bank->n_bins() != fft_size / 2 + 1) {
        throw shape_error("prebuilt filterbank does not match fft size");
    }

    const auto frames = frame_signal(signal, config.frame);
    FeatureMatrix features;
    features.values.resize(static_cast<long>(frames.size()), bank->n_filters());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const Eigen::VectorXd windowed = apply_hamming(frames[f]);
        const Eigen::VectorXd spectrum = power_spectrum(windowed, fft_size);
        features.values.row(f) = lhcb_features(spectrum, *bank, config.log_floor).transpose();
    }
    if (config.normalize) return normalize_features(features);
    return features;
}

void write_feat1(const std::filesystem::path& path, const FeatureMatrix& features)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot create feature file " + path.string());
    out.write("FEAT", 4);
    esn::detail::write_u8(out, 1);
    esn::detail::write_u32(out, static_cast<std::uint32_t>(features.frames()));
    esn::detail::write_u32(out, static_cast<std::uint32_t>(features.n_features()));
    for (long t = 0; t < features.frames(); ++t)
        for (int c = 0; c < features.n_features(); ++c)
            esn::detail::write_f32(out, static_cast<float>(features.values(t, c)));
    if (!out) throw io_error("failed writing feature file " + path.string());
}

FeatureMatrix read_feat1(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open feature file " + path.string());
    const std::string name = path.string();
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "FEAT", 4) != 0) throw io_error(name + ": bad FEAT1 magic");
    const auto version = esn::detail::read_u8(in, name + " version");
    if (version != 1) throw io_error(name + ": unsupported FEAT1 version");
    const auto t_count = esn::detail::read_u32(in, name + " frame count");
    const auto d = esn::detail::read_u32(in, name + " feature count");

    FeatureMatrix features;
    features.utterance_id = path.stem().string();
    features.values.resize(t_count, d);
    for (std::uint32_t t = 0; t < t_count; ++t)
        for (std::uint32_t c = 0; c < d; ++c)
            features.values(t, c) = esn::detail::read_f32(in, name + " values");
    return features;
}

std::vector<int> read_labels(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open label file " + path.string());
    std::vector<int> labels;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        int value;
        if (!(ss >> value))
            throw io_error(path.string() + ":" + std::to_string(line_no) + ": not an integer label");
        labels.push_back(value);
    }
    return labels;
}

void write_labels(const std::filesystem::path& path, const std::vector<int>& labels)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create label file " + path.string());
    for (int l : labels) out << l << '\n';
    if (!out) throw io_error("failed writing label file " + path.string());
}

}  // namespace esn::dsp
