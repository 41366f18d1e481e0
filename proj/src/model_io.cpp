#include "esn/model_io.hpp"

#include "esn/binary_io.hpp"

#include <fstream>

namespace esn {

namespace {

constexpr std::uint8_t kVersion = 1;

std::uint8_t variant_tag(Variant v)
{
    switch (v) {
        case Variant::shallow: return 0;
        case Variant::deep: return 1;
        case Variant::hetero_shallow: return 2;
        case Variant::hetero_deep: return 3;
    }
    throw config_error("unknown variant");
}

Variant variant_from_tag(std::uint8_t tag)
{
    switch (tag) {
        case 0: return Variant::shallow;
        case 1: return Variant::deep;
        case 2: return Variant::hetero_shallow;
        case 3: return Variant::hetero_deep;
    }
    throw io_error("ESNM1: unknown variant tag " + std::to_string(tag));
}

void write_dense(std::ostream& out, const Eigen::MatrixXd& m)
{
    detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) detail::write_f64(out, m(r, c));
}

Eigen::MatrixXd read_dense(std::istream& in, const std::string& what)
{
    const auto rows = detail::read_u32(in, what + " rows");
    const auto cols = detail::read_u32(in, what + " cols");
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
        for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = detail::read_f64(in, what);
    return m;
}

void write_sparse(std::ostream& out, const Eigen::SparseMatrix<double>& m)
{
    detail::write_u32(out, static_cast<std::uint32_t>(m.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.cols()));
    detail::write_u64(out, static_cast<std::uint64_t>(m.nonZeros()));
    for (int outer = 0; outer < m.outerSize(); ++outer)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, outer); it; ++it) {
            detail::write_u32(out, static_cast<std::uint32_t>(it.row()));
            detail::write_u32(out, static_cast<std::uint32_t>(it.col()));
            detail::write_f64(out, it.value());
        }
}

Eigen::SparseMatrix<double> read_sparse(std::istream& in, const std::string& what)
{
    const auto rows = detail::read_u32(in, what + " rows");
    const auto cols = detail::read_u32(in, what + " cols");
    const auto nnz = detail::read_u64(in, what + " nnz");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    for (std::uint64_t i = 0; i < nnz; ++i) {
        const auto r = detail::read_u32(in, what + " row index");
        const auto c = detail::read_u32(in, what + " col index");
        const double v = detail::read_f64(in, what + " value");
        if (r >= rows || c >= cols) throw io_error("ESNM1: COO index out of range in " + what);
        triplets.emplace_back(r, c, v);
    }
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

void write_layer_config(std::ostream& out, const LayerConfig& cfg)
{
    detail::write_u32(out, static_cast<std::uint32_t>(cfg.size));
    detail::write_f64(out, cfg.spectral_radius);
    detail::write_f64(out, cfg.leak_rate);
    detail::write_f64(out, cfg.input_scale);
    detail::write_f64(out, cfg.bias_scale);
    detail::write_f64(out, cfg.connectivity);
    detail::write_u32(out, static_cast<std::uint32_t>(cfg.delay));
    detail::write_u64(out, cfg.seed);
    detail::write_u8(out, cfg.leak_on_activation ? 1 : 0);
}

LayerConfig read_layer_config(std::istream& in, const std::string& what)
{
    LayerConfig cfg;
    cfg.size = static_cast<int>(detail::read_u32(in, what + " size"));
    cfg.spectral_radius = detail::read_f64(in, what + " spectral_radius");
    cfg.leak_rate = detail::read_f64(in, what + " leak_rate");
    cfg.input_scale = detail::read_f64(in, what + " input_scale");
    cfg.bias_scale = detail::read_f64(in, what + " bias_scale");
    cfg.connectivity = detail::read_f64(in, what + " connectivity");
    cfg.delay = static_cast<int>(detail::read_u32(in, what + " delay"));
    cfg.seed = detail::read_u64(in, what + " seed");
    cfg.leak_on_activation = detail::read_u8(in, what + " leak flag") != 0;
    return cfg;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelContainer& model)
{
    model.reservoir.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot create model file " + path.string());

    out.write("ESNM", 4);
    detail::write_u8(out, kVersion);
    detail::write_u8(out, variant_tag(model.reservoir.variant));
    detail::write_u32(out, static_cast<std::uint32_t>(model.reservoir.n_in));
    detail::write_u32(out, static_cast<std::uint32_t>(model.reservoir.layers.size()));
    for (std::size_t i = 0; i < model.reservoir.layers.size(); ++i) {
        write_layer_config(out, model.reservoir.configs[i]);
        const auto& w = model.reservoir.layers[i];
        write_sparse(out, w.W);
        write_dense(out, w.W_in);
        detail::write_u32(out, static_cast<std::uint32_t>(w.theta.size()));
        for (long k = 0; k < w.theta.size(); ++k) detail::write_f64(out, w.theta[k]);
    }

    detail::write_u8(out, model.reservoir.partition ? 1 : 0);
    if (model.reservoir.partition) {
        const auto& p = *model.reservoir.partition;
        detail::write_u32(out, static_cast<std::uint32_t>(p.group_sizes.size()));
        for (std::size_t g = 0; g < p.group_sizes.size(); ++g) {
            detail::write_u32(out, static_cast<std::uint32_t>(p.group_sizes[g]));
            detail::write_u32(out, static_cast<std::uint32_t>(p.group_delays[g]));
        }
    }

    detail::write_u32(out, static_cast<std::uint32_t>(model.context_width));
    detail::write_u32(out, static_cast<std::uint32_t>(model.context_center));
    detail::write_u32(out, static_cast<std::uint32_t>(model.washout));
    detail::write_u32(out, static_cast<std::uint32_t>(model.n_classes));

    detail::write_u8(out, model.readout ? 1 : 0);
    if (model.readout) write_dense(out, model.readout->W_out);

    if (!out) throw io_error("failed writing model file " + path.string());
}

ModelContainer load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open model file " + path.string());
    const std::string name = path.string();

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "ESNM", 4) != 0) throw io_error(name + ": bad ESNM1 magic");
    if (detail::read_u8(in, name + " version") != kVersion)
        throw io_error(name + ": unsupported ESNM1 version");

    ModelContainer model;
    model.reservoir.variant = variant_from_tag(detail::read_u8(in, name + " variant"));
    model.reservoir.n_in = static_cast<int>(detail::read_u32(in, name + " n_in"));
    const auto n_layers = detail::read_u32(in, name + " layer count");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const std::string what = name + " layer " + std::to_string(i + 1);
        model.reservoir.configs.push_back(read_layer_config(in, what));
        LayerWeights w;
        w.W = read_sparse(in, what + " W");
        w.W_in = read_dense(in, what + " W_in");
        const auto theta_len = detail::read_u32(in, what + " theta size");
        w.theta.resize(theta_len);
        for (std::uint32_t k = 0; k < theta_len; ++k)
            w.theta[k] = detail::read_f64(in, what + " theta");
        model.reservoir.layers.push_back(std::move(w));
    }

    if (detail::read_u8(in, name + " partition flag") != 0) {
        SubGroupPartition p;
        const auto n_groups = detail::read_u32(in, name + " group count");
        for (std::uint32_t g = 0; g < n_groups; ++g) {
            p.group_sizes.push_back(static_cast<int>(detail::read_u32(in, name + " group size")));
            p.group_delays.push_back(
                static_cast<int>(detail::read_u32(in, name + " group delay")));
        }
        model.reservoir.partition = std::move(p);
    }

    model.context_width = static_cast<int>(detail::read_u32(in, name + " context width"));
    model.context_center = static_cast<int>(detail::read_u32(in, name + " context center"));
    model.washout = static_cast<int>(detail::read_u32(in, name + " washout"));
    model.n_classes = static_cast<int>(detail::read_u32(in, name + " class count"));

    if (detail::read_u8(in, name + " readout flag") != 0)
        model.readout = ReadoutWeights{read_dense(in, name + " readout")};

    model.reservoir.validate();
    return model;
}

}  // namespace esn
