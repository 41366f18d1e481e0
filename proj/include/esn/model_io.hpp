#pragma once

#include "esn/readout.hpp"
#include "esn/reservoir.hpp"

#include <filesystem>
#include <optional>

namespace esn {

/// Everything needed to re-run a trained experiment: the frozen reservoir,
/// the trained readout (when present) and the pipeline settings that shaped
/// the design rows.
struct ModelContainer {
    ReservoirModel reservoir;
    std::optional<ReadoutWeights> readout;
    int context_width = 1;
    int context_center = 0;
    int washout = 0;
    int n_classes = 0;
};

/// ESNM1 binary container. Little-endian throughout; recurrent matrices are
/// stored as COO triples with 32-bit indices and 64-bit floats, dense blocks
/// as 64-bit floats row-major. Round-trips are lossless.
void save_model(const std::filesystem::path& path, const ModelContainer& model);
ModelContainer load_model(const std::filesystem::path& path);

}  // namespace esn
