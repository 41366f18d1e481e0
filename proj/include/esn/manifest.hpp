#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace esn {

enum class Split { unassigned, train, validation, test };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// One corpus utterance: id, its audio or feature file, its frame labels and
/// the speaker it came from. Relative paths resolve against the manifest's
/// directory. A label path of "-" means no labels are available.
struct ManifestEntry {
    std::string utterance_id;
    std::filesystem::path data_path;
    std::filesystem::path label_path;
    std::string speaker_id;
    Split split = Split::unassigned;
    long line_no = 0;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::vector<const ManifestEntry*> split_entries(Split split) const;
    /// Distinct speakers in first-appearance order.
    std::vector<std::string> speakers() const;
};

/// Tab-separated manifest: utterance_id, data path, label path, speaker id,
/// and an optional fifth split column (train/validation/test). Rejects
/// duplicate utterance ids and speakers assigned to more than one split;
/// with check_files, every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files = true);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Assigns speaker-disjoint splits: a seeded shuffle of the speakers puts the
/// first train_n into the training pool (of which the first
/// round(val_fraction * train_n) become validation) and the next test_n into
/// test. Deterministic in the seed.
void split_by_speaker(DatasetManifest& manifest, int train_n, int test_n, double val_fraction,
                      std::uint64_t seed);

}  // namespace esn
