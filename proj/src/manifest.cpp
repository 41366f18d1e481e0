#include "esn/manifest.hpp"

#include "esn/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace esn {

std::string to_string(Split split)
{
    switch (split) {
        case Split::unassigned: return "unassigned";
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    throw config_error("unknown split");
}

Split split_from_string(const std::string& name)
{
    if (name == "train") return Split::train;
    if (name == "validation" || name == "val") return Split::validation;
    if (name == "test") return Split::test;
    if (name == "unassigned") return Split::unassigned;
    throw config_error("unknown split '" + name + "'");
}

std::vector<const ManifestEntry*> DatasetManifest::split_entries(Split split) const
{
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
        if (e.split == split) out.push_back(&e);
    return out;
}

std::vector<std::string> DatasetManifest::speakers() const
{
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& e : entries)
        if (seen.insert(e.speaker_id).second) out.push_back(e.speaker_id);
    return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    return fields;
}

void validate_manifest(const DatasetManifest& manifest, const std::string& name)
{
    std::map<std::string, long> seen_ids;
    std::map<std::string, std::pair<Split, long>> speaker_split;
    for (const auto& e : manifest.entries) {
        const auto [it, inserted] = seen_ids.emplace(e.utterance_id, e.line_no);
        if (!inserted)
            throw config_error(name + ":" + std::to_string(e.line_no)
                               + ": duplicate utterance id '" + e.utterance_id
                               + "' (first seen at line " + std::to_string(it->second) + ")");
        if (e.split == Split::unassigned) continue;
        const auto [sit, fresh] = speaker_split.emplace(e.speaker_id,
                                                        std::make_pair(e.split, e.line_no));
        if (!fresh && sit->second.first != e.split)
            throw config_error(name + ":" + std::to_string(e.line_no) + ": speaker '"
                               + e.speaker_id + "' assigned to both "
                               + to_string(sit->second.first) + " (line "
                               + std::to_string(sit->second.second) + ") and "
                               + to_string(e.split));
    }
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest " + path.string());
    const std::string name = path.string();
    // Anchor relative entries to the manifest's own directory, independent
    // of the caller's working directory.
    const std::filesystem::path base = std::filesystem::absolute(path).parent_path();

    DatasetManifest manifest;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 4 && fields.size() != 5)
            throw config_error(name + ":" + std::to_string(line_no) + ": expected 4 or 5 "
                               "tab-separated fields, got " + std::to_string(fields.size()));
        ManifestEntry entry;
        entry.utterance_id = fields[0];
        entry.data_path = std::filesystem::path(fields[1]);
        entry.label_path = std::filesystem::path(fields[2]);
        entry.speaker_id = fields[3];
        entry.line_no = line_no;
        if (entry.utterance_id.empty() || entry.speaker_id.empty())
            throw config_error(name + ":" + std::to_string(line_no)
                               + ": empty utterance or speaker id");
        if (entry.data_path.is_relative()) entry.data_path = base / entry.data_path;
        if (fields[2] != "-" && entry.label_path.is_relative())
            entry.label_path = base / entry.label_path;
        if (fields.size() == 5) {
            try {
                entry.split = split_from_string(fields[4]);
            } catch (const config_error&) {
                throw config_error(name + ":" + std::to_string(line_no) + ": bad split '"
                                   + fields[4] + "'");
            }
        }
        manifest.entries.push_back(std::move(entry));
    }

    validate_manifest(manifest, name);

    if (check_files) {
        for (const auto& e : manifest.entries) {
            if (!std::filesystem::exists(e.data_path))
                throw io_error(name + ":" + std::to_string(e.line_no) + ": missing data file "
                               + e.data_path.string());
            if (e.label_path != "-" && !std::filesystem::exists(e.label_path))
                throw io_error(name + ":" + std::to_string(e.line_no) + ": missing label file "
                               + e.label_path.string());
        }
    }
    return manifest;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot create manifest " + path.string());
    for (const auto& e : manifest.entries) {
        out << e.utterance_id << '\t' << e.data_path.string() << '\t';
        out << (e.label_path == "-" ? std::string("-") : e.label_path.string());
        out << '\t' << e.speaker_id;
        if (e.split != Split::unassigned) out << '\t' << to_string(e.split);
        out << '\n';
    }
    if (!out) throw io_error("failed writing manifest " + path.string());
}

void split_by_speaker(DatasetManifest& manifest, int train_n, int test_n, double val_fraction,
                      std::uint64_t seed)
{
    if (train_n < 1 || test_n < 0) throw config_error("split_by_speaker: bad split sizes");
    if (val_fraction < 0 || val_fraction >= 1)
        throw config_error("split_by_speaker: val_fraction must lie in [0, 1)");

    std::vector<std::string> speakers = manifest.speakers();
    if (static_cast<int>(speakers.size()) < train_n + test_n)
        throw config_error("split_by_speaker: only " + std::to_string(speakers.size())
                           + " speakers for train_n + test_n = "
                           + std::to_string(train_n + test_n));

    // Fisher-Yates on the deterministic stream.
    Rng rng(seed);
    for (std::size_t i = speakers.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(i) - 1));
        std::swap(speakers[i - 1], speakers[j]);
    }

    const int val_n = static_cast<int>(std::floor(val_fraction * train_n + 0.5));
    std::map<std::string, Split> assignment;
    for (int i = 0; i < train_n; ++i)
        assignment[speakers[i]] = i < val_n ? Split::validation : Split::train;
    for (int i = train_n; i < train_n + test_n; ++i) assignment[speakers[i]] = Split::test;

    for (auto& e : manifest.entries) {
        const auto it = assignment.find(e.speaker_id);
        e.split = it == assignment.end() ? Split::unassigned : it->second;
    }
}

}  // namespace esn
