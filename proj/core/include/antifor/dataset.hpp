#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "antifor/image.hpp"

namespace antifor {

enum class Label { Real = 0, Fake = 1 };
enum class Split { Train = 0, Val = 1, Test = 2 };

std::string to_string(Label l);
std::string to_string(Split s);
Label label_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct DatasetRecord {
    std::string path;  // relative to the manifest directory
    Label label = Label::Real;
    Split split = Split::Train;

    bool operator==(const DatasetRecord&) const = default;
};

struct DatasetManifest {
    std::vector<DatasetRecord> records;
    int resolution = 64;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string root;  // absolute directory paths are resolved against

    std::vector<DatasetRecord> select(Split s) const;
    std::vector<DatasetRecord> select(Split s, Label l) const;
    std::string resolve(const DatasetRecord& r) const;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
// Loads and verifies that every referenced file exists.
DatasetManifest load_manifest(const std::string& path);

// Deterministic stratified shuffle + partition. Ratios must be positive and
// sum to 1 (within 1e-9).
DatasetManifest split_dataset(const std::vector<std::pair<std::string, Label>>& records,
                              const std::array<double, 3>& ratios, std::uint64_t seed, int resolution,
                              const std::string& root);

// Recursively enumerates supported image files under dir, resizes them to
// resolution x resolution and writes normalized PNG copies under out_dir.
// Unsupported files are skipped with a warning on stderr.
std::vector<std::pair<std::string, Label>> ingest_directory(const std::string& dir, Label label, int resolution,
                                                            const std::string& out_dir);

}  // namespace antifor
