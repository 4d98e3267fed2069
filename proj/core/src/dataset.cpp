#include "antifor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include "antifor/color.hpp"
#include "antifor/image_io.hpp"
#include "antifor/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace antifor {

std::string to_string(Label l) { return l == Label::Fake ? "fake" : "real"; }
std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        default: return "test";
    }
}

Label label_from_string(const std::string& s) {
    if (s == "fake") return Label::Fake;
    if (s == "real") return Label::Real;
    throw std::invalid_argument("unknown label: " + s);
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split: " + s);
}

std::vector<DatasetRecord> DatasetManifest::select(Split s) const {
    std::vector<DatasetRecord> out;
    for (const auto& r : records)
        if (r.split == s) out.push_back(r);
    return out;
}

std::vector<DatasetRecord> DatasetManifest::select(Split s, Label l) const {
    std::vector<DatasetRecord> out;
    for (const auto& r : records)
        if (r.split == s && r.label == l) out.push_back(r);
    return out;
}

std::string DatasetManifest::resolve(const DatasetRecord& r) const {
    return (fs::path(root) / r.path).string();
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    json j;
    j["resolution"] = m.resolution;
    j["seed"] = m.seed;
    j["config_digest"] = m.config_digest;
    j["records"] = json::array();
    for (const auto& r : m.records) {
        j["records"].push_back({{"path", r.path}, {"label", to_string(r.label)}, {"split", to_string(r.split)}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(1) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed manifest " + path + ": " + e.what());
    }
    DatasetManifest m;
    m.resolution = j.at("resolution").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config_digest = j.value("config_digest", "");
    m.root = fs::absolute(fs::path(path)).parent_path().string();
    for (const auto& rj : j.at("records")) {
        DatasetRecord r;
        r.path = rj.at("path").get<std::string>();
        r.label = label_from_string(rj.at("label").get<std::string>());
        r.split = split_from_string(rj.at("split").get<std::string>());
        if (!fs::exists(m.resolve(r))) throw std::runtime_error("manifest references missing file: " + m.resolve(r));
        m.records.push_back(std::move(r));
    }
    return m;
}

DatasetManifest split_dataset(const std::vector<std::pair<std::string, Label>>& records,
                              const std::array<double, 3>& ratios, std::uint64_t seed, int resolution,
                              const std::string& root) {
    double total = 0.0;
    for (double r : ratios) {
        if (r <= 0.0) throw std::invalid_argument("split ratios must be positive");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");

    DatasetManifest m;
    m.resolution = resolution;
    m.seed = seed;
    m.root = root;
    for (Label label : {Label::Real, Label::Fake}) {
        std::vector<std::string> paths;
        for (const auto& [p, l] : records)
            if (l == label) paths.push_back(p);
        if (paths.empty()) continue;
        if (paths.size() < 3) {
            throw std::invalid_argument("class " + to_string(label) + " has fewer records (" +
                                        std::to_string(paths.size()) + ") than splits");
        }
        std::sort(paths.begin(), paths.end());
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(label)));
        std::shuffle(paths.begin(), paths.end(), rng);
        const std::size_t n = paths.size();
        const std::size_t n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n) + 0.5));
        const std::size_t n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 0.5));
        for (std::size_t i = 0; i < n; ++i) {
            const Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
            m.records.push_back(DatasetRecord{paths[i], label, s});
        }
    }
    return m;
}

std::vector<std::pair<std::string, Label>> ingest_directory(const std::string& dir, Label label, int resolution,
                                                            const std::string& out_dir) {
    if (!fs::is_directory(dir)) throw std::invalid_argument("ingest_directory: not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    fs::create_directories(out_dir);
    std::vector<std::pair<std::string, Label>> records;
    std::size_t index = 0;
    for (const auto& f : files) {
        std::string ext = f.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext != ".png") {
            std::cerr << "ingest: skipping unsupported file " << f << "\n";
            continue;
        }
        RgbImage img = resize_bilinear(load_image(f.string()), resolution, resolution);
        const std::string out_path = (fs::path(out_dir) / (std::to_string(index++) + ".png")).string();
        save_image(project_box(img), out_path);
        records.emplace_back(out_path, label);
    }
    return records;
}

}  // namespace antifor
