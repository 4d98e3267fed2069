#pragma once

#include <cstdint>
#include <vector>

#include "antifor/dataset.hpp"
#include "antifor/image.hpp"

namespace antifor {

// Second-order co-occurrence features of quantized high-pass residuals,
// classified by logistic regression. Gradient-free at prediction time, so it
// serves as the black-box transfer target.
struct CooccurrenceSpec {
    struct ChannelPair {
        int c1 = 0;
        int c2 = 0;
        int dy = 0;
        int dx = 0;
        int dir = 0;  // residual direction: 0 = horizontal, 1 = vertical
    };

    int levels = 8;
    std::vector<ChannelPair> pairs;

    static CooccurrenceSpec defaults();
    std::size_t feature_length() const { return pairs.size() * static_cast<std::size_t>(levels) * levels; }
};

std::vector<double> extract_cooccurrence(const RgbImage& image,
                                         const CooccurrenceSpec& spec = CooccurrenceSpec::defaults());

struct NdlDetector {
    CooccurrenceSpec spec;
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> feature_mean;  // training-set standardization
    std::vector<double> feature_scale;

    double predict(const RgbImage& image) const;  // probability of "fake"
};

NdlDetector train_ndl(const DatasetManifest& data, const CooccurrenceSpec& spec = CooccurrenceSpec::defaults());
double predict_ndl(const NdlDetector& det, const RgbImage& image);

}  // namespace antifor
