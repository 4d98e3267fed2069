#pragma once

#include <cstdint>
#include <string>

#include "antifor/dataset.hpp"
#include "antifor/image.hpp"

namespace antifor {

// Two-class surrogate dataset: both classes share the same scene model
// (smoothed broadband texture, gentle illumination gradients, low-frequency
// chroma fields). The real class keeps full-strength sensor grain; the fake
// class simulates a generator pipeline — most of the grain is smoothed away
// and a zero-mean periodic upsampling residue is injected in YCbCr as
// horizontal banding (luminance-dominant, opposite-signed on the two chroma
// planes, with per-image random polarity).
struct SyntheticConfig {
    int resolution = 64;            // must be a multiple of 4
    int train_per_class = 2000;
    int val_per_class = 333;
    int test_per_class = 333;
    int upsample_factor = 8;        // residue half-period = upsample_factor / 2
    double artifact_amplitude = 7.0;
    double smoothing_sigma = 1.6;   // texture blur, both classes
    std::uint64_t seed = 0;

    std::string digest() const;
    void validate() const;
};

// Generates PNG files under root (<root>/<label>/<split>/<index>.png), writes
// <root>/manifest.json and returns the manifest. Re-draws with a new internal
// salt if a mean-intensity threshold classifier separates the test split with
// accuracy above 0.65.
DatasetManifest generate_synthetic(const SyntheticConfig& cfg, const std::string& root);

// Single-image generators, exposed for tests.
RgbImage synth_fake_image(const SyntheticConfig& cfg, std::uint64_t image_seed);
RgbImage synth_real_image(const SyntheticConfig& cfg, std::uint64_t image_seed);

}  // namespace antifor
