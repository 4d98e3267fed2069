#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "antifor/attack.hpp"
#include "antifor/color.hpp"
#include "antifor/dataset.hpp"
#include "antifor/detector.hpp"
#include "antifor/ndl.hpp"

namespace antifor {

// Second-moment structure of per-pixel gradient signs. sigma_rgb is the
// 1/N-normalized covariance of the RGB sign vectors; sigma_ycc is its exact
// affine image A * sigma_rgb * A^T under the color transform.
struct CovarianceReport {
    std::size_t samples = 0;
    std::array<double, 3> mean_rgb{};
    std::array<double, 9> sigma_rgb{};  // row-major 3x3
    std::array<double, 9> sigma_ycc{};

    std::array<double, 9> correlation_rgb() const;
    double variance(int ycc_channel) const { return sigma_ycc[static_cast<std::size_t>(ycc_channel) * 4]; }
    double luma_to_cb_ratio() const;
    double luma_to_cr_ratio() const;
};

CovarianceReport sign_covariance(const std::vector<std::array<float, 3>>& signs,
                                 const ColorTransform& t = ColorTransform::bt601());

// Uniformly samples (image, pixel) pairs from the chosen class/split and
// returns the RGB sign vector of the ensemble loss gradient at each pixel.
std::vector<std::array<float, 3>> sample_sign_gradients(const EnsembleSource& source, const DatasetManifest& data,
                                                        Split split, Label cls, std::size_t n_samples,
                                                        std::uint64_t seed);

enum class Domain { Rgb, Ycc };

std::string to_string(Domain d);

// Per-channel histogram of perturbation values with fixed-width bins covering
// [-limit, limit]; values outside land in the edge bins so total mass is
// conserved.
struct PerturbationHistogram {
    Domain domain = Domain::Rgb;
    double bin_width = 0.25;
    double lo = 0.0;  // left edge of bin 0
    std::array<std::vector<std::int64_t>, 3> counts;

    int bins() const { return static_cast<int>(counts[0].size()); }
    std::int64_t total(int channel) const;
    double bin_center(int b) const { return lo + (b + 0.5) * bin_width; }
};

PerturbationHistogram perturbation_histogram(const std::vector<AttackResult>& results, Domain domain,
                                             double eps_max, double bin_width = 0.25);

// Attack success rate: the drop in the per-class correct rate (TPR for the
// fake class, TNR for the real class). Exact difference; negative values are
// preserved. Both reports must cover the same population.
struct AsrReport {
    Label target_class = Label::Fake;
    double rate_before = 0.0;
    double rate_after = 0.0;
    long population = 0;

    double asr() const { return rate_before - rate_after; }
};

AsrReport compute_asr(const EvalReport& before, const EvalReport& after, Label target_class);

// A transfer target is either a gradient-based cnn detector or the
// co-occurrence detector; exactly one pointer is set.
struct TransferTarget {
    std::string name;
    const DetectorModel* cnn = nullptr;
    const NdlDetector* ndl = nullptr;
};

struct TransferCell {
    bool valid = false;
    double rate_before = 0.0;
    double rate_after = 0.0;
    double asr = 0.0;
    std::string error;  // set when !valid; the rest of the matrix still fills
};

struct TransferMatrix {
    std::vector<std::string> sources;
    std::vector<std::string> targets;
    std::vector<std::vector<TransferCell>> cells;  // [source][target]
};

TransferCell evaluate_transfer(const TransferTarget& target, const AttackBatchResult& batch);
TransferMatrix transfer_matrix(const std::vector<std::pair<std::string, const AttackBatchResult*>>& runs,
                               const std::vector<TransferTarget>& targets);

// Round-and-clamp to the 8-bit grid (what a PNG write/read round trip does),
// for reporting attack rates that survive quantization.
RgbImage quantize_u8(const RgbImage& x);

std::string histogram_to_csv(const PerturbationHistogram& h);
std::string transfer_to_csv(const TransferMatrix& m);

}  // namespace antifor
