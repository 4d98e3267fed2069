#include "antifor/ndl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "antifor/image_io.hpp"

namespace antifor {
namespace {

constexpr int kGdIterations = 400;
constexpr double kGdLearningRate = 2.0;
constexpr double kGdL2 = 1e-4;

int quantize(double residual, int levels) {
    const int half = levels / 2;
    const long q = std::lround(residual);
    return static_cast<int>(std::clamp<long>(q, -half, half - 1)) + half;
}

}  // namespace

CooccurrenceSpec CooccurrenceSpec::defaults() {
    CooccurrenceSpec s;
    s.levels = 8;
    s.pairs = {
        {0, 0, 0, 1, 0}, {1, 1, 0, 1, 0}, {2, 2, 0, 1, 0},  // same-channel horizontal neighbor residues
        {0, 1, 0, 0, 0}, {1, 2, 0, 0, 0}, {0, 2, 0, 0, 0},  // cross-channel co-located horizontal residues
        {0, 0, 1, 0, 1}, {1, 1, 1, 0, 1}, {2, 2, 1, 0, 1},  // same-channel vertical neighbor residues
    };
    return s;
}

std::vector<double> extract_cooccurrence(const RgbImage& image, const CooccurrenceSpec& spec) {
    const int h = image.height;
    const int w = image.width;
    if (w < 3 || h < 3) throw std::invalid_argument("extract_cooccurrence: image too small");
    const int levels = spec.levels;

    // first-order high-pass residuals per channel: horizontal on an (h) x (w-1)
    // grid, vertical on an (h-1) x (w) grid
    const int rw = w - 1;
    const int rh = h - 1;
    std::vector<std::vector<double>> horiz(3, std::vector<double>(static_cast<std::size_t>(h) * rw));
    std::vector<std::vector<double>> vert(3, std::vector<double>(static_cast<std::size_t>(rh) * w));
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < rw; ++x) {
                horiz[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * rw + x] =
                    static_cast<double>(image.at(c, y, x + 1)) - image.at(c, y, x);
            }
        }
        for (int y = 0; y < rh; ++y) {
            for (int x = 0; x < w; ++x) {
                vert[static_cast<std::size_t>(c)][static_cast<std::size_t>(y) * w + x] =
                    static_cast<double>(image.at(c, y + 1, x)) - image.at(c, y, x);
            }
        }
    }

    std::vector<double> features(spec.feature_length(), 0.0);
    std::size_t offset = 0;
    for (const auto& p : spec.pairs) {
        const auto& residual = p.dir == 0 ? horiz : vert;
        const int gh = p.dir == 0 ? h : rh;
        const int gw = p.dir == 0 ? rw : w;
        double total = 0.0;
        for (int y = 0; y < gh; ++y) {
            const int y2 = y + p.dy;
            if (y2 < 0 || y2 >= gh) continue;
            for (int x = 0; x < gw; ++x) {
                const int x2 = x + p.dx;
                if (x2 < 0 || x2 >= gw) continue;
                const int q1 = quantize(residual[static_cast<std::size_t>(p.c1)][static_cast<std::size_t>(y) * gw + x], levels);
                const int q2 = quantize(residual[static_cast<std::size_t>(p.c2)][static_cast<std::size_t>(y2) * gw + x2], levels);
                features[offset + static_cast<std::size_t>(q1) * levels + q2] += 1.0;
                total += 1.0;
            }
        }
        // each pair's joint histogram is a probability distribution
        if (total > 0.0) {
            for (std::size_t i = 0; i < static_cast<std::size_t>(levels) * levels; ++i) features[offset + i] /= total;
        }
        offset += static_cast<std::size_t>(levels) * levels;
    }
    return features;
}

double NdlDetector::predict(const RgbImage& image) const {
    const std::vector<double> f = extract_cooccurrence(image, spec);
    double z = bias;
    for (std::size_t i = 0; i < f.size(); ++i) {
        z += weights[i] * (f[i] - feature_mean[i]) / feature_scale[i];
    }
    return 1.0 / (1.0 + std::exp(-z));
}

double predict_ndl(const NdlDetector& det, const RgbImage& image) { return det.predict(image); }

NdlDetector train_ndl(const DatasetManifest& data, const CooccurrenceSpec& spec) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (const auto& r : data.select(Split::Train)) {
        xs.push_back(extract_cooccurrence(load_image(data.resolve(r)), spec));
        ys.push_back(r.label == Label::Fake ? 1.0 : 0.0);
    }
    if (xs.empty()) throw std::invalid_argument("train_ndl: empty train split");
    const bool has_pos = std::count(ys.begin(), ys.end(), 1.0) > 0;
    const bool has_neg = std::count(ys.begin(), ys.end(), 0.0) > 0;
    if (!has_pos || !has_neg) throw std::invalid_argument("train_ndl: degenerate single-class training data");

    const std::size_t d = spec.feature_length();
    const std::size_t n = xs.size();

    NdlDetector det;
    det.spec = spec;
    det.feature_mean.assign(d, 0.0);
    det.feature_scale.assign(d, 1.0);
    for (const auto& x : xs)
        for (std::size_t i = 0; i < d; ++i) det.feature_mean[i] += x[i];
    for (std::size_t i = 0; i < d; ++i) det.feature_mean[i] /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& x : xs)
        for (std::size_t i = 0; i < d; ++i) {
            const double dev = x[i] - det.feature_mean[i];
            var[i] += dev * dev;
        }
    for (std::size_t i = 0; i < d; ++i) det.feature_scale[i] = std::max(1e-9, std::sqrt(var[i] / static_cast<double>(n)));

    std::vector<std::vector<double>> zs(n, std::vector<double>(d));
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < d; ++i) zs[j][i] = (xs[j][i] - det.feature_mean[i]) / det.feature_scale[i];

    det.weights.assign(d, 0.0);
    det.bias = 0.0;
    std::vector<double> grad(d);
    for (int it = 0; it < kGdIterations; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double z = det.bias;
            for (std::size_t i = 0; i < d; ++i) z += det.weights[i] * zs[j][i];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double err = p - ys[j];
            for (std::size_t i = 0; i < d; ++i) grad[i] += err * zs[j][i];
            grad_b += err;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < d; ++i) {
            det.weights[i] -= kGdLearningRate * (grad[i] * inv_n + kGdL2 * det.weights[i]);
        }
        det.bias -= kGdLearningRate * grad_b * inv_n;
    }
    return det;
}

}  // namespace antifor
