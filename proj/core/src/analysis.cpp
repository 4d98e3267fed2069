#include "antifor/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "antifor/image_io.hpp"

namespace antifor {
namespace {

std::array<double, 9> mat_mul3(const std::array<double, 9>& a, const std::array<double, 9>& b) {
    std::array<double, 9> c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += a[static_cast<std::size_t>(i) * 3 + k] * b[static_cast<std::size_t>(k) * 3 + j];
            c[static_cast<std::size_t>(i) * 3 + j] = acc;
        }
    return c;
}

std::array<double, 9> mat_transpose3(const std::array<double, 9>& a) {
    std::array<double, 9> t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[static_cast<std::size_t>(j) * 3 + i] = a[static_cast<std::size_t>(i) * 3 + j];
    return t;
}

double class_rate(const EvalReport& r, Label c) { return c == Label::Fake ? r.tpr() : r.tnr(); }

long class_population(const EvalReport& r, Label c) { return c == Label::Fake ? r.tp + r.fn : r.tn + r.fp; }

// fraction of images the target labels correctly, given they all share one label
double correct_rate(const TransferTarget& t, const std::vector<RgbImage>& images, Label cls) {
    long correct = 0;
    for (const RgbImage& img : images) {
        const double score = t.cnn ? static_cast<double>(t.cnn->predict_score(img)) : t.ndl->predict(img);
        const bool says_fake = score > 0.5;
        if (says_fake == (cls == Label::Fake)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace

std::array<double, 9> CovarianceReport::correlation_rgb() const {
    std::array<double, 9> r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double denom = std::sqrt(sigma_rgb[static_cast<std::size_t>(i) * 4] * sigma_rgb[static_cast<std::size_t>(j) * 4]);
            r[static_cast<std::size_t>(i) * 3 + j] =
                denom > 0.0 ? sigma_rgb[static_cast<std::size_t>(i) * 3 + j] / denom : (i == j ? 1.0 : 0.0);
        }
    return r;
}

double CovarianceReport::luma_to_cb_ratio() const {
    return variance(1) > 0.0 ? variance(0) / variance(1) : std::numeric_limits<double>::infinity();
}

double CovarianceReport::luma_to_cr_ratio() const {
    return variance(2) > 0.0 ? variance(0) / variance(2) : std::numeric_limits<double>::infinity();
}

CovarianceReport sign_covariance(const std::vector<std::array<float, 3>>& signs, const ColorTransform& t) {
    if (signs.size() < 2) throw std::invalid_argument("sign_covariance: need at least 2 samples");
    CovarianceReport rep;
    rep.samples = signs.size();
    const double inv_n = 1.0 / static_cast<double>(signs.size());

    for (const auto& s : signs)
        for (int c = 0; c < 3; ++c) rep.mean_rgb[static_cast<std::size_t>(c)] += s[static_cast<std::size_t>(c)];
    for (double& m : rep.mean_rgb) m *= inv_n;

    for (const auto& s : signs) {
        std::array<double, 3> d{};
        for (int c = 0; c < 3; ++c) d[static_cast<std::size_t>(c)] = s[static_cast<std::size_t>(c)] - rep.mean_rgb[static_cast<std::size_t>(c)];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                rep.sigma_rgb[static_cast<std::size_t>(i) * 3 + j] += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(j)];
    }
    for (double& v : rep.sigma_rgb) v *= inv_n;

    rep.sigma_ycc = mat_mul3(mat_mul3(t.a, rep.sigma_rgb), mat_transpose3(t.a));
    return rep;
}

std::vector<std::array<float, 3>> sample_sign_gradients(const EnsembleSource& source, const DatasetManifest& data,
                                                        Split split, Label cls, std::size_t n_samples,
                                                        std::uint64_t seed) {
    source.validate();
    if (n_samples == 0) throw std::invalid_argument("sample_sign_gradients: n_samples must be positive");
    const std::vector<DatasetRecord> records = data.select(split, cls);
    if (records.empty()) throw std::invalid_argument("sample_sign_gradients: no images of the requested class");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_image(0, records.size() - 1);

    // group the pixel draws per image so each gradient is computed once
    std::vector<std::vector<std::size_t>> draws(records.size());
    const std::size_t plane = static_cast<std::size_t>(data.resolution) * data.resolution;
    std::uniform_int_distribution<std::size_t> pick_pixel(0, plane - 1);
    for (std::size_t k = 0; k < n_samples; ++k) {
        const std::size_t img = pick_image(rng);
        draws[img].push_back(pick_pixel(rng));
    }

    const int label = cls == Label::Fake ? 1 : 0;
    std::vector<std::array<float, 3>> out;
    out.reserve(n_samples);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (draws[i].empty()) continue;
        const RgbImage img = load_image(data.resolve(records[i]));
        const RgbImage grad = ensemble_input_gradient(source, img, label);
        const std::size_t hw = grad.plane();
        for (std::size_t p : draws[i]) {
            std::array<float, 3> s{};
            for (int c = 0; c < 3; ++c) {
                const float g = grad.pix[static_cast<std::size_t>(c) * hw + p];
                s[static_cast<std::size_t>(c)] = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
            }
            out.push_back(s);
        }
    }
    return out;
}

std::string to_string(Domain d) { return d == Domain::Rgb ? "rgb" : "ycc"; }

std::int64_t PerturbationHistogram::total(int channel) const {
    std::int64_t t = 0;
    for (std::int64_t c : counts[static_cast<std::size_t>(channel)]) t += c;
    return t;
}

PerturbationHistogram perturbation_histogram(const std::vector<AttackResult>& results, Domain domain,
                                             double eps_max, double bin_width) {
    if (eps_max < 0.0) throw std::invalid_argument("perturbation_histogram: eps_max must be >= 0");
    if (bin_width <= 0.0) throw std::invalid_argument("perturbation_histogram: bin_width must be positive");
    PerturbationHistogram h;
    h.domain = domain;
    h.bin_width = bin_width;
    const double limit = eps_max + 1.0;
    h.lo = -limit;
    const int nbins = std::max(1, static_cast<int>(std::ceil(2.0 * limit / bin_width)));
    for (auto& c : h.counts) c.assign(static_cast<std::size_t>(nbins), 0);

    for (const AttackResult& r : results) {
        const std::vector<float>& pix = domain == Domain::Rgb ? r.delta.pix : r.zeta.pix;
        const std::size_t hw = domain == Domain::Rgb ? r.delta.plane() : r.zeta.plane();
        for (int c = 0; c < 3; ++c) {
            auto& bins = h.counts[static_cast<std::size_t>(c)];
            for (std::size_t i = 0; i < hw; ++i) {
                const double v = pix[static_cast<std::size_t>(c) * hw + i];
                int b = static_cast<int>(std::floor((v - h.lo) / bin_width));
                b = std::clamp(b, 0, nbins - 1);
                ++bins[static_cast<std::size_t>(b)];
            }
        }
    }
    return h;
}

AsrReport compute_asr(const EvalReport& before, const EvalReport& after, Label target_class) {
    const long pop = class_population(before, target_class);
    if (pop == 0) throw std::invalid_argument("compute_asr: empty target class");
    if (pop != class_population(after, target_class)) {
        throw std::invalid_argument("compute_asr: before/after cover different populations");
    }
    AsrReport r;
    r.target_class = target_class;
    r.population = pop;
    r.rate_before = class_rate(before, target_class);
    r.rate_after = class_rate(after, target_class);
    return r;
}

TransferCell evaluate_transfer(const TransferTarget& target, const AttackBatchResult& batch) {
    TransferCell cell;
    try {
        if ((target.cnn == nullptr) == (target.ndl == nullptr)) {
            throw std::invalid_argument("transfer target must set exactly one detector");
        }
        if (batch.originals.empty()) throw std::invalid_argument("empty attack batch");
        cell.rate_before = correct_rate(target, batch.originals, batch.target_class);
        cell.rate_after = correct_rate(target, batch.adversarial, batch.target_class);
        cell.asr = cell.rate_before - cell.rate_after;
        cell.valid = true;
    } catch (const std::exception& e) {
        cell = TransferCell{};
        cell.error = e.what();
    }
    return cell;
}

TransferMatrix transfer_matrix(const std::vector<std::pair<std::string, const AttackBatchResult*>>& runs,
                               const std::vector<TransferTarget>& targets) {
    TransferMatrix m;
    for (const auto& t : targets) m.targets.push_back(t.name);
    for (const auto& [name, batch] : runs) {
        m.sources.push_back(name);
        std::vector<TransferCell> row;
        for (const auto& t : targets) {
            if (!batch) {
                TransferCell cell;
                cell.error = "missing attack batch";
                row.push_back(cell);
            } else {
                row.push_back(evaluate_transfer(t, *batch));
            }
        }
        m.cells.push_back(std::move(row));
    }
    return m;
}

RgbImage quantize_u8(const RgbImage& x) {
    RgbImage q(x.height, x.width);
    for (std::size_t i = 0; i < q.pix.size(); ++i) {
        const long v = std::lround(static_cast<double>(x.pix[i]));
        q.pix[i] = static_cast<float>(std::clamp<long>(v, 0, 255));
    }
    return q;
}

std::string histogram_to_csv(const PerturbationHistogram& h) {
    std::ostringstream os;
    const char* names = h.domain == Domain::Rgb ? "r,g,b" : "y,cb,cr";
    os << "bin_lo,bin_hi," << names << "\n";
    for (int b = 0; b < h.bins(); ++b) {
        os << h.lo + b * h.bin_width << "," << h.lo + (b + 1) * h.bin_width;
        for (int c = 0; c < 3; ++c) os << "," << h.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)];
        os << "\n";
    }
    return os.str();
}

std::string transfer_to_csv(const TransferMatrix& m) {
    std::ostringstream os;
    os << "source";
    for (const auto& t : m.targets) os << "," << t;
    os << "\n";
    for (std::size_t i = 0; i < m.sources.size(); ++i) {
        os << m.sources[i];
        for (const TransferCell& c : m.cells[i]) {
            if (c.valid) {
                os << "," << c.asr;
            } else {
                os << ",invalid";
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace antifor
