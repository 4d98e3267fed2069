#include "antifor/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "antifor/image_io.hpp"
#include "antifor/util.hpp"

namespace antifor {
namespace {

constexpr char kModelMagic[4] = {'A', 'F', 'D', 'M'};
constexpr std::uint32_t kModelVersion = 1;

// Feature gain ahead of the final dense layer. Flattened features are
// standardized per sample, so scaling the gain with 1/sqrt(feature count)
// equalizes the effective head step across architectures and resolutions and
// keeps plain SGD at a small learning rate moving at desk scale.
constexpr float kGainNumerator = 250.0f;

// Fixed preprocessing stem: a 1x1 convolution that rotates RGB into a
// luminance/chroma basis with the chroma planes attenuated. Forensic CNNs
// key on luminance residue, and a fixed luminance-weighted front end makes
// all three architectures share that emphasis instead of leaving the color
// weighting to the random first-layer draw. Not a trainable parameter.
constexpr float kStemChromaGain = 0.10f;

Tensor stem_kernel() {
    const float k = kStemChromaGain;
    Tensor t({3, 3, 1, 1});
    t.data = {0.257f,      0.504f,      0.098f,        // luminance
              -0.148f * k, -0.291f * k, 0.439f * k,    // blue-difference chroma
              0.439f * k,  -0.368f * k, -0.071f * k};  // red-difference chroma
    return t;
}

}  // namespace

DetectorArch DetectorArch::preset(const std::string& id, int resolution) {
    DetectorArch a;
    a.id = id;
    a.input_resolution = resolution;
    auto conv = [](int f) { return LayerSpec{LayerKind::Conv, f, 3, 1, 1}; };
    auto relu = [] { return LayerSpec{LayerKind::Relu}; };
    auto avg = [] { LayerSpec l{LayerKind::AvgPool}; l.pool = 2; return l; };
    auto maxp = [] { LayerSpec l{LayerKind::MaxPool}; l.pool = 2; return l; };
    auto res = [](int f) { return LayerSpec{LayerKind::Residual, f, 3, 1, 1}; };
    auto gain = [] { return LayerSpec{LayerKind::Gain}; };  // scale filled in below
    auto norm = [] { return LayerSpec{LayerKind::Norm}; };
    auto dense1 = [] { LayerSpec l{LayerKind::Dense}; l.units = 1; return l; };

    if (id == "a1") {
        a.layers = {conv(8), relu(), avg(), conv(16), relu(), avg(), conv(32), relu(), avg(),
                    LayerSpec{LayerKind::Flatten}, norm(), gain(), dense1(), LayerSpec{LayerKind::Sigmoid}};
    } else if (id == "a2") {
        a.layers = {conv(8),  relu(), conv(8),  relu(), avg(),  conv(16), relu(), avg(),
                    conv(32), relu(), maxp(),   conv(32), relu(), avg(),
                    LayerSpec{LayerKind::Flatten}, norm(), gain(), dense1(), LayerSpec{LayerKind::Sigmoid}};
    } else if (id == "a3") {
        a.layers = {conv(16), relu(), avg(), res(16), avg(), conv(32), relu(), avg(),
                    LayerSpec{LayerKind::Flatten}, norm(), gain(), dense1(), LayerSpec{LayerKind::Sigmoid}};
    } else {
        throw std::invalid_argument("unknown architecture id: " + id + " (expected a1|a2|a3)");
    }

    int pool_factor = 1;
    int final_channels = 3;
    for (const LayerSpec& l : a.layers) {
        if (l.kind == LayerKind::AvgPool || l.kind == LayerKind::MaxPool) pool_factor *= l.pool;
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::Residual) final_channels = l.out_channels;
    }
    if (resolution < pool_factor || resolution % pool_factor != 0) {
        throw std::invalid_argument("architecture " + id + " needs a resolution divisible by " +
                                    std::to_string(pool_factor));
    }
    const int feature_count = final_channels * (resolution / pool_factor) * (resolution / pool_factor);
    for (LayerSpec& l : a.layers) {
        if (l.kind == LayerKind::Gain) l.gain = kGainNumerator / std::sqrt(static_cast<float>(feature_count));
    }
    return a;
}

DetectorModel DetectorModel::init(const DetectorArch& arch, std::uint64_t seed) {
    DetectorModel m;
    m.arch = arch;
    m.seed = seed;
    std::mt19937_64 rng(mix_seed(seed, fnv1a64(arch.id)));
    auto he_kernel = [&](int f, int c, int k) {
        Tensor t({f, c, k, k});
        std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / (static_cast<float>(c) * k * k)));
        for (float& v : t.data) v = dist(rng);
        return t;
    };

    int channels = 3;
    int spatial = arch.input_resolution;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        const LayerSpec& l = arch.layers[i];
        switch (l.kind) {
            case LayerKind::Conv:
                m.params.push_back(he_kernel(l.out_channels, channels, l.kernel));
                m.params.push_back(Tensor({l.out_channels}, 0.0f));
                channels = l.out_channels;
                spatial = (spatial + 2 * l.padding - l.kernel) / l.stride + 1;
                break;
            case LayerKind::Residual:
                if (l.out_channels != channels) {
                    throw std::invalid_argument("residual block must preserve channel count");
                }
                m.params.push_back(he_kernel(l.out_channels, channels, l.kernel));
                m.params.push_back(Tensor({l.out_channels}, 0.0f));
                m.params.push_back(he_kernel(l.out_channels, channels, l.kernel));
                m.params.push_back(Tensor({l.out_channels}, 0.0f));
                break;
            case LayerKind::AvgPool:
            case LayerKind::MaxPool:
                spatial /= l.pool;
                break;
            case LayerKind::Dense: {
                const int d = channels * spatial * spatial;
                // zero-initialized head: the first step only moves the head
                m.params.push_back(Tensor({d, l.units}, 0.0f));
                m.params.push_back(Tensor({l.units}, 0.0f));
                break;
            }
            default:
                break;
        }
    }
    return m;
}

Var DetectorModel::forward(Tape& tape, Var input, std::vector<Var>* param_vars) const {
    const Tensor& x = tape.value(input);
    if (x.ndim() != 4 || x.dim(1) != 3 || x.dim(2) != arch.input_resolution || x.dim(3) != arch.input_resolution) {
        throw std::invalid_argument("detector " + arch.id + " expects [N,3," + std::to_string(arch.input_resolution) +
                                    "," + std::to_string(arch.input_resolution) + "], got " + shape_to_string(x.shape));
    }
    std::vector<Var> pv;
    pv.reserve(params.size());
    std::size_t pi = 0;
    auto next_param = [&] {
        Var v = tape.leaf(params.at(pi++));
        pv.push_back(v);
        return v;
    };

    Var h = tape.affine(input, 1.0f / 127.5f, -1.0f);
    h = tape.conv2d(h, tape.leaf(stem_kernel()), 1, 0);
    for (const LayerSpec& l : arch.layers) {
        switch (l.kind) {
            case LayerKind::Conv: {
                Var k = next_param();
                Var b = next_param();
                h = tape.channel_bias(tape.conv2d(h, k, l.stride, l.padding), b);
                break;
            }
            case LayerKind::Residual: {
                Var k1 = next_param();
                Var b1 = next_param();
                Var k2 = next_param();
                Var b2 = next_param();
                Var inner = tape.relu(tape.channel_bias(tape.conv2d(h, k1, l.stride, l.padding), b1));
                Var out = tape.channel_bias(tape.conv2d(inner, k2, l.stride, l.padding), b2);
                h = tape.relu(tape.add(h, out));
                break;
            }
            case LayerKind::Relu:
                h = tape.relu(h);
                break;
            case LayerKind::Sigmoid:
                h = tape.sigmoid(h);
                break;
            case LayerKind::AvgPool:
                h = tape.avg_pool2d(h, l.pool);
                break;
            case LayerKind::MaxPool:
                h = tape.max_pool2d(h, l.pool);
                break;
            case LayerKind::Flatten:
                h = tape.flatten(h);
                break;
            case LayerKind::Gain:
                h = tape.affine(h, l.gain, 0.0f);
                break;
            case LayerKind::Norm:
                h = tape.layer_norm(h);
                break;
            case LayerKind::Dense: {
                Var w = next_param();
                Var b = next_param();
                h = tape.dense(h, w, b);
                break;
            }
        }
    }
    if (pi != params.size()) throw std::logic_error("architecture/parameter mismatch in " + arch.id);
    if (param_vars) *param_vars = std::move(pv);
    return h;
}

Tensor batch_from_images(const std::vector<RgbImage>& images) {
    if (images.empty()) throw std::invalid_argument("empty image batch");
    const int h = images.front().height;
    const int w = images.front().width;
    Tensor t({static_cast<int>(images.size()), 3, h, w});
    const std::size_t per = static_cast<std::size_t>(3) * h * w;
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(images.front())) throw std::invalid_argument("batch images differ in shape");
        std::copy(images[i].pix.begin(), images[i].pix.end(), t.data.begin() + static_cast<std::ptrdiff_t>(i * per));
    }
    return t;
}

std::vector<float> DetectorModel::predict_scores(const std::vector<RgbImage>& images) const {
    std::vector<float> scores(images.size());
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < images.size(); start += kChunk) {
        const std::size_t end = std::min(images.size(), start + kChunk);
        std::vector<RgbImage> chunk(images.begin() + static_cast<std::ptrdiff_t>(start),
                                    images.begin() + static_cast<std::ptrdiff_t>(end));
        Tape tape;
        Var out = forward(tape, tape.leaf(batch_from_images(chunk)));
        const Tensor& s = tape.value(out);
        for (std::size_t i = start; i < end; ++i) scores[i] = s.data[i - start];
    }
    return scores;
}

float DetectorModel::predict_score(const RgbImage& image) const { return predict_scores({image}).front(); }

void TrainConfig::validate() const {
    if (learning_rate <= 0 || weight_decay < 0 || batch_size < 1 || max_epochs < 1 || patience < 1) {
        throw std::invalid_argument("train config values must be positive");
    }
}

namespace {

struct LoadedSplit {
    std::vector<RgbImage> images;
    std::vector<float> labels;
};

LoadedSplit load_split(const DatasetManifest& data, Split split) {
    LoadedSplit out;
    for (const auto& r : data.select(split)) {
        out.images.push_back(load_image(data.resolve(r)));
        out.labels.push_back(r.label == Label::Fake ? 1.0f : 0.0f);
    }
    return out;
}

EvalReport report_from_scores(const std::vector<float>& scores, const std::vector<float>& labels, double threshold) {
    EvalReport rep;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred_fake = scores[i] > threshold;
        const bool is_fake = labels[i] == 1.0f;
        if (is_fake && pred_fake) ++rep.tp;
        else if (is_fake && !pred_fake) ++rep.fn;
        else if (!is_fake && !pred_fake) ++rep.tn;
        else ++rep.fp;
    }
    return rep;
}

}  // namespace

DetectorModel train(const DetectorArch& arch, const DatasetManifest& data, const TrainConfig& cfg,
                    std::uint64_t seed, std::vector<EpochStats>* history) {
    cfg.validate();
    LoadedSplit train_set = load_split(data, Split::Train);
    LoadedSplit val_set = load_split(data, Split::Val);
    auto has_both = [](const LoadedSplit& s) {
        bool pos = false, neg = false;
        for (float y : s.labels) (y == 1.0f ? pos : neg) = true;
        return !s.labels.empty() && pos && neg;
    };
    if (!has_both(train_set) || !has_both(val_set)) {
        throw std::invalid_argument("training requires non-empty train and val splits with both labels");
    }

    DetectorModel model = DetectorModel::init(arch, seed);
    DetectorModel best = model;
    double best_acc = -1.0;
    int best_epoch = 0;
    EvalReport best_report;
    int stall = 0;

    std::vector<std::size_t> order(train_set.images.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(seed, 0xe90c'0000ull + static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        long batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<RgbImage> batch;
            std::vector<float> labels;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch.push_back(train_set.images[order[i]]);
                labels.push_back(train_set.labels[order[i]]);
            }
            Tape tape;
            std::vector<Var> pvars;
            Var scores = model.forward(tape, tape.leaf(batch_from_images(batch)), &pvars);
            Var loss = tape.bce_loss(scores, labels);
            const float loss_value = tape.value(loss).data[0];
            if (!std::isfinite(loss_value)) {
                throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            }
            tape.backward(loss);
            const float lr = static_cast<float>(cfg.learning_rate);
            const float wd = static_cast<float>(cfg.weight_decay);
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                const Tensor& g = tape.grad(pvars[p]);
                Tensor& w = model.params[p];
                for (std::size_t i = 0; i < w.data.size(); ++i) {
                    w.data[i] -= lr * (g.data[i] + wd * w.data[i]);
                }
            }
            loss_sum += loss_value;
            ++batches;
        }

        const std::vector<float> val_scores = model.predict_scores(val_set.images);
        const EvalReport rep = report_from_scores(val_scores, val_set.labels, 0.5);
        const double val_acc = static_cast<double>(rep.tp + rep.tn) / static_cast<double>(rep.total());
        if (history) {
            history->push_back(EpochStats{epoch, loss_sum / static_cast<double>(batches), rep.tpr(), rep.tnr()});
        }
        if (val_acc > best_acc) {
            best_acc = val_acc;
            best = model;
            best_epoch = epoch;
            best_report = rep;
            stall = 0;
        } else if (++stall >= cfg.patience) {
            break;
        }
    }

    best.trained_epochs = best_epoch + 1;
    best.final_tpr = best_report.tpr();
    best.final_tnr = best_report.tnr();
    return best;
}

EvalReport evaluate(const DetectorModel& model, const DatasetManifest& data, Split split) {
    LoadedSplit s = load_split(data, split);
    if (s.images.empty()) throw std::invalid_argument("evaluate: split " + to_string(split) + " is empty");
    return report_from_scores(model.predict_scores(s.images), s.labels, 0.5);
}

EvalReport evaluate_images(const DetectorModel& model, const std::vector<RgbImage>& images,
                           const std::vector<int>& labels, double threshold) {
    if (images.size() != labels.size() || images.empty()) {
        throw std::invalid_argument("evaluate_images: need matching non-empty images and labels");
    }
    std::vector<float> fl(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) fl[i] = static_cast<float>(labels[i]);
    return report_from_scores(model.predict_scores(images), fl, threshold);
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated model file: " + path);
    return v;
}

}  // namespace

void save_model(const DetectorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out.write(kModelMagic, 4);
    write_pod(out, kModelVersion);
    const std::uint32_t id_len = static_cast<std::uint32_t>(model.arch.id.size());
    write_pod(out, id_len);
    out.write(model.arch.id.data(), id_len);
    write_pod(out, static_cast<std::uint32_t>(model.arch.input_resolution));
    write_pod(out, model.seed);
    write_pod(out, static_cast<std::uint32_t>(model.trained_epochs));
    write_pod(out, model.final_tpr);
    write_pod(out, model.final_tnr);
    write_pod(out, static_cast<std::uint32_t>(model.params.size()));
    for (const Tensor& t : model.params) {
        write_pod(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) write_pod(out, static_cast<std::int32_t>(d));
        out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
    }
    if (!out) throw std::runtime_error("write failed for model file: " + path);
}

DetectorModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) {
        throw std::runtime_error("not a detector model file: " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kModelVersion) {
        throw std::runtime_error("unsupported model version " + std::to_string(version) + " in " + path);
    }
    const auto id_len = read_pod<std::uint32_t>(in, path);
    if (id_len > 64) throw std::runtime_error("corrupt model file: " + path);
    std::string id(id_len, '\0');
    if (!in.read(id.data(), id_len)) throw std::runtime_error("truncated model file: " + path);
    const auto resolution = read_pod<std::uint32_t>(in, path);

    DetectorModel m;
    m.arch = DetectorArch::preset(id, static_cast<int>(resolution));
    m.seed = read_pod<std::uint64_t>(in, path);
    m.trained_epochs = static_cast<int>(read_pod<std::uint32_t>(in, path));
    m.final_tpr = read_pod<double>(in, path);
    m.final_tnr = read_pod<double>(in, path);
    const auto n_params = read_pod<std::uint32_t>(in, path);
    const DetectorModel reference = DetectorModel::init(m.arch, 0);
    if (n_params != reference.params.size()) throw std::runtime_error("corrupt model file: " + path);
    for (std::uint32_t p = 0; p < n_params; ++p) {
        const auto ndim = read_pod<std::uint32_t>(in, path);
        if (ndim > 8) throw std::runtime_error("corrupt model file: " + path);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = read_pod<std::int32_t>(in, path);
        if (shape != reference.params[p].shape) throw std::runtime_error("corrupt model file: " + path);
        Tensor t(shape);
        if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4))) {
            throw std::runtime_error("truncated model file: " + path);
        }
        if (!all_finite(t)) throw std::runtime_error("corrupt model file (non-finite weights): " + path);
        m.params.push_back(std::move(t));
    }
    return m;
}

void save_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history file: " + path);
    out << "epoch,train_loss,val_tpr,val_tnr\n";
    for (const auto& e : history) {
        out << e.epoch << "," << e.train_loss << "," << e.val_tpr << "," << e.val_tnr << "\n";
    }
}

}  // namespace antifor
