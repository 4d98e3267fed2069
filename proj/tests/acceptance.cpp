// Acceptance suite: one pass/fail line per numbered requirement, exit code 1
// if any fail. Builds a shared workspace (synthetic dataset + three trained
// detectors + a co-occurrence detector) and reuses artifacts already present
// in the workspace directory, so repeated runs are fast; delete the directory
// for a fresh, honestly timed run.
//
// Usage: acceptance [workspace-dir]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "antifor/analysis.hpp"
#include "antifor/attack.hpp"
#include "antifor/color.hpp"
#include "antifor/detector.hpp"
#include "antifor/image_io.hpp"
#include "antifor/ndl.hpp"
#include "antifor/quality.hpp"
#include "antifor/synthetic.hpp"
#include "antifor/util.hpp"
#include "shadow.hpp"

namespace fs = std::filesystem;
using namespace antifor;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared workspace
// ---------------------------------------------------------------------------

struct Workspace {
    fs::path dir;
    DatasetManifest data;
    std::map<std::string, DetectorModel> models;  // a1, a2, a3
    NdlDetector ndl;
    double train_seconds = -1.0;  // < 0 when models came from cache
    double ndl_seconds = 0.0;

    std::vector<RgbImage> fake_test, real_test;

    const DetectorModel& model(const std::string& id) const { return models.at(id); }
};

Workspace build_workspace(const std::string& dir) {
    Workspace ws;
    ws.dir = dir;
    fs::create_directories(ws.dir);

    const fs::path manifest_path = ws.dir / "data" / "manifest.json";
    if (fs::exists(manifest_path)) {
        ws.data = load_manifest(manifest_path.string());
        std::printf("workspace: reusing dataset %s\n", manifest_path.string().c_str());
    } else {
        SyntheticConfig cfg;  // defaults, scaled down for a single desk CPU
        cfg.resolution = 32;
        cfg.train_per_class = 300;
        cfg.val_per_class = 100;
        cfg.test_per_class = 100;
        cfg.seed = 0;
        const auto t0 = Clock::now();
        ws.data = generate_synthetic(cfg, (ws.dir / "data").string());
        std::printf("workspace: generated dataset in %.1f s\n", seconds_since(t0));
    }

    bool trained_now = false;
    const auto t_train = Clock::now();
    for (const std::string id : {"a1", "a2", "a3"}) {
        const fs::path model_path = ws.dir / (id + ".bin");
        if (fs::exists(model_path)) {
            ws.models.emplace(id, load_model(model_path.string()));
            continue;
        }
        trained_now = true;
        const auto t0 = Clock::now();
        DetectorModel m = train(DetectorArch::preset(id, ws.data.resolution), ws.data, TrainConfig{}, 0);
        std::printf("workspace: trained %s in %.1f s (val tpr %.2f, tnr %.2f)\n", id.c_str(), seconds_since(t0),
                    m.final_tpr, m.final_tnr);
        save_model(m, model_path.string());
        ws.models.emplace(id, std::move(m));
    }
    if (trained_now) ws.train_seconds = seconds_since(t_train);

    {
        const auto t0 = Clock::now();
        ws.ndl = train_ndl(ws.data);
        ws.ndl_seconds = seconds_since(t0);
        std::printf("workspace: trained co-occurrence detector in %.1f s\n", ws.ndl_seconds);
    }

    for (const auto& r : ws.data.select(Split::Test, Label::Fake)) ws.fake_test.push_back(load_image(ws.data.resolve(r)));
    for (const auto& r : ws.data.select(Split::Test, Label::Real)) ws.real_test.push_back(load_image(ws.data.resolve(r)));
    std::fflush(stdout);
    return ws;
}

// ---------------------------------------------------------------------------
// Attack-batch helpers (results cached in-process; several criteria share them)
// ---------------------------------------------------------------------------

AttackConfig rgb_config(AttackMethod method, double eps, int iterations = 10) {
    AttackConfig cfg;
    cfg.method = method;
    cfg.budget = AttackBudget::scalar(eps);
    cfg.iterations = iterations;
    cfg.momentum = 1.0;
    return cfg;
}

AttackConfig ycc_config(double ey, double ecb, double ecr, int iterations = 10) {
    AttackConfig cfg;
    cfg.method = AttackMethod::Ycc;
    cfg.budget = AttackBudget::channels(ey, ecb, ecr);
    cfg.iterations = iterations;
    cfg.momentum = 1.0;
    return cfg;
}

struct BatchRun {
    AttackBatchResult batch;
    AsrReport asr_vs;  // against the model passed to run_and_score
};

AsrReport score_against(const DetectorModel& target, const AttackBatchResult& batch, Label cls) {
    std::vector<int> labels(batch.originals.size(), cls == Label::Fake ? 1 : 0);
    const EvalReport before = evaluate_images(target, batch.originals, labels, 0.5);
    const EvalReport after = evaluate_images(target, batch.adversarial, labels, 0.5);
    return compute_asr(before, after, cls);
}

BatchRun run_and_score(const AttackConfig& cfg, const EnsembleSource& source, const DetectorModel& score_model,
                       const DatasetManifest& data, Label cls) {
    BatchRun r;
    r.batch = attack_batch(cfg, source, data, Split::Test, cls);
    r.asr_vs = score_against(score_model, r.batch, cls);
    return r;
}

double mean_ssim(const AttackBatchResult& batch) {
    double acc = 0.0;
    for (std::size_t k = 0; k < batch.results.size(); ++k) {
        acc += ssim(batch.originals[batch.result_index[k]], batch.results[k].adversarial);
    }
    return batch.results.empty() ? 1.0 : acc / static_cast<double>(batch.results.size());
}

double mean_y_linf(const AttackBatchResult& batch) {
    double acc = 0.0;
    for (std::size_t k = 0; k < batch.results.size(); ++k) {
        acc += perturbation_norms(batch.originals[batch.result_index[k]], batch.results[k].adversarial).linf_ycc[0];
    }
    return batch.results.empty() ? 0.0 : acc / static_cast<double>(batch.results.size());
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness against 64-bit central finite differences
// ---------------------------------------------------------------------------

Tensor random_tensor(const std::vector<int>& shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    for (float& v : t.data) v = u(rng);
    return t;
}

// Checks d(dot(seed, op(inputs)))/d(input j) for every element of every input.
template <typename BuildOp, typename ShadowOp>
bool check_primitive(const std::string& name, std::vector<Tensor> inputs, BuildOp build, ShadowOp shadow_op,
                     std::string& worst, double tol = 1e-3, double h = 1e-3) {
    Tape probe;
    std::vector<Var> pvars;
    for (const Tensor& t : inputs) pvars.push_back(probe.leaf(t));
    Var out = build(probe, pvars);
    Tensor seed = random_tensor(probe.value(out).shape, fnv1a64(name) | 1ull, -1.0f, 1.0f);

    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
    Var out2 = build(tape, vars);
    tape.backward_seeded(out2, seed);

    auto loss_at = [&](const std::vector<Tensor>& ins) {
        std::vector<shadow::T> st;
        for (const Tensor& t : ins) st.push_back(shadow::from_tensor(t));
        shadow::T o = shadow_op(st);
        double acc = 0.0;
        for (std::size_t i = 0; i < o.data.size(); ++i) acc += static_cast<double>(seed.data[i]) * o.data[i];
        return acc;
    };

    bool ok = true;
    for (std::size_t j = 0; j < inputs.size(); ++j) {
        const Tensor& an = tape.grad(vars[j]);
        for (std::size_t i = 0; i < inputs[j].data.size(); ++i) {
            std::vector<Tensor> plus = inputs, minus = inputs;
            plus[j].data[i] += static_cast<float>(h);
            minus[j].data[i] -= static_cast<float>(h);
            const double fd = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
            const double err = std::abs(static_cast<double>(an.data[i]) - fd);
            if (err > tol * std::max(1.0, std::abs(fd))) {
                ok = false;
                worst = name + "[" + std::to_string(j) + "][" + std::to_string(i) + "]: analytic " +
                        fmt(an.data[i], 6) + " vs fd " + fmt(fd, 6);
            }
        }
    }
    return ok;
}

void criterion_1() {
    const auto t0 = Clock::now();
    bool ok = true;
    std::string worst;

    ok &= check_primitive(
        "conv2d", {random_tensor({2, 3, 5, 5}, 11), random_tensor({4, 3, 3, 3}, 12)},
        [](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], v[1], 1, 1); },
        [](const std::vector<shadow::T>& v) { return shadow::conv2d(v[0], v[1], 1, 1); }, worst);
    ok &= check_primitive(
        "conv2d_s2", {random_tensor({1, 2, 7, 7}, 13), random_tensor({3, 2, 3, 3}, 14)},
        [](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], v[1], 2, 0); },
        [](const std::vector<shadow::T>& v) { return shadow::conv2d(v[0], v[1], 2, 0); }, worst);
    ok &= check_primitive(
        "channel_bias", {random_tensor({2, 4, 3, 3}, 15), random_tensor({4}, 16)},
        [](Tape& t, const std::vector<Var>& v) { return t.channel_bias(v[0], v[1]); },
        [](const std::vector<shadow::T>& v) { return shadow::channel_bias(v[0], v[1]); }, worst);
    ok &= check_primitive(
        "dense", {random_tensor({3, 6}, 17), random_tensor({6, 2}, 18), random_tensor({2}, 19)},
        [](Tape& t, const std::vector<Var>& v) { return t.dense(v[0], v[1], v[2]); },
        [](const std::vector<shadow::T>& v) { return shadow::dense(v[0], v[1], v[2]); }, worst);
    {
        Tensor x = random_tensor({2, 3, 4, 4}, 20);
        for (float& v : x.data) {  // keep FD probes away from the relu kink
            if (std::abs(v) < 0.05f) v = v < 0 ? -0.05f : 0.05f;
        }
        ok &= check_primitive(
            "relu", {x}, [](Tape& t, const std::vector<Var>& v) { return t.relu(v[0]); },
            [](const std::vector<shadow::T>& v) { return shadow::relu(v[0]); }, worst);
    }
    ok &= check_primitive(
        "sigmoid", {random_tensor({2, 5}, 21)}, [](Tape& t, const std::vector<Var>& v) { return t.sigmoid(v[0]); },
        [](const std::vector<shadow::T>& v) { return shadow::sigmoid(v[0]); }, worst);
    ok &= check_primitive(
        "avg_pool", {random_tensor({2, 3, 4, 4}, 22)},
        [](Tape& t, const std::vector<Var>& v) { return t.avg_pool2d(v[0], 2); },
        [](const std::vector<shadow::T>& v) { return shadow::avg_pool2d(v[0], 2); }, worst);
    {
        // distinct values so the max never changes hands during FD probes
        Tensor x({1, 2, 4, 4});
        std::vector<float> vals(x.data.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<float>(i) * 0.31f - 4.0f;
        std::shuffle(vals.begin(), vals.end(), std::mt19937_64(23));
        x.data = vals;
        ok &= check_primitive(
            "max_pool", {x}, [](Tape& t, const std::vector<Var>& v) { return t.max_pool2d(v[0], 2); },
            [](const std::vector<shadow::T>& v) { return shadow::max_pool2d(v[0], 2); }, worst);
    }
    ok &= check_primitive(
        "affine", {random_tensor({2, 7}, 24)},
        [](Tape& t, const std::vector<Var>& v) { return t.affine(v[0], 0.7f, -0.3f); },
        [](const std::vector<shadow::T>& v) { return shadow::affine(v[0], 0.7, -0.3); }, worst);
    ok &= check_primitive(
        "add", {random_tensor({3, 4}, 25), random_tensor({3, 4}, 26)},
        [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); },
        [](const std::vector<shadow::T>& v) { return shadow::add(v[0], v[1]); }, worst);
    ok &= check_primitive(
        "square", {random_tensor({2, 6}, 27)}, [](Tape& t, const std::vector<Var>& v) { return t.square(v[0]); },
        [](const std::vector<shadow::T>& v) { return shadow::square(v[0]); }, worst);

    // Full detector: d(score)/d(pixel) vs a double-precision forward shadow.
    bool e2e_ok = true;
    {
        DetectorModel m = DetectorModel::init(DetectorArch::preset("a1", 16), 3);
        std::mt19937_64 rng(4);
        std::normal_distribution<float> nd(0.0f, 0.01f);  // mild: keep the sigmoid unsaturated
        for (auto& p : m.params) {
            for (float& v : p.data) v += nd(rng);
        }
        const Tensor x = random_tensor({1, 3, 16, 16}, 5, 10.0f, 245.0f);

        Tape tape;
        Var in = tape.leaf(x);
        Var out = m.forward(tape, in);
        Tensor seed(tape.value(out).shape, 0.0f);
        seed.data[0] = 1.0f;
        tape.backward_seeded(out, seed);
        const Tensor& g = tape.grad(in);

        double gmax = 0.0;
        for (float v : g.data) gmax = std::max(gmax, std::abs(static_cast<double>(v)));
        if (gmax <= 0.0) {
            e2e_ok = false;
            worst = "end-to-end: zero gradient everywhere";
        }
        std::mt19937_64 pick(6);
        std::uniform_int_distribution<std::size_t> idx(0, x.data.size() - 1);
        const double h = 1e-2;
        for (int k = 0; k < 20 && e2e_ok; ++k) {
            const std::size_t i = idx(pick);
            Tensor plus = x, minus = x;
            plus.data[i] += static_cast<float>(h);
            minus.data[i] -= static_cast<float>(h);
            const double fd = (shadow::detector_forward(m, shadow::from_tensor(plus)).data[0] -
                               shadow::detector_forward(m, shadow::from_tensor(minus)).data[0]) /
                              (2.0 * h);
            const double err = std::abs(static_cast<double>(g.data[i]) - fd);
            // relative to the FD value, floored at 1% of the gradient peak so
            // near-zero entries do not demand impossible relative precision
            if (err > 1e-2 * std::max(0.01 * gmax, std::abs(fd))) {
                e2e_ok = false;
                worst = "end-to-end pixel " + std::to_string(i) + ": analytic " + fmt(g.data[i], 6) + " vs fd " +
                        fmt(fd, 6);
            }
        }
    }

    const double dt = seconds_since(t0);
    const bool pass = ok && e2e_ok && dt < 120.0;
    report(1, pass,
           "gradients vs 64-bit central differences: primitives rel<=1e-3, detector rel<=1e-2 over 20 pixels, " +
               fmt(dt, 1) + " s (<120)" + (pass ? "" : "; " + worst));
}

// ---------------------------------------------------------------------------
// 2. Color-transform exactness
// ---------------------------------------------------------------------------

void criterion_2() {
    const ColorTransform& t = ColorTransform::bt601();

    double id_err = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += t.a[static_cast<std::size_t>(i * 3 + k)] * t.a_inv[static_cast<std::size_t>(k * 3 + j)];
            id_err = std::max(id_err, std::abs(acc - (i == j ? 1.0 : 0.0)));
        }
    }

    RgbImage black(1, 1, 0.0f);
    const YccImage y0 = rgb_to_ycc(black, t);
    const bool black_ok = y0.pix[0] == 16.0f && y0.pix[1] == 128.0f && y0.pix[2] == 128.0f;

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> u(0.0f, 255.0f);
    double rt_err = 0.0;
    constexpr int kPixels = 100000;
    RgbImage img(1, kPixels);
    for (float& p : img.pix) p = u(rng);
    const RgbImage back = ycc_to_rgb(rgb_to_ycc(img, t), t);
    for (std::size_t i = 0; i < img.pix.size(); ++i) {
        rt_err = std::max(rt_err, std::abs(static_cast<double>(back.pix[i]) - static_cast<double>(img.pix[i])));
    }

    const bool pass = id_err < 1e-10 && black_ok && rt_err < 1e-3;
    report(2, pass,
           "color transform: |A*Ainv-I|=" + fmt(id_err, 12) + " (<1e-10), black->(16,128,128) " +
               (black_ok ? "exact" : "WRONG") + ", round-trip max err " + fmt(rt_err, 6) + " over 1e5 pixels (<1e-3)");
}

// ---------------------------------------------------------------------------
// 3. Covariance transport identity
// ---------------------------------------------------------------------------

void criterion_3() {
    const ColorTransform& t = ColorTransform::bt601();

    // All eight sign corners appear once: zero mean, covariance exactly I.
    std::vector<std::array<float, 3>> corners;
    for (int s = 0; s < 8; ++s) {
        corners.push_back({s & 1 ? 1.0f : -1.0f, s & 2 ? 1.0f : -1.0f, s & 4 ? 1.0f : -1.0f});
    }
    const CovarianceReport ident = sign_covariance(corners, t);
    double aat_err = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += t.a[static_cast<std::size_t>(i * 3 + k)] * t.a[static_cast<std::size_t>(j * 3 + k)];
            aat_err = std::max(aat_err, std::abs(ident.sigma_ycc[static_cast<std::size_t>(i * 3 + j)] - acc));
        }
    }

    // Empirical: covariance of explicitly transformed samples matches the
    // algebraic transport of the untransformed covariance.
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<std::array<float, 3>> samples(20000);
    for (auto& s : samples) {
        const double a = nd(rng), b = nd(rng), c = nd(rng);
        s = {static_cast<float>(a), static_cast<float>(0.5 * a + b), static_cast<float>(0.2 * a - 0.7 * c)};
    }
    const CovarianceReport rep = sign_covariance(samples, t);

    std::array<double, 3> mean{};
    std::vector<std::array<double, 3>> transformed(samples.size());
    for (std::size_t n = 0; n < samples.size(); ++n) {
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += t.a[static_cast<std::size_t>(i * 3 + k)] * samples[n][static_cast<std::size_t>(k)];
            transformed[n][static_cast<std::size_t>(i)] = acc;
            mean[static_cast<std::size_t>(i)] += acc;
        }
    }
    for (double& m : mean) m /= static_cast<double>(samples.size());
    std::array<double, 9> emp{};
    for (const auto& v : transformed) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                emp[static_cast<std::size_t>(i * 3 + j)] +=
                    (v[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) *
                    (v[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)]);
            }
        }
    }
    double emp_err = 0.0;
    for (int i = 0; i < 9; ++i) {
        emp_err = std::max(emp_err, std::abs(emp[static_cast<std::size_t>(i)] / static_cast<double>(samples.size()) -
                                             rep.sigma_ycc[static_cast<std::size_t>(i)]));
    }

    const bool pass = aat_err < 1e-10 && emp_err < 1e-6;
    report(3, pass,
           "covariance transport: identity case |sigma_ycc - A*A^T|=" + fmt(aat_err, 12) +
               " (<1e-10), empirical-vs-algebraic max err " + fmt(emp_err, 9) + " (<1e-6)");
}

// ---------------------------------------------------------------------------
// 4. Channel-energy concentration of gradient signs
// ---------------------------------------------------------------------------

void criterion_4(const Workspace& ws) {
    const auto t0 = Clock::now();
    EnsembleSource src{{&ws.model("a1")}};
    const auto signs = sample_sign_gradients(src, ws.data, Split::Test, Label::Fake, 12000, 42);
    const CovarianceReport rep = sign_covariance(signs);

    const double vy = rep.variance(0), vcb = rep.variance(1), vcr = rep.variance(2);
    const auto corr_rgb = rep.correlation_rgb();
    auto mean_offdiag = [](const std::array<double, 9>& c) {
        return (std::abs(c[1]) + std::abs(c[2]) + std::abs(c[5])) / 3.0;
    };
    // correlation in the transformed domain, from its covariance
    std::array<double, 9> corr_ycc{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double d = std::sqrt(rep.sigma_ycc[static_cast<std::size_t>(i * 4)] *
                                       rep.sigma_ycc[static_cast<std::size_t>(j * 4)]);
            corr_ycc[static_cast<std::size_t>(i * 3 + j)] =
                d > 0 ? rep.sigma_ycc[static_cast<std::size_t>(i * 3 + j)] / d : 0.0;
        }
    }

    const double dt = seconds_since(t0);
    const bool pass = vy >= 2.0 * vcb && vy >= 2.0 * vcr && mean_offdiag(corr_rgb) > mean_offdiag(corr_ycc) &&
                      dt < 300.0;
    report(4, pass,
           "sign-gradient energy (12000 pixels): var Y/Cb=" + fmt(vy / vcb, 2) + ", Y/Cr=" + fmt(vy / vcr, 2) +
               " (both >=2), mean |offdiag corr| rgb " + fmt(mean_offdiag(corr_rgb)) + " > ycc " +
               fmt(mean_offdiag(corr_ycc)) + ", " + fmt(dt, 1) + " s (<300)");
}

// ---------------------------------------------------------------------------
// 5. Working detectors under the default training configuration
// ---------------------------------------------------------------------------

void criterion_5(const Workspace& ws) {
    bool pass = true;
    std::string detail = "detectors (default training config, seed 0):";
    for (const std::string id : {"a1", "a2", "a3"}) {
        const EvalReport rep = evaluate(ws.model(id), ws.data, Split::Test);
        pass &= rep.tpr() >= 0.90 && rep.tnr() >= 0.90;
        detail += " " + id + " tpr=" + fmt(rep.tpr(), 2) + " tnr=" + fmt(rep.tnr(), 2);
    }
    if (ws.train_seconds >= 0.0) {
        pass &= ws.train_seconds < 900.0;
        detail += ", trained in " + fmt(ws.train_seconds, 1) + " s (<900)";
    } else {
        detail += ", models reused from workspace (delete it to re-time training)";
    }
    report(5, pass, detail + " (all >=0.90)");
}

// ---------------------------------------------------------------------------
// 6-10, 13: white-box attacks against a1
// ---------------------------------------------------------------------------

struct WhiteBox {
    BatchRun fgsm, mim, ycc;
    double seconds = 0.0;
};

WhiteBox run_white_box(const Workspace& ws) {
    const auto t0 = Clock::now();
    EnsembleSource src{{&ws.model("a1")}};
    WhiteBox wb;
    wb.fgsm = run_and_score(rgb_config(AttackMethod::Fgsm, 5.5), src, ws.model("a1"), ws.data, Label::Fake);
    wb.mim = run_and_score(rgb_config(AttackMethod::Mim, 6.0), src, ws.model("a1"), ws.data, Label::Fake);
    wb.ycc = run_and_score(ycc_config(2.5, 6.0, 6.0), src, ws.model("a1"), ws.data, Label::Fake);
    wb.seconds = seconds_since(t0);
    return wb;
}

void criterion_6(const WhiteBox& wb) {
    const double a_f = wb.fgsm.asr_vs.asr(), a_m = wb.mim.asr_vs.asr(), a_y = wb.ycc.asr_vs.asr();
    const bool pass = a_f >= 0.90 && a_m >= 0.90 && a_y >= 0.90 && wb.seconds < 600.0;
    report(6, pass,
           "white-box ASR on fake test vs source: fgsm(5.5)=" + fmt(a_f, 2) + ", mim(6)=" + fmt(a_m, 2) +
               ", per-channel(2.5/6/6)=" + fmt(a_y, 2) + " (all >=0.90), " + fmt(wb.seconds, 1) + " s (<600)");
}

void criterion_7(const Workspace& ws, const WhiteBox& wb) {
    EnsembleSource src{{&ws.model("a1")}};
    const double target = wb.ycc.asr_vs.asr();

    // Find an epsilon whose ASR lands within 5 points of the target; ASR is
    // monotone in epsilon to good approximation, so bisect.
    auto tune = [&](AttackMethod method, int iterations) {
        double lo = 0.05, hi = 12.0;
        BatchRun best;
        double best_gap = 1e9, best_eps = 0.0;
        for (int step = 0; step < 9; ++step) {
            const double eps = 0.5 * (lo + hi);
            BatchRun r = run_and_score(rgb_config(method, eps, iterations), src, ws.model("a1"), ws.data, Label::Fake);
            const double gap = std::abs(r.asr_vs.asr() - target);
            if (gap < best_gap) {
                best_gap = gap;
                best = std::move(r);
                best_eps = eps;
            }
            if (gap <= 0.02) break;
            (r.asr_vs.asr() < target ? lo : hi) = eps;
        }
        return std::make_tuple(std::move(best), best_eps, best_gap);
    };

    auto [fgsm_run, fgsm_eps, fgsm_gap] = tune(AttackMethod::Fgsm, 1);
    auto [mim_run, mim_eps, mim_gap] = tune(AttackMethod::Mim, 10);

    const double y_ycc = mean_y_linf(wb.ycc.batch);
    const double y_fgsm = mean_y_linf(fgsm_run.batch);
    const double y_mim = mean_y_linf(mim_run.batch);
    const double s_ycc = mean_ssim(wb.ycc.batch);
    const double s_fgsm = mean_ssim(fgsm_run.batch);
    const double s_mim = mean_ssim(mim_run.batch);

    const bool matched = fgsm_gap <= 0.05 && mim_gap <= 0.05;
    const bool pass = matched && y_ycc < y_fgsm && y_ycc < y_mim && s_ycc > s_fgsm && s_ycc > s_mim;
    report(7, pass,
           "imperceptibility at matched ASR (target " + fmt(target, 2) + "; fgsm eps " + fmt(fgsm_eps, 2) + " gap " +
               fmt(fgsm_gap, 2) + ", mim eps " + fmt(mim_eps, 2) + " gap " + fmt(mim_gap, 2) +
               "): mean Y-Linf ycc " + fmt(y_ycc, 2) + " < fgsm " + fmt(y_fgsm, 2) + ", mim " + fmt(y_mim, 2) +
               "; mean SSIM ycc " + fmt(s_ycc) + " > fgsm " + fmt(s_fgsm) + ", mim " + fmt(s_mim));
}

void criterion_8(const Workspace& ws) {
    EnsembleSource src{{&ws.model("a1")}};
    bool pass = true;
    int mismatch_seed = -1;
    for (int s = 0; s < 20 && pass; ++s) {
        RgbImage x(ws.data.resolution, ws.data.resolution);
        std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<float> u(0.0f, 255.0f);
        for (float& p : x.pix) p = u(rng);
        const int label = s % 2;
        const double eps = 1.0 + 0.5 * (s % 7);
        const AttackResult a = mim(src, x, label, eps, 5, 1.0);
        const AttackResult b =
            ycc_attack(src, x, label, {eps, eps, eps}, 5, 1.0, GradientTransport::Exact, ColorTransform::identity());
        if (a.adversarial.pix != b.adversarial.pix) {
            pass = false;
            mismatch_seed = s;
        }
    }
    report(8, pass,
           pass ? "identity-transform per-channel attack bit-identical to the RGB momentum attack over 20 seeded cases"
                : "identity-transform equivalence broke at seeded case " + std::to_string(mismatch_seed));
}

void criterion_9(const WhiteBox& wb) {
    const std::array<double, 3> eps = {2.5, 6.0, 6.0};
    double pre_violation = 0.0;   // of the attack's internal perturbation
    double quant_violation = 0.0; // after box projection + 8-bit quantization
    for (std::size_t k = 0; k < wb.ycc.batch.results.size(); ++k) {
        const AttackResult& r = wb.ycc.batch.results[k];
        const RgbImage& x0 = wb.ycc.batch.originals[wb.ycc.batch.result_index[k]];
        const std::size_t hw = r.zeta_requested.plane();
        for (int c = 0; c < 3; ++c) {
            const float* z = r.zeta_requested.pix.data() + static_cast<std::size_t>(c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                pre_violation = std::max(pre_violation, std::abs(static_cast<double>(z[i])) - eps[static_cast<std::size_t>(c)]);
            }
        }
        const YccImage zq_a = rgb_to_ycc(x0);
        const YccImage zq_b = rgb_to_ycc(quantize_u8(r.adversarial));
        for (int c = 0; c < 3; ++c) {
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t at = static_cast<std::size_t>(c) * hw + i;
                quant_violation = std::max(quant_violation,
                                           std::abs(static_cast<double>(zq_b.pix[at]) - static_cast<double>(zq_a.pix[at])) -
                                               eps[static_cast<std::size_t>(c)]);
            }
        }
    }
    const bool pass = pre_violation <= 0.0 && quant_violation <= 1.0 && !wb.ycc.batch.results.empty();
    report(9, pass,
           "budget invariants over " + std::to_string(wb.ycc.batch.results.size()) +
               " attacks: pre-projection violation " + fmt(pre_violation, 6) +
               " (<=0 exactly), quantized measured violation " + fmt(quant_violation, 3) + " (<=1.0)");
}

void criterion_10(const WhiteBox& wb) {
    std::vector<AttackResult> fgsm_results = wb.fgsm.batch.results;
    std::vector<AttackResult> ycc_results = wb.ycc.batch.results;

    const PerturbationHistogram hf = perturbation_histogram(fgsm_results, Domain::Ycc, 5.5);
    // Y-residue mass within one bin width of the largest observed magnitude.
    int max_occupied = 0;
    for (int b = 0; b < hf.bins(); ++b) {
        if (hf.counts[0][static_cast<std::size_t>(b)] > 0) {
            max_occupied = std::max(max_occupied, static_cast<int>(std::lround(std::abs(hf.bin_center(b)) / hf.bin_width)));
        }
    }
    std::int64_t outer = 0;
    for (int b = 0; b < hf.bins(); ++b) {
        if (std::abs(hf.bin_center(b)) >= (max_occupied - 1) * hf.bin_width) outer += hf.counts[0][static_cast<std::size_t>(b)];
    }
    const double outer_mass = static_cast<double>(outer) / static_cast<double>(hf.total(0));

    const PerturbationHistogram hy = perturbation_histogram(ycc_results, Domain::Ycc, 6.0);
    auto mode_center = [&](int channel) {
        std::int64_t best = -1;
        double center = 0.0;
        for (int b = 0; b < hy.bins(); ++b) {
            if (hy.counts[static_cast<std::size_t>(channel)][static_cast<std::size_t>(b)] > best) {
                best = hy.counts[static_cast<std::size_t>(channel)][static_cast<std::size_t>(b)];
                center = hy.bin_center(b);
            }
        }
        return center;
    };
    const double mode_y = mode_center(0), mode_cb = mode_center(1), mode_cr = mode_center(2);
    const bool chroma_ok = std::abs(std::abs(mode_cb) - 6.0) <= 0.5 && std::abs(std::abs(mode_cr) - 6.0) <= 0.5;
    const bool y_ok = std::abs(mode_y) <= 2.5 + hy.bin_width / 2.0;

    const bool pass = outer_mass >= 0.6 && chroma_ok && y_ok;
    report(10, pass,
           "residue histograms: fgsm Y mass at extreme magnitudes " + fmt(outer_mass, 2) +
               " (>=0.6); per-channel attack modes Y " + fmt(mode_y, 2) + " (|.|<=2.625), Cb " + fmt(mode_cb, 2) +
               ", Cr " + fmt(mode_cr, 2) + " (|.| within 0.5 of 6)");
}

// ---------------------------------------------------------------------------
// 11, 12, 14: transfer matrix, ensemble sources, real-class attacks
// ---------------------------------------------------------------------------

struct TransferData {
    std::vector<std::string> source_ids{"a1", "a2", "a3"};
    std::vector<TransferTarget> targets;
    std::map<std::string, AttackBatchResult> ycc_fake, fgsm_fake, ycc_real;
    TransferMatrix ycc_matrix, fgsm_matrix, real_matrix;
};

TransferData run_transfers(const Workspace& ws) {
    TransferData td;
    for (const std::string& id : td.source_ids) {
        td.targets.push_back(TransferTarget{id, &ws.model(id), nullptr});
    }
    td.targets.push_back(TransferTarget{"ndl", nullptr, &ws.ndl});

    for (const std::string& id : td.source_ids) {
        EnsembleSource src{{&ws.model(id)}};
        td.ycc_fake[id] = attack_batch(ycc_config(2.5, 6.0, 6.0), src, ws.data, Split::Test, Label::Fake);
        td.fgsm_fake[id] = attack_batch(rgb_config(AttackMethod::Fgsm, 5.5), src, ws.data, Split::Test, Label::Fake);
        td.ycc_real[id] = attack_batch(ycc_config(2.5, 6.0, 6.0), src, ws.data, Split::Test, Label::Real);
    }
    auto matrix_of = [&](const std::map<std::string, AttackBatchResult>& runs) {
        std::vector<std::pair<std::string, const AttackBatchResult*>> rows;
        for (const std::string& id : td.source_ids) rows.emplace_back(id, &runs.at(id));
        return transfer_matrix(rows, td.targets);
    };
    td.ycc_matrix = matrix_of(td.ycc_fake);
    td.fgsm_matrix = matrix_of(td.fgsm_fake);
    td.real_matrix = matrix_of(td.ycc_real);
    return td;
}

double row_mean(const TransferMatrix& m, std::size_t row) {
    double acc = 0.0;
    for (const TransferCell& c : m.cells[row]) acc += c.asr;
    return acc / static_cast<double>(m.cells[row].size());
}

double matrix_mean(const TransferMatrix& m) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& row : m.cells) {
        for (const TransferCell& c : row) {
            acc += c.asr;
            ++n;
        }
    }
    return acc / static_cast<double>(n);
}

void criterion_11(const TransferData& td) {
    bool all_valid = true;
    for (const auto& row : td.ycc_matrix.cells) {
        for (const TransferCell& c : row) all_valid &= c.valid;
    }

    bool rows_ok = true;
    std::string rows_detail;
    for (std::size_t s = 0; s < td.source_ids.size(); ++s) {
        const double ry = row_mean(td.ycc_matrix, s), rf = row_mean(td.fgsm_matrix, s);
        rows_ok &= ry >= rf;
        rows_detail += (s ? " " : "") + td.source_ids[s] + ":" + fmt(ry, 2) + ">=" + fmt(rf, 2);
    }

    double max_gap = 0.0;
    for (std::size_t i = 0; i < td.source_ids.size(); ++i) {
        for (std::size_t j = 0; j < td.source_ids.size(); ++j) {
            if (i == j) continue;
            max_gap = std::max(max_gap, std::abs(td.ycc_matrix.cells[i][j].asr - td.ycc_matrix.cells[j][i].asr));
        }
    }

    double best_ndl = 0.0;
    for (std::size_t s = 0; s < td.source_ids.size(); ++s) {
        best_ndl = std::max(best_ndl, td.ycc_matrix.cells[s][3].asr);
    }

    const bool pass = all_valid && rows_ok && max_gap >= 0.1 && best_ndl > 0.0;
    report(11, pass,
           "transfer matrix 3x4: all cells valid, per-source row-mean proposed>=fgsm (" + rows_detail +
               "), max asymmetry " + fmt(max_gap, 2) + " (>=0.1), best transfer to co-occurrence detector " +
               fmt(best_ndl, 2) + " (>0)");
}

void criterion_12(const Workspace& ws, const TransferData& td) {
    EnsembleSource ens{{&ws.model("a1"), &ws.model("a2"), &ws.model("a3")}};
    const AttackBatchResult batch = attack_batch(ycc_config(2.5, 6.0, 6.0), ens, ws.data, Split::Test, Label::Fake);
    const TransferTarget ndl_target{"ndl", nullptr, &ws.ndl};
    const TransferCell ens_cell = evaluate_transfer(ndl_target, batch);

    double best_single = -1.0;
    std::string best_id;
    for (std::size_t s = 0; s < td.source_ids.size(); ++s) {
        if (td.ycc_matrix.cells[s][3].asr > best_single) {
            best_single = td.ycc_matrix.cells[s][3].asr;
            best_id = td.source_ids[s];
        }
    }
    const bool pass = ens_cell.valid && ens_cell.asr >= best_single - 0.05;
    report(12, pass,
           "ensemble (a1+a2+a3) attack on the held-out co-occurrence detector: ASR " + fmt(ens_cell.asr, 2) +
               " vs best single source " + best_id + " " + fmt(best_single, 2) + " (within 5 points or above)");
}

void criterion_13(const Workspace& ws) {
    EnsembleSource src{{&ws.model("a1")}};
    bool pass = true;
    std::string detail = "sweep over eps {2,4,6,8}:";
    for (AttackMethod method : {AttackMethod::Fgsm, AttackMethod::Mim}) {
        double prev_asr = -1.0, prev_ssim = 2.0;
        std::string seq;
        for (double eps : {2.0, 4.0, 6.0, 8.0}) {
            BatchRun r = run_and_score(rgb_config(method, eps, method == AttackMethod::Fgsm ? 1 : 10), src,
                                       ws.model("a1"), ws.data, Label::Fake);
            const double a = r.asr_vs.asr();
            const double s = mean_ssim(r.batch);
            pass &= a >= prev_asr && s <= prev_ssim;
            prev_asr = a;
            prev_ssim = s;
            seq += " " + fmt(a, 2) + "/" + fmt(s, 2);
        }
        detail += " " + to_string(method) + " asr/ssim:" + seq + ";";
    }
    report(13, pass, detail + " ASR non-decreasing, SSIM non-increasing");
}

void criterion_14(const TransferData& td) {
    const double mean_fake = matrix_mean(td.ycc_matrix);
    const double mean_real = matrix_mean(td.real_matrix);
    bool all_valid = true;
    for (const auto& row : td.real_matrix.cells) {
        for (const TransferCell& c : row) all_valid &= c.valid;
    }
    const bool pass = all_valid && mean_real < mean_fake;
    report(14, pass,
           "real-class attacks: mean transfer ASR real " + fmt(mean_real, 2) + " < fake " + fmt(mean_fake, 2) +
               " under identical per-channel configs");
}

}  // namespace

int main(int argc, char** argv) {
    const std::string ws_dir = argc > 1 ? argv[1] : "acceptance_ws";
    const auto t_all = Clock::now();
    try {
        Workspace ws = build_workspace(ws_dir);

        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4(ws);
        criterion_5(ws);

        const WhiteBox wb = run_white_box(ws);
        criterion_6(wb);
        criterion_7(ws, wb);
        criterion_8(ws);
        criterion_9(wb);
        criterion_10(wb);

        const TransferData td = run_transfers(ws);
        criterion_11(td);
        criterion_12(ws, td);
        criterion_13(ws);
        criterion_14(td);
    } catch (const std::exception& e) {
        std::printf("acceptance suite aborted: %s\n", e.what());
        return 1;
    }

    std::printf("acceptance: %s (%d failing), total %.1f s\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
                g_failures, seconds_since(t_all));
    return g_failures == 0 ? 0 : 1;
}
