#include "antifor/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "antifor/image_io.hpp"
#include "antifor/util.hpp"

namespace antifor {
namespace {

constexpr double kL1Guard = 1e-12;
constexpr float kScoreClampLo = 1e-7f;
constexpr float kScoreClampHi = 1.0f - 1e-7f;

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

double l1_norm(const std::vector<float>& v) {
    double acc = 0.0;
    for (float x : v) acc += std::abs(static_cast<double>(x));
    return acc;
}

// x0 + delta with the addition done in double, then the box projection.
RgbImage reconstruct(const RgbImage& x0, const std::vector<float>& delta) {
    RgbImage out(x0.height, x0.width);
    for (std::size_t i = 0; i < out.pix.size(); ++i) {
        out.pix[i] = static_cast<float>(static_cast<double>(x0.pix[i]) + static_cast<double>(delta[i]));
    }
    return project_box(out);
}

YccImage measured_zeta(const RgbImage& x0, const RgbImage& x_adv, const ColorTransform& t) {
    const YccImage a = rgb_to_ycc(x0, t);
    const YccImage b = rgb_to_ycc(x_adv, t);
    YccImage z(x0.height, x0.width);
    for (std::size_t i = 0; i < z.pix.size(); ++i) z.pix[i] = b.pix[i] - a.pix[i];
    return z;
}

void finalize(AttackResult& r, const RgbImage& x0, const ColorTransform& t) {
    r.delta = RgbImage(x0.height, x0.width);
    for (std::size_t i = 0; i < r.delta.pix.size(); ++i) r.delta.pix[i] = r.adversarial.pix[i] - x0.pix[i];
    r.zeta = measured_zeta(x0, r.adversarial, t);
}

}  // namespace

std::string to_string(AttackMethod m) {
    switch (m) {
        case AttackMethod::Fgsm: return "fgsm";
        case AttackMethod::Mim: return "mim";
        default: return "ycc";
    }
}

AttackMethod attack_method_from_string(const std::string& s) {
    if (s == "fgsm") return AttackMethod::Fgsm;
    if (s == "mim") return AttackMethod::Mim;
    if (s == "ycc") return AttackMethod::Ycc;
    throw std::invalid_argument("unknown attack method: " + s + " (expected fgsm|mim|ycc)");
}

AttackBudget AttackBudget::scalar(double eps) {
    AttackBudget b;
    b.per_channel = false;
    b.epsilon = eps;
    b.validate();
    return b;
}

AttackBudget AttackBudget::channels(double y, double cb, double cr) {
    AttackBudget b;
    b.per_channel = true;
    b.ycc = {y, cb, cr};
    b.validate();
    return b;
}

void AttackBudget::validate() const {
    if (per_channel) {
        for (double e : ycc)
            if (e < 0.0) throw std::invalid_argument("per-channel budgets must be >= 0");
    } else if (epsilon < 0.0) {
        throw std::invalid_argument("budget epsilon must be >= 0");
    }
}

void AttackConfig::validate() const {
    budget.validate();
    if (iterations < 1) throw std::invalid_argument("attack iterations must be >= 1");
    if (momentum < 0.0) throw std::invalid_argument("momentum decay must be >= 0");
    if (method == AttackMethod::Ycc && !budget.per_channel) {
        throw std::invalid_argument("ycc attack needs per-channel budgets");
    }
    if (method != AttackMethod::Ycc && budget.per_channel) {
        throw std::invalid_argument(to_string(method) + " attack needs a scalar budget");
    }
}

std::string EnsembleSource::id() const {
    std::string s;
    for (const DetectorModel* m : models) {
        if (!s.empty()) s += "+";
        s += m->arch.id;
    }
    return s;
}

void EnsembleSource::validate() const {
    if (models.empty()) throw std::invalid_argument("ensemble source needs at least one model");
    for (const DetectorModel* m : models) {
        if (!m) throw std::invalid_argument("ensemble source has a null model");
        if (m->arch.input_resolution != models.front()->arch.input_resolution) {
            throw std::invalid_argument("ensemble members disagree on input resolution");
        }
    }
}

RgbImage ensemble_input_gradient(const EnsembleSource& source, const RgbImage& x, int label, double* loss_out) {
    source.validate();
    if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
    const std::size_t m = source.models.size();

    std::vector<Tape> tapes(m);
    std::vector<Var> inputs(m);
    std::vector<Var> outputs(m);
    double score_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        inputs[i] = tapes[i].leaf(batch_from_images({x}));
        outputs[i] = source.models[i]->forward(tapes[i], inputs[i]);
        score_sum += tapes[i].value(outputs[i]).data[0];
    }
    const double mean_raw = score_sum / static_cast<double>(m);
    const double mean = std::clamp(mean_raw, static_cast<double>(kScoreClampLo), static_cast<double>(kScoreClampHi));
    const double y = label;
    if (loss_out) *loss_out = -y * std::log(mean) - (1.0 - y) * std::log(1.0 - mean);

    double dmean = 0.0;
    if (mean_raw >= kScoreClampLo && mean_raw <= kScoreClampHi) {
        dmean = (mean - y) / (mean * (1.0 - mean));
    }
    const float seed_value = static_cast<float>(dmean / static_cast<double>(m));

    RgbImage grad(x.height, x.width);
    for (std::size_t i = 0; i < m; ++i) {
        Tensor seed(tapes[i].value(outputs[i]).shape, 0.0f);
        seed.data[0] = seed_value;
        tapes[i].backward_seeded(outputs[i], seed);
        const Tensor& gx = tapes[i].grad(inputs[i]);
        if (m == 1) {
            std::copy(gx.data.begin(), gx.data.end(), grad.pix.begin());
        } else {
            for (std::size_t j = 0; j < grad.pix.size(); ++j) grad.pix[j] += gx.data[j];
        }
    }
    if (!std::isfinite(l1_norm(grad.pix))) throw std::runtime_error("non-finite input gradient");
    return grad;
}

AttackResult fgsm(const DetectorModel& model, const RgbImage& x, int label, double eps) {
    if (eps < 0.0) throw std::invalid_argument("fgsm: eps must be >= 0");
    EnsembleSource source{{&model}};
    AttackResult r;
    r.source_id = source.id();
    double loss = 0.0;
    const RgbImage grad = ensemble_input_gradient(source, x, label, &loss);
    r.loss_trajectory.push_back(loss);
    const float eps_f = static_cast<float>(eps);
    std::vector<float> delta(x.pix.size());
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = eps_f * sign_of(grad.pix[i]);
    r.adversarial = reconstruct(x, delta);
    finalize(r, x, ColorTransform::bt601());
    return r;
}

AttackResult mim(const EnsembleSource& source, const RgbImage& x, int label, double eps, int iterations,
                 double momentum) {
    source.validate();
    if (eps < 0.0 || iterations < 1) throw std::invalid_argument("mim: eps >= 0 and iterations >= 1 required");
    AttackResult r;
    r.source_id = source.id();
    const float eps_f = static_cast<float>(eps);
    const float alpha = static_cast<float>(eps / iterations);
    const float mu = static_cast<float>(momentum);

    std::vector<float> delta(x.pix.size(), 0.0f);
    std::vector<float> g_mom(x.pix.size(), 0.0f);
    RgbImage current = project_box(x);
    for (int k = 0; k < iterations; ++k) {
        double loss = 0.0;
        const RgbImage grad = ensemble_input_gradient(source, current, label, &loss);
        r.loss_trajectory.push_back(loss);
        // A vanished gradient (saturated score) contributes nothing, but the
        // momentum term keeps the update moving along the established
        // direction rather than stalling.
        const double l1 = l1_norm(grad.pix);
        const double inv_l1 = l1 >= kL1Guard ? 1.0 / l1 : 0.0;
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const float gn = static_cast<float>(static_cast<double>(grad.pix[i]) * inv_l1);
            g_mom[i] = mu * g_mom[i] + gn;
            delta[i] = std::clamp(delta[i] + alpha * sign_of(g_mom[i]), -eps_f, eps_f);
        }
        current = reconstruct(x, delta);
    }
    r.adversarial = std::move(current);
    finalize(r, x, ColorTransform::bt601());
    return r;
}

AttackResult mim(const DetectorModel& model, const RgbImage& x, int label, double eps, int iterations,
                 double momentum) {
    EnsembleSource source{{&model}};
    return mim(source, x, label, eps, iterations, momentum);
}

AttackResult ycc_attack(const EnsembleSource& source, const RgbImage& x, int label,
                        const std::array<double, 3>& budgets, int iterations, double momentum,
                        GradientTransport mode, const ColorTransform& transform) {
    source.validate();
    for (double e : budgets)
        if (e < 0.0) throw std::invalid_argument("ycc_attack: budgets must be >= 0");
    if (iterations < 1) throw std::invalid_argument("ycc_attack: iterations must be >= 1");

    AttackResult r;
    r.source_id = source.id();
    const std::size_t hw = x.plane();
    std::array<float, 3> eps_f{};
    std::array<float, 3> alpha{};
    for (int c = 0; c < 3; ++c) {
        eps_f[static_cast<std::size_t>(c)] = static_cast<float>(budgets[static_cast<std::size_t>(c)]);
        alpha[static_cast<std::size_t>(c)] = static_cast<float>(budgets[static_cast<std::size_t>(c)] / iterations);
    }
    const float mu = static_cast<float>(momentum);

    YccImage zeta(x.height, x.width, 0.0f);
    std::vector<float> g_mom(zeta.pix.size(), 0.0f);
    RgbImage current = project_box(x);
    for (int k = 0; k < iterations; ++k) {
        double loss = 0.0;
        const RgbImage grad_rgb = ensemble_input_gradient(source, current, label, &loss);
        r.loss_trajectory.push_back(loss);
        const YccImage grad_ycc = transport_gradient(grad_rgb, transform, mode);
        // Same vanished-gradient handling as the RGB momentum attack: decay
        // the momentum and keep stepping along it.
        const double l1 = l1_norm(grad_ycc.pix);
        const double inv_l1 = l1 >= kL1Guard ? 1.0 / l1 : 0.0;
        for (int c = 0; c < 3; ++c) {
            const float a = alpha[static_cast<std::size_t>(c)];
            const float e = eps_f[static_cast<std::size_t>(c)];
            float* z = zeta.pix.data() + static_cast<std::size_t>(c) * hw;
            float* gm = g_mom.data() + static_cast<std::size_t>(c) * hw;
            const float* g = grad_ycc.pix.data() + static_cast<std::size_t>(c) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
                const float gn = static_cast<float>(static_cast<double>(g[i]) * inv_l1);
                gm[i] = mu * gm[i] + gn;
                z[i] = std::clamp(z[i] + a * sign_of(gm[i]), -e, e);
            }
        }
        current = project_box(apply_ycc_perturbation(x, zeta, transform));
    }
    r.adversarial = std::move(current);
    r.zeta_requested = std::move(zeta);
    finalize(r, x, transform);

    double violation = 0.0;
    for (int c = 0; c < 3; ++c) {
        const float* z = r.zeta.pix.data() + static_cast<std::size_t>(c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
            violation = std::max(violation, std::abs(static_cast<double>(z[i])) - budgets[static_cast<std::size_t>(c)]);
        }
    }
    r.zeta_violation = std::max(0.0, violation);
    return r;
}

AttackResult run_attack(const AttackConfig& cfg, const EnsembleSource& source, const RgbImage& x, int label) {
    cfg.validate();
    switch (cfg.method) {
        case AttackMethod::Fgsm:
            if (source.models.size() == 1) return fgsm(*source.models.front(), x, label, cfg.budget.epsilon);
            return mim(source, x, label, cfg.budget.epsilon, 1, cfg.momentum);
        case AttackMethod::Mim:
            return mim(source, x, label, cfg.budget.epsilon, cfg.iterations, cfg.momentum);
        default:
            return ycc_attack(source, x, label, cfg.budget.ycc, cfg.iterations, cfg.momentum, cfg.transport);
    }
}

AttackBatchResult attack_batch(const AttackConfig& cfg, const EnsembleSource& source,
                               const DatasetManifest& data, Split split, Label target_class, int workers) {
    cfg.validate();
    source.validate();
    AttackBatchResult out;
    out.target_class = target_class;

    const std::vector<DatasetRecord> records = data.select(split, target_class);
    if (records.empty()) {
        out.empty_selection = true;
        return out;
    }
    for (const auto& r : records) out.originals.push_back(load_image(data.resolve(r)));
    out.adversarial = out.originals;
    out.attacked.assign(records.size(), 0);

    // attack only originals the (mean-score) source classifies correctly
    const int label = target_class == Label::Fake ? 1 : 0;
    std::vector<double> mean_scores(records.size(), 0.0);
    for (const DetectorModel* m : source.models) {
        const std::vector<float> s = m->predict_scores(out.originals);
        for (std::size_t i = 0; i < s.size(); ++i) mean_scores[i] += s[i] / static_cast<double>(source.models.size());
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const bool correct = (mean_scores[i] > 0.5) == (label == 1);
        out.attacked[i] = correct ? 1 : 0;
    }

    std::vector<std::string> errors(records.size());
    std::vector<AttackResult> results(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
        if (!out.attacked[i]) return;
        try {
            results[i] = run_attack(cfg, source, out.originals[i], label);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!out.attacked[i]) continue;
        if (!errors[i].empty()) {
            out.failures.push_back("image " + std::to_string(i) + ": " + errors[i]);
            out.attacked[i] = 0;
            continue;
        }
        out.adversarial[i] = results[i].adversarial;
        out.result_index.push_back(i);
        out.results.push_back(std::move(results[i]));
    }
    return out;
}

}  // namespace antifor
