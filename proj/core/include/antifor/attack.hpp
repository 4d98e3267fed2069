#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "antifor/color.hpp"
#include "antifor/dataset.hpp"
#include "antifor/detector.hpp"
#include "antifor/image.hpp"

namespace antifor {

enum class AttackMethod { Fgsm, Mim, Ycc };

std::string to_string(AttackMethod m);
AttackMethod attack_method_from_string(const std::string& s);

struct AttackBudget {
    bool per_channel = false;
    double epsilon = 0.0;             // scalar RGB L-inf budget
    std::array<double, 3> ycc{};      // per-channel Y, Cb, Cr budgets

    static AttackBudget scalar(double eps);
    static AttackBudget channels(double y, double cb, double cr);
    void validate() const;
};

struct AttackConfig {
    AttackMethod method = AttackMethod::Mim;
    AttackBudget budget;
    int iterations = 10;
    double momentum = 1.0;
    GradientTransport transport = GradientTransport::Exact;

    void validate() const;
};

struct EnsembleSource {
    std::vector<const DetectorModel*> models;  // equal weights

    std::string id() const;
    void validate() const;
};

struct AttackResult {
    RgbImage adversarial;
    RgbImage delta;          // x_adv - x in RGB
    YccImage zeta;           // T(x_adv) - T(x), measured post-hoc
    YccImage zeta_requested; // the attack's internal pre-projection perturbation (YCC method)
    std::string source_id;
    std::vector<double> loss_trajectory;  // loss at each gradient evaluation
    // max over pixels/channels of measured |zeta| minus its budget (YCC method;
    // box projection can push zeta past the per-channel ball)
    double zeta_violation = 0.0;
};

// dL/dx for L = BCE(mean of model scores, label). Single-model attacks are
// one-member ensembles, so both paths share this bit-exactly.
RgbImage ensemble_input_gradient(const EnsembleSource& source, const RgbImage& x, int label,
                                 double* loss_out = nullptr);

AttackResult fgsm(const DetectorModel& model, const RgbImage& x, int label, double eps);
AttackResult mim(const DetectorModel& model, const RgbImage& x, int label, double eps, int iterations,
                 double momentum);
AttackResult mim(const EnsembleSource& source, const RgbImage& x, int label, double eps, int iterations,
                 double momentum);
AttackResult ycc_attack(const EnsembleSource& source, const RgbImage& x, int label,
                        const std::array<double, 3>& budgets, int iterations, double momentum,
                        GradientTransport mode = GradientTransport::Exact,
                        const ColorTransform& transform = ColorTransform::bt601());

AttackResult run_attack(const AttackConfig& cfg, const EnsembleSource& source, const RgbImage& x, int label);

struct AttackBatchResult {
    std::vector<RgbImage> originals;    // every image of the chosen class in the split
    std::vector<RgbImage> adversarial;  // equals the original where not attacked
    std::vector<char> attacked;         // 1 if the source classified the original correctly
    std::vector<AttackResult> results;  // one per attacked image
    std::vector<std::size_t> result_index;  // position of each result in originals
    std::vector<std::string> failures;  // per-image error messages, batch continues
    Label target_class = Label::Fake;
    bool empty_selection = false;
};

// Attacks every correctly-classified image of the chosen class; misclassified
// originals are carried through unperturbed so after-attack rates cover the
// full subset.
AttackBatchResult attack_batch(const AttackConfig& cfg, const EnsembleSource& source,
                               const DatasetManifest& data, Split split, Label target_class,
                               int workers = 1);

}  // namespace antifor
