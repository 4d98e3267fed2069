#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "antifor/autodiff.hpp"
#include "antifor/dataset.hpp"
#include "antifor/image.hpp"
#include "antifor/tensor.hpp"

namespace antifor {

enum class LayerKind { Conv, Relu, Sigmoid, AvgPool, MaxPool, Flatten, Dense, Residual, Gain, Norm };

struct LayerSpec {
    LayerKind kind;
    int out_channels = 0;  // Conv / Residual
    int kernel = 3;
    int stride = 1;
    int padding = 1;
    int pool = 2;     // AvgPool / MaxPool window
    int units = 0;    // Dense
    float gain = 1.0f;
};

struct DetectorArch {
    std::string id;
    int input_resolution = 64;
    std::vector<LayerSpec> layers;

    // Presets: a1 (3 convs), a2 (5 convs, one max pool), a3 (residual block).
    static DetectorArch preset(const std::string& id, int resolution = 64);
};

struct DetectorModel {
    DetectorArch arch;
    std::vector<Tensor> params;
    std::uint64_t seed = 0;
    int trained_epochs = 0;
    double final_tpr = 0.0;
    double final_tnr = 0.0;

    static DetectorModel init(const DetectorArch& arch, std::uint64_t seed);

    // Builds the forward graph for a raw-intensity batch [N,3,R,R] and returns
    // the fake-class probability [N,1]. When param_vars is given, it receives
    // the tape handle of each parameter (same order as params).
    Var forward(Tape& tape, Var input, std::vector<Var>* param_vars = nullptr) const;

    std::vector<float> predict_scores(const std::vector<RgbImage>& images) const;
    float predict_score(const RgbImage& image) const;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 5e-4;
    int batch_size = 64;
    int max_epochs = 60;
    int patience = 8;  // epochs without validation-accuracy improvement

    void validate() const;
};

struct EvalReport {
    long tp = 0;
    long tn = 0;
    long fp = 0;
    long fn = 0;

    double tpr() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
    double tnr() const { return tn + fp == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp); }
    long total() const { return tp + tn + fp + fn; }
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_tpr = 0.0;
    double val_tnr = 0.0;
};

DetectorModel train(const DetectorArch& arch, const DatasetManifest& data, const TrainConfig& cfg,
                    std::uint64_t seed, std::vector<EpochStats>* history = nullptr);

EvalReport evaluate(const DetectorModel& model, const DatasetManifest& data, Split split);
EvalReport evaluate_images(const DetectorModel& model, const std::vector<RgbImage>& images,
                           const std::vector<int>& labels, double threshold = 0.5);

Tensor batch_from_images(const std::vector<RgbImage>& images);

void save_model(const DetectorModel& model, const std::string& path);
DetectorModel load_model(const std::string& path);
void save_history_csv(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace antifor
