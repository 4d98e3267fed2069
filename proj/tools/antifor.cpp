// Command-line front end: dataset generation, training, evaluation, attacks,
// transfer studies and reporting, all file-based and seed-reproducible.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "antifor/analysis.hpp"
#include "antifor/attack.hpp"
#include "antifor/dataset.hpp"
#include "antifor/detector.hpp"
#include "antifor/image_io.hpp"
#include "antifor/ndl.hpp"
#include "antifor/quality.hpp"
#include "antifor/synthetic.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace antifor;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
    std::vector<std::string> problems;
    explicit ConfigError(std::vector<std::string> p)
        : std::runtime_error(p.empty() ? "invalid configuration" : p.front()), problems(std::move(p)) {}
};

[[noreturn]] void fail(const std::string& type, const std::vector<std::string>& messages, int code) {
    json err;
    err["error"]["type"] = type;
    err["error"]["messages"] = messages;
    std::cerr << err.dump(2) << "\n";
    std::exit(code);
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

// Applies a JSON config file underneath command-line flags: any key whose
// flag was not given on the command line is taken from the file; unknown
// keys are all reported at once.
struct ConfigFile {
    CLI::App* cmd = nullptr;
    std::map<std::string, std::function<void(const json&)>> setters;

    void bind(const std::string& key, const std::function<void(const json&)>& set) { setters[key] = set; }

    void apply(const std::string& path) const {
        std::ifstream in(path);
        if (!in) throw ConfigError({"config file not readable: " + path});
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const std::exception& e) {
            throw ConfigError({"config file is not valid JSON: " + std::string(e.what())});
        }
        if (!cfg.is_object()) throw ConfigError({"config file must hold a JSON object"});
        std::vector<std::string> problems;
        for (const auto& [key, value] : cfg.items()) {
            const auto it = setters.find(key);
            if (it == setters.end()) {
                problems.push_back("unknown config key: " + key);
                continue;
            }
            const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
            if (opt != nullptr && opt->count() > 0) continue;  // flags win
            try {
                it->second(value);
            } catch (const std::exception& e) {
                problems.push_back("config key " + key + ": " + e.what());
            }
        }
        if (!problems.empty()) throw ConfigError(problems);
    }
};

struct ModelStore {
    std::vector<DetectorModel> models;

    const DetectorModel* load(const std::string& path) {
        models.reserve(models.size() + 1);
        models.push_back(load_model(path));
        return &models.back();
    }
};

double ensemble_correct_rate(const EnsembleSource& source, const std::vector<RgbImage>& images, int label) {
    std::vector<double> mean(images.size(), 0.0);
    for (const DetectorModel* m : source.models) {
        const std::vector<float> s = m->predict_scores(images);
        for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i] / static_cast<double>(source.models.size());
    }
    long correct = 0;
    for (double s : mean) {
        if ((s > 0.5) == (label == 1)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(images.size());
}

json quality_json(const QualityReport& q) {
    json j;
    j["psnr_db"] = q.psnr_db;
    j["ssim"] = q.ssim;
    j["linf_rgb"] = q.linf_rgb;
    j["linf_ycc"] = q.linf_ycc;
    j["l2"] = q.l2;
    return j;
}

// -------------------------------------------------------------- gen-data --

struct GenDataArgs {
    std::string out;
    std::string config_file;
    SyntheticConfig cfg;
    std::uint64_t seed = 0;
};

json gen_data_config_json(const GenDataArgs& a) {
    json j;
    j["command"] = "gen-data";
    j["out"] = a.out;
    j["resolution"] = a.cfg.resolution;
    j["train_per_class"] = a.cfg.train_per_class;
    j["val_per_class"] = a.cfg.val_per_class;
    j["test_per_class"] = a.cfg.test_per_class;
    j["upsample_factor"] = a.cfg.upsample_factor;
    j["artifact_amplitude"] = a.cfg.artifact_amplitude;
    j["smoothing_sigma"] = a.cfg.smoothing_sigma;
    j["seed"] = a.seed;
    return j;
}

int run_gen_data(GenDataArgs& a) {
    a.cfg.seed = a.seed;
    std::vector<std::string> problems;
    try {
        a.cfg.validate();
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    if (a.out.empty()) problems.emplace_back("--out directory is required");
    if (!problems.empty()) throw ConfigError(problems);

    const DatasetManifest m = generate_synthetic(a.cfg, a.out);
    json out;
    out["config"] = gen_data_config_json(a);
    out["timestamp"] = timestamp_utc();
    out["result"]["manifest"] = (fs::path(a.out) / "manifest.json").string();
    out["result"]["images"] = m.records.size();
    out["result"]["config_digest"] = m.config_digest;
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------ train --

struct TrainArgs {
    std::string arch = "a1";
    std::string manifest;
    std::string out;
    std::string history;
    TrainConfig cfg;
    std::uint64_t seed = 0;
};

json train_config_json(const TrainArgs& a) {
    json j;
    j["command"] = "train";
    j["arch"] = a.arch;
    j["manifest"] = a.manifest;
    j["out"] = a.out;
    j["learning_rate"] = a.cfg.learning_rate;
    j["weight_decay"] = a.cfg.weight_decay;
    j["batch_size"] = a.cfg.batch_size;
    j["max_epochs"] = a.cfg.max_epochs;
    j["patience"] = a.cfg.patience;
    j["seed"] = a.seed;
    return j;
}

int run_train(TrainArgs& a) {
    std::vector<std::string> problems;
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    if (a.out.empty()) problems.emplace_back("--out model path is required");
    if (a.arch != "a1" && a.arch != "a2" && a.arch != "a3") problems.push_back("unknown arch: " + a.arch);
    try {
        a.cfg.validate();
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    if (!problems.empty()) throw ConfigError(problems);

    const DatasetManifest data = load_manifest(a.manifest);
    std::vector<EpochStats> history;
    const DetectorModel model = train(DetectorArch::preset(a.arch, data.resolution), data, a.cfg, a.seed, &history);
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    save_model(model, a.out);
    if (!a.history.empty()) save_history_csv(history, a.history);

    json out;
    out["config"] = train_config_json(a);
    out["timestamp"] = timestamp_utc();
    out["result"]["model"] = a.out;
    out["result"]["epochs_trained"] = model.trained_epochs;
    out["result"]["val_tpr"] = model.final_tpr;
    out["result"]["val_tnr"] = model.final_tnr;
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------- eval --

struct EvalArgs {
    std::string model;
    std::string manifest;
    std::string split = "test";
    std::string out;
    std::uint64_t seed = 0;
};

int run_eval(EvalArgs& a) {
    std::vector<std::string> problems;
    if (a.model.empty() || !fs::exists(a.model)) problems.push_back("model not found: " + a.model);
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    try {
        split_from_string(a.split);
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    if (!problems.empty()) throw ConfigError(problems);

    const DetectorModel model = load_model(a.model);
    const DatasetManifest data = load_manifest(a.manifest);
    const EvalReport rep = evaluate(model, data, split_from_string(a.split));

    json out;
    out["config"] = {{"command", "eval"}, {"model", a.model}, {"manifest", a.manifest}, {"split", a.split}, {"seed", a.seed}};
    out["timestamp"] = timestamp_utc();
    out["result"] = {{"tp", rep.tp}, {"tn", rep.tn}, {"fp", rep.fp}, {"fn", rep.fn},
                     {"tpr", rep.tpr()}, {"tnr", rep.tnr()}, {"total", rep.total()}};
    const std::string text = out.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        write_text(a.out, text);
    }
    return 0;
}

// ----------------------------------------------------------------- attack --

struct AttackArgs {
    std::string method = "mim";
    std::vector<std::string> model_paths;
    std::string manifest;
    std::string target_class = "fake";
    std::string split = "test";
    std::string out;
    double eps = 6.0;
    std::vector<double> eps_ycc;
    int iterations = 10;
    double momentum = 1.0;
    std::string transport = "exact";
    bool no_images = false;
    std::uint64_t seed = 0;
    int workers = 1;
};

AttackConfig attack_config_from_args(const AttackArgs& a, std::vector<std::string>& problems) {
    AttackConfig cfg;
    try {
        cfg.method = attack_method_from_string(a.method);
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    if (cfg.method == AttackMethod::Ycc) {
        if (a.eps_ycc.size() != 3) {
            problems.emplace_back("ycc method needs --eps-ycc with exactly 3 values (Y, Cb, Cr)");
        } else {
            cfg.budget.per_channel = true;
            cfg.budget.ycc = {a.eps_ycc[0], a.eps_ycc[1], a.eps_ycc[2]};
        }
    } else {
        if (!a.eps_ycc.empty()) problems.emplace_back("--eps-ycc only applies to the ycc method");
        cfg.budget = AttackBudget{};
        cfg.budget.epsilon = a.eps;
    }
    cfg.iterations = a.iterations;
    cfg.momentum = a.momentum;
    if (a.transport == "exact") {
        cfg.transport = GradientTransport::Exact;
    } else if (a.transport == "reciprocal") {
        cfg.transport = GradientTransport::Reciprocal;
    } else {
        problems.push_back("unknown transport mode: " + a.transport + " (expected exact|reciprocal)");
    }
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    return cfg;
}

json attack_config_json(const AttackArgs& a) {
    json j;
    j["command"] = "attack";
    j["method"] = a.method;
    j["models"] = a.model_paths;
    j["manifest"] = a.manifest;
    j["class"] = a.target_class;
    j["split"] = a.split;
    j["out"] = a.out;
    j["eps"] = a.eps;
    j["eps_ycc"] = a.eps_ycc;
    j["iterations"] = a.iterations;
    j["momentum"] = a.momentum;
    j["transport"] = a.transport;
    j["seed"] = a.seed;
    j["workers"] = a.workers;
    return j;
}

struct AttackRunReport {
    double rate_before = 0.0;
    double rate_after = 0.0;
    double rate_after_quantized = 0.0;
    std::size_t attacked = 0;
};

AttackRunReport summarize_batch(const EnsembleSource& source, const AttackBatchResult& batch, int label) {
    AttackRunReport r;
    r.rate_before = ensemble_correct_rate(source, batch.originals, label);
    r.rate_after = ensemble_correct_rate(source, batch.adversarial, label);
    std::vector<RgbImage> quantized;
    quantized.reserve(batch.adversarial.size());
    for (const RgbImage& img : batch.adversarial) quantized.push_back(quantize_u8(img));
    r.rate_after_quantized = ensemble_correct_rate(source, quantized, label);
    for (char f : batch.attacked) r.attacked += static_cast<std::size_t>(f);
    return r;
}

int run_attack_cmd(AttackArgs& a) {
    std::vector<std::string> problems;
    const AttackConfig cfg = attack_config_from_args(a, problems);
    if (a.model_paths.empty()) problems.emplace_back("at least one --model is required");
    for (const auto& p : a.model_paths) {
        if (!fs::exists(p)) problems.push_back("model not found: " + p);
    }
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    if (a.out.empty()) problems.emplace_back("--out directory is required");
    if (a.target_class != "fake" && a.target_class != "real") {
        problems.push_back("unknown class: " + a.target_class + " (expected fake|real)");
    }
    try {
        split_from_string(a.split);
    } catch (const std::exception& e) {
        problems.emplace_back(e.what());
    }
    if (!problems.empty()) throw ConfigError(problems);

    ModelStore store;
    EnsembleSource source;
    for (const auto& p : a.model_paths) store.load(p);
    for (const auto& m : store.models) source.models.push_back(&m);
    source.validate();

    const DatasetManifest data = load_manifest(a.manifest);
    const Label cls = a.target_class == "fake" ? Label::Fake : Label::Real;
    const Split split = split_from_string(a.split);
    const int label = cls == Label::Fake ? 1 : 0;
    const std::vector<DatasetRecord> records = data.select(split, cls);

    const AttackBatchResult batch = attack_batch(cfg, source, data, split, cls, a.workers);

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir / "adv");

    // per-image JSON-lines + quality CSV
    std::ostringstream jsonl;
    std::ostringstream csv;
    csv << "index,attacked,psnr_db,ssim,linf_r,linf_g,linf_b,linf_y,linf_cb,linf_cr,l2\n";
    std::size_t ri = 0;
    for (std::size_t i = 0; i < batch.originals.size(); ++i) {
        json line;
        line["index"] = i;
        line["original"] = data.resolve(records[i]);
        line["attacked"] = static_cast<bool>(batch.attacked[i]);
        std::string adv_rel;
        if (!a.no_images) {
            adv_rel = (fs::path("adv") / (std::to_string(i) + ".png")).string();
            save_image(batch.adversarial[i], (out_dir / adv_rel).string());
        }
        line["adversarial"] = adv_rel;
        const QualityReport q = quality_report(batch.originals[i], batch.adversarial[i]);
        line["quality"] = quality_json(q);
        if (ri < batch.result_index.size() && batch.result_index[ri] == i) {
            line["loss_trajectory"] = batch.results[ri].loss_trajectory;
            line["zeta_violation"] = batch.results[ri].zeta_violation;
            ++ri;
        }
        jsonl << line.dump() << "\n";
        csv << i << "," << (batch.attacked[i] ? 1 : 0) << "," << q.psnr_db << "," << q.ssim;
        for (double v : q.linf_rgb) csv << "," << v;
        for (double v : q.linf_ycc) csv << "," << v;
        csv << "," << q.l2 << "\n";
    }
    write_text(out_dir / "run.jsonl", jsonl.str());
    write_text(out_dir / "quality.csv", csv.str());

    json out;
    out["config"] = attack_config_json(a);
    out["timestamp"] = timestamp_utc();
    json& res = out["result"];
    res["empty_selection"] = batch.empty_selection;
    res["failures"] = batch.failures;
    if (!batch.empty_selection) {
        const AttackRunReport rep = summarize_batch(source, batch, label);
        res["population"] = batch.originals.size();
        res["attacked"] = rep.attacked;
        res["rate_before"] = rep.rate_before;
        res["rate_after"] = rep.rate_after;
        res["rate_after_quantized"] = rep.rate_after_quantized;
        res["asr"] = rep.rate_before - rep.rate_after;
        res["asr_quantized"] = rep.rate_before - rep.rate_after_quantized;
    }
    write_text(out_dir / "summary.json", out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

// --------------------------------------------------------------- transfer --

struct TransferArgs {
    AttackArgs attack;  // method/budgets/manifest/class/split/seed/workers reused
    std::vector<std::string> sources;  // comma-separated model paths form an ensemble
    std::vector<std::string> targets;
    bool with_ndl = false;
};

int run_transfer(TransferArgs& t) {
    AttackArgs& a = t.attack;
    std::vector<std::string> problems;
    const AttackConfig cfg = attack_config_from_args(a, problems);
    if (t.sources.empty()) problems.emplace_back("at least one --source is required");
    if (t.targets.empty() && !t.with_ndl) problems.emplace_back("at least one --target (or --with-ndl) is required");
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    if (a.out.empty()) problems.emplace_back("--out directory is required");
    if (a.target_class != "fake" && a.target_class != "real") problems.push_back("unknown class: " + a.target_class);
    auto check_paths = [&](const std::vector<std::string>& groups) {
        for (const auto& g : groups) {
            std::stringstream ss(g);
            std::string p;
            while (std::getline(ss, p, ',')) {
                if (!fs::exists(p)) problems.push_back("model not found: " + p);
            }
        }
    };
    check_paths(t.sources);
    check_paths(t.targets);
    if (!problems.empty()) throw ConfigError(problems);

    const DatasetManifest data = load_manifest(a.manifest);
    const Label cls = a.target_class == "fake" ? Label::Fake : Label::Real;
    const Split split = split_from_string(a.split);

    ModelStore store;
    auto load_group = [&](const std::string& group) {
        std::vector<std::string> paths;
        std::stringstream ss(group);
        std::string p;
        while (std::getline(ss, p, ',')) paths.push_back(p);
        std::vector<const DetectorModel*> models;
        for (const auto& path : paths) models.push_back(store.load(path));
        return models;
    };

    std::vector<std::vector<const DetectorModel*>> source_models;
    for (const auto& g : t.sources) source_models.push_back(load_group(g));
    std::vector<TransferTarget> targets;
    for (const auto& g : t.targets) {
        const auto models = load_group(g);
        if (models.size() != 1) throw ConfigError({"targets must be single models: " + g});
        targets.push_back(TransferTarget{fs::path(g).stem().string(), models.front(), nullptr});
    }
    NdlDetector ndl;
    if (t.with_ndl) {
        ndl = train_ndl(data);
        targets.push_back(TransferTarget{"ndl", nullptr, &ndl});
    }

    std::vector<AttackBatchResult> batches;
    std::vector<std::pair<std::string, const AttackBatchResult*>> runs;
    batches.reserve(t.sources.size());
    for (std::size_t i = 0; i < source_models.size(); ++i) {
        EnsembleSource src{source_models[i]};
        batches.push_back(attack_batch(cfg, src, data, split, cls, a.workers));
    }
    for (std::size_t i = 0; i < batches.size(); ++i) runs.emplace_back(t.sources[i], &batches[i]);

    const TransferMatrix matrix = transfer_matrix(runs, targets);
    const fs::path out_dir(a.out);
    write_text(out_dir / "transfer.csv", transfer_to_csv(matrix));

    json out;
    out["config"] = attack_config_json(a);
    out["config"]["command"] = "transfer";
    out["config"]["sources"] = t.sources;
    out["config"]["targets"] = t.targets;
    out["config"]["with_ndl"] = t.with_ndl;
    out["timestamp"] = timestamp_utc();
    json cells = json::array();
    for (std::size_t i = 0; i < matrix.sources.size(); ++i) {
        for (std::size_t j = 0; j < matrix.targets.size(); ++j) {
            const TransferCell& c = matrix.cells[i][j];
            json cell;
            cell["source"] = matrix.sources[i];
            cell["target"] = matrix.targets[j];
            cell["valid"] = c.valid;
            if (c.valid) {
                cell["rate_before"] = c.rate_before;
                cell["rate_after"] = c.rate_after;
                cell["asr"] = c.asr;
            } else {
                cell["error"] = c.error;
            }
            cells.push_back(cell);
        }
    }
    out["result"]["cells"] = cells;
    out["result"]["csv"] = (out_dir / "transfer.csv").string();
    write_text(out_dir / "summary.json", out.dump(2) + "\n");
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------ analyze-cov --

struct AnalyzeCovArgs {
    std::vector<std::string> model_paths;
    std::string manifest;
    std::string split = "test";
    std::string target_class = "fake";
    std::size_t samples = 10000;
    std::string out;
    std::uint64_t seed = 0;
};

int run_analyze_cov(AnalyzeCovArgs& a) {
    std::vector<std::string> problems;
    if (a.model_paths.empty()) problems.emplace_back("at least one --model is required");
    for (const auto& p : a.model_paths) {
        if (!fs::exists(p)) problems.push_back("model not found: " + p);
    }
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    if (a.out.empty()) problems.emplace_back("--out CSV path is required");
    if (a.samples < 2) problems.emplace_back("--samples must be at least 2");
    if (a.target_class != "fake" && a.target_class != "real") problems.push_back("unknown class: " + a.target_class);
    if (!problems.empty()) throw ConfigError(problems);

    ModelStore store;
    EnsembleSource source;
    for (const auto& p : a.model_paths) store.load(p);
    for (const auto& m : store.models) source.models.push_back(&m);
    source.validate();

    const DatasetManifest data = load_manifest(a.manifest);
    const Label cls = a.target_class == "fake" ? Label::Fake : Label::Real;
    const auto signs = sample_sign_gradients(source, data, split_from_string(a.split), cls, a.samples, a.seed);
    const CovarianceReport rep = sign_covariance(signs);

    std::ostringstream csv;
    csv << "matrix,i,j,value\n";
    auto emit = [&](const char* name, const std::array<double, 9>& m) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                csv << name << "," << i << "," << j << "," << m[static_cast<std::size_t>(i) * 3 + j] << "\n";
    };
    emit("sigma_rgb", rep.sigma_rgb);
    emit("sigma_ycc", rep.sigma_ycc);
    emit("correlation_rgb", rep.correlation_rgb());
    csv << "ratio,y,cb," << rep.luma_to_cb_ratio() << "\n";
    csv << "ratio,y,cr," << rep.luma_to_cr_ratio() << "\n";
    write_text(a.out, csv.str());

    json out;
    out["config"] = {{"command", "analyze-cov"}, {"models", a.model_paths}, {"manifest", a.manifest},
                     {"split", a.split}, {"class", a.target_class}, {"samples", a.samples},
                     {"out", a.out}, {"seed", a.seed}};
    out["timestamp"] = timestamp_utc();
    out["result"]["samples"] = rep.samples;
    out["result"]["var_y"] = rep.variance(0);
    out["result"]["var_cb"] = rep.variance(1);
    out["result"]["var_cr"] = rep.variance(2);
    out["result"]["luma_to_cb_ratio"] = rep.luma_to_cb_ratio();
    out["result"]["luma_to_cr_ratio"] = rep.luma_to_cr_ratio();
    out["result"]["csv"] = a.out;
    std::cout << out.dump(2) << "\n";
    return 0;
}

// -------------------------------------------------------------- histogram --

struct HistogramArgs {
    std::string run_dir;
    std::string domain = "rgb";
    double eps_max = -1.0;  // < 0: derive from the run's summary
    std::string out;
};

int run_histogram(HistogramArgs& a) {
    std::vector<std::string> problems;
    const fs::path run(a.run_dir);
    if (a.run_dir.empty() || !fs::exists(run / "run.jsonl")) {
        problems.push_back("attack run not found (missing run.jsonl): " + a.run_dir);
    }
    if (a.domain != "rgb" && a.domain != "ycc") problems.push_back("unknown domain: " + a.domain);
    if (a.out.empty()) problems.emplace_back("--out CSV path is required");
    if (!problems.empty()) throw ConfigError(problems);

    double eps_max = a.eps_max;
    if (eps_max < 0.0) {
        std::ifstream sin(run / "summary.json");
        if (!sin) throw std::runtime_error("missing summary.json in run dir; pass --eps-max explicitly");
        const json summary = json::parse(sin);
        const json& cfg = summary.at("config");
        eps_max = cfg.at("eps").get<double>();
        if (cfg.contains("eps_ycc")) {
            for (const auto& v : cfg.at("eps_ycc")) eps_max = std::max(eps_max, v.get<double>());
        }
    }

    std::vector<AttackResult> results;
    std::ifstream in(run / "run.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json rec = json::parse(line);
        if (!rec.at("attacked").get<bool>()) continue;
        const std::string adv_rel = rec.at("adversarial").get<std::string>();
        if (adv_rel.empty()) throw std::runtime_error("run was recorded without adversarial images");
        const RgbImage orig = load_image(rec.at("original").get<std::string>());
        const RgbImage adv = load_image((run / adv_rel).string());
        AttackResult r;
        r.adversarial = adv;
        r.delta = RgbImage(orig.height, orig.width);
        for (std::size_t i = 0; i < orig.pix.size(); ++i) r.delta.pix[i] = adv.pix[i] - orig.pix[i];
        const YccImage ya = rgb_to_ycc(orig);
        const YccImage yb = rgb_to_ycc(adv);
        r.zeta = YccImage(orig.height, orig.width);
        for (std::size_t i = 0; i < orig.pix.size(); ++i) r.zeta.pix[i] = yb.pix[i] - ya.pix[i];
        results.push_back(std::move(r));
    }
    if (results.empty()) throw std::runtime_error("run contains no attacked images");

    const Domain dom = a.domain == "rgb" ? Domain::Rgb : Domain::Ycc;
    const PerturbationHistogram h = perturbation_histogram(results, dom, eps_max);
    write_text(a.out, histogram_to_csv(h));

    json out;
    out["config"] = {{"command", "histogram"}, {"run", a.run_dir}, {"domain", a.domain},
                     {"eps_max", eps_max}, {"out", a.out}};
    out["timestamp"] = timestamp_utc();
    out["result"]["images"] = results.size();
    out["result"]["bins"] = h.bins();
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------ sweep --

struct SweepArgs {
    AttackArgs attack;
    std::vector<double> eps_list;
};

int run_sweep(SweepArgs& s) {
    AttackArgs& a = s.attack;
    std::vector<std::string> problems;
    if (a.method == "ycc") problems.emplace_back("sweep supports fgsm and mim (scalar budgets)");
    if (s.eps_list.empty()) problems.emplace_back("--eps-list needs at least one value");
    for (double e : s.eps_list) {
        if (e < 0.0) problems.emplace_back("eps values must be >= 0");
    }
    if (a.model_paths.empty()) problems.emplace_back("at least one --model is required");
    for (const auto& p : a.model_paths) {
        if (!fs::exists(p)) problems.push_back("model not found: " + p);
    }
    if (a.manifest.empty() || !fs::exists(a.manifest)) problems.push_back("manifest not found: " + a.manifest);
    if (a.out.empty()) problems.emplace_back("--out CSV path is required");
    AttackArgs probe = a;
    probe.eps = s.eps_list.empty() ? 0.0 : s.eps_list.front();
    attack_config_from_args(probe, problems);
    if (!problems.empty()) throw ConfigError(problems);

    ModelStore store;
    EnsembleSource source;
    for (const auto& p : a.model_paths) store.load(p);
    for (const auto& m : store.models) source.models.push_back(&m);
    source.validate();

    const DatasetManifest data = load_manifest(a.manifest);
    const Label cls = a.target_class == "fake" ? Label::Fake : Label::Real;
    const Split split = split_from_string(a.split);
    const int label = cls == Label::Fake ? 1 : 0;

    std::ostringstream csv;
    csv << "eps,asr,asr_quantized,mean_psnr_db,mean_ssim,mean_linf_y\n";
    json rows = json::array();
    for (double eps : s.eps_list) {
        AttackArgs step = a;
        step.eps = eps;
        std::vector<std::string> none;
        const AttackConfig cfg = attack_config_from_args(step, none);
        const AttackBatchResult batch = attack_batch(cfg, source, data, split, cls, a.workers);
        if (batch.empty_selection) throw std::runtime_error("no images of the requested class in the split");
        const AttackRunReport rep = summarize_batch(source, batch, label);
        double psnr_sum = 0.0, ssim_sum = 0.0, linf_y_sum = 0.0;
        for (std::size_t k = 0; k < batch.results.size(); ++k) {
            const QualityReport q =
                quality_report(batch.originals[batch.result_index[k]], batch.results[k].adversarial);
            psnr_sum += q.psnr_db;
            ssim_sum += q.ssim;
            linf_y_sum += q.linf_ycc[0];
        }
        const double n = std::max<std::size_t>(1, batch.results.size());
        json row;
        row["eps"] = eps;
        row["asr"] = rep.rate_before - rep.rate_after;
        row["asr_quantized"] = rep.rate_before - rep.rate_after_quantized;
        row["mean_psnr_db"] = psnr_sum / n;
        row["mean_ssim"] = ssim_sum / n;
        row["mean_linf_y"] = linf_y_sum / n;
        rows.push_back(row);
        csv << eps << "," << row["asr"].get<double>() << "," << row["asr_quantized"].get<double>() << ","
            << row["mean_psnr_db"].get<double>() << "," << row["mean_ssim"].get<double>() << ","
            << row["mean_linf_y"].get<double>() << "\n";
    }
    write_text(a.out, csv.str());

    json out;
    out["config"] = attack_config_json(a);
    out["config"]["command"] = "sweep";
    out["config"]["eps_list"] = s.eps_list;
    out["timestamp"] = timestamp_utc();
    out["result"]["rows"] = rows;
    out["result"]["csv"] = a.out;
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------- main --

void add_attack_flags(CLI::App* cmd, AttackArgs& a, ConfigFile& cf, bool with_method_and_models = true) {
    if (with_method_and_models) {
        cmd->add_option("--method", a.method, "attack method: fgsm|mim|ycc");
        cf.bind("method", [&a](const json& v) { a.method = v.get<std::string>(); });
        cmd->add_option("--model", a.model_paths, "source model file (repeat for an ensemble)");
        cf.bind("model", [&a](const json& v) { a.model_paths = v.get<std::vector<std::string>>(); });
    }
    cmd->add_option("--manifest", a.manifest, "dataset manifest JSON");
    cmd->add_option("--class", a.target_class, "attacked class: fake|real");
    cmd->add_option("--split", a.split, "dataset split: train|val|test");
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--eps", a.eps, "L-inf budget for fgsm/mim");
    cmd->add_option("--eps-ycc", a.eps_ycc, "per-channel budgets for ycc: Y Cb Cr")->expected(3);
    cmd->add_option("--iterations", a.iterations, "iteration count K");
    cmd->add_option("--momentum", a.momentum, "momentum decay mu");
    cmd->add_option("--transport", a.transport, "gradient transport: exact|reciprocal");
    cmd->add_flag("--no-images", a.no_images, "skip writing adversarial PNGs");
    cmd->add_option("--seed", a.seed, "master random seed");
    cmd->add_option("--workers", a.workers, "parallel workers for per-image work");
    cf.bind("manifest", [&a](const json& v) { a.manifest = v.get<std::string>(); });
    cf.bind("class", [&a](const json& v) { a.target_class = v.get<std::string>(); });
    cf.bind("split", [&a](const json& v) { a.split = v.get<std::string>(); });
    cf.bind("out", [&a](const json& v) { a.out = v.get<std::string>(); });
    cf.bind("eps", [&a](const json& v) { a.eps = v.get<double>(); });
    cf.bind("eps-ycc", [&a](const json& v) { a.eps_ycc = v.get<std::vector<double>>(); });
    cf.bind("iterations", [&a](const json& v) { a.iterations = v.get<int>(); });
    cf.bind("momentum", [&a](const json& v) { a.momentum = v.get<double>(); });
    cf.bind("transport", [&a](const json& v) { a.transport = v.get<std::string>(); });
    cf.bind("seed", [&a](const json& v) { a.seed = v.get<std::uint64_t>(); });
    cf.bind("workers", [&a](const json& v) { a.workers = v.get<int>(); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anti-forensic adversarial attack toolkit"};
    app.require_subcommand(1);

    std::string config_path;

    // gen-data
    GenDataArgs gen;
    ConfigFile gen_cf;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate the synthetic two-class dataset");
    gen_cf.cmd = gen_cmd;
    gen_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    gen_cmd->add_option("--out", gen.out, "dataset root directory");
    gen_cmd->add_option("--resolution", gen.cfg.resolution, "image resolution");
    gen_cmd->add_option("--train-per-class", gen.cfg.train_per_class, "train images per class");
    gen_cmd->add_option("--val-per-class", gen.cfg.val_per_class, "validation images per class");
    gen_cmd->add_option("--test-per-class", gen.cfg.test_per_class, "test images per class");
    gen_cmd->add_option("--upsample-factor", gen.cfg.upsample_factor, "simulated upsampling factor (residue half-period is half this)");
    gen_cmd->add_option("--artifact-amplitude", gen.cfg.artifact_amplitude, "fake-class banding amplitude");
    gen_cmd->add_option("--smoothing-sigma", gen.cfg.smoothing_sigma, "texture blur sigma");
    gen_cmd->add_option("--seed", gen.seed, "master random seed");
    gen_cf.bind("out", [&](const json& v) { gen.out = v.get<std::string>(); });
    gen_cf.bind("resolution", [&](const json& v) { gen.cfg.resolution = v.get<int>(); });
    gen_cf.bind("train-per-class", [&](const json& v) { gen.cfg.train_per_class = v.get<int>(); });
    gen_cf.bind("val-per-class", [&](const json& v) { gen.cfg.val_per_class = v.get<int>(); });
    gen_cf.bind("test-per-class", [&](const json& v) { gen.cfg.test_per_class = v.get<int>(); });
    gen_cf.bind("upsample-factor", [&](const json& v) { gen.cfg.upsample_factor = v.get<int>(); });
    gen_cf.bind("artifact-amplitude", [&](const json& v) { gen.cfg.artifact_amplitude = v.get<double>(); });
    gen_cf.bind("smoothing-sigma", [&](const json& v) { gen.cfg.smoothing_sigma = v.get<double>(); });
    gen_cf.bind("seed", [&](const json& v) { gen.seed = v.get<std::uint64_t>(); });

    // train
    TrainArgs tr;
    ConfigFile tr_cf;
    CLI::App* tr_cmd = app.add_subcommand("train", "train a detector on a dataset manifest");
    tr_cf.cmd = tr_cmd;
    tr_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    tr_cmd->add_option("--arch", tr.arch, "architecture preset: a1|a2|a3");
    tr_cmd->add_option("--manifest", tr.manifest, "dataset manifest JSON");
    tr_cmd->add_option("--out", tr.out, "output model file");
    tr_cmd->add_option("--history", tr.history, "optional per-epoch history CSV");
    tr_cmd->add_option("--lr", tr.cfg.learning_rate, "learning rate");
    tr_cmd->add_option("--weight-decay", tr.cfg.weight_decay, "weight decay");
    tr_cmd->add_option("--batch-size", tr.cfg.batch_size, "batch size");
    tr_cmd->add_option("--max-epochs", tr.cfg.max_epochs, "epoch limit");
    tr_cmd->add_option("--patience", tr.cfg.patience, "early-stop patience");
    tr_cmd->add_option("--seed", tr.seed, "master random seed");
    tr_cf.bind("arch", [&](const json& v) { tr.arch = v.get<std::string>(); });
    tr_cf.bind("manifest", [&](const json& v) { tr.manifest = v.get<std::string>(); });
    tr_cf.bind("out", [&](const json& v) { tr.out = v.get<std::string>(); });
    tr_cf.bind("history", [&](const json& v) { tr.history = v.get<std::string>(); });
    tr_cf.bind("lr", [&](const json& v) { tr.cfg.learning_rate = v.get<double>(); });
    tr_cf.bind("weight-decay", [&](const json& v) { tr.cfg.weight_decay = v.get<double>(); });
    tr_cf.bind("batch-size", [&](const json& v) { tr.cfg.batch_size = v.get<int>(); });
    tr_cf.bind("max-epochs", [&](const json& v) { tr.cfg.max_epochs = v.get<int>(); });
    tr_cf.bind("patience", [&](const json& v) { tr.cfg.patience = v.get<int>(); });
    tr_cf.bind("seed", [&](const json& v) { tr.seed = v.get<std::uint64_t>(); });

    // eval
    EvalArgs ev;
    ConfigFile ev_cf;
    CLI::App* ev_cmd = app.add_subcommand("eval", "evaluate a detector on a split");
    ev_cf.cmd = ev_cmd;
    ev_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    ev_cmd->add_option("--model", ev.model, "model file");
    ev_cmd->add_option("--manifest", ev.manifest, "dataset manifest JSON");
    ev_cmd->add_option("--split", ev.split, "dataset split");
    ev_cmd->add_option("--out", ev.out, "output JSON (default: stdout)");
    ev_cmd->add_option("--seed", ev.seed, "master random seed");
    ev_cf.bind("model", [&](const json& v) { ev.model = v.get<std::string>(); });
    ev_cf.bind("manifest", [&](const json& v) { ev.manifest = v.get<std::string>(); });
    ev_cf.bind("split", [&](const json& v) { ev.split = v.get<std::string>(); });
    ev_cf.bind("out", [&](const json& v) { ev.out = v.get<std::string>(); });
    ev_cf.bind("seed", [&](const json& v) { ev.seed = v.get<std::uint64_t>(); });

    // attack
    AttackArgs at;
    ConfigFile at_cf;
    CLI::App* at_cmd = app.add_subcommand("attack", "attack a class subset and write run artifacts");
    at_cf.cmd = at_cmd;
    at_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    add_attack_flags(at_cmd, at, at_cf);

    // transfer
    TransferArgs tf;
    ConfigFile tf_cf;
    CLI::App* tf_cmd = app.add_subcommand("transfer", "source x target attack-transfer matrix");
    tf_cf.cmd = tf_cmd;
    tf_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    add_attack_flags(tf_cmd, tf.attack, tf_cf, false);
    tf_cmd->add_option("--method", tf.attack.method, "attack method: fgsm|mim|ycc");
    tf_cmd->add_option("--source", tf.sources, "source model file(s); comma-join for an ensemble");
    tf_cmd->add_option("--target", tf.targets, "target model file (repeatable)");
    tf_cmd->add_flag("--with-ndl", tf.with_ndl, "add a co-occurrence detector trained on the train split");
    tf_cf.bind("method", [&](const json& v) { tf.attack.method = v.get<std::string>(); });
    tf_cf.bind("source", [&](const json& v) { tf.sources = v.get<std::vector<std::string>>(); });
    tf_cf.bind("target", [&](const json& v) { tf.targets = v.get<std::vector<std::string>>(); });
    tf_cf.bind("with-ndl", [&](const json& v) { tf.with_ndl = v.get<bool>(); });

    // analyze-cov
    AnalyzeCovArgs ac;
    ConfigFile ac_cf;
    CLI::App* ac_cmd = app.add_subcommand("analyze-cov", "sign-gradient covariance in RGB and YCbCr");
    ac_cf.cmd = ac_cmd;
    ac_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    ac_cmd->add_option("--model", ac.model_paths, "model file (repeat for an ensemble)");
    ac_cmd->add_option("--manifest", ac.manifest, "dataset manifest JSON");
    ac_cmd->add_option("--split", ac.split, "dataset split");
    ac_cmd->add_option("--class", ac.target_class, "sampled class: fake|real");
    ac_cmd->add_option("--samples", ac.samples, "number of (image, pixel) samples");
    ac_cmd->add_option("--out", ac.out, "output CSV path");
    ac_cmd->add_option("--seed", ac.seed, "master random seed");
    ac_cf.bind("model", [&](const json& v) { ac.model_paths = v.get<std::vector<std::string>>(); });
    ac_cf.bind("manifest", [&](const json& v) { ac.manifest = v.get<std::string>(); });
    ac_cf.bind("split", [&](const json& v) { ac.split = v.get<std::string>(); });
    ac_cf.bind("class", [&](const json& v) { ac.target_class = v.get<std::string>(); });
    ac_cf.bind("samples", [&](const json& v) { ac.samples = v.get<std::size_t>(); });
    ac_cf.bind("out", [&](const json& v) { ac.out = v.get<std::string>(); });
    ac_cf.bind("seed", [&](const json& v) { ac.seed = v.get<std::uint64_t>(); });

    // histogram
    HistogramArgs hg;
    ConfigFile hg_cf;
    CLI::App* hg_cmd = app.add_subcommand("histogram", "perturbation histograms from a recorded attack run");
    hg_cf.cmd = hg_cmd;
    hg_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    hg_cmd->add_option("--run", hg.run_dir, "attack run directory (with run.jsonl)");
    hg_cmd->add_option("--domain", hg.domain, "residue domain: rgb|ycc");
    hg_cmd->add_option("--eps-max", hg.eps_max, "histogram support limit (default: from the run summary)");
    hg_cmd->add_option("--out", hg.out, "output CSV path");
    hg_cf.bind("run", [&](const json& v) { hg.run_dir = v.get<std::string>(); });
    hg_cf.bind("domain", [&](const json& v) { hg.domain = v.get<std::string>(); });
    hg_cf.bind("eps-max", [&](const json& v) { hg.eps_max = v.get<double>(); });
    hg_cf.bind("out", [&](const json& v) { hg.out = v.get<std::string>(); });

    // sweep
    SweepArgs sw;
    ConfigFile sw_cf;
    CLI::App* sw_cmd = app.add_subcommand("sweep", "ASR vs quality across budgets");
    sw_cf.cmd = sw_cmd;
    sw_cmd->add_option("--config", config_path, "JSON config file (flags win)");
    add_attack_flags(sw_cmd, sw.attack, sw_cf);
    sw_cmd->add_option("--eps-list", sw.eps_list, "budget values to sweep");
    sw_cf.bind("eps-list", [&](const json& v) { sw.eps_list = v.get<std::vector<double>>(); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("config", {e.what()}, kExitConfig);
    }

    try {
        ConfigFile* cf = nullptr;
        if (gen_cmd->parsed()) cf = &gen_cf;
        if (tr_cmd->parsed()) cf = &tr_cf;
        if (ev_cmd->parsed()) cf = &ev_cf;
        if (at_cmd->parsed()) cf = &at_cf;
        if (tf_cmd->parsed()) cf = &tf_cf;
        if (ac_cmd->parsed()) cf = &ac_cf;
        if (hg_cmd->parsed()) cf = &hg_cf;
        if (sw_cmd->parsed()) cf = &sw_cf;
        if (cf != nullptr && !config_path.empty()) cf->apply(config_path);

        if (gen_cmd->parsed()) return run_gen_data(gen);
        if (tr_cmd->parsed()) return run_train(tr);
        if (ev_cmd->parsed()) return run_eval(ev);
        if (at_cmd->parsed()) return run_attack_cmd(at);
        if (tf_cmd->parsed()) return run_transfer(tf);
        if (ac_cmd->parsed()) return run_analyze_cov(ac);
        if (hg_cmd->parsed()) return run_histogram(hg);
        if (sw_cmd->parsed()) return run_sweep(sw);
    } catch (const ConfigError& e) {
        fail("config", e.problems, kExitConfig);
    } catch (const std::invalid_argument& e) {
        fail("config", {e.what()}, kExitConfig);
    } catch (const std::exception& e) {
        fail("runtime", {e.what()}, kExitRuntime);
    }
    return 0;
}
