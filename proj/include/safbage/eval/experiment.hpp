#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safbage/errors.hpp"
#include "safbage/eval/folds.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/eval/metrics.hpp"
#include "safbage/eval/pipeline.hpp"
#include "safbage/eval/reference.hpp"
#include "safbage/eval/source.hpp"
#include "safbage/eval/synthetic.hpp"
#include "safbage/nnet/checkpoint.hpp"
#include "safbage/nnet/model_spec.hpp"
#include "safbage/nnet/network.hpp"
#include "safbage/nnet/train.hpp"

namespace safbage::eval {

template <typename V>
nlohmann::ordered_json optional_json(const std::optional<V>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

using Real = float;  ///< scalar type of trained models and checkpoints

struct ExperimentConfig {
    std::string manifest;                     ///< empty: use `synthetic`
    std::optional<SyntheticConfig> synthetic;
    Task task = Task::Gender;
    std::optional<int> num_classes;           ///< overrides the task's class count
    SaliencyBackend backend = SaliencyBackend::FrequencyTuned;
    int csurround_levels = 3;
    double alpha = 0.30;
    CropConfig crop{0.30, 64};
    std::string preset = "alexlite";
    int channels = 3;
    bool augment = true;
    nnet::TrainConfig train;
    int k = 5;
    std::uint64_t seed = 1;
    double loss_threshold = 0.2;  ///< for epochs-to-threshold in ablations

    int classes() const { return num_classes.value_or(eval::num_classes(task)); }

    Preprocessing preprocessing() const {
        Preprocessing p;
        p.crop = crop;
        p.backend = backend;
        p.csurround_levels = csurround_levels;
        p.alpha = alpha;
        p.channels = channels;
        return p;
    }

    nnet::ModelSpec model() const {
        auto spec = nnet::make_preset(preset, classes(), crop.out_size, channels);
        if (spec.in_height != crop.out_size)
            throw ConfigError("crop out_size " + std::to_string(crop.out_size) + " does not match preset input " +
                              std::to_string(spec.in_height));
        return spec;
    }

    void validate() const {
        preprocessing().validate();
        train.validate();
        if (k < 2) throw ConfigError("k must be >= 2");
        if (classes() < 2) throw ConfigError("need at least 2 classes");
        if (manifest.empty() && !synthetic) throw ConfigError("config needs a manifest or a synthetic section");
        if (synthetic) synthetic->validate();
        (void)model();
    }
};

inline nlohmann::ordered_json to_json(const SyntheticConfig& s) {
    return {{"num_classes", s.num_classes}, {"size", s.size},          {"subjects", s.subjects},
            {"images_per_subject", s.images_per_subject}, {"noise_sigma", s.noise_sigma},
            {"distractors", s.distractors}, {"distractor_contrast", s.distractor_contrast},
            {"shape_radius", s.shape_radius}, {"context_contrast", s.context_contrast},
            {"target_dropout", s.target_dropout}, {"class_shapes", s.class_shapes},
            {"task", to_string(s.task)}, {"seed", s.seed}};
}

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["manifest"] = c.manifest;
    if (c.synthetic) j["synthetic"] = to_json(*c.synthetic);
    j["task"] = to_string(c.task);
    if (c.num_classes) j["num_classes"] = *c.num_classes;
    j["saliency_backend"] = to_string(c.backend);
    j["csurround_levels"] = c.csurround_levels;
    j["alpha"] = c.alpha;
    j["crop"] = {{"margin", c.crop.margin}, {"out_size", c.crop.out_size}};
    j["preset"] = c.preset;
    j["channels"] = c.channels;
    j["augment"] = c.augment;
    nlohmann::ordered_json t;
    t["learning_rate"] = c.train.learning_rate;
    t["lr_drop_epoch"] = optional_json(c.train.lr_drop_epoch);
    t["epochs"] = c.train.epochs;
    t["batch_size"] = c.train.batch_size;
    t["dropout_keep"] = optional_json(c.train.dropout_keep);
    t["trainable_layers"] = c.train.trainable_layers;
    j["train"] = t;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["loss_threshold"] = c.loss_threshold;
    return j;
}

/// Read an experiment config. Unknown keys are rejected so typos surface.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"manifest", "synthetic", "task",     "num_classes", "saliency_backend",
                                             "csurround_levels", "alpha", "crop", "preset", "channels", "augment",
                                             "train",    "k",         "seed",     "loss_threshold"};
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    ExperimentConfig c;
    try {
        c.manifest = j.value("manifest", std::string{});
        if (j.contains("task")) c.task = parse_task(j["task"].get<std::string>());
        if (j.contains("num_classes") && !j["num_classes"].is_null()) c.num_classes = j["num_classes"].get<int>();
        if (j.contains("saliency_backend")) c.backend = parse_saliency_backend(j["saliency_backend"].get<std::string>());
        c.csurround_levels = j.value("csurround_levels", c.csurround_levels);
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("crop")) {
            c.crop.margin = j["crop"].value("margin", c.crop.margin);
            c.crop.out_size = j["crop"].value("out_size", c.crop.out_size);
        }
        c.preset = j.value("preset", c.preset);
        c.channels = j.value("channels", c.channels);
        c.augment = j.value("augment", c.augment);
        c.k = j.value("k", c.k);
        c.seed = j.value("seed", c.seed);
        c.loss_threshold = j.value("loss_threshold", c.loss_threshold);
        if (j.contains("train")) {
            const auto& t = j["train"];
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
            if (t.contains("lr_drop_epoch") && !t["lr_drop_epoch"].is_null())
                c.train.lr_drop_epoch = t["lr_drop_epoch"].get<int>();
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            if (t.contains("dropout_keep") && !t["dropout_keep"].is_null())
                c.train.dropout_keep = t["dropout_keep"].get<double>();
            if (t.contains("trainable_layers"))
                c.train.trainable_layers = t["trainable_layers"].get<std::vector<std::string>>();
        }
        if (j.contains("synthetic") && !j["synthetic"].is_null()) {
            const auto& s = j["synthetic"];
            SyntheticConfig sc;
            sc.task = c.task;
            sc.num_classes = c.classes();
            sc.size = c.crop.out_size;
            sc.num_classes = s.value("num_classes", sc.num_classes);
            sc.size = s.value("size", sc.size);
            sc.subjects = s.value("subjects", sc.subjects);
            sc.images_per_subject = s.value("images_per_subject", sc.images_per_subject);
            sc.noise_sigma = s.value("noise_sigma", sc.noise_sigma);
            sc.distractors = s.value("distractors", sc.distractors);
            sc.distractor_contrast = s.value("distractor_contrast", sc.distractor_contrast);
            sc.shape_radius = s.value("shape_radius", sc.shape_radius);
            sc.context_contrast = s.value("context_contrast", sc.context_contrast);
            sc.target_dropout = s.value("target_dropout", sc.target_dropout);
            if (s.contains("class_shapes")) sc.class_shapes = s["class_shapes"].get<std::vector<int>>();
            if (s.contains("task")) sc.task = parse_task(s["task"].get<std::string>());
            sc.seed = s.value("seed", c.seed);
            c.synthetic = sc;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(j);
}

/// Records plus the source to load them from, for either a manifest on
/// disk or the built-in synthetic generator.
struct DataBundle {
    std::vector<ManifestRecord> records;
    std::unique_ptr<ImageSource> source;
};

inline DataBundle load_data(const ExperimentConfig& cfg) {
    DataBundle b;
    if (!cfg.manifest.empty()) {
        b.records = load_manifest(cfg.manifest);
        b.source = std::make_unique<FileImageSource>();
    } else {
        auto ds = make_synthetic(*cfg.synthetic);
        b.records = std::move(ds.records);
        b.source = std::make_unique<MemoryImageSource>(std::move(ds.source));
    }
    for (const auto& r : b.records)
        if (r.label >= cfg.classes())
            throw ConfigError("record '" + r.image_path + "' label " + std::to_string(r.label) + " >= class count " +
                              std::to_string(cfg.classes()));
    return b;
}

struct FoldResult {
    int fold = 0;
    std::size_t train_samples = 0;
    std::size_t test_samples = 0;
    std::vector<std::string> test_subjects;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    nnet::TrainLog log;
    std::vector<std::uint8_t> checkpoint;
};

struct Report {
    ExperimentConfig config;
    std::vector<FoldResult> folds;
    MeanStderr summary;
    ConfusionMatrix pooled;
    PipelineCounters counters;

    std::vector<double> fold_accuracies() const {
        std::vector<double> a;
        for (const auto& f : folds) a.push_back(f.accuracy);
        return a;
    }
};

/// Train on one fold split and evaluate on the held-out part. Class weights
/// come from the training records; augmentation only touches training data.
inline FoldResult run_fold(const ExperimentConfig& cfg, const nnet::ModelSpec& spec, const FoldSplit& split,
                           const ImageSource& source, int fold, PipelineCounters& counters) {
    const Preprocessing prep = cfg.preprocessing();
    FoldResult fr;
    fr.fold = fold;
    const auto train_set = build_set<Real>(split.train, source, prep, Role::Train, cfg.augment, &counters);
    const auto test_set = build_set<Real>(split.test, source, prep, Role::Eval, false, &counters);
    if (train_set.empty()) throw ConfigError("fold " + std::to_string(fold) + " has no training records");
    if (test_set.empty()) throw EvaluationError("fold " + std::to_string(fold) + " has an empty test set");
    fr.train_samples = train_set.size();
    fr.test_samples = test_set.size();
    std::set<std::string> subs;
    for (const auto& r : split.test) subs.insert(r.subject_id);
    fr.test_subjects.assign(subs.begin(), subs.end());

    std::vector<int> train_labels;
    for (const auto& r : split.train) train_labels.push_back(r.label);
    nnet::TrainConfig tc = cfg.train;
    tc.class_weights = class_weights(train_labels, cfg.classes());
    tc.seed = derive_seed(cfg.seed, 0x54524eu, fold);

    auto params = nnet::build<Real>(spec, derive_seed(cfg.seed, 0x494e4954u, fold));
    auto result = nnet::train(spec, std::move(params), train_set, tc, &test_set);
    const auto eval_spec = nnet::with_dropout_keep(spec, cfg.train.dropout_keep);
    const EvalResult ev = evaluate_set(eval_spec, result.params, test_set);
    fr.accuracy = ev.accuracy;
    fr.confusion = ev.confusion;
    fr.log = std::move(result.log);
    fr.checkpoint = nnet::save_checkpoint(eval_spec, result.params);
    return fr;
}

/// Subject-exclusive k-fold cross-validation of the full pipeline.
inline Report run_experiment(const ExperimentConfig& cfg, const std::vector<ManifestRecord>& records,
                             const ImageSource& source) {
    cfg.validate();
    const auto spec = cfg.model();
    const FoldPlan plan = make_folds(records, cfg.k, cfg.seed);
    Report rep;
    rep.config = cfg;
    rep.pooled = ConfusionMatrix(cfg.classes());
    for (int f = 0; f < cfg.k; ++f) {
        rep.folds.push_back(run_fold(cfg, spec, split_fold(records, plan, f), source, f, rep.counters));
        rep.pooled.merge(rep.folds.back().confusion);
    }
    rep.summary = mean_stderr(rep.fold_accuracies());
    return rep;
}

inline Report run_experiment(const ExperimentConfig& cfg) {
    const auto data = load_data(cfg);
    return run_experiment(cfg, data.records, *data.source);
}

// ---------------------------------------------------------------------------
// serialization

inline std::string curve_csv(const nnet::TrainLog& log) {
    std::ostringstream os;
    os << "epoch,train_loss,val_accuracy,lr\n";
    os << std::setprecision(17);
    for (const auto& e : log.epochs) {
        os << e.epoch << ',' << e.train_loss << ',';
        if (e.val_accuracy) os << *e.val_accuracy;
        os << ',' << e.lr << '\n';
    }
    return os.str();
}

inline nlohmann::ordered_json confusion_json(const ConfusionMatrix& m) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int i = 0; i < m.classes(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (int j = 0; j < m.classes(); ++j) row.push_back(m.at(i, j));
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::ordered_json report_json(const Report& r) {
    nlohmann::ordered_json j;
    j["config"] = to_json(r.config);
    nlohmann::ordered_json folds = nlohmann::ordered_json::array();
    for (const auto& f : r.folds) {
        folds.push_back(nlohmann::ordered_json{{"fold", f.fold},
                         {"accuracy", f.accuracy},
                         {"train_samples", f.train_samples},
                         {"test_samples", f.test_samples},
                         {"test_subjects", f.test_subjects},
                         {"final_train_loss", f.log.epochs.empty() ? 0.0 : f.log.epochs.back().train_loss},
                         {"confusion", confusion_json(f.confusion)}});
    }
    j["folds"] = folds;
    j["mean_accuracy"] = r.summary.mean;
    j["stderr"] = r.summary.stderr_;
    j["pooled_confusion"] = confusion_json(r.pooled);
    j["counters"] = {{"train_records", r.counters.train_records},
                     {"train_samples", r.counters.train_samples},
                     {"train_augment_calls", r.counters.train_augment_calls},
                     {"eval_records", r.counters.eval_records},
                     {"eval_augment_calls", r.counters.eval_augment_calls}};
    const std::string task = to_string(r.config.task);
    j["published_reference"] = {{"task", task},
                                {"with_saliency_percent", reference::published_accuracy(task, true)},
                                {"without_saliency_percent", reference::published_accuracy(task, false)}};
    return j;
}

inline std::string report_text(const Report& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << "task " << to_string(r.config.task) << ", classes " << r.config.classes() << ", alpha " << r.config.alpha
       << ", backend " << to_string(r.config.backend) << ", " << r.config.k << " folds\n\n";
    os << "fold  accuracy  train  test\n";
    for (const auto& f : r.folds)
        os << std::setw(4) << f.fold << "  " << std::setw(7) << 100.0 * f.accuracy << "%  " << std::setw(5)
           << f.train_samples << "  " << std::setw(4) << f.test_samples << '\n';
    os << "\nmean accuracy " << 100.0 * r.summary.mean << " +- " << 100.0 * r.summary.stderr_ << " %\n";
    const std::string task = to_string(r.config.task);
    const double with = reference::published_accuracy(task, true);
    const double without = reference::published_accuracy(task, false);
    if (with > 0)
        os << "published (full-scale " << task << "): " << with << " % with saliency, " << without
           << " % without\n";
    os << "\npooled confusion (rows = truth)\n";
    for (int i = 0; i < r.pooled.classes(); ++i) {
        for (int j = 0; j < r.pooled.classes(); ++j) os << std::setw(6) << r.pooled.at(i, j);
        os << '\n';
    }
    return os.str();
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write '" + p.string() + "'");
    out << text;
}

/// Fixed artifact names: report.json, report.txt, fold_<i>.ckpt,
/// curve_fold_<i>.csv.
inline void write_report(const Report& r, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_text_file(dir / "report.json", report_json(r).dump(2) + "\n");
    write_text_file(dir / "report.txt", report_text(r));
    for (const auto& f : r.folds) {
        write_file_bytes((dir / ("fold_" + std::to_string(f.fold) + ".ckpt")).string(), f.checkpoint);
        write_text_file(dir / ("curve_fold_" + std::to_string(f.fold) + ".csv"), curve_csv(f.log));
    }
}

// ---------------------------------------------------------------------------
// reweight-ratio ablation

inline const std::vector<double>& default_ablation_alphas() {
    static const std::vector<double> a{0.10, 0.30, 0.50, 0.70, 0.90};
    return a;
}

struct AblationRow {
    double alpha = 0.0;
    nnet::TrainLog log;
    std::optional<int> epochs_to_threshold;
    double final_val_accuracy = 0.0;
};

struct AblationReport {
    ExperimentConfig config;
    std::vector<AblationRow> rows;
};

/// For each alpha, train on all folds but fold 0 and track loss and
/// held-out accuracy per epoch. Initialization, shuffling and dropout use
/// the same seeds for every alpha, so alpha is the only thing that varies.
inline AblationReport run_ratio_ablation(const ExperimentConfig& cfg, const std::vector<double>& alphas,
                                         const std::vector<ManifestRecord>& records, const ImageSource& source) {
    cfg.validate();
    if (alphas.empty()) throw ConfigError("ablation needs at least one alpha");
    const auto spec = cfg.model();
    const FoldPlan plan = make_folds(records, cfg.k, cfg.seed);
    const FoldSplit split = split_fold(records, plan, 0);
    AblationReport rep;
    rep.config = cfg;
    for (double alpha : alphas) {
        ExperimentConfig c = cfg;
        c.alpha = alpha;
        c.validate();
        PipelineCounters counters;
        FoldResult fr = run_fold(c, spec, split, source, 0, counters);
        AblationRow row;
        row.alpha = alpha;
        row.log = std::move(fr.log);
        row.epochs_to_threshold = row.log.epochs_to_loss(cfg.loss_threshold);
        row.final_val_accuracy = fr.accuracy;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline AblationReport run_ratio_ablation(const ExperimentConfig& cfg, const std::vector<double>& alphas) {
    const auto data = load_data(cfg);
    return run_ratio_ablation(cfg, alphas, data.records, *data.source);
}

inline std::string alpha_tag(double alpha) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << alpha;
    return os.str();
}

/// ablation.json plus curve_alpha_<a>.csv per alpha.
inline void write_ablation(const AblationReport& r, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    nlohmann::ordered_json j;
    j["config"] = to_json(r.config);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.rows) {
        rows.push_back(nlohmann::ordered_json{{"alpha", row.alpha},
                        {"epochs_to_threshold",
                         optional_json(row.epochs_to_threshold)},
                        {"final_train_loss", row.log.epochs.empty() ? 0.0 : row.log.epochs.back().train_loss},
                        {"final_val_accuracy", row.final_val_accuracy},
                        {"curve", "curve_alpha_" + alpha_tag(row.alpha) + ".csv"}});
        write_text_file(dir / ("curve_alpha_" + alpha_tag(row.alpha) + ".csv"), curve_csv(row.log));
    }
    j["loss_threshold"] = r.config.loss_threshold;
    j["rows"] = rows;
    write_text_file(dir / "ablation.json", j.dump(2) + "\n");
}

} // namespace safbage::eval
