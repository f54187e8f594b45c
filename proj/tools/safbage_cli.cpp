// safbage: command-line front end. Single-image steps (prepare, saliency,
// blend, cam) compose through PNM files; train/eval/ablate drive the
// cross-validated experiments from a JSON config or the built-in synthetic
// set.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "safbage/safbage.hpp"

using namespace safbage;
using namespace safbage::eval;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::uint64_t seed = 1;
    std::string config;
    std::string out_dir = "out";
};

// Flags that override the experiment config (or the synthetic default).
struct Overrides {
    std::string preset, task, backend;
    std::optional<double> alpha, lr;
    std::optional<int> epochs, k, batch, size, classes;
};

BBox parse_bbox(const std::string& s) {
    BBox b;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(s);
    if (!(in >> b.x >> c1 >> b.y >> c2 >> b.w >> c3 >> b.h) || c1 != ',' || c2 != ',' || c3 != ',' || !in.eof())
        throw ConfigError("--bbox expects x,y,w,h, got '" + s + "'");
    if (b.w < 1 || b.h < 1) throw ConfigError("--bbox width and height must be >= 1");
    return b;
}

std::vector<double> parse_alphas(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("--alphas: '" + tok + "' is not a number");
        }
    }
    return out;
}

// Without --config: a small built-in synthetic task that trains in about a
// minute on one core.
ExperimentConfig quick_synthetic_config(std::uint64_t seed) {
    ExperimentConfig c;
    c.crop.out_size = 32;
    c.seed = seed;
    c.train.learning_rate = 0.01;
    c.train.batch_size = 32;
    c.train.epochs = 10;
    SyntheticConfig s;
    s.size = 32;
    s.subjects = 40;
    s.images_per_subject = 5;
    s.seed = seed;
    c.synthetic = s;
    return c;
}

ExperimentConfig resolve_config(const Common& g, const Overrides& o, bool seed_given) {
    ExperimentConfig c = g.config.empty() ? quick_synthetic_config(g.seed) : load_experiment_config(g.config);
    if (seed_given) {
        c.seed = g.seed;
        if (c.synthetic) c.synthetic->seed = g.seed;
    }
    if (!o.preset.empty()) c.preset = o.preset;
    if (!o.task.empty()) {
        c.task = parse_task(o.task);
        if (c.synthetic) {
            c.synthetic->task = c.task;
            c.synthetic->num_classes = c.classes();
        }
    }
    if (o.classes) {
        c.num_classes = *o.classes;
        if (c.synthetic) c.synthetic->num_classes = *o.classes;
    }
    if (!o.backend.empty()) c.backend = parse_saliency_backend(o.backend);
    if (o.alpha) c.alpha = *o.alpha;
    if (o.lr) c.train.learning_rate = *o.lr;
    if (o.epochs) c.train.epochs = *o.epochs;
    if (o.k) c.k = *o.k;
    if (o.batch) c.train.batch_size = *o.batch;
    if (o.size) {
        c.crop.out_size = *o.size;
        if (c.synthetic) c.synthetic->size = *o.size;
    }
    if (c.preset == "alexnet" && !o.size) {
        c.crop.out_size = 224;
        if (c.synthetic) c.synthetic->size = 224;
    }
    c.validate();
    return c;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--preset", o.preset, "model preset: alexlite | alexnet");
    cmd->add_option("--task", o.task, "age | gender | expression");
    cmd->add_option("--classes", o.classes, "override the task's class count");
    cmd->add_option("--backend", o.backend, "saliency backend: ftuned | csurround | external");
    cmd->add_option("--alpha", o.alpha, "reweight ratio in [0, 1]");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--batch", o.batch, "minibatch size");
    cmd->add_option("-k,--folds", o.k, "cross-validation folds");
    cmd->add_option("--size", o.size, "face crop / network input size");
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
    return buf;
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) { write_text_file(p, j.dump(2) + "\n"); }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Saliency-reweighted face attribute classification"};
    app.require_subcommand(1);
    Common g;
    app.add_option("--seed", g.seed, "seed for every random stream")->capture_default_str();
    app.add_option("--config", g.config, "experiment config (JSON)");
    app.add_option("--out-dir", g.out_dir, "directory for experiment artifacts")->capture_default_str();

    // prepare
    std::string p_image, p_bbox, p_out;
    CropConfig p_crop{0.30, 224};
    auto* prepare = app.add_subcommand("prepare", "expand the face box, crop with edge padding, resize");
    prepare->add_option("--image", p_image, "input image (PPM/PGM)")->required();
    prepare->add_option("--bbox", p_bbox, "face box x,y,w,h")->required();
    prepare->add_option("--margin", p_crop.margin, "total box growth")->capture_default_str();
    prepare->add_option("--out-size", p_crop.out_size, "square output size")->capture_default_str();
    prepare->add_option("--out", p_out, "output face image")->required();

    // saliency
    std::string s_face, s_backend = "ftuned", s_map, s_out;
    int s_levels = 3;
    auto* saliency = app.add_subcommand("saliency", "saliency map of a face");
    saliency->add_option("--face", s_face, "face image")->required();
    saliency->add_option("--backend", s_backend, "ftuned | csurround | external")->capture_default_str();
    saliency->add_option("--map", s_map, "precomputed map (P5) for --backend external");
    saliency->add_option("--levels", s_levels, "pyramid levels for csurround")->capture_default_str();
    saliency->add_option("--out", s_out, "output map (P5)")->required();

    // blend
    std::string b_face, b_map, b_out;
    double b_alpha = 0.30;
    auto* blend_cmd = app.add_subcommand("blend", "reweight a face by its saliency map");
    blend_cmd->add_option("--face", b_face, "face image")->required();
    blend_cmd->add_option("--map", b_map, "saliency map (P5), same size as the face")->required();
    blend_cmd->add_option("--alpha", b_alpha, "reweight ratio")->capture_default_str();
    blend_cmd->add_option("--out", b_out, "blended face")->required();

    // train / eval / ablate
    Overrides t_over, e_over, a_over;
    auto* train_cmd = app.add_subcommand("train", "k-fold cross-validated training; writes report and checkpoints");
    add_overrides(train_cmd, t_over);

    std::string e_ckpt;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on every record of the dataset");
    eval_cmd->add_option("--checkpoint", e_ckpt, "model checkpoint")->required();
    add_overrides(eval_cmd, e_over);

    std::string a_alphas;
    auto* ablate = app.add_subcommand("ablate", "reweight-ratio sweep on fold 0");
    ablate->add_option("--alphas", a_alphas, "comma-separated ratios (default 0.1,0.3,0.5,0.7,0.9)");
    add_overrides(ablate, a_over);

    // cam
    std::string c_ckpt, c_image, c_out, c_save, c_overlay;
    int c_class = 0;
    Overrides c_over;
    auto* cam_cmd = app.add_subcommand("cam", "class activation map of one face");
    cam_cmd->add_option("--checkpoint", c_ckpt, "classifier or CAM checkpoint")->required();
    cam_cmd->add_option("--image", c_image, "face image at the model's input size")->required();
    cam_cmd->add_option("--class", c_class, "class index")->required();
    cam_cmd->add_option("--out", c_out, "heatmap (P5)")->required();
    cam_cmd->add_option("--save-cam", c_save, "write the trained CAM model here");
    cam_cmd->add_option("--overlay", c_overlay, "face tinted by the heatmap (P6)");
    add_overrides(cam_cmd, c_over);

    // synth
    SyntheticConfig y_cfg;
    std::string y_task = "gender";
    auto* synth = app.add_subcommand("synth", "write the synthetic dataset as a manifest with images and maps");
    synth->add_option("--task", y_task, "task label written to the manifest")->capture_default_str();
    synth->add_option("--classes", y_cfg.num_classes, "number of classes")->capture_default_str();
    synth->add_option("--size", y_cfg.size, "image size")->capture_default_str();
    synth->add_option("--subjects", y_cfg.subjects, "subjects")->capture_default_str();
    synth->add_option("--images-per-subject", y_cfg.images_per_subject, "images per subject")->capture_default_str();
    synth->add_option("--noise", y_cfg.noise_sigma, "background noise sigma")->capture_default_str();
    synth->add_option("--distractors", y_cfg.distractors, "distractor shapes per image")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error[usage]: " << e.what() << "\n";
        return 2;
    }
    const bool seed_given = app.count("--seed") > 0;

    try {
        if (*prepare) {
            p_crop.validate();
            write_pnm_file(p_out, prepare_face(read_pnm_file(p_image), parse_bbox(p_bbox), p_crop));
        } else if (*saliency) {
            const Image face = read_pnm_file(s_face);
            const auto backend = parse_saliency_backend(s_backend);
            SaliencyMap m;
            if (backend == SaliencyBackend::External) {
                if (s_map.empty()) throw ConfigError("--backend external needs --map");
                m = load_external_map(read_file_bytes(s_map), face.width, face.height);
            } else if (backend == SaliencyBackend::CenterSurround) {
                m = center_surround(face, s_levels);
            } else {
                m = frequency_tuned(face);
            }
            write_pnm_file(s_out, m.to_image());
        } else if (*blend_cmd) {
            const Image face = read_pnm_file(b_face);
            const Image map = read_pnm_file(b_map);
            if (map.channels != 1) throw DecodeError(b_map + ": saliency map must be P5");
            write_pnm_file(b_out, blend(face, SaliencyMap::from_image(map), b_alpha));
        } else if (*train_cmd) {
            const ExperimentConfig cfg = resolve_config(g, t_over, seed_given);
            const Report rep = run_experiment(cfg);
            write_report(rep, g.out_dir);
            write_json(fs::path(g.out_dir) / "config.json", to_json(cfg));
            for (const auto& f : rep.folds)
                std::cout << "fold " << f.fold << ": " << percent(f.accuracy) << " on " << f.test_samples
                          << " images\n";
            std::cout << "final accuracy: " << percent(rep.summary.mean) << " +- " << percent(rep.summary.stderr_)
                      << " over " << rep.folds.size() << " folds\n";
        } else if (*eval_cmd) {
            const ExperimentConfig cfg = resolve_config(g, e_over, seed_given);
            const auto [spec, params] = nnet::load_checkpoint<Real>(read_file_bytes(e_ckpt));
            if (spec.num_classes() != cfg.classes())
                throw ConfigError("checkpoint has " + std::to_string(spec.num_classes()) + " classes, config has " +
                                  std::to_string(cfg.classes()));
            const auto data = load_data(cfg);
            PipelineCounters counters;
            const EvalResult ev = evaluate(spec, params, data.records, *data.source, cfg.preprocessing(), &counters);
            fs::create_directories(g.out_dir);
            write_json(fs::path(g.out_dir) / "eval.json",
                       {{"checkpoint", e_ckpt},
                        {"records", data.records.size()},
                        {"accuracy", ev.accuracy},
                        {"confusion", confusion_json(ev.confusion)}});
            std::cout << "accuracy: " << percent(ev.accuracy) << " on " << data.records.size() << " images\n";
        } else if (*ablate) {
            const ExperimentConfig cfg = resolve_config(g, a_over, seed_given);
            const auto alphas = a_alphas.empty() ? default_ablation_alphas() : parse_alphas(a_alphas);
            const AblationReport rep = run_ratio_ablation(cfg, alphas);
            write_ablation(rep, g.out_dir);
            for (const auto& row : rep.rows) {
                std::cout << "alpha " << alpha_tag(row.alpha) << ": epochs to loss " << cfg.loss_threshold << " = ";
                if (row.epochs_to_threshold) std::cout << *row.epochs_to_threshold;
                else std::cout << "not reached";
                std::cout << ", final accuracy " << percent(row.final_val_accuracy) << "\n";
            }
        } else if (*cam_cmd) {
            auto [spec, params] = nnet::load_checkpoint<Real>(read_file_bytes(c_ckpt));
            CamModel<Real> cam;
            const auto& last = spec.layers;
            const bool is_cam = last.size() >= 3 && last[last.size() - 3].kind == nnet::LayerKind::Gap;
            if (is_cam) {
                cam = as_cam_model(std::move(spec), std::move(params));
            } else {
                // classifier checkpoint: fit a GAP head on the training data first
                const ExperimentConfig cfg = resolve_config(g, c_over, seed_given);
                const auto data = load_data(cfg);
                const auto set = build_set<Real>(data.records, *data.source, cfg.preprocessing(), Role::Eval, false);
                cam = build_cam_head(spec, params, cfg.classes(), derive_seed(cfg.seed, 0x43414du));
                nnet::TrainConfig tc = cfg.train;
                tc.seed = derive_seed(cfg.seed, 0x43414du, 1);
                (void)train_cam_head(cam, set, tc);
                if (!c_save.empty()) write_file_bytes(c_save, nnet::save_checkpoint(cam.spec, cam.params));
            }
            if (c_class < 0 || c_class >= cam.num_classes())
                throw ConfigError("--class " + std::to_string(c_class) + " out of range (model has " +
                                  std::to_string(cam.num_classes()) + " classes)");
            const Image face = read_pnm_file(c_image);
            const SaliencyMap heat = compute_cam(cam, face, c_class);
            write_pnm_file(c_out, heat.to_image());
            if (!c_overlay.empty()) write_pnm_file(c_overlay, apply(face, reweight_map(heat, 0.7)));
            const auto probs = cam_classify(cam, face);
            const HeatmapPeak pk = heatmap_peak(heat);
            std::cout << "class " << c_class << " probability " << probs[static_cast<std::size_t>(c_class)]
                      << ", heatmap peak at (" << pk.x << ", " << pk.y << ")\n";
        } else if (*synth) {
            y_cfg.task = parse_task(y_task);
            y_cfg.seed = g.seed;
            const auto ds = make_synthetic(y_cfg);
            export_synthetic(ds, g.out_dir);
            std::cout << "wrote " << ds.records.size() << " images and " << (fs::path(g.out_dir) / "manifest.csv").string()
                      << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error[" << e.category() << "]: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error[config]: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error[io]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
