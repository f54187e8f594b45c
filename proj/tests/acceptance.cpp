// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Long experiments print their per-seed numbers first.
// Criterion numbers on the command line restrict the run to those.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "safbage/safbage.hpp"

using namespace safbage;
using namespace safbage::eval;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;
std::set<int> selected;  // empty: all

void run(int id, const char* title, const std::function<Outcome()>& body) {
    if (!selected.empty() && !selected.contains(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

template <typename... A>
std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------

Outcome blend_identity() {
    std::mt19937_64 gen(101);
    std::uniform_int_distribution<int> dim(24, 48);
    MemoryImageSource src;
    std::vector<ManifestRecord> recs;
    for (int i = 0; i < 100; ++i) {
        const int w = dim(gen), h = dim(gen);
        const std::string path = "img" + std::to_string(i);
        src.put(path, oracle::random_image(gen, w, h, 3), Image(w, h, 1, 0.0));
        std::uniform_int_distribution<int> bx(0, w / 2), by(0, h / 2);
        recs.push_back({path, {bx(gen), by(gen), w / 2, h / 2}, "s" + std::to_string(i), 0, Task::Gender});
    }
    Preprocessing prep;
    prep.crop = {0.30, 32};
    prep.alpha = 0.0;
    double max_diff = 0.0;
    std::size_t compared = 0;
    for (auto backend : {SaliencyBackend::FrequencyTuned, SaliencyBackend::CenterSurround}) {
        prep.backend = backend;
        for (const auto& r : recs) {
            const Image face = prepare_face(src.load_image(r), r.bbox, prep.crop);
            const auto plain = augment(face);
            const auto piped = preprocess_record(r, src, prep, Role::Train, true);
            const auto piped_eval = preprocess_record(r, src, prep, Role::Eval, false);
            if (piped.size() != plain.size() || piped_eval.size() != 1) return {false, "variant count mismatch"};
            for (std::size_t v = 0; v < plain.size(); ++v)
                for (std::size_t i = 0; i < plain[v].data.size(); ++i)
                    max_diff = std::max(max_diff, std::abs(piped[v].data[i] - plain[v].data[i]));
            for (std::size_t i = 0; i < face.data.size(); ++i)
                max_diff = std::max(max_diff, std::abs(piped_eval[0].data[i] - face.data[i]));
            compared += plain.size() + 1;
        }
    }
    return {max_diff == 0.0, fmt("max abs diff %g over %zu pipeline outputs from 100 images", max_diff, compared)};
}

Outcome variance_law() {
    std::mt19937_64 gen(102);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const SaliencyMap s = oracle::random_map(gen, 16, 16);
        const double vs = oracle::variance(s.values);
        for (double a : {0.1, 0.3, 0.5, 0.7, 0.9})
            worst = std::max(worst, std::abs(oracle::variance(reweight_map(s, a).values) - a * a * vs));
    }
    return {worst <= 1e-9, fmt("max |Var(M) - a^2 Var(S)| = %.3g (tol 1e-9)", worst)};
}

Outcome gradient_check() {
    std::mt19937_64 gen(103);
    double worst = 0.0;
    std::size_t n = 0;
    for (const auto& spec : {oracle::alexlite_mini(3), oracle::gap_mini(3)}) {
        const auto params = nnet::build<double>(spec, 17);
        const auto batch = oracle::random_batch(gen, spec, 2);
        const auto r = oracle::gradient_check(spec, params, batch, {2, 0}, {0.7, 1.0, 1.6}, 77);
        worst = std::max(worst, r.max_rel_err);
        n += r.checked;
    }
    return {worst < 1e-4, fmt("max relative error %.3g over %zu parameters (tol 1e-4)", worst, n)};
}

Outcome saliency_oracle() {
    std::mt19937_64 gen(104);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Image img = oracle::random_image(gen, 8, 8, 3);
        const auto expect = oracle::frequency_tuned(img);
        const auto got = frequency_tuned(img).values;
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - expect[i]));
    }
    double constant_max = 0.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 10; ++t)
        for (double v : frequency_tuned(Image(8, 8, 3, u(gen))).values) constant_max = std::max(constant_max, std::abs(v));
    return {worst <= 1e-6 && constant_max == 0.0,
            fmt("max diff %.3g on 50 images (tol 1e-6); constant images max %g", worst, constant_max)};
}

Outcome fold_hygiene() {
    std::vector<ManifestRecord> recs;
    for (int s = 0; s < 200; ++s)
        for (int i = 0; i < 5; ++i)
            recs.push_back({"p" + std::to_string(s) + "_" + std::to_string(i), {0, 0, 8, 8},
                            "subject" + std::to_string(s), s % 2, Task::Gender});
    std::size_t leaks = 0, worst_dev = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const FoldPlan plan = make_folds(recs, 5, seed);
        for (std::size_t c : plan.subjects_per_fold()) worst_dev = std::max(worst_dev, c > 40 ? c - 40 : 40 - c);
        for (int f = 0; f < 5; ++f) {
            const auto split = split_fold(recs, plan, f);
            std::set<std::string> train;
            for (const auto& r : split.train) train.insert(r.subject_id);
            for (const auto& r : split.test) leaks += train.contains(r.subject_id);
            if (split.train.size() + split.test.size() != recs.size()) ++leaks;
        }
    }
    return {leaks == 0 && worst_dev <= 1,
            fmt("20 seeds: %zu leaked records, max fold deviation %zu subjects from 40", leaks, worst_dev)};
}

Outcome ratio_ablation() {
    const int epochs = 30;
    int clause1 = 0, clause2 = 0, both_unreached = 0;
    for (int seed = 1; seed <= 10; ++seed) {
        ExperimentConfig cfg;
        cfg.task = Task::Age;
        cfg.num_classes = 3;
        cfg.crop.out_size = 32;
        cfg.backend = SaliencyBackend::External;
        cfg.k = 5;
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.loss_threshold = 0.2;
        cfg.train.learning_rate = 0.02;
        cfg.train.batch_size = 32;
        cfg.train.epochs = epochs;
        SyntheticConfig sc;
        sc.task = Task::Age;
        sc.num_classes = 3;
        sc.size = 32;
        sc.subjects = 60;
        sc.images_per_subject = 5;
        sc.noise_sigma = 0.1;
        sc.distractors = 2;
        sc.distractor_contrast = 0.6;
        sc.context_contrast = 0.15;
        sc.target_dropout = 0.10;
        sc.seed = cfg.seed;
        cfg.synthetic = sc;
        const auto rep = run_ratio_ablation(cfg, {0.1, 0.3, 0.9});
        // not reaching the threshold counts as one epoch past the budget
        auto ett = [&](int i) { return rep.rows[i].epochs_to_threshold.value_or(epochs + 1); };
        const bool c1 = ett(2) <= ett(0);
        const bool c2 = rep.rows[1].final_val_accuracy >= rep.rows[2].final_val_accuracy;
        clause1 += c1;
        clause2 += c2;
        both_unreached += !rep.rows[0].epochs_to_threshold && !rep.rows[2].epochs_to_threshold;
        std::printf("     seed %2d  epochs-to-0.2 a=0.1:%2d a=0.3:%2d a=0.9:%2d  val acc a=0.1:%.3f a=0.3:%.3f "
                    "a=0.9:%.3f\n",
                    seed, ett(0), ett(1), ett(2), rep.rows[0].final_val_accuracy, rep.rows[1].final_val_accuracy,
                    rep.rows[2].final_val_accuracy);
        std::fflush(stdout);
    }
    return {clause1 >= 8 && clause2 >= 8,
            fmt("faster at a=0.9 than a=0.1 in %d/10 seeds (%d with neither reaching 0.2); acc(0.3) >= acc(0.9) "
                "in %d/10",
                clause1, both_unreached, clause2)};
}

Outcome learning_sanity() {
    ExperimentConfig cfg;
    cfg.task = Task::Gender;
    cfg.crop.out_size = 32;
    cfg.alpha = 0.0;
    cfg.k = 5;
    cfg.train.learning_rate = 0.001;
    cfg.train.batch_size = 32;
    cfg.train.epochs = 40;
    SyntheticConfig sc;
    sc.size = 32;
    sc.num_classes = 2;
    sc.subjects = 160;
    sc.images_per_subject = 5;
    sc.noise_sigma = 0.05;
    sc.seed = 3;
    cfg.synthetic = sc;
    const auto data = load_data(cfg);
    const FoldPlan plan = make_folds(data.records, cfg.k, cfg.seed);
    PipelineCounters counters;
    const FoldResult fr = run_fold(cfg, cfg.model(), split_fold(data.records, plan, 0), *data.source, 0, counters);
    int first = 0;
    for (const auto& e : fr.log.epochs)
        if (!first && e.val_accuracy && *e.val_accuracy >= 0.9) first = e.epoch;
    return {fr.accuracy >= 0.9, fmt("held-out accuracy %.3f after %zu epochs on %zu unseen-subject images "
                                    "(first >= 0.9 at epoch %d)",
                                    fr.accuracy, fr.log.epochs.size(), fr.test_samples, first)};
}

Outcome metrics_consistency() {
    std::mt19937_64 gen(108);
    std::uniform_int_distribution<int> cls(0, 6);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        ConfusionMatrix m(7);
        std::size_t hits = 0, n = 1 + t * 37;
        for (std::size_t i = 0; i < n; ++i) {
            const int y = cls(gen), p = cls(gen) < 3 ? y : cls(gen);
            m.add(y, p);
            hits += y == p;
        }
        worst = std::max(worst, std::abs(m.accuracy() - static_cast<double>(hits) / static_cast<double>(n)));
    }
    std::string bad_rows;
    for (std::size_t i = 0; i < reference::kAgeConfusionPercent.size(); ++i) {
        double s = 0.0;
        for (double v : reference::kAgeConfusionPercent[i]) s += v;
        if (std::abs(s - 100.0) > 0.5) bad_rows += fmt(" %s=%.1f", std::string(reference::kAgeGroups[i]).c_str(), s);
    }
    int bad_frames = 0;
    for (const auto& row : reference::kExpressionConfusionFrames) {
        int s = 0;
        for (int v : row) s += v;
        bad_frames += s != 500;
    }
    const bool ok = worst <= 1e-12 && bad_rows.empty() && bad_frames == 0;
    return {ok, fmt("trace/total vs counting max diff %.3g; age rows off 100+-0.5:%s; expression rows != 500: %d",
                    worst, bad_rows.empty() ? " none" : bad_rows.c_str(), bad_frames)};
}

Outcome determinism() {
    ExperimentConfig cfg;
    cfg.crop.out_size = 32;
    cfg.k = 3;
    cfg.seed = 9;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 16;
    cfg.train.learning_rate = 0.01;
    SyntheticConfig sc;
    sc.size = 32;
    sc.subjects = 12;
    sc.images_per_subject = 3;
    sc.seed = 9;
    cfg.synthetic = sc;
    const fs::path root = fs::temp_directory_path() / "safbage_acceptance_det";
    fs::remove_all(root);
    write_report(run_experiment(cfg), (root / "a").string());
    write_report(run_experiment(cfg), (root / "b").string());
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        differ += slurp(e.path()) != slurp(root / "b" / e.path().filename());
    }
    std::size_t files_b = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "b")) ++files_b;

    // checkpoint round trip on a freshly trained model
    std::mt19937_64 gen(109);
    const auto spec = nnet::alexlite(2, 32);
    nnet::LabeledSet<Real> set;
    for (int i = 0; i < 16; ++i) set.add(oracle::random_image(gen, 32, 32, 3), i % 2);
    nnet::TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    tc.learning_rate = 0.01;
    const auto trained = nnet::train(spec, nnet::build<Real>(spec, 3), set, tc).params;
    const auto bytes = nnet::save_checkpoint(spec, trained);
    const auto [spec2, loaded] = nnet::load_checkpoint<Real>(bytes);
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto before = nnet::forward(trained, spec, set.batch(idx), nnet::Mode::Eval).probs();
    const auto after = nnet::forward(loaded, spec2, set.batch(idx), nnet::Mode::Eval).probs();
    const bool round_trip = before == after && nnet::save_checkpoint(spec2, loaded) == bytes;
    fs::remove_all(root);
    return {files > 0 && files == files_b && differ == 0 && round_trip,
            fmt("%zu artifacts per run, %zu differ; checkpoint round trip %s", files, differ,
                round_trip ? "bit-exact" : "CHANGED outputs")};
}

Outcome augmentation_contract() {
    std::mt19937_64 gen(110);
    const auto variants = augment(oracle::random_image(gen, 16, 16, 3));
    ExperimentConfig cfg;
    cfg.crop.out_size = 32;
    cfg.k = 2;
    cfg.train.epochs = 1;
    cfg.train.batch_size = 16;
    SyntheticConfig sc;
    sc.size = 32;
    sc.subjects = 8;
    sc.images_per_subject = 2;
    cfg.synthetic = sc;
    const Report rep = run_experiment(cfg);
    const auto& c = rep.counters;
    const std::size_t records = 16;
    const bool ok = variants.size() == 4 && c.eval_augment_calls == 0 && c.eval_records == records &&
                    c.train_samples == 4 * c.train_records && c.train_augment_calls == c.train_records &&
                    rep.pooled.total() == records;
    return {ok, fmt("augment gives %zu variants; train records %zu -> samples %zu; eval records %zu, "
                    "eval augment calls %zu",
                    variants.size(), c.train_records, c.train_samples, c.eval_records, c.eval_augment_calls)};
}

Outcome cam_checks() {
    // weighted-sum oracle on a real trunk
    std::mt19937_64 gen(111);
    const auto spec = nnet::alexlite(3, 48);
    const auto cam0 = build_cam_head(spec, nnet::build<double>(spec, 4), 3, 5);
    const auto f = cam_features(cam0, oracle::random_image(gen, 48, 48, 3));
    const std::size_t C = f.shape[1], hw = f.shape[2] * f.shape[3];
    double oracle_err = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto raw = cam_raw(f, cam0.head_weight(), k);
        for (std::size_t p = 0; p < hw; ++p) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c) s += cam0.head_weight()[k * C + c] * f[c * hw + p];
            oracle_err = std::max(oracle_err, std::abs(raw.values[p] - s));
        }
    }

    // disk present / absent, 48x48, one held-out probe per seed
    int inside_seeds = 0, probe_hits = 0, probes = 0;
    for (int seed = 1; seed <= 10; ++seed) {
        SyntheticConfig sc;
        sc.size = 48;
        sc.subjects = 40;
        sc.images_per_subject = 5;
        sc.noise_sigma = 0.1;
        sc.shape_radius = 0.2;
        sc.class_shapes = {0, -1};
        sc.seed = static_cast<std::uint64_t>(seed);
        const auto train_data = make_synthetic(sc);
        nnet::LabeledSet<Real> set;
        for (std::size_t i = 0; i < train_data.records.size(); ++i)
            set.add(train_data.samples[i].image, train_data.records[i].label);
        const auto mspec = nnet::alexlite(2, 48);
        nnet::TrainConfig tc;
        tc.learning_rate = 0.01;
        tc.batch_size = 8;
        tc.epochs = 10;
        tc.seed = static_cast<std::uint64_t>(seed);
        const auto trained = nnet::train(mspec, nnet::build<Real>(mspec, static_cast<std::uint64_t>(seed)), set, tc);
        auto cam = build_cam_head(mspec, trained.params, 2, derive_seed(static_cast<std::uint64_t>(seed), 7));
        tc.learning_rate = 0.05;
        (void)train_cam_head(cam, set, tc);

        SyntheticConfig pc = sc;
        pc.seed = static_cast<std::uint64_t>(seed) + 1000;
        pc.subjects = 10;
        pc.images_per_subject = 2;
        const auto probe = make_synthetic(pc);
        bool first_done = false, first_inside = false;
        for (std::size_t i = 0; i < probe.records.size(); ++i) {
            if (probe.records[i].label != 0) continue;
            const auto& s = probe.samples[i];
            const HeatmapPeak pk = heatmap_peak(compute_cam(cam, s.image, 0));
            const bool in = std::hypot(pk.x - s.cx, pk.y - s.cy) <= s.radius;
            probe_hits += in;
            ++probes;
            if (!first_done) first_done = true, first_inside = in;
        }
        inside_seeds += first_inside;
        std::printf("     seed %2d  final loss %.3f  peak inside disk: %s\n", seed,
                    trained.log.epochs.back().train_loss, first_inside ? "yes" : "no");
        std::fflush(stdout);
    }
    return {oracle_err <= 1e-6 && inside_seeds >= 8,
            fmt("weighted-sum oracle max diff %.3g (tol 1e-6); peak inside disk in %d/10 seeds "
                "(%d/%d probes overall)",
                oracle_err, inside_seeds, probe_hits, probes)};
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    run(1, "blend identity at alpha=0", blend_identity);
    run(2, "weight-map variance law", variance_law);
    run(3, "gradient check", gradient_check);
    run(4, "frequency-tuned oracle", saliency_oracle);
    run(5, "fold hygiene", fold_hygiene);
    run(6, "reweight-ratio ablation", ratio_ablation);
    run(7, "end-to-end learning", learning_sanity);
    run(8, "metrics self-consistency", metrics_consistency);
    run(9, "determinism", determinism);
    run(10, "augmentation contract", augmentation_contract);
    run(11, "class activation maps", cam_checks);
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
