#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safbage/blend.hpp"
#include "safbage/errors.hpp"
#include "safbage/eval/augment.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/eval/metrics.hpp"
#include "safbage/eval/source.hpp"
#include "safbage/facecrop.hpp"
#include "safbage/nnet/network.hpp"
#include "safbage/nnet/train.hpp"
#include "safbage/saliency.hpp"

namespace safbage::eval {

struct Preprocessing {
    CropConfig crop;
    SaliencyBackend backend = SaliencyBackend::FrequencyTuned;
    int csurround_levels = 3;
    double alpha = 0.30;
    int channels = 3;  ///< network input channels; 1 converts the blended face to luminance

    void validate() const {
        crop.validate();
        BlendConfig{alpha}.validate();
        if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
    }
};

enum class Role { Train, Eval };

/// Instrumentation: how many augmentations each role performed.
struct PipelineCounters {
    std::size_t train_records = 0;
    std::size_t train_samples = 0;
    std::size_t train_augment_calls = 0;
    std::size_t eval_records = 0;
    std::size_t eval_augment_calls = 0;

    friend bool operator==(const PipelineCounters&, const PipelineCounters&) = default;
};

inline SaliencyMap compute_saliency(const Image& face, const Preprocessing& prep, const Image* external) {
    switch (prep.backend) {
    case SaliencyBackend::FrequencyTuned: return frequency_tuned(face);
    case SaliencyBackend::CenterSurround: return center_surround(face, prep.csurround_levels);
    case SaliencyBackend::External:
        if (!external) throw ConfigError("external saliency backend needs a map");
        return fit_external_map(*external, face.width, face.height);
    }
    return {};
}

/// Face crop -> [augment] -> saliency per variant -> reweight -> multiply.
/// External maps go through the same crop and augmentation as the face so
/// they stay aligned. Augmentation happens only for Role::Train.
inline std::vector<Image> preprocess_record(const ManifestRecord& rec, const ImageSource& source,
                                            const Preprocessing& prep, Role role, bool augment_train,
                                            PipelineCounters* counters = nullptr) {
    const Image raw = source.load_image(rec);
    const Image face = prepare_face(raw, rec.bbox, prep.crop);
    std::optional<Image> ext_face;
    if (prep.backend == SaliencyBackend::External)
        ext_face = prepare_face(to_grayscale(source.load_saliency(rec)), rec.bbox, prep.crop);

    const bool do_augment = role == Role::Train && augment_train;
    std::vector<Image> faces{face};
    std::vector<Image> maps;
    if (ext_face) maps.push_back(*ext_face);
    if (do_augment) {
        faces = augment(face);
        if (ext_face) maps = augment(*ext_face);
    }
    if (counters) {
        if (role == Role::Train) {
            ++counters->train_records;
            counters->train_samples += faces.size();
            counters->train_augment_calls += do_augment;
        } else {
            ++counters->eval_records;
            counters->eval_augment_calls += do_augment;
        }
    }

    std::vector<Image> out;
    out.reserve(faces.size());
    for (std::size_t i = 0; i < faces.size(); ++i) {
        const SaliencyMap s = compute_saliency(faces[i], prep, ext_face ? &maps[i] : nullptr);
        Image blended = blend(faces[i], s, prep.alpha);
        if (prep.channels == 1) blended = to_grayscale(blended);
        else if (blended.channels == 1) throw ShapeError(rec.image_path + ": model expects 3 channels, image is gray");
        out.push_back(std::move(blended));
    }
    return out;
}

template <typename T>
nnet::LabeledSet<T> build_set(const std::vector<ManifestRecord>& records, const ImageSource& source,
                              const Preprocessing& prep, Role role, bool augment_train,
                              PipelineCounters* counters = nullptr) {
    nnet::LabeledSet<T> set;
    for (const auto& r : records) {
        std::vector<Image> imgs;
        try {
            imgs = preprocess_record(r, source, prep, role, augment_train, counters);
        } catch (const IoError& e) {
            throw EvaluationError("cannot read image '" + r.image_path + "': " + e.what());
        } catch (const DecodeError& e) {
            throw EvaluationError("cannot decode image '" + r.image_path + "': " + e.what());
        }
        for (auto& img : imgs) set.add(img, r.label);
    }
    return set;
}

struct EvalResult {
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    std::vector<int> predictions;
};

template <typename T>
EvalResult evaluate_set(const nnet::ModelSpec& spec, const nnet::ModelParams<T>& params,
                        const nnet::LabeledSet<T>& set) {
    if (set.empty()) throw EvaluationError("empty test set");
    EvalResult r;
    r.confusion = ConfusionMatrix(spec.num_classes());
    r.predictions = nnet::predict(params, spec, set);
    for (std::size_t i = 0; i < set.size(); ++i) r.confusion.add(set.labels[i], r.predictions[i]);
    r.accuracy = r.confusion.accuracy();
    return r;
}

/// Run the full preprocessing pipeline on each test record, classify in eval
/// mode, and tabulate. Argmax ties resolve to the lowest class index.
template <typename T>
EvalResult evaluate(const nnet::ModelSpec& spec, const nnet::ModelParams<T>& params,
                    const std::vector<ManifestRecord>& test, const ImageSource& source, const Preprocessing& prep,
                    PipelineCounters* counters = nullptr) {
    if (test.empty()) throw EvaluationError("empty test set");
    return evaluate_set(spec, params, build_set<T>(test, source, prep, Role::Eval, false, counters));
}

} // namespace safbage::eval
