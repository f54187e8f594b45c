#pragma once

#include <array>
#include <string_view>

// Published results on Adience (age, gender) and AffectNet (expression),
// kept for side-by-side display in reports. They are not reproducible
// without those datasets and pretrained weights.
namespace safbage::eval::reference {

struct AccuracyRow {
    std::string_view method;
    double accuracy;  ///< percent
    double stderr_;   ///< percent; negative when not reported
};

inline constexpr std::array<AccuracyRow, 7> kAgeAccuracy{{
    {"Eidinger et al.", 45.1, 2.6},
    {"Levi et al. (single crop)", 49.5, 4.4},
    {"Levi et al. (multi crop)", 50.7, 5.1},
    {"without saliency", 52.2, 3.9},
    {"Qawaqneh et al.", 59.9, -1.0},
    {"Dehghan et al.", 61.3, 3.7},
    {"with saliency", 62.11, 3.2},
}};

inline constexpr std::array<AccuracyRow, 8> kGenderAccuracy{{
    {"Eidinger et al.", 77.8, 1.3},
    {"Liao et al.", 78.63, -1.0},
    {"Hassner et al.", 79.3, 0.0},
    {"without saliency", 83.4, 1.6},
    {"Levi et al.", 85.9, 1.4},
    {"Levi et al.", 86.8, 1.4},
    {"Dehghan et al.", 91.0, -1.0},
    {"with saliency", 91.8, 1.2},
}};

/// The gender result is quoted with +-1.7 in the running text and +-1.2 in
/// the results table.
inline constexpr double kGenderWithSaliencyStderrText = 1.7;

inline constexpr std::array<AccuracyRow, 5> kExpressionAccuracy{{
    {"Soderberg et al.", 48.58, -1.0},
    {"Hewitt et al.", 57.8, -1.0},
    {"without saliency", 59.2, -1.0},
    {"Mollahosseini et al.", 64.53, -1.0},
    {"with saliency", 67.65, -1.0},
}};

inline constexpr std::array<std::string_view, 8> kAgeGroups{"0-2", "4-6", "8-13", "15-20", "25-32", "38-43", "48-53", "60-"};

inline constexpr std::array<std::string_view, 7> kExpressions{"Neutral", "Happy",   "Sad",  "Surprise",
                                                              "Fear",    "Disgust", "Anger"};

/// Age confusion matrix with saliency, row percentages (true group per row),
/// transcribed as published.
inline constexpr std::array<std::array<double, 8>, 8> kAgeConfusionPercent{{
    {92.1, 4.2, 0.0, 1.3, 0.0, 2.4, 0.0, 0.0},
    {22.2, 70.2, 5.8, 3.1, 0.0, 0.0, 0.4, 0.1},
    {3.6, 12.6, 52.8, 13.2, 11.7, 3.8, 2.3, 0.0},
    {1.4, 0.3, 13.7, 36.3, 42.6, 3.7, 1.2, 0.8},
    {0.2, 0.0, 0.1, 4.7, 88.4, 3.8, 2.3, 0.5},
    {0.0, 0.4, 0.7, 3.8, 49.8, 29.2, 13.8, 2.3},
    {0.8, 0.0, 0.0, 0.9, 2.6, 18.3, 47.8, 29.6},
    {0.0, 0.3, 0.4, 2.8, 1.7, 3.5, 11.2, 80.1},
}};

/// Expression confusion matrix with saliency, frame counts (500 test frames
/// per class).
inline constexpr std::array<std::array<int, 7>, 7> kExpressionConfusionFrames{{
    {312, 33, 39, 37, 16, 19, 44},
    {19, 382, 10, 25, 6, 42, 16},
    {106, 14, 322, 17, 20, 18, 3},
    {39, 25, 15, 365, 43, 7, 6},
    {11, 26, 30, 58, 342, 24, 9},
    {25, 17, 7, 19, 91, 331, 10},
    {30, 8, 29, 28, 29, 62, 314},
}};

inline constexpr std::array<std::array<double, 7>, 7> kExpressionConfusionPercent{{
    {62.4, 6.6, 7.8, 7.4, 3.2, 3.8, 8.8},
    {3.8, 76.4, 2.0, 5.0, 1.2, 8.4, 3.2},
    {21.2, 2.8, 64.4, 3.4, 4.0, 3.6, 0.6},
    {7.8, 5.0, 3.0, 73.0, 8.6, 1.4, 1.2},
    {2.2, 5.2, 6.0, 11.6, 68.4, 4.8, 1.8},
    {5.0, 3.4, 1.4, 3.8, 18.2, 66.2, 2.0},
    {6.0, 1.6, 5.8, 5.6, 5.8, 12.4, 62.8},
}};

/// AffectNet per-class training counts, in kExpressions order.
inline constexpr std::array<int, 7> kAffectNetTrainCounts{59900, 107532, 20367, 11272, 5102, 3042, 19906};
inline constexpr std::array<int, 7> kAffectNetValCounts{14973, 26883, 5092, 2818, 1276, 761, 4976};

inline double published_accuracy(std::string_view task, bool with_saliency) {
    const std::string_view key = with_saliency ? "with saliency" : "without saliency";
    auto find = [&](const auto& rows) {
        for (const auto& r : rows)
            if (r.method == key) return r.accuracy;
        return -1.0;
    };
    if (task == "age") return find(kAgeAccuracy);
    if (task == "gender") return find(kGenderAccuracy);
    if (task == "expression") return find(kExpressionAccuracy);
    return -1.0;
}

} // namespace safbage::eval::reference
