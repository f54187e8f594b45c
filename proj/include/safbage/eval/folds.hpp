#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/eval/manifest.hpp"
#include "safbage/rng.hpp"

namespace safbage::eval {

/// Subject-exclusive assignment of subjects to folds.
struct FoldPlan {
    int k = 5;
    std::map<std::string, int> assignment;

    int fold_of(const std::string& subject) const {
        auto it = assignment.find(subject);
        if (it == assignment.end()) throw ConfigError("subject '" + subject + "' not in fold plan");
        return it->second;
    }

    std::vector<std::size_t> subjects_per_fold() const {
        std::vector<std::size_t> counts(k, 0);
        for (const auto& [s, f] : assignment) ++counts[f];
        return counts;
    }

    friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Shuffle the distinct subjects (sorted first, so record order is
/// irrelevant) and deal them round-robin into k folds.
inline FoldPlan make_folds(const std::vector<ManifestRecord>& records, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be >= 2");
    std::set<std::string> unique;
    for (const auto& r : records) unique.insert(r.subject_id);
    if (unique.size() < static_cast<std::size_t>(k))
        throw ConfigError("need at least " + std::to_string(k) + " distinct subjects for " + std::to_string(k) +
                          " folds, found " + std::to_string(unique.size()));
    std::vector<std::string> subjects(unique.begin(), unique.end());
    Rng rng(derive_seed(seed, 0x464f4c44u));
    rng.shuffle(std::span<std::string>(subjects));
    FoldPlan plan;
    plan.k = k;
    for (std::size_t i = 0; i < subjects.size(); ++i) plan.assignment[subjects[i]] = static_cast<int>(i % k);
    return plan;
}

struct FoldSplit {
    std::vector<ManifestRecord> train;
    std::vector<ManifestRecord> test;
};

inline FoldSplit split_fold(const std::vector<ManifestRecord>& records, const FoldPlan& plan, int fold) {
    if (fold < 0 || fold >= plan.k) throw ConfigError("fold index out of range");
    FoldSplit s;
    for (const auto& r : records) (plan.fold_of(r.subject_id) == fold ? s.test : s.train).push_back(r);
    return s;
}

} // namespace safbage::eval
