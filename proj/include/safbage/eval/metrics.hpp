#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "safbage/errors.hpp"

namespace safbage::eval {

/// K x K counts; rows are true classes, columns predictions.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {}

    int classes() const noexcept { return k_; }

    void add(int truth, int predicted) {
        if (truth < 0 || truth >= k_ || predicted < 0 || predicted >= k_)
            throw ShapeError("confusion matrix index out of range");
        ++counts_[static_cast<std::size_t>(truth) * k_ + predicted];
    }

    void merge(const ConfusionMatrix& o) {
        if (o.k_ != k_) throw ShapeError("cannot merge confusion matrices of different size");
        for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += o.counts_[i];
    }

    std::size_t at(int truth, int predicted) const { return counts_[static_cast<std::size_t>(truth) * k_ + predicted]; }

    std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

    std::size_t trace() const {
        std::size_t t = 0;
        for (int i = 0; i < k_; ++i) t += at(i, i);
        return t;
    }

    std::size_t row_sum(int truth) const {
        std::size_t s = 0;
        for (int j = 0; j < k_; ++j) s += at(truth, j);
        return s;
    }

    double accuracy() const {
        const std::size_t n = total();
        return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
    }

    /// Row-normalized percentages (rows with no samples stay zero).
    std::vector<double> row_percentages() const {
        std::vector<double> out(counts_.size(), 0.0);
        for (int i = 0; i < k_; ++i) {
            const double r = static_cast<double>(row_sum(i));
            if (r > 0)
                for (int j = 0; j < k_; ++j) out[static_cast<std::size_t>(i) * k_ + j] = 100.0 * at(i, j) / r;
        }
        return out;
    }

    const std::vector<std::size_t>& counts() const noexcept { return counts_; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    int k_ = 0;
    std::vector<std::size_t> counts_;
};

/// Inverse-frequency weights normalized to mean 1 over classes:
/// w_c = N / (K * n_c). Every class must be present.
inline std::vector<double> class_weights(const std::vector<int>& labels, int k) {
    if (k < 1) throw ConfigError("class count must be >= 1");
    std::vector<std::size_t> counts(k, 0);
    for (int y : labels) {
        if (y < 0 || y >= k) throw ConfigError("label " + std::to_string(y) + " out of range");
        ++counts[y];
    }
    std::vector<double> w(k);
    const double n = static_cast<double>(labels.size());
    for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) throw ConfigError("class " + std::to_string(c) + " has no samples in the training split");
        w[c] = n / (static_cast<double>(k) * static_cast<double>(counts[c]));
    }
    return w;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  ///< sample standard deviation / sqrt(n)
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr r;
    if (xs.empty()) return r;
    const double n = static_cast<double>(xs.size());
    r.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    if (xs.size() < 2) return r;
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return r;
}

} // namespace safbage::eval
