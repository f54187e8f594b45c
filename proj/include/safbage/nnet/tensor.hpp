#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "safbage/errors.hpp"

namespace safbage::nnet {

/// Dense row-major tensor.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, T fill = T(0)) : shape(std::move(s)) {
        data.assign(element_count(shape), fill);
    }

    static std::size_t element_count(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t size() const noexcept { return data.size(); }
    bool empty() const noexcept { return data.empty(); }
    T& operator[](std::size_t i) noexcept { return data[i]; }
    const T& operator[](std::size_t i) const noexcept { return data[i]; }

    void reshape(std::vector<std::size_t> s) {
        if (element_count(s) != data.size()) throw ShapeError("reshape changes element count");
        shape = std::move(s);
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

} // namespace safbage::nnet
