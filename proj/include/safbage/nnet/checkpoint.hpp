#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/nnet/model_spec.hpp"
#include "safbage/nnet/network.hpp"

namespace safbage::nnet {

// Layout (all integers little-endian):
//   "SAFB" | u32 version | u64 n | n bytes descriptor text
//   then for every parameterized layer in spec order:
//     u64 count | count x f32 weights | u64 count | count x f32 biases
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}
    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw DecodeError("checkpoint truncated reading " + std::string(what) + " at offset " +
                              std::to_string(pos_));
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes_[pos_++]) << (8 * i);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes_[pos_++]) << (8 * i);
        return v;
    }
    float f32() {
        return std::bit_cast<float>(u32("tensor data"));
    }
    std::string text(std::size_t n) {
        need(n, "descriptor");
        std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
void put_tensor(std::vector<std::uint8_t>& out, const Tensor<T>& t) {
    put_u64(out, t.size());
    for (const T v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

} // namespace detail

/// Serialize spec and parameters. Values are stored as f32, so a float
/// model round-trips exactly.
template <typename T>
std::vector<std::uint8_t> save_checkpoint(const ModelSpec& spec, const ModelParams<T>& params) {
    spec.validate();
    std::vector<std::uint8_t> out{'S', 'A', 'F', 'B'};
    detail::put_u32(out, kCheckpointVersion);
    const std::string desc = to_descriptor(spec);
    detail::put_u64(out, desc.size());
    out.insert(out.end(), desc.begin(), desc.end());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!spec.layers[i].has_params()) continue;
        detail::put_tensor(out, params.layers[i].weight);
        detail::put_tensor(out, params.layers[i].bias);
    }
    return out;
}

template <typename T>
std::pair<ModelSpec, ModelParams<T>> load_checkpoint(std::span<const std::uint8_t> bytes) {
    detail::ByteReader rd(bytes);
    rd.need(4, "magic");
    if (std::memcmp(bytes.data(), "SAFB", 4) != 0) throw DecodeError("bad checkpoint magic (expected 'SAFB')");
    (void)rd.text(4);
    const std::uint32_t version = rd.u32("version");
    if (version != kCheckpointVersion)
        throw DecodeError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
    const std::uint64_t desc_len = rd.u64("descriptor length");
    if (desc_len > rd.remaining()) throw DecodeError("checkpoint descriptor length exceeds file size");
    ModelSpec spec;
    try {
        spec = parse_descriptor(rd.text(desc_len));
        spec.validate();
    } catch (const Error& e) {
        throw DecodeError(std::string("checkpoint descriptor invalid: ") + e.what());
    }

    // Expected size is fully determined by the layer list; check it up front.
    ModelParams<T> params = build<T>(spec, 0);
    std::size_t expected = rd.offset();
    for (std::size_t i = 0; i < spec.layers.size(); ++i)
        if (spec.layers[i].has_params())
            expected += 16 + 4 * (params.layers[i].weight.size() + params.layers[i].bias.size());
    if (bytes.size() != expected)
        throw DecodeError("checkpoint length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));

    auto read_tensor = [&](Tensor<T>& t, const std::string& what) {
        const std::uint64_t n = rd.u64("tensor length");
        if (n != t.size())
            throw DecodeError(what + ": expected " + std::to_string(t.size()) + " values, found " + std::to_string(n));
        for (auto& v : t.data) v = static_cast<T>(rd.f32());
    };
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (!spec.layers[i].has_params()) continue;
        read_tensor(params.layers[i].weight, spec.layers[i].name + " weight");
        read_tensor(params.layers[i].bias, spec.layers[i].name + " bias");
    }
    return {std::move(spec), std::move(params)};
}

} // namespace safbage::nnet
