#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"

namespace safbage {

namespace detail {

inline bool is_pnm_space(std::uint8_t b) {
    return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f';
}

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }

    std::string token() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !is_pnm_space(bytes_[pos_]) && bytes_[pos_] != '#') ++pos_;
        if (pos_ == start) throw DecodeError("PNM header truncated at offset " + std::to_string(start));
        return {bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)};
    }

    long number(const char* what) {
        const std::size_t at = peek_token_start();
        const std::string t = token();
        long v = 0;
        for (char ch : t) {
            if (ch < '0' || ch > '9')
                throw DecodeError("PNM header: invalid " + std::string(what) + " '" + t + "' at offset " +
                                  std::to_string(at));
            v = v * 10 + (ch - '0');
            if (v > 1'000'000'000L)
                throw DecodeError("PNM header: " + std::string(what) + " too large at offset " +
                                  std::to_string(at));
        }
        return v;
    }

    /// Consume the single whitespace byte separating header and raster.
    void end_header() {
        if (pos_ >= bytes_.size() || !is_pnm_space(bytes_[pos_]))
            throw DecodeError("PNM header: expected whitespace after maxval at offset " + std::to_string(pos_));
        ++pos_;
    }

private:
    std::size_t peek_token_start() {
        skip_space_and_comments();
        return pos_;
    }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_pnm_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Decode a binary PGM (P5) or PPM (P6) with maxval 255.
inline Image load_pnm(std::span<const std::uint8_t> bytes) {
    detail::PnmHeaderReader rd(bytes);
    const std::string magic = rd.token();
    int channels = 0;
    if (magic == "P5") channels = 1;
    else if (magic == "P6") channels = 3;
    else throw DecodeError("unsupported PNM magic '" + magic + "' at offset 0");

    const std::size_t w_at = rd.offset();
    const long w = rd.number("width");
    const long h = rd.number("height");
    if (w == 0 || h == 0)
        throw DecodeError("PNM header: zero dimension near offset " + std::to_string(w_at));
    const std::size_t max_at = rd.offset();
    const long maxval = rd.number("maxval");
    if (maxval != 255)
        throw DecodeError("PNM header: unsupported maxval " + std::to_string(maxval) + " near offset " +
                          std::to_string(max_at) + " (only 255 is supported)");
    rd.end_header();

    const std::size_t start = rd.offset();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    if (bytes.size() - start < need)
        throw DecodeError("PNM payload truncated: expected " + std::to_string(need) + " bytes at offset " +
                          std::to_string(start) + ", found " + std::to_string(bytes.size() - start));

    Image img(static_cast<int>(w), static_cast<int>(h), channels);
    // file order is interleaved per pixel; Image is planar
    const std::size_t plane = img.plane_size();
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < channels; ++c)
            img.data[c * plane + p] = bytes[start + p * channels + c] / 255.0;
    return img;
}

/// Quantize one value to an 8-bit level, rounding half away from zero.
inline std::uint8_t quantize_255(double v) {
    const long q = std::lround(clamp01(v) * 255.0);
    return static_cast<std::uint8_t>(q);
}

inline std::vector<std::uint8_t> save_pnm(const Image& img) {
    const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                               std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t plane = img.plane_size();
    out.reserve(out.size() + plane * img.channels);
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < img.channels; ++c) out.push_back(quantize_255(img.data[c * plane + p]));
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

inline Image read_pnm_file(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return load_pnm(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path + ": " + e.what());
    }
}

inline void write_pnm_file(const std::string& path, const Image& img) { write_file_bytes(path, save_pnm(img)); }

} // namespace safbage
