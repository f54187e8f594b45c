#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "safbage/errors.hpp"
#include "safbage/image.hpp"

namespace safbage::eval {

enum class Task { Age, Gender, Expression };

inline int num_classes(Task t) {
    switch (t) {
    case Task::Age: return 8;
    case Task::Gender: return 2;
    case Task::Expression: return 7;
    }
    return 0;
}

inline std::string to_string(Task t) {
    switch (t) {
    case Task::Age: return "age";
    case Task::Gender: return "gender";
    case Task::Expression: return "expression";
    }
    return "?";
}

inline Task parse_task(std::string_view s) {
    if (s == "age") return Task::Age;
    if (s == "gender") return Task::Gender;
    if (s == "expression") return Task::Expression;
    throw ConfigError("unknown task '" + std::string(s) + "' (expected age|gender|expression)");
}

struct ManifestRecord {
    std::string image_path;
    BBox bbox;
    std::string subject_id;
    int label = 0;
    Task task = Task::Gender;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

inline constexpr std::string_view kManifestHeader = "path,x,y,w,h,subject_id,label,task";

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

inline int parse_csv_int(const std::string& s, const char* column, int lineno) {
    int v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ParseError("manifest line " + std::to_string(lineno) + ": column '" + column +
                         "' is not an integer: '" + s + "'");
    return v;
}

} // namespace detail

/// Parse manifest CSV text. Columns are located by header name. Relative
/// image paths are resolved against `base_dir` when it is non-empty.
inline std::vector<ManifestRecord> parse_manifest(const std::string& text, const std::string& base_dir = {}) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("manifest line 1: missing header");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* name : {"path", "x", "y", "w", "h", "subject_id", "label", "task"})
        if (!col.contains(name)) throw ParseError("manifest line 1: missing column '" + std::string(name) + "'");

    std::vector<ManifestRecord> records;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size())
            throw ParseError("manifest line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
        ManifestRecord r;
        r.image_path = f[col["path"]];
        if (r.image_path.empty()) throw ParseError("manifest line " + std::to_string(lineno) + ": empty path");
        if (!base_dir.empty() && std::filesystem::path(r.image_path).is_relative())
            r.image_path = (std::filesystem::path(base_dir) / r.image_path).string();
        r.bbox = {detail::parse_csv_int(f[col["x"]], "x", lineno), detail::parse_csv_int(f[col["y"]], "y", lineno),
                  detail::parse_csv_int(f[col["w"]], "w", lineno), detail::parse_csv_int(f[col["h"]], "h", lineno)};
        if (r.bbox.w < 1 || r.bbox.h < 1)
            throw ParseError("manifest line " + std::to_string(lineno) + ": bbox width and height must be >= 1");
        r.subject_id = f[col["subject_id"]];
        if (r.subject_id.empty()) throw ParseError("manifest line " + std::to_string(lineno) + ": empty subject_id");
        try {
            r.task = parse_task(f[col["task"]]);
        } catch (const ConfigError& e) {
            throw ParseError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        r.label = detail::parse_csv_int(f[col["label"]], "label", lineno);
        const int k = num_classes(r.task);
        if (r.label < 0 || r.label >= k)
            throw ParseError("manifest line " + std::to_string(lineno) + ": label " + std::to_string(r.label) +
                             " out of range for task " + to_string(r.task) + " (valid 0.." + std::to_string(k - 1) +
                             ")");
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<ManifestRecord> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), std::filesystem::path(path).parent_path().string());
}

inline std::string format_manifest(const std::vector<ManifestRecord>& records) {
    std::string out(kManifestHeader);
    out += '\n';
    for (const auto& r : records) {
        out += r.image_path + ',' + std::to_string(r.bbox.x) + ',' + std::to_string(r.bbox.y) + ',' +
               std::to_string(r.bbox.w) + ',' + std::to_string(r.bbox.h) + ',' + r.subject_id + ',' +
               std::to_string(r.label) + ',' + to_string(r.task) + '\n';
    }
    return out;
}

} // namespace safbage::eval
