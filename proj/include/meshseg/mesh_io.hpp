/*
 * Copyright 2026 The meshseg Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#pragma once

// OBJ (v/f records) and PLY (ascii, binary_little_endian) reading and writing.

#include <meshseg/mesh.hpp>

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <sstream>
#include <string_view>

namespace meshseg {

enum class MeshFormat { Obj, Ply };

enum class PlyEncoding { Ascii, BinaryLittleEndian };

inline MeshFormat format_from_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".obj") return MeshFormat::Obj;
    if (ext == ".ply") return MeshFormat::Ply;
    throw InputError("unrecognized mesh extension '" + ext + "' (expected .obj or .ply)");
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline double parse_double(std::string_view tok, std::size_t line)
{
    // from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("invalid number '" + std::string(tok) + "'", line);
    return v;
}

inline long long parse_int(std::string_view tok, std::size_t line)
{
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError("invalid integer '" + std::string(tok) + "'", line);
    return v;
}

/// Appends fan triangles (p0, pi, pi+1) of a polygon.
inline void fan_triangulate(const std::vector<std::int32_t>& poly, std::vector<Triangle>& out)
{
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) out.push_back({poly[0], poly[i], poly[i + 1]});
}

inline void check_finite(const Vec3& p, std::size_t line)
{
    if (!p.allFinite()) throw ParseError("non-finite vertex coordinate", line);
}

} // namespace detail

inline Mesh read_obj(std::istream& in)
{
    Mesh m;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::int32_t> poly;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto tok = detail::split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError("vertex record needs 3 coordinates", line_no);
            Vec3 p(
                detail::parse_double(tok[1], line_no),
                detail::parse_double(tok[2], line_no),
                detail::parse_double(tok[3], line_no));
            detail::check_finite(p, line_no);
            m.vertices.push_back(p);
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError("face record needs at least 3 vertices", line_no);
            poly.clear();
            for (std::size_t i = 1; i < tok.size(); ++i) {
                auto idx_tok = tok[i].substr(0, tok[i].find('/'));
                long long idx = detail::parse_int(idx_tok, line_no);
                const auto nv = static_cast<long long>(m.vertices.size());
                if (idx < 0) idx = nv + idx + 1;
                if (idx < 1 || idx > nv)
                    throw ParseError("face index " + std::string(idx_tok) + " out of range", line_no);
                poly.push_back(static_cast<std::int32_t>(idx - 1));
            }
            detail::fan_triangulate(poly, m.faces);
        }
        // vt, vn, g, o, s, usemtl, mtllib: ignored
    }
    return m;
}

inline void write_obj(std::ostream& out, const Mesh& m)
{
    out << std::setprecision(17);
    for (const auto& p : m.vertices) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    for (const auto& t : m.faces) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

namespace detail {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

inline PlyType ply_type(std::string_view name, std::size_t line)
{
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    throw ParseError("unknown PLY type '" + std::string(name) + "'", line);
}

inline std::size_t ply_size(PlyType t)
{
    switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
    }
    return 0;
}

struct PlyProperty
{
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement
{
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

template <typename T>
T read_le(std::istream& in)
{
    std::array<char, sizeof(T)> buf{};
    in.read(buf.data(), sizeof(T));
    if (!in) throw ParseError("unexpected end of binary PLY data", 0);
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T v;
    std::memcpy(&v, buf.data(), sizeof(T));
    return v;
}

inline double read_binary_value(std::istream& in, PlyType t)
{
    switch (t) {
    case PlyType::Int8: return read_le<std::int8_t>(in);
    case PlyType::UInt8: return read_le<std::uint8_t>(in);
    case PlyType::Int16: return read_le<std::int16_t>(in);
    case PlyType::UInt16: return read_le<std::uint16_t>(in);
    case PlyType::Int32: return read_le<std::int32_t>(in);
    case PlyType::UInt32: return read_le<std::uint32_t>(in);
    case PlyType::Float32: return read_le<float>(in);
    case PlyType::Float64: return read_le<double>(in);
    }
    return 0.0;
}

template <typename T>
void write_le(std::ostream& out, T v)
{
    std::array<char, sizeof(T)> buf{};
    std::memcpy(buf.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    out.write(buf.data(), sizeof(T));
}

/// Pulls whitespace-separated tokens from an ASCII PLY body, tracking lines.
class AsciiTokens
{
public:
    AsciiTokens(std::istream& in, std::size_t line)
        : m_in(in)
        , m_line(line)
    {}

    std::string_view next()
    {
        while (m_pos >= m_tokens.size()) {
            if (!std::getline(m_in, m_buffer)) throw ParseError("unexpected end of PLY data", m_line);
            ++m_line;
            m_tokens = split_ws(m_buffer);
            m_pos = 0;
        }
        return m_tokens[m_pos++];
    }

    double value() { return parse_double(next(), m_line); }
    std::size_t line() const { return m_line; }

private:
    std::istream& m_in;
    std::size_t m_line;
    std::string m_buffer;
    std::vector<std::string_view> m_tokens;
    std::size_t m_pos = 0;
};

} // namespace detail

inline Mesh read_ply(std::istream& in)
{
    using namespace detail;
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") throw ParseError("missing 'ply' magic", 1);
    std::optional<PlyEncoding> encoding;
    std::vector<PlyElement> elements;
    while (true) {
        if (!next_line()) throw ParseError("PLY header not terminated", line_no);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "format") {
            if (tok.size() < 2) throw ParseError("malformed format line", line_no);
            if (tok[1] == "ascii")
                encoding = PlyEncoding::Ascii;
            else if (tok[1] == "binary_little_endian")
                encoding = PlyEncoding::BinaryLittleEndian;
            else
                throw ParseError("unsupported PLY format '" + std::string(tok[1]) + "'", line_no);
        } else if (tok[0] == "element") {
            if (tok.size() != 3) throw ParseError("malformed element line", line_no);
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(parse_int(tok[2], line_no)), {}});
        } else if (tok[0] == "property") {
            if (elements.empty()) throw ParseError("property before any element", line_no);
            PlyProperty prop;
            if (tok.size() == 5 && tok[1] == "list") {
                prop.is_list = true;
                prop.count_type = ply_type(tok[2], line_no);
                prop.type = ply_type(tok[3], line_no);
                prop.name = tok[4];
            } else if (tok.size() == 3) {
                prop.type = ply_type(tok[1], line_no);
                prop.name = tok[2];
            } else {
                throw ParseError("malformed property line", line_no);
            }
            elements.back().properties.push_back(prop);
        } else {
            throw ParseError("unexpected header keyword '" + std::string(tok[0]) + "'", line_no);
        }
    }
    if (!encoding) throw ParseError("PLY header lacks a format line", line_no);

    Mesh m;
    bool has_vertex_label = false;
    bool has_face_label = false;
    std::vector<std::int32_t> poly;
    AsciiTokens ascii(in, line_no);
    const bool binary = *encoding == PlyEncoding::BinaryLittleEndian;

    for (const auto& el : elements) {
        const bool is_vertex = el.name == "vertex";
        const bool is_face = el.name == "face";
        if (is_vertex) {
            m.vertices.reserve(el.count);
            for (const auto& p : el.properties)
                if (p.name == "label" && !p.is_list) has_vertex_label = true;
            if (has_vertex_label) m.vertex_labels.reserve(el.count);
        }
        if (is_face) {
            for (const auto& p : el.properties)
                if (p.name == "label" && !p.is_list) has_face_label = true;
        }
        for (std::size_t i = 0; i < el.count; ++i) {
            Vec3 pos = Vec3::Zero();
            int label = kUnlabeled;
            poly.clear();
            for (const auto& prop : el.properties) {
                if (prop.is_list) {
                    const auto n = static_cast<std::size_t>(
                        binary ? read_binary_value(in, prop.count_type) : ascii.value());
                    for (std::size_t k = 0; k < n; ++k) {
                        const double v = binary ? read_binary_value(in, prop.type) : ascii.value();
                        if (is_face && (prop.name == "vertex_indices" || prop.name == "vertex_index")) {
                            if (v < 0 || v >= static_cast<double>(m.vertices.size()) || v != std::floor(v)) {
                                throw ParseError(
                                    "face " + std::to_string(i) + " index out of range",
                                    binary ? 0 : ascii.line());
                            }
                            poly.push_back(static_cast<std::int32_t>(v));
                        }
                    }
                    continue;
                }
                const double v = binary ? read_binary_value(in, prop.type) : ascii.value();
                if (is_vertex) {
                    if (prop.name == "x") pos.x() = v;
                    else if (prop.name == "y") pos.y() = v;
                    else if (prop.name == "z") pos.z() = v;
                }
                if (prop.name == "label") label = static_cast<int>(v);
            }
            if (is_vertex) {
                check_finite(pos, binary ? 0 : ascii.line());
                m.vertices.push_back(pos);
                if (has_vertex_label) m.vertex_labels.push_back(label);
            } else if (is_face) {
                if (poly.size() < 3) throw ParseError("face with fewer than 3 vertices", binary ? 0 : ascii.line());
                const auto before = m.faces.size();
                fan_triangulate(poly, m.faces);
                if (has_face_label) m.face_labels.insert(m.face_labels.end(), m.faces.size() - before, label);
            }
        }
    }
    validate(m);
    return m;
}

/// Optional per-face/per-vertex payload written alongside the geometry.
struct PlyExtras
{
    /// Per-face RGB, written as uchar red/green/blue.
    std::vector<std::array<std::uint8_t, 3>> face_colors;
    /// Named per-face scalar properties (written as double).
    std::vector<std::pair<std::string, std::vector<double>>> face_scalars;
};

inline void write_ply(
    std::ostream& out,
    const Mesh& m,
    PlyEncoding encoding = PlyEncoding::BinaryLittleEndian,
    const PlyExtras& extras = {})
{
    using detail::write_le;
    const bool binary = encoding == PlyEncoding::BinaryLittleEndian;
    const bool vlabels = m.has_vertex_labels();
    const bool flabels = m.has_face_labels();
    const bool colors = !extras.face_colors.empty();
    if (colors && extras.face_colors.size() != m.num_faces())
        throw InputError("face color count does not match face count");
    for (const auto& [name, values] : extras.face_scalars)
        if (values.size() != m.num_faces()) throw InputError("face property '" + name + "' has wrong length");

    out << "ply\n";
    out << "format " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << m.num_vertices() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (vlabels) out << "property int label\n";
    out << "element face " << m.num_faces() << "\n";
    out << "property list uchar int vertex_indices\n";
    if (flabels) out << "property int label\n";
    if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    for (const auto& [name, values] : extras.face_scalars) out << "property double " << name << "\n";
    out << "end_header\n";

    if (binary) {
        for (std::size_t v = 0; v < m.num_vertices(); ++v) {
            for (int c = 0; c < 3; ++c) write_le<double>(out, m.vertices[v][c]);
            if (vlabels) write_le<std::int32_t>(out, m.vertex_labels[v]);
        }
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            write_le<std::uint8_t>(out, 3);
            for (auto i : m.faces[f]) write_le<std::int32_t>(out, i);
            if (flabels) write_le<std::int32_t>(out, m.face_labels[f]);
            if (colors)
                for (auto c : extras.face_colors[f]) write_le<std::uint8_t>(out, c);
            for (const auto& [name, values] : extras.face_scalars) write_le<double>(out, values[f]);
        }
        return;
    }
    out << std::setprecision(17);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        out << m.vertices[v].x() << ' ' << m.vertices[v].y() << ' ' << m.vertices[v].z();
        if (vlabels) out << ' ' << m.vertex_labels[v];
        out << '\n';
    }
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        const auto& t = m.faces[f];
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2];
        if (flabels) out << ' ' << m.face_labels[f];
        if (colors)
            for (auto c : extras.face_colors[f]) out << ' ' << static_cast<int>(c);
        for (const auto& [name, values] : extras.face_scalars) out << ' ' << values[f];
        out << '\n';
    }
}

inline Mesh load_mesh(const std::filesystem::path& path, std::optional<MeshFormat> format = std::nullopt)
{
    const auto fmt = format.value_or(format_from_path(path));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open mesh file '" + path.string() + "'");
    Mesh m = fmt == MeshFormat::Obj ? read_obj(in) : read_ply(in);
    validate(m);
    return m;
}

inline void save_mesh(
    const std::filesystem::path& path,
    const Mesh& m,
    PlyEncoding encoding = PlyEncoding::BinaryLittleEndian,
    const PlyExtras& extras = {})
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write mesh file '" + path.string() + "'");
    if (format_from_path(path) == MeshFormat::Obj)
        write_obj(out, m);
    else
        write_ply(out, m, encoding, extras);
    if (!out) throw InputError("failed writing mesh file '" + path.string() + "'");
}

} // namespace meshseg
