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

#include <meshseg/common.hpp>

#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace meshseg {

/// Label value for faces/vertices that belong to no class.
inline constexpr int kUnlabeled = -1;

/// Indexed triangle surface. Label arrays are either empty (absent) or sized
/// to match faces/vertices.
struct Mesh
{
    std::vector<Vec3> vertices;
    std::vector<Triangle> faces;
    std::vector<int> face_labels;
    std::vector<int> vertex_labels;

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_faces() const { return faces.size(); }
    bool has_face_labels() const { return !face_labels.empty(); }
    bool has_vertex_labels() const { return !vertex_labels.empty(); }

    const Vec3& corner(FaceId f, int i) const { return vertices[faces[f][i]]; }

    Vec3 centroid(FaceId f) const { return triangle_centroid(corner(f, 0), corner(f, 1), corner(f, 2)); }

    double area(FaceId f) const { return triangle_area(corner(f, 0), corner(f, 1), corner(f, 2)); }

    Vec3 face_normal(FaceId f) const
    {
        Vec3 n = (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
        const double len = n.norm();
        return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
    }
};

/// Throws InputError when an index or label array breaks the Mesh invariants.
inline void validate(const Mesh& m)
{
    const auto nv = static_cast<std::int64_t>(m.vertices.size());
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        for (auto v : m.faces[f]) {
            if (v < 0 || v >= nv) {
                throw InputError(
                    "face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                    " but the mesh has " + std::to_string(nv) + " vertices");
            }
        }
    }
    for (const auto& p : m.vertices) {
        if (!p.allFinite()) throw InputError("non-finite vertex coordinate");
    }
    if (m.has_face_labels() && m.face_labels.size() != m.faces.size())
        throw InputError("face label count does not match face count");
    if (m.has_vertex_labels() && m.vertex_labels.size() != m.vertices.size())
        throw InputError("vertex label count does not match vertex count");
}

inline Eigen::AlignedBox3d bounding_box(const Mesh& m)
{
    Eigen::AlignedBox3d box;
    for (const auto& p : m.vertices) box.extend(p);
    return box;
}

/// Bounding-box diagonal length.
inline double diameter(const Mesh& m)
{
    if (m.vertices.empty()) return 0.0;
    return bounding_box(m).diagonal().norm();
}

/// Centers the bounding box at the origin and scales so the farthest vertex
/// lies on the unit sphere. Labels are carried over untouched.
inline Mesh normalize_mesh(const Mesh& m)
{
    if (m.vertices.empty()) throw InputError("cannot normalize a mesh without vertices");
    const Vec3 center = bounding_box(m).center();
    double radius = 0.0;
    for (const auto& p : m.vertices) radius = std::max(radius, (p - center).norm());
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw InputError("cannot normalize a degenerate mesh (all vertices coincide)");

    Mesh out = m;
    for (auto& p : out.vertices) p = (p - center) / radius;
    return out;
}

/// For each vertex, the faces incident to it (CSR layout).
struct VertexFaceMap
{
    std::vector<std::int32_t> offsets;
    std::vector<FaceId> faces;

    std::span<const FaceId> operator[](std::size_t v) const
    {
        return {faces.data() + offsets[v], faces.data() + offsets[v + 1]};
    }
};

inline VertexFaceMap build_vertex_faces(const Mesh& m)
{
    VertexFaceMap map;
    map.offsets.assign(m.num_vertices() + 1, 0);
    for (const auto& t : m.faces)
        for (auto v : t) ++map.offsets[v + 1];
    std::partial_sum(map.offsets.begin(), map.offsets.end(), map.offsets.begin());
    map.faces.resize(map.offsets.back());
    std::vector<std::int32_t> cursor(map.offsets.begin(), map.offsets.end() - 1);
    for (std::size_t f = 0; f < m.num_faces(); ++f)
        for (auto v : m.faces[f]) map.faces[cursor[v]++] = static_cast<FaceId>(f);
    return map;
}

/// Faces sharing at least one vertex with each face (excluding itself), sorted.
inline std::vector<std::vector<FaceId>> vertex_adjacent_faces(const Mesh& m)
{
    const auto vf = build_vertex_faces(m);
    std::vector<std::vector<FaceId>> adj(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        auto& out = adj[f];
        for (auto v : m.faces[f])
            for (auto g : vf[v])
                if (g != static_cast<FaceId>(f)) out.push_back(g);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return adj;
}

/// Faces sharing an edge with each face, sorted. Non-manifold
/// edges connect every pair of faces incident to them.
inline std::vector<std::vector<FaceId>> edge_adjacent_faces(const Mesh& m)
{
    std::map<std::pair<std::int32_t, std::int32_t>, std::vector<FaceId>> edges;
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        const auto& t = m.faces[f];
        for (int i = 0; i < 3; ++i) {
            auto a = t[i];
            auto b = t[(i + 1) % 3];
            if (a == b) continue;
            edges[{std::min(a, b), std::max(a, b)}].push_back(static_cast<FaceId>(f));
        }
    }
    std::vector<std::vector<FaceId>> adj(m.num_faces());
    for (const auto& [edge, fs] : edges) {
        for (auto f : fs)
            for (auto g : fs)
                if (f != g) adj[f].push_back(g);
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

/// Faces within q shared-vertex hops of every face, the face itself included.
class QRingIndex
{
public:
    QRingIndex() = default;

    QRingIndex(const Mesh& m, int q)
        : m_q(q)
    {
        if (q < 1) throw InputError("q-ring rank must be >= 1");
        const auto adj = vertex_adjacent_faces(m);
        const auto n = m.num_faces();
        m_offsets.reserve(n + 1);
        m_offsets.push_back(0);

        std::vector<int> stamp(n, -1);
        std::vector<FaceId> frontier;
        std::vector<FaceId> next;
        std::vector<FaceId> ring;
        for (std::size_t f = 0; f < n; ++f) {
            const auto src = static_cast<FaceId>(f);
            ring.assign(1, src);
            stamp[f] = static_cast<int>(f);
            frontier.assign(1, src);
            for (int depth = 0; depth < q && !frontier.empty(); ++depth) {
                next.clear();
                for (auto u : frontier) {
                    for (auto w : adj[u]) {
                        if (stamp[w] == static_cast<int>(f)) continue;
                        stamp[w] = static_cast<int>(f);
                        next.push_back(w);
                        ring.push_back(w);
                    }
                }
                frontier.swap(next);
            }
            std::sort(ring.begin(), ring.end());
            m_neighbors.insert(m_neighbors.end(), ring.begin(), ring.end());
            m_offsets.push_back(static_cast<std::int64_t>(m_neighbors.size()));
        }
    }

    int q() const { return m_q; }
    std::size_t num_faces() const { return m_offsets.empty() ? 0 : m_offsets.size() - 1; }

    /// Sorted neighborhood of face f.
    std::span<const FaceId> operator[](FaceId f) const
    {
        return {m_neighbors.data() + m_offsets[f], m_neighbors.data() + m_offsets[f + 1]};
    }

    bool contains(FaceId f, FaceId g) const
    {
        auto ring = (*this)[f];
        return std::binary_search(ring.begin(), ring.end(), g);
    }

private:
    int m_q = 0;
    std::vector<std::int64_t> m_offsets;
    std::vector<FaceId> m_neighbors;
};

inline QRingIndex build_q_ring(const Mesh& m, int q)
{
    return QRingIndex(m, q);
}

/// Majority vote over the three corner labels. When all three differ the
/// lowest class wins; unlabeled only wins when it is the majority or all that is left.
inline int majority_label(int a, int b, int c)
{
    std::array<int, 3> l{a, b, c};
    std::sort(l.begin(), l.end());
    if (l[0] == l[1]) return l[0];
    if (l[1] == l[2]) return l[1];
    for (int v : l)
        if (v != kUnlabeled) return v;
    return kUnlabeled;
}

inline void derive_face_labels(Mesh& m)
{
    m.face_labels.resize(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        const auto& t = m.faces[f];
        m.face_labels[f] = majority_label(m.vertex_labels[t[0]], m.vertex_labels[t[1]], m.vertex_labels[t[2]]);
    }
}

/// Index of the nearest point in `points` to `query`, lowest index on ties.
/// Backed by an x-sorted sweep; exact.
class NearestPointIndex
{
public:
    explicit NearestPointIndex(std::span<const Vec3> points)
        : m_points(points.begin(), points.end())
        , m_order(points.size())
    {
        std::iota(m_order.begin(), m_order.end(), 0);
        std::stable_sort(m_order.begin(), m_order.end(), [&](std::int32_t a, std::int32_t b) {
            return m_points[a].x() < m_points[b].x();
        });
    }

    std::int32_t nearest(const Vec3& query) const
    {
        if (m_order.empty()) return -1;
        auto it = std::lower_bound(m_order.begin(), m_order.end(), query.x(), [&](std::int32_t i, double x) {
            return m_points[i].x() < x;
        });
        const auto start = static_cast<std::ptrdiff_t>(it - m_order.begin());
        double best = std::numeric_limits<double>::infinity();
        std::int32_t best_index = -1;
        auto consider = [&](std::int32_t i) {
            const double d = (m_points[i] - query).squaredNorm();
            if (d < best || (d == best && i < best_index)) {
                best = d;
                best_index = i;
            }
        };
        const auto n = static_cast<std::ptrdiff_t>(m_order.size());
        for (std::ptrdiff_t k = start; k < n; ++k) {
            const double dx = m_points[m_order[k]].x() - query.x();
            if (dx * dx > best) break;
            consider(m_order[k]);
        }
        for (std::ptrdiff_t k = start - 1; k >= 0; --k) {
            const double dx = query.x() - m_points[m_order[k]].x();
            if (dx * dx > best) break;
            consider(m_order[k]);
        }
        return best_index;
    }

private:
    std::vector<Vec3> m_points;
    std::vector<std::int32_t> m_order;
};

/// Copies vertex labels from `src` onto `dst` by Euclidean nearest vertex, then
/// derives dst face labels by majority vote.
inline Mesh transfer_labels(const Mesh& src, const Mesh& dst)
{
    if (!src.has_vertex_labels()) throw InputError("label transfer source has no vertex labels");
    if (src.vertex_labels.size() != src.num_vertices())
        throw InputError("label transfer source has mismatched vertex labels");

    const NearestPointIndex index(src.vertices);
    Mesh out = dst;
    out.vertex_labels.resize(dst.num_vertices());
    for (std::size_t v = 0; v < dst.num_vertices(); ++v)
        out.vertex_labels[v] = src.vertex_labels[index.nearest(dst.vertices[v])];
    derive_face_labels(out);
    return out;
}

} // namespace meshseg
