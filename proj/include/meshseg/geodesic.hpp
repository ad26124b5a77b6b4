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

// Face-to-face geodesic distances and the distance-to-weight maps built on them.
//
// Two backends are available. The graph backend runs Dijkstra on the dual
// graph (faces as nodes, arcs weighted by centroid distance). Arcs join faces
// sharing a vertex by default; edge-only arcs zigzag and overestimate planar
// distances by up to ~80%. The heat backend (heat flow, normalized gradient,
// Poisson solve) works on the cotangent Laplacian and averages vertex
// distances to faces.

#include <meshseg/mesh.hpp>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <queue>

namespace meshseg {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// Distances from a source face to a target set; `distances[i]` belongs to
/// `faces[i]` and is +inf when the target is not connected to the source.
struct GeodesicField
{
    FaceId source = -1;
    std::vector<FaceId> faces;
    std::vector<double> distances;

    std::size_t size() const { return faces.size(); }
};

/// Per-face weights aligned with the target faces of a GeodesicField.
struct ReweightVector
{
    std::vector<FaceId> faces;
    std::vector<double> weights;
};

enum class GeodesicBackend { Graph, Heat };

/// Which face pairs the dual graph connects.
enum class DualAdjacency {
    /// Faces sharing at least one vertex; close to surface distance on regular meshes.
    SharedVertex,
    /// Faces sharing an edge only.
    SharedEdge,
};

/// Dual graph of a triangle mesh with centroid-to-centroid arc lengths.
class DualGraph
{
public:
    DualGraph() = default;

    explicit DualGraph(const Mesh& m, DualAdjacency adjacency = DualAdjacency::SharedVertex)
    {
        const auto adj = adjacency == DualAdjacency::SharedVertex ? vertex_adjacent_faces(m) : edge_adjacent_faces(m);
        m_offsets.reserve(adj.size() + 1);
        m_offsets.push_back(0);
        std::vector<Vec3> centroids(m.num_faces());
        for (std::size_t f = 0; f < m.num_faces(); ++f) centroids[f] = m.centroid(static_cast<FaceId>(f));
        for (std::size_t f = 0; f < adj.size(); ++f) {
            for (auto g : adj[f]) {
                m_targets.push_back(g);
                m_lengths.push_back((centroids[f] - centroids[g]).norm());
            }
            m_offsets.push_back(static_cast<std::int64_t>(m_targets.size()));
        }
    }

    std::size_t num_faces() const { return m_offsets.empty() ? 0 : m_offsets.size() - 1; }

    template <typename Fn>
    void for_each_arc(FaceId f, Fn&& fn) const
    {
        for (auto i = m_offsets[f]; i < m_offsets[f + 1]; ++i) fn(m_targets[i], m_lengths[i]);
    }

    /// Single-source shortest paths. Stops once every face flagged in `wanted`
    /// is settled (pass an empty span to settle everything).
    std::vector<double> shortest_paths(FaceId source, std::span<const FaceId> wanted = {}) const
    {
        const auto n = num_faces();
        std::vector<double> dist(n, kUnreachable);
        std::vector<char> want(wanted.empty() ? 0 : n, 0);
        std::size_t remaining = 0;
        for (auto f : wanted) {
            if (!want[f]) ++remaining;
            want[f] = 1;
        }
        using Item = std::pair<double, FaceId>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[source] = 0.0;
        heap.emplace(0.0, source);
        std::vector<char> done(n, 0);
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (done[u]) continue;
            done[u] = 1;
            if (!want.empty() && want[u] && --remaining == 0) break;
            for_each_arc(u, [&](FaceId v, double len) {
                const double nd = d + len;
                if (nd < dist[v]) {
                    dist[v] = nd;
                    heap.emplace(nd, v);
                }
            });
        }
        return dist;
    }

private:
    std::vector<std::int64_t> m_offsets;
    std::vector<FaceId> m_targets;
    std::vector<double> m_lengths;
};

/// Heat-method distance solver; factorizations are built once per mesh.
class HeatGeodesicSolver
{
public:
    explicit HeatGeodesicSolver(const Mesh& m, double time_scale = 1.0)
        : m_mesh(&m)
    {
        const auto nv = static_cast<int>(m.num_vertices());
        std::vector<Eigen::Triplet<double>> stiff;
        m_mass = Eigen::VectorXd::Zero(nv);
        double edge_sum = 0.0;
        std::size_t edge_count = 0;
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            const auto& t = m.faces[f];
            const double area = m.area(static_cast<FaceId>(f));
            if (!(area > 0.0)) continue;
            for (int i = 0; i < 3; ++i) {
                const int a = t[i];
                const int b = t[(i + 1) % 3];
                const int c = t[(i + 2) % 3];
                // Angle at c is opposite edge ab.
                const Vec3 u = m.vertices[a] - m.vertices[c];
                const Vec3 v = m.vertices[b] - m.vertices[c];
                const double cot = u.dot(v) / u.cross(v).norm();
                const double w = 0.5 * cot;
                stiff.emplace_back(a, b, -w);
                stiff.emplace_back(b, a, -w);
                stiff.emplace_back(a, a, w);
                stiff.emplace_back(b, b, w);
                m_mass[t[i]] += area / 3.0;
                edge_sum += (m.vertices[a] - m.vertices[b]).norm();
                ++edge_count;
            }
        }
        m_stiffness.resize(nv, nv);
        m_stiffness.setFromTriplets(stiff.begin(), stiff.end());

        const double h = edge_count ? edge_sum / edge_count : 1.0;
        const double t = time_scale * h * h;
        Eigen::SparseMatrix<double> mass(nv, nv);
        std::vector<Eigen::Triplet<double>> diag;
        for (int i = 0; i < nv; ++i) diag.emplace_back(i, i, m_mass[i]);
        mass.setFromTriplets(diag.begin(), diag.end());

        m_heat.compute(mass + t * m_stiffness);
        // Small mass shift keeps the Poisson system definite on every component.
        m_poisson.compute(m_stiffness + 1e-10 * mass);
        if (m_heat.info() != Eigen::Success || m_poisson.info() != Eigen::Success)
            throw Error("heat method factorization failed");

        // Vertex connected components, to report unreachable faces as +inf.
        m_component.assign(nv, -1);
        const auto vf = build_vertex_faces(m);
        int comp = 0;
        std::vector<int> stack;
        for (int s = 0; s < nv; ++s) {
            if (m_component[s] >= 0) continue;
            stack.assign(1, s);
            m_component[s] = comp;
            while (!stack.empty()) {
                const int v = stack.back();
                stack.pop_back();
                for (auto f : vf[v])
                    for (auto w : m.faces[f])
                        if (m_component[w] < 0) {
                            m_component[w] = comp;
                            stack.push_back(w);
                        }
            }
            ++comp;
        }
    }

    /// Per-face distances from `source`, shifted so the source face reads 0.
    std::vector<double> face_distances(FaceId source) const
    {
        const Mesh& m = *m_mesh;
        const auto nv = static_cast<int>(m.num_vertices());
        Eigen::VectorXd u0 = Eigen::VectorXd::Zero(nv);
        for (auto v : m.faces[source]) u0[v] = 1.0;
        const Eigen::VectorXd u = m_heat.solve(u0);

        Eigen::VectorXd div = Eigen::VectorXd::Zero(nv);
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            const auto& t = m.faces[f];
            const Vec3& p0 = m.vertices[t[0]];
            const Vec3& p1 = m.vertices[t[1]];
            const Vec3& p2 = m.vertices[t[2]];
            const Vec3 n = (p1 - p0).cross(p2 - p0);
            const double dbl_area = n.norm();
            if (!(dbl_area > 0.0)) continue;
            const Vec3 nhat = n / dbl_area;
            // Gradient of the piecewise-linear interpolant.
            Vec3 grad = (u[t[0]] * nhat.cross(p2 - p1) + u[t[1]] * nhat.cross(p0 - p2) + u[t[2]] * nhat.cross(p1 - p0)) /
                        dbl_area;
            const double gn = grad.norm();
            if (!(gn > 0.0)) continue;
            const Vec3 x = -grad / gn;
            for (int i = 0; i < 3; ++i) {
                const Vec3& pi = m.vertices[t[i]];
                const Vec3& pj = m.vertices[t[(i + 1) % 3]];
                const Vec3& pk = m.vertices[t[(i + 2) % 3]];
                const Vec3 e1 = pj - pi;
                const Vec3 e2 = pk - pi;
                const double cot_k = (pi - pk).dot(pj - pk) / (pi - pk).cross(pj - pk).norm();
                const double cot_j = (pi - pj).dot(pk - pj) / (pi - pj).cross(pk - pj).norm();
                div[t[i]] += 0.5 * (cot_k * e1.dot(x) + cot_j * e2.dot(x));
            }
        }
        // Stiffness is minus the Laplacian, so K phi = -div.
        const Eigen::VectorXd phi = m_poisson.solve(-div);

        std::vector<double> out(m.num_faces(), kUnreachable);
        const int comp = m_component[m.faces[source][0]];
        double base = 0.0;
        for (auto v : m.faces[source]) base += phi[v];
        base /= 3.0;
        for (std::size_t f = 0; f < m.num_faces(); ++f) {
            const auto& t = m.faces[f];
            if (m_component[t[0]] != comp) continue;
            const double d = (phi[t[0]] + phi[t[1]] + phi[t[2]]) / 3.0 - base;
            out[f] = std::max(0.0, d);
        }
        out[source] = 0.0;
        return out;
    }

private:
    const Mesh* m_mesh;
    Eigen::SparseMatrix<double> m_stiffness;
    Eigen::VectorXd m_mass;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> m_heat;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> m_poisson;
    std::vector<int> m_component;
};

/// Geodesic queries on one mesh. The mesh must outlive the engine.
class GeodesicEngine
{
public:
    explicit GeodesicEngine(
        const Mesh& m,
        GeodesicBackend backend = GeodesicBackend::Graph,
        DualAdjacency adjacency = DualAdjacency::SharedVertex)
        : m_mesh(&m)
        , m_backend(backend)
        , m_graph(m, adjacency)
    {
        if (backend == GeodesicBackend::Heat) m_heat = std::make_unique<HeatGeodesicSolver>(m);
    }

    GeodesicBackend backend() const { return m_backend; }
    const DualGraph& graph() const { return m_graph; }

    GeodesicField distances(FaceId source, std::span<const FaceId> targets) const
    {
        const auto n = static_cast<FaceId>(m_mesh->num_faces());
        if (source < 0 || source >= n) throw InputError("geodesic source face out of range");
        if (targets.empty()) throw InputError("geodesic target set is empty");
        for (auto t : targets)
            if (t < 0 || t >= n) throw InputError("geodesic target face out of range");

        const auto all = m_backend == GeodesicBackend::Graph ? m_graph.shortest_paths(source, targets)
                                                             : m_heat->face_distances(source);
        GeodesicField field;
        field.source = source;
        field.faces.assign(targets.begin(), targets.end());
        field.distances.reserve(targets.size());
        for (auto t : targets) field.distances.push_back(all[t]);
        return field;
    }

private:
    const Mesh* m_mesh;
    GeodesicBackend m_backend;
    DualGraph m_graph;
    std::unique_ptr<HeatGeodesicSolver> m_heat;
};

inline GeodesicField geodesic_distances(
    const Mesh& m,
    FaceId source,
    std::span<const FaceId> targets,
    GeodesicBackend backend = GeodesicBackend::Graph,
    DualAdjacency adjacency = DualAdjacency::SharedVertex)
{
    return GeodesicEngine(m, backend, adjacency).distances(source, targets);
}

/// How the capital point is averaged before snapping to a face.
enum class CapitalAverage {
    /// Pixel-area-weighted mean of face centroids.
    AreaWeightedCentroids,
    /// Unweighted mean of the distinct vertices of the target faces.
    UniqueVertices,
};

/// The target face whose surface lies closest to the averaged point of the
/// target set. `areas` is indexed by face ID (e.g. RenderOutput::face_pixel_area).
template <typename AreaT>
FaceId capital_face(
    const Mesh& m,
    std::span<const FaceId> targets,
    std::span<const AreaT> areas,
    CapitalAverage mode = CapitalAverage::AreaWeightedCentroids)
{
    if (targets.empty()) throw InputError("capital face of an empty target set");
    if (targets.size() == 1) return targets.front();

    Vec3 center = Vec3::Zero();
    if (mode == CapitalAverage::AreaWeightedCentroids) {
        double total = 0.0;
        for (auto f : targets) {
            const double a = static_cast<double>(areas[f]);
            center += a * m.centroid(f);
            total += a;
        }
        if (!(total > 0.0)) throw InputError("capital face needs positive areas on the target set");
        center /= total;
    } else {
        std::vector<std::int32_t> verts;
        for (auto f : targets) verts.insert(verts.end(), m.faces[f].begin(), m.faces[f].end());
        std::sort(verts.begin(), verts.end());
        verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
        for (auto v : verts) center += m.vertices[v];
        center /= static_cast<double>(verts.size());
    }

    FaceId best = targets.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto f : targets) {
        const double d = point_triangle_distance(center, m.corner(f, 0), m.corner(f, 1), m.corner(f, 2));
        if (d < best_d || (d == best_d && f < best)) {
            best_d = d;
            best = f;
        }
    }
    return best;
}

inline double normal_density(double x, double mean, double stddev)
{
    const double z = (x - mean) / stddev;
    return std::exp(-0.5 * z * z) / (stddev * std::sqrt(2.0 * kPi));
}

/// Normal density of each distance under a Gaussian fitted to the finite
/// distances (population std, floored at `sigma_floor`). Unreachable faces get 0.
inline ReweightVector gaussian_reweight(const GeodesicField& field, double sigma_floor)
{
    ReweightVector out{field.faces, std::vector<double>(field.size(), 0.0)};
    double sum = 0.0;
    std::size_t n = 0;
    for (double d : field.distances)
        if (std::isfinite(d)) {
            sum += d;
            ++n;
        }
    if (n == 0) return out;
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (double d : field.distances)
        if (std::isfinite(d)) var += (d - mean) * (d - mean);
    const double sigma = std::max(std::sqrt(var / static_cast<double>(n)), sigma_floor);
    for (std::size_t i = 0; i < field.size(); ++i)
        if (std::isfinite(field.distances[i])) out.weights[i] = normal_density(field.distances[i], mean, sigma);
    return out;
}

inline constexpr double kMaxGeodesicEpsilon = 1e-8;

/// 1 - d / (max d + eps), over finite distances.
inline ReweightVector max_geodesic_reweight(const GeodesicField& field, double eps = kMaxGeodesicEpsilon)
{
    ReweightVector out{field.faces, std::vector<double>(field.size(), 0.0)};
    double max_d = 0.0;
    for (double d : field.distances)
        if (std::isfinite(d)) max_d = std::max(max_d, d);
    for (std::size_t i = 0; i < field.size(); ++i)
        if (std::isfinite(field.distances[i])) out.weights[i] = 1.0 - field.distances[i] / (max_d + eps);
    return out;
}

/// exp(-d) normalized over the finite distances.
inline ReweightVector softmax_geodesic_reweight(const GeodesicField& field)
{
    ReweightVector out{field.faces, std::vector<double>(field.size(), 0.0)};
    double min_d = kUnreachable;
    for (double d : field.distances) min_d = std::min(min_d, d);
    if (!std::isfinite(min_d)) return out;
    double total = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!std::isfinite(field.distances[i])) continue;
        out.weights[i] = std::exp(-(field.distances[i] - min_d));
        total += out.weights[i];
    }
    for (auto& w : out.weights) w /= total;
    return out;
}

} // namespace meshseg
