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

// Labeled synthetic shapes used as ground truth for oracle-detector runs.

#include <meshseg/mesh.hpp>

#include <map>

namespace meshseg {

/// A labeled shape plus the name of each class (index = class id).
struct Fixture
{
    Mesh mesh;
    std::vector<std::string> part_names;
};

/// One cross-section of a swept tube. A zero radius collapses to a pole vertex.
/// `label` is assigned to the band of faces that ends at this ring.
struct SweepRing
{
    Vec3 center;
    Vec3 tangent;
    double radius = 0.0;
    int label = 0;
};

/// Skins consecutive rings into a closed (when both ends are poles) tube.
/// Frames follow the path by projection-based parallel transport.
inline void append_sweep(Mesh& m, std::span<const SweepRing> rings, int segments)
{
    if (rings.size() < 2) throw InputError("a sweep needs at least two rings");
    if (segments < 3) throw InputError("a sweep needs at least three segments per ring");

    Vec3 t0 = rings.front().tangent.normalized();
    Vec3 normal = std::abs(t0.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
    normal = (normal - normal.dot(t0) * t0).normalized();

    // Vertex indices per ring; a pole ring holds a single index.
    std::vector<std::vector<std::int32_t>> ids;
    ids.reserve(rings.size());
    for (const auto& ring : rings) {
        const Vec3 t = ring.tangent.normalized();
        normal = (normal - normal.dot(t) * t).normalized();
        const Vec3 binormal = t.cross(normal);
        std::vector<std::int32_t> row;
        if (ring.radius <= 1e-12) {
            row.push_back(static_cast<std::int32_t>(m.vertices.size()));
            m.vertices.push_back(ring.center);
        } else {
            for (int s = 0; s < segments; ++s) {
                const double th = 2.0 * kPi * s / segments;
                row.push_back(static_cast<std::int32_t>(m.vertices.size()));
                m.vertices.push_back(ring.center + ring.radius * (std::cos(th) * normal + std::sin(th) * binormal));
            }
        }
        ids.push_back(std::move(row));
    }

    auto add = [&](std::int32_t a, std::int32_t b, std::int32_t c, int label) {
        m.faces.push_back({a, b, c});
        m.face_labels.push_back(label);
    };
    for (std::size_t i = 1; i < rings.size(); ++i) {
        const auto& lo = ids[i - 1];
        const auto& hi = ids[i];
        const int label = rings[i].label;
        if (lo.size() == 1 && hi.size() == 1) continue;
        for (int s = 0; s < segments; ++s) {
            const int s1 = (s + 1) % segments;
            if (lo.size() == 1) {
                add(lo[0], hi[s1], hi[s], label);
            } else if (hi.size() == 1) {
                add(lo[s], lo[s1], hi[0], label);
            } else {
                add(lo[s], lo[s1], hi[s1], label);
                add(lo[s], hi[s1], hi[s], label);
            }
        }
    }
}

/// Rings of a sphere section swept along `axis`, polar angle from `phi0` to
/// `phi1` (0 = the +axis pole), `steps` intervals, endpoints included.
inline std::vector<SweepRing> sphere_rings(
    const Vec3& center, const Vec3& axis, double radius, double phi0, double phi1, int steps, int label)
{
    std::vector<SweepRing> out;
    const Vec3 a = axis.normalized();
    // Travel direction along the axis: toward the +axis pole when phi decreases.
    const Vec3 travel = phi1 < phi0 ? a : Vec3(-a);
    for (int i = 0; i <= steps; ++i) {
        const double phi = phi0 + (phi1 - phi0) * i / steps;
        double r = radius * std::sin(phi);
        if (std::abs(r) < 1e-12) r = 0.0;
        out.push_back({center + radius * std::cos(phi) * a, travel, std::abs(r), label});
    }
    return out;
}

/// Capsule (cylinder with hemispherical caps) from p to q.
inline void append_capsule(Mesh& m, const Vec3& p, const Vec3& q, double radius, int label, int segments, int cap_steps)
{
    const Vec3 axis = (q - p).normalized();
    const double len = (q - p).norm();
    std::vector<SweepRing> rings = sphere_rings(p, axis, radius, kPi, kPi / 2, cap_steps, label);
    const int body_steps = std::max(1, static_cast<int>(std::ceil(len / (radius * 0.5))));
    for (int i = 1; i < body_steps; ++i) rings.push_back({p + len * i / body_steps * axis, axis, radius, label});
    auto top = sphere_rings(q, axis, radius, kPi / 2, 0.0, cap_steps, label);
    rings.insert(rings.end(), top.begin(), top.end());
    append_sweep(m, rings, segments);
}

inline void append_sphere(Mesh& m, const Vec3& c, double radius, int label, int segments, int steps)
{
    const auto rings = sphere_rings(c, Vec3::UnitY(), radius, kPi, 0.0, steps, label);
    append_sweep(m, rings, segments);
}

/// Generic numeric parameters with per-kind defaults; unknown keys are rejected.
class FixtureParams
{
public:
    FixtureParams() = default;
    FixtureParams(std::initializer_list<std::pair<const std::string, double>> init)
        : m_values(init)
    {}

    void set(const std::string& key, double v) { m_values[key] = v; }

    double get(const std::string& key, double fallback)
    {
        m_known.push_back(key);
        auto it = m_values.find(key);
        return it == m_values.end() ? fallback : it->second;
    }

    /// Throws InputError if a key was supplied that no get() asked for.
    void check_consumed() const
    {
        for (const auto& [k, v] : m_values)
            if (std::find(m_known.begin(), m_known.end(), k) == m_known.end())
                throw InputError("unknown fixture parameter '" + k + "'");
    }

    const std::map<std::string, double>& values() const { return m_values; }

private:
    std::map<std::string, double> m_values;
    std::vector<std::string> m_known;
};

namespace detail {

inline int positive_int(double v, const char* name, int min_value = 1)
{
    if (!(v >= min_value) || v != std::floor(v) || v > 1e6)
        throw InputError(std::string("fixture parameter '") + name + "' must be an integer >= " + std::to_string(min_value));
    return static_cast<int>(v);
}

inline double positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("fixture parameter '") + name + "' must be positive");
    return v;
}

} // namespace detail

/// Two fused spheres along +y: body (class 1) below, head (class 0) above.
inline Fixture make_snowman(FixtureParams p = {})
{
    const double rb = detail::positive(p.get("body_radius", 1.0), "body_radius");
    const double rh = detail::positive(p.get("head_radius", 0.6), "head_radius");
    const double ch = detail::positive(p.get("head_height", 1.4), "head_height");
    const int segments = detail::positive_int(p.get("segments", 40), "segments", 3);
    const int body_steps = detail::positive_int(p.get("body_steps", 30), "body_steps", 2);
    const int head_steps = detail::positive_int(p.get("head_steps", 20), "head_steps", 2);
    p.check_consumed();
    if (!(ch < rb + rh && ch > std::abs(rb - rh) && ch + rh > rb))
        throw InputError("snowman spheres must intersect with the head poking out");

    // Height where the two spheres meet.
    const double y = (rb * rb - rh * rh + ch * ch) / (2.0 * ch);
    const double body_cut = std::acos(std::clamp(y / rb, -1.0, 1.0));
    const double head_cut = std::acos(std::clamp((y - ch) / rh, -1.0, 1.0));

    auto rings = sphere_rings(Vec3::Zero(), Vec3::UnitY(), rb, kPi, body_cut, body_steps, 1);
    auto head = sphere_rings(Vec3(0, ch, 0), Vec3::UnitY(), rh, head_cut, 0.0, head_steps, 0);
    rings.insert(rings.end(), head.begin() + 1, head.end());

    Fixture fx;
    append_sweep(fx.mesh, rings, segments);
    fx.part_names = {"head", "body"};
    return fx;
}

/// Two spheres side by side joined by a U-shaped tube arching over them.
/// Classes: sphereA (0), sphereB (1), tube (2). The spheres nearly touch in
/// space but are far apart along the surface.
inline Fixture make_dumbbell(FixtureParams p = {})
{
    const double r = detail::positive(p.get("sphere_radius", 1.0), "sphere_radius");
    const double gap = detail::positive(p.get("gap", 0.3), "gap");
    const double rt = detail::positive(p.get("tube_radius", 0.15), "tube_radius");
    const double rise = detail::positive(p.get("rise", 0.5), "rise");
    const int segments = detail::positive_int(p.get("segments", 24), "segments", 3);
    const int steps = detail::positive_int(p.get("sphere_steps", 24), "sphere_steps", 2);
    p.check_consumed();
    if (!(rt < r)) throw InputError("dumbbell tube must be thinner than the spheres");

    const Vec3 ca(-(r + gap / 2), 0, 0);
    const Vec3 cb(r + gap / 2, 0, 0);
    const double cut = std::asin(rt / r);
    const double y_cut = r * std::cos(cut);
    const double y_top = r + rise;
    const double arc = r + gap / 2;
    const double step = rt * 0.8;
    const Vec3 up = Vec3::UnitY();

    std::vector<SweepRing> rings = sphere_rings(ca, up, r, kPi, cut, steps, 0);
    auto straight = [&](const Vec3& from, const Vec3& to) {
        const Vec3 dir = (to - from).normalized();
        const int n = std::max(1, static_cast<int>(std::ceil((to - from).norm() / step)));
        for (int i = 1; i <= n; ++i) rings.push_back({from + (to - from) * i / n, dir, rt, 2});
    };
    straight(ca + y_cut * up, Vec3(ca.x(), y_top, 0));
    const int arc_n = std::max(2, static_cast<int>(std::ceil(kPi * arc / step)));
    for (int i = 1; i <= arc_n; ++i) {
        const double th = kPi - kPi * i / arc_n;
        const Vec3 c(arc * std::cos(th), y_top + arc * std::sin(th), 0);
        const Vec3 tangent(std::sin(th), -std::cos(th), 0);
        rings.push_back({c, tangent, rt, 2});
    }
    straight(Vec3(cb.x(), y_top, 0), cb + y_cut * up);
    auto b = sphere_rings(cb, up, r, cut, kPi, steps, 1);
    rings.insert(rings.end(), b.begin() + 1, b.end());

    Fixture fx;
    append_sweep(fx.mesh, rings, segments);
    fx.part_names = {"sphereA", "sphereB", "tube"};
    return fx;
}

/// Capsule-and-sphere figure with the coarse body classes head (0), torso (1),
/// arm (2) and leg (3). Each limb is its own connected component.
inline Fixture make_humanoid(FixtureParams p = {})
{
    const int segments = detail::positive_int(p.get("segments", 20), "segments", 3);
    const int cap = detail::positive_int(p.get("cap_steps", 6), "cap_steps", 2);
    const double spread = p.get("arm_spread", 0.5);
    p.check_consumed();

    Fixture fx;
    Mesh& m = fx.mesh;
    append_sphere(m, Vec3(0, 1.65, 0), 0.22, 0, segments, 2 * cap);
    append_capsule(m, Vec3(0, 0.55, 0), Vec3(0, 1.2, 0), 0.28, 1, segments, cap);
    for (int side : {-1, 1}) {
        const Vec3 shoulder(side * 0.42, 1.3, 0);
        const Vec3 hand(side * (0.42 + 0.6 * std::sin(spread)), 1.3 - 0.6 * std::cos(spread), 0);
        append_capsule(m, shoulder, hand, 0.08, 2, segments, cap);
        append_capsule(m, Vec3(side * 0.15, 0.25, 0), Vec3(side * 0.2, -0.75, 0), 0.11, 3, segments, cap);
    }
    fx.part_names = {"head", "torso", "arm", "leg"};
    return fx;
}

/// n x n unit squares in the z = 0 plane, two triangles each, single class.
inline Fixture make_grid(FixtureParams p = {})
{
    const int n = detail::positive_int(p.get("n", 10), "n");
    const double spacing = detail::positive(p.get("spacing", 1.0), "spacing");
    p.check_consumed();
    Fixture fx;
    Mesh& m = fx.mesh;
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices.emplace_back(i * spacing, j * spacing, 0.0);
    auto id = [n](int i, int j) { return static_cast<std::int32_t>(j * (n + 1) + i); };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    m.face_labels.assign(m.num_faces(), 0);
    fx.part_names = {"plane"};
    return fx;
}

/// Subdivided icosahedron projected to a sphere; 20 * 4^level faces.
inline Mesh make_icosphere_mesh(int level, double radius = 1.0)
{
    Mesh m;
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    for (const auto& v : std::vector<Vec3>{
             {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}})
        m.vertices.push_back(v.normalized() * radius);
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
               {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int id = static_cast<int>(m.vertices.size());
            m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized() * radius);
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Triangle> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& f : m.faces) {
            const int a = mid(f[0], f[1]);
            const int b = mid(f[1], f[2]);
            const int c = mid(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        m.faces = std::move(next);
    }
    return m;
}

inline Fixture make_icosphere(FixtureParams p = {})
{
    const int level = detail::positive_int(p.get("level", 3), "level", 0);
    const double radius = detail::positive(p.get("radius", 1.0), "radius");
    p.check_consumed();
    Fixture fx;
    fx.mesh = make_icosphere_mesh(level, radius);
    // Northern (y > 0) and southern hemispheres.
    fx.mesh.face_labels.resize(fx.mesh.num_faces());
    for (std::size_t f = 0; f < fx.mesh.num_faces(); ++f)
        fx.mesh.face_labels[f] = fx.mesh.centroid(static_cast<FaceId>(f)).y() > 0 ? 0 : 1;
    fx.part_names = {"north", "south"};
    return fx;
}

inline const std::vector<std::string>& fixture_kinds()
{
    static const std::vector<std::string> kinds{"snowman", "dumbbell", "humanoid", "grid", "icosphere"};
    return kinds;
}

inline Fixture make_fixture(const std::string& kind, FixtureParams params = {})
{
    if (kind == "snowman") return make_snowman(std::move(params));
    if (kind == "dumbbell") return make_dumbbell(std::move(params));
    if (kind == "humanoid") return make_humanoid(std::move(params));
    if (kind == "grid") return make_grid(std::move(params));
    if (kind == "icosphere") return make_icosphere(std::move(params));
    throw InputError("unknown fixture kind '" + kind + "'");
}

} // namespace meshseg
