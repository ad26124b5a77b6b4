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

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace meshseg;
using namespace meshseg::testing;

namespace {

// All-pairs distances over the dual graph, with arcs built from raw shared
// vertices or shared edges.
std::vector<std::vector<double>> floyd_warshall(const Mesh& m, DualAdjacency adjacency)
{
    const auto n = m.num_faces();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, kUnreachable));
    std::map<std::pair<int, int>, std::vector<int>> shared;
    for (std::size_t f = 0; f < n; ++f) {
        d[f][f] = 0.0;
        for (int i = 0; i < 3; ++i) {
            const int a = m.faces[f][i], b = m.faces[f][(i + 1) % 3];
            if (adjacency == DualAdjacency::SharedEdge)
                shared[{std::min(a, b), std::max(a, b)}].push_back(static_cast<int>(f));
            else
                shared[{a, a}].push_back(static_cast<int>(f));
        }
    }
    for (const auto& [key, fs] : shared)
        for (int f : fs)
            for (int g : fs)
                if (f != g) d[f][g] = (m.centroid(f) - m.centroid(g)).norm();
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

std::vector<FaceId> all_faces(const Mesh& m)
{
    std::vector<FaceId> ids(m.num_faces());
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

FaceId nearest_face(const Mesh& m, const Vec3& p)
{
    FaceId best = 0;
    for (FaceId f = 1; f < static_cast<FaceId>(m.num_faces()); ++f)
        if ((m.centroid(f) - p).norm() < (m.centroid(best) - p).norm()) best = f;
    return best;
}

GeodesicField field_of(std::vector<double> distances)
{
    GeodesicField f;
    f.source = 0;
    f.distances = std::move(distances);
    f.faces.resize(f.distances.size());
    std::iota(f.faces.begin(), f.faces.end(), 0);
    return f;
}

Mesh two_components()
{
    Mesh m = make_icosphere_mesh(1);
    const Mesh other = make_icosphere_mesh(1, 0.5);
    const auto off = static_cast<std::int32_t>(m.num_vertices());
    for (const auto& v : other.vertices) m.vertices.push_back(v + Vec3(3, 0, 0));
    for (const auto& f : other.faces) m.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    return m;
}

} // namespace

TEST(DualGraphDistances, MatchFloydWarshallOnSmallMeshes)
{
    std::vector<Mesh> meshes{tetrahedron(), make_grid({{"n", 10}}).mesh, make_icosphere_mesh(1),
                             make_snowman({{"segments", 8}, {"body_steps", 6}, {"head_steps", 4}}).mesh, two_components()};
    std::mt19937_64 rng(17);
    for (int i = 0; i < 5; ++i) meshes.push_back(random_mesh(rng, 60, 120));
    for (const auto adjacency : {DualAdjacency::SharedVertex, DualAdjacency::SharedEdge}) {
        for (const auto& m : meshes) {
            ASSERT_LE(m.num_faces(), 200u);
            const auto oracle = floyd_warshall(m, adjacency);
            const GeodesicEngine engine(m, GeodesicBackend::Graph, adjacency);
            const auto targets = all_faces(m);
            for (FaceId s = 0; s < static_cast<FaceId>(m.num_faces()); ++s) {
                const auto field = engine.distances(s, targets);
                EXPECT_EQ(field.distances[s], 0.0);
                for (std::size_t t = 0; t < targets.size(); ++t) {
                    if (std::isinf(oracle[s][t]))
                        EXPECT_TRUE(std::isinf(field.distances[t]));
                    else
                        EXPECT_NEAR(field.distances[t], oracle[s][t], 1e-12 * (1 + oracle[s][t]));
                }
            }
        }
    }
}

TEST(DualGraphDistances, SymmetricAndTriangleInequality)
{
    const Mesh m = make_icosphere_mesh(2);
    const GeodesicEngine engine(m);
    const auto targets = all_faces(m);
    std::vector<std::vector<double>> d;
    for (FaceId s = 0; s < 40; ++s) d.push_back(engine.distances(s, targets).distances);
    for (int a = 0; a < 40; ++a)
        for (int b = 0; b < 40; ++b) {
            EXPECT_NEAR(d[a][b], d[b][a], 1e-12);
            for (int c = 0; c < 40; ++c) EXPECT_LE(d[a][c], d[a][b] + d[b][c] + 1e-12);
        }
}

TEST(DualGraphDistances, PlanarGridCloseToEuclidean)
{
    const Mesh grid = make_grid({{"n", 20}}).mesh;
    const GeodesicEngine engine(grid);
    const auto targets = all_faces(grid);
    double worst = 0.0;
    for (FaceId a = 0; a < static_cast<FaceId>(grid.num_faces()); ++a) {
        const auto field = engine.distances(a, targets);
        for (FaceId b = 0; b < static_cast<FaceId>(grid.num_faces()); ++b) {
            if (a == b) continue;
            const double euclid = (grid.centroid(a) - grid.centroid(b)).norm();
            const double geo = field.distances[b];
            ASSERT_GE(geo, euclid - 1e-9);
            worst = std::max(worst, geo / euclid);
        }
    }
    EXPECT_LE(worst, 1.15);
}

TEST(DualGraphDistances, EdgeOnlyArcsZigzag)
{
    // Edge-only arcs on the same grid stretch far beyond the vertex-sharing graph.
    const Mesh grid = make_grid({{"n", 20}}).mesh;
    const GeodesicEngine edge(grid, GeodesicBackend::Graph, DualAdjacency::SharedEdge);
    const GeodesicEngine vertex(grid);
    const auto targets = all_faces(grid);
    const auto e = edge.distances(0, targets), v = vertex.distances(0, targets);
    double worst = 0.0;
    for (std::size_t b = 1; b < targets.size(); ++b) {
        EXPECT_LE(v.distances[b], e.distances[b] + 1e-12);
        worst = std::max(worst, e.distances[b] / (grid.centroid(0) - grid.centroid(targets[b])).norm());
    }
    EXPECT_GT(worst, 1.15);
}

TEST(DualGraphDistances, IcosphereAntipodesNearPi)
{
    const Mesh sphere = make_icosphere_mesh(4);
    const GeodesicEngine engine(sphere);
    for (const Vec3 dir : {Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0.3, -0.5, 0.8).normalized()}) {
        const FaceId a = nearest_face(sphere, dir);
        const FaceId b = nearest_face(sphere, -dir);
        const std::array<FaceId, 1> target{b};
        const double d = engine.distances(a, target).distances[0];
        EXPECT_NEAR(d, kPi, 0.1 * kPi);
    }
}

TEST(DualGraphDistances, UnreachableIsInfinite)
{
    const Mesh m = two_components();
    const GeodesicEngine engine(m);
    const std::array<FaceId, 2> targets{1, static_cast<FaceId>(m.num_faces()) - 1};
    const auto field = engine.distances(0, targets);
    EXPECT_TRUE(std::isfinite(field.distances[0]));
    EXPECT_TRUE(std::isinf(field.distances[1]));
}

TEST(DualGraphDistances, RangeChecks)
{
    const Mesh m = tetrahedron();
    const GeodesicEngine engine(m);
    const std::array<FaceId, 1> ok{1}, bad{9};
    EXPECT_THROW(engine.distances(-1, ok), InputError);
    EXPECT_THROW(engine.distances(0, bad), InputError);
    EXPECT_THROW(engine.distances(0, std::span<const FaceId>{}), InputError);
}

TEST(HeatDistances, AgreeWithGraphOnPlaneAndSphere)
{
    for (const Mesh& m : {make_grid({{"n", 20}, {"spacing", 0.1}}).mesh, make_icosphere_mesh(3)}) {
        const GeodesicEngine graph(m, GeodesicBackend::Graph);
        const GeodesicEngine heat(m, GeodesicBackend::Heat);
        const auto targets = all_faces(m);
        for (FaceId s : {0, static_cast<FaceId>(m.num_faces() / 2)}) {
            const auto g = graph.distances(s, targets).distances;
            const auto h = heat.distances(s, targets).distances;
            EXPECT_EQ(h[s], 0.0);
            const double far = *std::max_element(g.begin(), g.end());
            for (std::size_t t = 0; t < g.size(); ++t) {
                if (g[t] < 0.2 * far) continue;
                EXPECT_NEAR(h[t], g[t], 0.2 * g[t]) << "source " << s << " target " << t;
            }
        }
    }
}

TEST(HeatDistances, OtherComponentUnreachable)
{
    const Mesh m = two_components();
    const GeodesicEngine heat(m, GeodesicBackend::Heat);
    const auto d = heat.distances(0, all_faces(m)).distances;
    EXPECT_TRUE(std::isfinite(d[1]));
    EXPECT_TRUE(std::isinf(d.back()));
}

TEST(CapitalFace, Singleton)
{
    const Mesh m = make_icosphere_mesh(1);
    const std::vector<double> areas(m.num_faces(), 1.0);
    const std::array<FaceId, 1> t{7};
    EXPECT_EQ(capital_face<double>(m, t, areas), 7);
    EXPECT_THROW(capital_face<double>(m, std::span<const FaceId>{}, areas), InputError);
}

TEST(CapitalFace, SymmetricFanPicksMiddle)
{
    // Five equal triangles fanned over the upper half disc around the origin.
    Mesh fan;
    fan.vertices.emplace_back(0, 0, 0);
    for (int i = 0; i <= 5; ++i) fan.vertices.emplace_back(std::cos(kPi * i / 5), std::sin(kPi * i / 5), 0);
    for (int i = 0; i < 5; ++i) fan.faces.push_back({0, i + 1, i + 2});
    const std::vector<double> areas(5, 1.0);
    const std::vector<FaceId> targets{0, 1, 2, 3, 4};
    EXPECT_EQ(capital_face<double>(fan, targets, areas), 2);
    EXPECT_EQ(capital_face<double>(fan, targets, areas, CapitalAverage::UniqueVertices), 2);
}

TEST(CapitalFace, SphericalCapPicksPoleFace)
{
    const Mesh sphere = make_icosphere_mesh(3);
    // The pole sits at the centre of an original icosahedron face, which is the
    // centre of a subdivided face after every level.
    const Mesh base = make_icosphere_mesh(0);
    const Vec3 pole = (base.centroid(0)).normalized();
    std::vector<FaceId> cap;
    for (FaceId f = 0; f < static_cast<FaceId>(sphere.num_faces()); ++f)
        if (sphere.centroid(f).normalized().dot(pole) > 0.8) cap.push_back(f);
    ASSERT_GT(cap.size(), 20u);
    const std::vector<double> areas(sphere.num_faces(), 1.0);
    const FaceId got = capital_face<double>(sphere, cap, areas);

    // Face hit by the ray from the centre through the pole.
    FaceId hit = -1;
    for (auto f : cap) {
        const Vec3 a = sphere.corner(f, 0), b = sphere.corner(f, 1), c = sphere.corner(f, 2);
        const Vec3 n = (b - a).cross(c - a);
        const double t = n.dot(a) / n.dot(pole);
        const Vec3 p = t * pole;
        const bool inside = (b - a).cross(p - a).dot(n) >= 0 && (c - b).cross(p - b).dot(n) >= 0 &&
                            (a - c).cross(p - c).dot(n) >= 0;
        if (inside) hit = f;
    }
    ASSERT_GE(hit, 0);
    EXPECT_EQ(got, hit);

    // Same answer from a brute-force scan at the averaged point.
    Vec3 avg = Vec3::Zero();
    for (auto f : cap) avg += sphere.centroid(f);
    avg /= static_cast<double>(cap.size());
    FaceId scan = cap[0];
    for (auto f : cap)
        if (point_triangle_distance(avg, sphere.corner(f, 0), sphere.corner(f, 1), sphere.corner(f, 2)) <
            point_triangle_distance(avg, sphere.corner(scan, 0), sphere.corner(scan, 1), sphere.corner(scan, 2)))
            scan = f;
    EXPECT_EQ(got, scan);
}

TEST(CapitalFace, AreaWeightsPullTheCapital)
{
    Mesh strip = make_grid({{"n", 4}}).mesh;
    std::vector<FaceId> row;
    for (FaceId f = 0; f < 8; ++f) row.push_back(f);
    std::vector<int> areas(strip.num_faces(), 1);
    const FaceId plain = capital_face<int>(strip, row, areas);
    areas[7] = 1000;
    const FaceId pulled = capital_face<int>(strip, row, areas);
    EXPECT_GT(strip.centroid(pulled).x(), strip.centroid(plain).x());
}

TEST(GaussianReweight, ConstantDistancesGiveEqualWeights)
{
    const auto w = gaussian_reweight(field_of({2.0, 2.0, 2.0}), 1e-6).weights;
    EXPECT_EQ(w[0], w[1]);
    EXPECT_EQ(w[1], w[2]);
    EXPECT_GT(w[0], 0.0);
}

TEST(GaussianReweight, PeaksAtTheMean)
{
    const auto w = gaussian_reweight(field_of({0.0, 1.0, 2.0}), 1e-6).weights;
    EXPECT_GT(w[1], w[0]);
    EXPECT_GT(w[1], w[2]);
    EXPECT_DOUBLE_EQ(w[0], w[2]);
}

TEST(GaussianReweight, MatchesIndependentDensity)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd(3.0, 0.7);
    std::vector<double> d(500);
    for (auto& x : d) x = std::abs(nd(rng));
    const auto w = gaussian_reweight(field_of(d), 1e-6).weights;
    long double mean = 0, var = 0;
    for (double x : d) mean += x;
    mean /= d.size();
    for (double x : d) var += (x - mean) * (x - mean);
    const long double sd = std::sqrt(var / d.size());
    auto density = [&](long double x) {
        const long double z = (x - mean) / sd;
        return std::exp(-0.5L * z * z) / (sd * std::sqrt(2.0L * 3.14159265358979323846L));
    };
    for (std::size_t i = 1; i < d.size(); ++i)
        EXPECT_NEAR(w[i] / w[0], static_cast<double>(density(d[i]) / density(d[0])), 1e-9);
}

TEST(GaussianReweight, UnreachableGetsZeroAndIsIgnored)
{
    const auto with = gaussian_reweight(field_of({0.0, 1.0, 2.0, kUnreachable}), 1e-6).weights;
    const auto without = gaussian_reweight(field_of({0.0, 1.0, 2.0}), 1e-6).weights;
    EXPECT_EQ(with[3], 0.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(with[i], without[i]);
}

TEST(GaussianReweight, RankingIsScaleInvariant)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<double> d(100);
    for (auto& x : d) x = u(rng);
    auto scaled = d;
    for (auto& x : scaled) x *= 37.5;
    const auto a = gaussian_reweight(field_of(d), 1e-9).weights;
    const auto b = gaussian_reweight(field_of(scaled), 1e-9 * 37.5).weights;
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(b[i] * 37.5, a[i], 1e-12 * (1 + a[i]));
        for (std::size_t j = 0; j < d.size(); ++j) EXPECT_EQ(a[i] < a[j], b[i] < b[j]);
    }
}

TEST(MaxGeodesicReweight, Examples)
{
    const auto w = max_geodesic_reweight(field_of({0.0, 1.0})).weights;
    EXPECT_EQ(w[0], 1.0);
    EXPECT_DOUBLE_EQ(w[1], 1.0 - 1.0 / (1.0 + kMaxGeodesicEpsilon));
    EXPECT_GT(w[1], 0.0);
}

TEST(MaxGeodesicReweight, StrictlyDecreasing)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<double> d(200);
    for (auto& x : d) x = u(rng);
    const auto w = max_geodesic_reweight(field_of(d)).weights;
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_GT(w[i], 0.0);
        EXPECT_LE(w[i], 1.0);
        for (std::size_t j = 0; j < d.size(); ++j)
            if (d[i] < d[j]) EXPECT_GT(w[i], w[j]);
    }
}

TEST(SoftmaxReweight, Examples)
{
    EXPECT_EQ(softmax_geodesic_reweight(field_of({4.2})).weights[0], 1.0);
    const auto eq = softmax_geodesic_reweight(field_of({1.5, 1.5})).weights;
    EXPECT_DOUBLE_EQ(eq[0], 0.5);
    EXPECT_DOUBLE_EQ(eq[1], 0.5);
    const auto ln2 = softmax_geodesic_reweight(field_of({0.0, std::log(2.0)})).weights;
    EXPECT_NEAR(ln2[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ln2[1], 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxReweight, SumsToOneOnLargeDistances)
{
    const auto w = softmax_geodesic_reweight(field_of({1000.0, 1001.0, 1002.0, kUnreachable})).weights;
    EXPECT_NEAR(w[0] + w[1] + w[2], 1.0, 1e-12);
    EXPECT_GT(w[2], 0.0);
    EXPECT_EQ(w[3], 0.0);
}
