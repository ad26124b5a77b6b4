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

#include <fstream>

using namespace meshseg;
using namespace meshseg::testing;

namespace {

// Camera-facing square of half-size `s` (class 0) in front of a larger one (class 1).
Mesh square_scene(double s)
{
    Mesh m;
    m.vertices = {{-s, -s, 0.2}, {s, -s, 0.2}, {s, s, 0.2}, {-s, s, 0.2},
                  {-0.9, -0.9, -0.2}, {0.9, -0.9, -0.2}, {0.9, 0.9, -0.2}, {-0.9, 0.9, -0.2}};
    m.faces = {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}};
    m.face_labels = {0, 0, 1, 1};
    return m;
}

RasterSettings res(int n)
{
    RasterSettings s;
    s.width = s.height = n;
    return s;
}

// Tight box by scanning pixel2face directly (rows flipped to lower-left origin).
Box brute_box(const RenderOutput& r, const std::vector<int>& labels, int cls)
{
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    for (std::size_t i = 0; i < r.pixel2face.size(); ++i) {
        const auto f = r.pixel2face[i];
        if (f < 0 || labels[f] != cls) continue;
        const int col = static_cast<int>(i % r.width);
        const int j = r.height - 1 - static_cast<int>(i / r.width);
        x0 = std::min(x0, col);
        x1 = std::max(x1, col);
        y0 = std::min(y0, j);
        y1 = std::max(y1, j);
    }
    return {double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

} // namespace

TEST(OracleDetector, TightBoxForVisiblePart)
{
    const Fixture fx = make_snowman();
    const Mesh m = normalize_mesh(fx.mesh);
    const auto r = rasterize(m, Camera{0.4, 0.7}, res(200));
    OracleDetector det(fx.mesh.face_labels, {0, 1});
    for (int k = 0; k < 2; ++k) {
        const auto dets = det.detect({r, 3, k, fx.part_names[k]});
        ASSERT_EQ(dets.size(), 1u);
        EXPECT_EQ(dets[0].box, brute_box(r, fx.mesh.face_labels, k));
        EXPECT_EQ(dets[0].score, 1.0);
        EXPECT_EQ(dets[0].view_index, 3);
        EXPECT_EQ(dets[0].prompt_index, k);
    }
}

TEST(OracleDetector, OccludedPartGivesNothing)
{
    const Mesh m = square_scene(0.3);
    // From behind, the large square hides the small one entirely.
    const auto r = rasterize(m, Camera{0.0, kPi}, res(128));
    ASSERT_FALSE(r.is_visible(0));
    ASSERT_FALSE(r.is_visible(1));
    EXPECT_TRUE(oracle_detect(r, m.face_labels, 0, {}).empty());
    EXPECT_EQ(oracle_detect(r, m.face_labels, 1, {}).size(), 1u);
}

TEST(OracleDetector, ZeroNoiseUsesUpperScore)
{
    const Mesh m = square_scene(0.3);
    const auto r = rasterize(m, Camera{}, res(128));
    NoiseModel n;
    n.score_min = 0.2;
    n.score_max = 0.8;
    const auto a = oracle_detect(r, m.face_labels, 0, n);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].score, 0.8);
    EXPECT_EQ(a[0].box, brute_box(r, m.face_labels, 0));
    EXPECT_EQ(a, oracle_detect(r, m.face_labels, 0, n));
}

TEST(OracleDetector, CertainDropGivesNothing)
{
    const Mesh m = square_scene(0.3);
    const auto r = rasterize(m, Camera{}, res(128));
    NoiseModel n;
    n.drop_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        n.seed = seed;
        EXPECT_TRUE(oracle_detect(r, m.face_labels, 0, n, static_cast<int>(seed), 0).empty());
    }
}

TEST(OracleDetector, JitterStaysWithinBound)
{
    // Half-size chosen so the square spans about 100 px at 256^2.
    const Mesh m = square_scene(0.45);
    const auto r = rasterize(m, Camera{}, res(256));
    const Box truth = brute_box(r, m.face_labels, 0);
    EXPECT_NEAR(truth.w, 100.0, 15.0);
    EXPECT_NEAR(truth.h, 100.0, 15.0);
    NoiseModel n;
    n.jitter_frac = 0.1;
    double max_shift = 0.0;
    for (int draw = 0; draw < 1000; ++draw) {
        n.seed = static_cast<std::uint64_t>(draw);
        const auto d = oracle_detect(r, m.face_labels, 0, n, draw % 10, draw % 3);
        ASSERT_EQ(d.size(), 1u);
        const Box& b = d[0].box;
        const double shifts[] = {std::abs(b.x - truth.x), std::abs(b.x + b.w - truth.x - truth.w),
                                 std::abs(b.y - truth.y), std::abs(b.y + b.h - truth.y - truth.h)};
        for (double s : shifts) max_shift = std::max(max_shift, s);
        EXPECT_LE(std::abs(b.x - truth.x), 0.1 * truth.w + 1e-9);
        EXPECT_LE(std::abs(b.x + b.w - truth.x - truth.w), 0.1 * truth.w + 1e-9);
        EXPECT_LE(std::abs(b.y - truth.y), 0.1 * truth.h + 1e-9);
        EXPECT_LE(std::abs(b.y + b.h - truth.y - truth.h), 0.1 * truth.h + 1e-9);
    }
    EXPECT_GT(max_shift, 5.0);
}

TEST(OracleDetector, NoisyRunsAreReproducibleAndInImage)
{
    const Fixture fx = make_dumbbell();
    const Mesh m = normalize_mesh(fx.mesh);
    const auto r = rasterize(m, Camera{0.5, 0.1}, res(128));
    NoiseModel n;
    n.jitter_frac = 0.3;
    n.drop_prob = 0.2;
    n.spurious_rate = 2.0;
    n.score_min = 0.3;
    n.seed = 99;
    for (int view = 0; view < 20; ++view) {
        const auto a = oracle_detect(r, fx.mesh.face_labels, 2, n, view, 1);
        EXPECT_EQ(a, oracle_detect(r, fx.mesh.face_labels, 2, n, view, 1));
        for (const auto& d : a) {
            EXPECT_GE(d.box.x, 0.0);
            EXPECT_GE(d.box.y, 0.0);
            EXPECT_LE(d.box.x + d.box.w, 128.0 + 1e-9);
            EXPECT_LE(d.box.y + d.box.h, 128.0 + 1e-9);
            EXPECT_GE(d.score, 0.3);
            EXPECT_LE(d.score, 1.0);
        }
    }
}

TEST(OracleDetector, RejectsBadNoise)
{
    NoiseModel n;
    n.drop_prob = 1.5;
    EXPECT_THROW(OracleDetector({0}, {0}, n), InputError);
    n = {};
    n.score_min = 0.9;
    n.score_max = 0.1;
    EXPECT_THROW(OracleDetector({0}, {0}, n), InputError);
}

TEST(SanitizeDetections, ClampsAndDrops)
{
    std::vector<Detection> in{{Box{-10, -10, 30, 30}, 1.7, 0, 0},
                              {Box{200, 0, 10, 10}, 0.5, 0, 0},
                              {Box{5, 5, std::nan(""), 3}, 0.5, 0, 0}};
    const auto out = sanitize_detections(in, 100, 100);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].box, (Box{0, 0, 20, 20}));
    EXPECT_EQ(out[0].score, 1.0);
}

TEST(DetectionLog, RecordReplayRoundTrip)
{
    const Fixture fx = make_snowman();
    const Mesh m = normalize_mesh(fx.mesh);
    NoiseModel n;
    n.jitter_frac = 0.05;
    n.spurious_rate = 1.0;
    n.score_min = 0.4;
    n.seed = 5;
    OracleDetector oracle(fx.mesh.face_labels, {0, 1}, n);
    RecordingDetector rec(oracle);
    std::vector<RenderOutput> renders;
    for (const auto& cam : sample_views(3, ViewSampling::Normal, 1)) renders.push_back(rasterize(m, cam, res(96)));
    std::vector<std::vector<Detection>> live;
    for (int v = 0; v < 3; ++v)
        for (int k = 0; k < 2; ++k) live.push_back(rec.detect({renders[v], v, k, fx.part_names[k]}));

    const auto dir = temp_dir("detlog");
    rec.log().save(dir / "d.json");
    ReplayDetector replay(DetectionLog::load(dir / "d.json"));
    int i = 0;
    for (int v = 0; v < 3; ++v)
        for (int k = 0; k < 2; ++k) EXPECT_EQ(replay.detect({renders[v], v, k, fx.part_names[k]}), live[i++]);
    EXPECT_TRUE(replay.detect({renders[0], 7, 0, "head"}).empty());
}

TEST(DetectionLog, VersionMismatchAndMalformed)
{
    EXPECT_THROW(DetectionLog::from_json({{"version", 2}, {"views", nlohmann::json::array()}}), InputError);
    EXPECT_THROW(DetectionLog::from_json({{"views", nlohmann::json::array()}}), InputError);
    EXPECT_THROW(DetectionLog::from_json({{"version", 1}, {"views", {{{"view_index", 0}}}}}), InputError);
    const auto dir = temp_dir("detlog_bad");
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(DetectionLog::load(dir / "bad.json"), InputError);
    EXPECT_THROW(DetectionLog::load(dir / "absent.json"), InputError);
}

TEST(DetectionLog, HandEditedBoxDrivesVisibleSet)
{
    const Fixture fx = make_snowman();
    PipelineConfig c;
    c.resolution = 128;
    c.n_views = 2;
    c.reweight = ReweightMode::None;
    c.smoothing = false;
    const Box box{30, 40, 50, 35};
    const nlohmann::json j = {{"version", 1},
                              {"views", {{{"view_index", 1}, {"prompt_index", 0},
                                          {"detections", {{{"x", box.x}, {"y", box.y}, {"w", box.w}, {"h", box.h}, {"score", 0.8}}}}}}}};
    ReplayDetector replay(DetectionLog::from_json(j));
    const auto result = segment(fx.mesh, {"head"}, c, replay);

    const Mesh m = normalize_mesh(fx.mesh);
    const auto cams = sample_views(2, c.sampling, c.view_seed, base_camera(c));
    const auto r = rasterize(m, cams[1], raster_settings(c));
    std::vector<FaceId> scored;
    for (FaceId f = 0; f < static_cast<FaceId>(m.num_faces()); ++f)
        if (result.raw_scores(f, 0) > 0) scored.push_back(f);
    EXPECT_EQ(scored, faces_in_box(m, r, box));
    EXPECT_FALSE(scored.empty());
}

TEST(DetectionLog, EmptyReplayGivesZeroScores)
{
    const Fixture fx = make_snowman();
    PipelineConfig c;
    c.resolution = 64;
    c.n_views = 2;
    ReplayDetector replay(DetectionLog::from_json({{"version", 1}, {"views", nlohmann::json::array()}}));
    const auto result = segment(fx.mesh, fx.part_names, c, replay);
    for (std::size_t f = 0; f < fx.mesh.num_faces(); ++f) {
        EXPECT_EQ(result.raw_scores(f, 0), 0.0);
        EXPECT_EQ(result.raw_scores(f, 1), 0.0);
        EXPECT_EQ(result.labels[f], 0);
    }
    EXPECT_EQ(result.empty_queries, 4);
}
