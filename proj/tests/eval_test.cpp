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
#include <numeric>
#include <set>

using namespace meshseg;
using namespace meshseg::testing;

namespace {

/// IoU straight from the set definition: |P ∩ G| / |P ∪ G| per class.
std::vector<std::optional<double>> iou_oracle(const std::vector<int>& pred, const std::vector<int>& gt, int K)
{
    std::vector<std::optional<double>> out(K);
    for (int k = 0; k < K; ++k) {
        std::set<std::size_t> p, g, both, any;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == k) p.insert(i);
            if (gt[i] == k) g.insert(i);
        }
        std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::inserter(both, both.end()));
        std::set_union(p.begin(), p.end(), g.begin(), g.end(), std::inserter(any, any.end()));
        if (!any.empty()) out[k] = double(both.size()) / double(any.size());
    }
    return out;
}

/// Snowman PLY plus manifest in a fresh directory.
std::filesystem::path snowman_benchmark(const std::string& name, int copies, bool with_missing)
{
    const auto dir = temp_dir(name);
    const Fixture fx = make_snowman();
    save_mesh(dir / "snowman.ply", fx.mesh);
    nlohmann::json shapes = nlohmann::json::array();
    for (int i = 0; i < copies; ++i) shapes.push_back({{"mesh", "snowman.ply"}, {"category", "snowman"}});
    if (with_missing) shapes.push_back({{"mesh", "absent.ply"}, {"category", "snowman"}});
    const nlohmann::json manifest = {
        {"shapes", shapes},
        {"parts", {{{"class_id", 0}, {"prompt", "head"}}, {{"class_id", 1}, {"prompt", "body"}}}}};
    std::ofstream(dir / "manifest.json") << manifest.dump(1);
    return dir;
}

PipelineConfig quick_config()
{
    PipelineConfig c;
    c.resolution = 128;
    c.n_views = 6;
    return c;
}

} // namespace

TEST(PartIoU, WorkedExamples)
{
    const std::vector<int> gt{0, 0, 1, 1, 1, 1};
    const std::vector<int> shifted{0, 0, 0, 0, 1, 1};
    const auto a = iou_per_part(shifted, gt, 2);
    EXPECT_DOUBLE_EQ(*a[0], 0.5);
    EXPECT_DOUBLE_EQ(*a[1], 0.5);

    const std::vector<int> gt2{0, 1, 1};
    const std::vector<int> off_by_one{1, 1, 0};
    const auto b = iou_per_part(off_by_one, gt2, 2);
    EXPECT_DOUBLE_EQ(*b[0], 0.0);
    EXPECT_DOUBLE_EQ(*b[1], 1.0 / 3.0);

    const std::vector<int> gt3{0, 0, 1, 1};
    const std::vector<int> all_zero{0, 0, 0, 0};
    const auto c = iou_per_part(all_zero, gt3, 2);
    EXPECT_DOUBLE_EQ(*c[0], 0.5);
    EXPECT_DOUBLE_EQ(*c[1], 0.0);
    EXPECT_DOUBLE_EQ(*mean_defined(c), 0.25);
}

TEST(PartIoU, AbsentClassIsUndefined)
{
    const std::vector<int> labels{0, 0, kUnlabeled};
    const auto r = iou_per_part(labels, labels, 3);
    EXPECT_DOUBLE_EQ(*r[0], 1.0);
    EXPECT_FALSE(r[1]);
    EXPECT_FALSE(r[2]);
    EXPECT_DOUBLE_EQ(*mean_defined(r), 1.0);
    const std::vector<std::optional<double>> none(2);
    EXPECT_FALSE(mean_defined(none));
}

TEST(PartIoU, RejectsBadInput)
{
    const std::vector<int> a{0, 1}, b{0}, c{0, 2}, d{0, -2};
    EXPECT_THROW(iou_per_part(a, b, 2), InputError);
    EXPECT_THROW(iou_per_part(a, c, 2), InputError);
    EXPECT_THROW(iou_per_part(d, a, 2), InputError);
}

TEST(PartIoU, MatchesSetDefinitionOnRandomLabels)
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(1, 60);
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = 1 + trial % 5;
        std::uniform_int_distribution<int> label(-1, K - 1);
        const int n = len(rng);
        std::vector<int> p(n), g(n);
        for (auto& v : p) v = label(rng);
        for (auto& v : g) v = label(rng);
        const auto fast = iou_per_part(p, g, K);
        const auto slow = iou_oracle(p, g, K);
        ASSERT_EQ(fast.size(), slow.size());
        for (int k = 0; k < K; ++k) {
            ASSERT_EQ(fast[k].has_value(), slow[k].has_value());
            if (fast[k]) {
                EXPECT_DOUBLE_EQ(*fast[k], *slow[k]);
                EXPECT_GE(*fast[k], 0.0);
                EXPECT_LE(*fast[k], 1.0);
            }
        }
        // Symmetric in its arguments and invariant to face order.
        const auto swapped = iou_per_part(g, p, K);
        for (int k = 0; k < K; ++k) EXPECT_EQ(fast[k], swapped[k]);
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> pp(n), gg(n);
        for (int i = 0; i < n; ++i) {
            pp[i] = p[order[i]];
            gg[i] = g[order[i]];
        }
        const auto permuted = iou_per_part(pp, gg, K);
        for (int k = 0; k < K; ++k) EXPECT_EQ(fast[k], permuted[k]);
    }
}

TEST(Summary, PartThenCategoryMeans)
{
    ShapeReport a{"a", "x", false, "", {1.0, 0.5}, 0.75};
    ShapeReport b{"b", "x", false, "", {0.0, std::nullopt}, 0.0};
    ShapeReport c{"c", "y", false, "", {0.5, 0.5}, 0.5};
    ShapeReport dead{"d", "y", true, "boom", {}, std::nullopt};
    const auto r = summarize({a, b, c, dead}, {"p", "q"});
    EXPECT_DOUBLE_EQ(*r.part_iou[0], 0.5);
    EXPECT_DOUBLE_EQ(*r.part_iou[1], 0.5);
    EXPECT_DOUBLE_EQ(*r.overall, 0.5);
    EXPECT_DOUBLE_EQ(*r.category_miou.at("x"), (0.5 + 0.5) / 2);
    EXPECT_DOUBLE_EQ(*r.category_miou.at("y"), 0.5);
    EXPECT_EQ(r.shapes.size(), 4u);
}

TEST(Manifest, ParsesAndResolvesPaths)
{
    const nlohmann::json j = {
        {"shapes", {{{"mesh", "m.ply"}, {"labels", "/abs/l.txt"}, {"category", "chair"}}, {{"mesh", "n.obj"}}}},
        {"parts", {{{"class_id", 2}, {"prompt", "leg"}}, {{"class_id", 0}, {"prompt", "seat"}}}}};
    const auto m = parse_manifest(j, "/data");
    ASSERT_EQ(m.shapes.size(), 2u);
    EXPECT_EQ(m.shapes[0].mesh, std::filesystem::path("/data/m.ply"));
    EXPECT_EQ(m.shapes[0].labels, std::filesystem::path("/abs/l.txt"));
    EXPECT_EQ(m.shapes[1].category, "default");
    EXPECT_TRUE(m.shapes[1].labels.empty());
    EXPECT_EQ(m.num_classes(), 3);
}

TEST(Manifest, RejectsEmptyAndMalformed)
{
    const nlohmann::json parts = {{{"class_id", 0}, {"prompt", "a"}}};
    EXPECT_THROW(parse_manifest({{"shapes", nlohmann::json::array()}, {"parts", parts}}), InputError);
    EXPECT_THROW(parse_manifest({{"shapes", {{{"mesh", "a.ply"}}}}, {"parts", nlohmann::json::array()}}), InputError);
    EXPECT_THROW(parse_manifest({{"parts", parts}}), InputError);
    EXPECT_THROW(parse_manifest({{"shapes", {{{"mesh", "a.ply"}}}}, {"parts", {{{"class_id", -1}, {"prompt", "a"}}}}}),
                 InputError);
    const auto dir = temp_dir("manifest_bad");
    std::ofstream(dir / "m.json") << "[";
    EXPECT_THROW(load_manifest(dir / "m.json"), InputError);
}

TEST(LabelFile, ParsesWithComments)
{
    const auto dir = temp_dir("labels");
    std::ofstream(dir / "l.txt") << "# header\n0\n 1 \n\n-1\n";
    EXPECT_EQ(load_label_file(dir / "l.txt"), (std::vector<int>{0, 1, -1}));
    std::ofstream(dir / "bad.txt") << "0\nx\n";
    try {
        load_label_file(dir / "bad.txt");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(LabeledShape, LabelSources)
{
    const auto dir = temp_dir("labeled");
    Fixture fx = make_snowman();
    Mesh bare = fx.mesh;
    bare.face_labels.clear();
    save_mesh(dir / "bare.ply", bare);
    save_mesh(dir / "src.ply", fx.mesh);
    {
        std::ofstream out(dir / "l.txt");
        for (int l : fx.mesh.face_labels) out << l << '\n';
    }
    ManifestShape s;
    s.mesh = dir / "bare.ply";
    EXPECT_THROW(load_labeled_shape(s), InputError);
    s.labels = dir / "l.txt";
    EXPECT_EQ(load_labeled_shape(s).face_labels, fx.mesh.face_labels);

    // Transfer from a copy that carries vertex labels.
    Mesh with_vertices = fx.mesh;
    with_vertices.vertex_labels.assign(with_vertices.num_vertices(), 0);
    for (std::size_t f = 0; f < with_vertices.num_faces(); ++f)
        for (auto v : with_vertices.faces[f]) with_vertices.vertex_labels[v] = fx.mesh.face_labels[f];
    save_mesh(dir / "src_v.ply", with_vertices);
    ManifestShape t;
    t.mesh = dir / "bare.ply";
    t.label_source = dir / "src_v.ply";
    const auto moved = load_labeled_shape(t);
    EXPECT_EQ(moved.vertex_labels, with_vertices.vertex_labels);

    std::ofstream(dir / "short.txt") << "0\n1\n";
    ManifestShape u;
    u.mesh = dir / "bare.ply";
    u.labels = dir / "short.txt";
    EXPECT_THROW(load_labeled_shape(u), InputError);
}

TEST(Benchmark, OracleSnowman)
{
    const auto dir = snowman_benchmark("bench_snowman", 1, false);
    PipelineConfig c;
    c.resolution = 512;
    const auto report = run_benchmark(load_manifest(dir / "manifest.json"), c);
    ASSERT_EQ(report.shapes.size(), 1u);
    EXPECT_FALSE(report.shapes[0].failed);
    ASSERT_TRUE(report.overall);
    EXPECT_GE(*report.overall, 0.90);
    EXPECT_GE(*report.part_iou[0], 0.90);
    EXPECT_GE(*report.part_iou[1], 0.90);
    EXPECT_EQ(report.part_faces[0] + report.part_faces[1], static_cast<std::int64_t>(make_snowman().mesh.num_faces()));
}

TEST(Benchmark, MissingShapeIsFlaggedAndSkipped)
{
    const auto dir = snowman_benchmark("bench_missing", 2, true);
    const auto report = run_benchmark(load_manifest(dir / "manifest.json"), quick_config());
    ASSERT_EQ(report.shapes.size(), 3u);
    EXPECT_FALSE(report.shapes[0].failed);
    EXPECT_FALSE(report.shapes[1].failed);
    EXPECT_TRUE(report.shapes[2].failed);
    EXPECT_NE(report.shapes[2].error.find("absent.ply"), std::string::npos);
    // Duplicated shapes score identically, so the mean equals either copy.
    EXPECT_EQ(report.shapes[0].part_iou, report.shapes[1].part_iou);
    EXPECT_DOUBLE_EQ(*report.overall, *report.shapes[0].miou);

    const auto json = report_to_json(report);
    EXPECT_EQ(json.at("shapes").size(), 3u);
    EXPECT_TRUE(json.at("shapes")[2].at("failed").get<bool>());
    EXPECT_DOUBLE_EQ(json.at("overall_miou").get<double>(), *report.overall);
    const auto csv = report_to_csv(report);
    EXPECT_EQ(csv.rfind("kind,name,iou,faces\n", 0), 0u);
    EXPECT_NE(csv.find("part,head,"), std::string::npos);
    EXPECT_NE(csv.find("category,snowman,"), std::string::npos);
    EXPECT_NE(csv.find("overall,all,"), std::string::npos);
}

TEST(Benchmark, UnqueriedClassCountsAsUnlabeled)
{
    const Fixture fx = make_dumbbell();
    PipelineConfig c = quick_config();
    OracleDetector det(fx.mesh.face_labels, {0, 1});
    const auto rep = evaluate_shape(fx.mesh, {"sphereA", "sphereB"}, {0, 1}, 2, c, det);
    ASSERT_EQ(rep.part_iou.size(), 2u);
    EXPECT_TRUE(rep.part_iou[0]);
    EXPECT_TRUE(rep.part_iou[1]);
}

TEST(Benchmark, TransportErrorsAbortTheRun)
{
    const auto dir = snowman_benchmark("bench_transport", 1, false);
    DetectorFactory failing = [](const PipelineConfig&, const Mesh&, const std::vector<int>&, const ManifestShape&)
        -> std::unique_ptr<Detector> { throw TransportError("service down"); };
    EXPECT_THROW(run_benchmark(load_manifest(dir / "manifest.json"), quick_config(), failing), TransportError);
}

TEST(Sweep, DeterministicAndTabulated)
{
    const auto dir = snowman_benchmark("sweep", 1, false);
    const auto manifest = load_manifest(dir / "manifest.json");
    PipelineConfig c = quick_config();
    c.noise.jitter_frac = 0.1;
    c.noise.seed = 3;
    const std::vector<std::string> values{"none", "gaussian"};
    const auto a = ablation_sweep(manifest, "reweight_mode", values, c);
    const auto b = ablation_sweep(manifest, "reweight_mode", values, c);
    EXPECT_EQ(sweep_to_csv(a), sweep_to_csv(b));
    EXPECT_EQ(sweep_to_json(a), sweep_to_json(b));
    ASSERT_EQ(a.rows.size(), 2u);
    const auto csv = sweep_to_csv(a);
    EXPECT_EQ(csv.rfind("reweight_mode,overall,head,body\n", 0), 0u);
    EXPECT_NE(csv.find("\nnone,"), std::string::npos);
    EXPECT_NE(csv.find("\ngaussian,"), std::string::npos);

    const auto views = ablation_sweep(manifest, "views", {"2", "4"}, c);
    EXPECT_EQ(views.rows.size(), 2u);
    EXPECT_THROW(ablation_sweep(manifest, "bogus", {"1"}, c), InputError);
    EXPECT_THROW(ablation_sweep(manifest, "views", {}, c), InputError);
    EXPECT_THROW(ablation_sweep(manifest, "views", {"0"}, c), InputError);
}
