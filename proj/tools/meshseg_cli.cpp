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

// meshseg command line: segment | evaluate | sweep | render | record | make-fixture.
// Exit codes: 0 success, 1 input error, 2 detector transport failure.

#include <meshseg/meshseg.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace fs = std::filesystem;
using namespace meshseg;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitTransport = 2;

/// Config plumbing shared by every pipeline command.
struct ConfigArgs
{
    std::string config_file;
    std::vector<std::string> overrides;
    std::string preset;
    std::optional<int> views;
    std::optional<std::uint64_t> seed;
    std::optional<int> resolution;
    std::optional<int> threads;
    std::string detector;
    std::string endpoint;
    std::string replay;

    void attach(CLI::App* app)
    {
        app->add_option("--config", config_file, "Config file (key = value lines)")->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "Override one config key, e.g. --set q=10 (repeatable)");
        app->add_option("--preset", preset, "Named preset applied before overrides")->check(CLI::IsMember({"human"}));
        app->add_option("--views", views, "Number of rendered views");
        app->add_option("--seed", seed, "View sampling seed (also seeds oracle noise)");
        app->add_option("--resolution", resolution, "Square render resolution in pixels");
        app->add_option("--threads", threads, "Worker threads for per-view work");
        app->add_option("--detector", detector, "oracle | replay | remote");
        app->add_option("--endpoint", endpoint, "Detection service base URL");
        app->add_option("--replay", replay, "Recorded detections for the replay detector");
    }

    PipelineConfig build() const
    {
        PipelineConfig c;
        if (!config_file.empty()) c = load_config(config_file);
        // "human" preset: larger smoothing neighborhood for body-part prompts.
        if (preset == "human") c.q = 10;
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
            set_config_value(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
        }
        if (views) c.n_views = *views;
        if (seed) {
            c.view_seed = *seed;
            c.noise.seed = *seed;
        }
        if (resolution) c.resolution = *resolution;
        if (threads) c.threads = *threads;
        if (!detector.empty()) set_config_value(c, "detector", detector);
        if (!endpoint.empty()) c.endpoint = endpoint;
        if (!replay.empty()) {
            c.replay_file = replay;
            if (detector.empty()) c.detector = DetectorBackend::Replay;
        }
        validate(c);
        return c;
    }
};

std::vector<int> class_ids_for(const std::vector<int>& given, std::size_t prompts)
{
    if (given.empty()) {
        std::vector<int> ids(prompts);
        std::iota(ids.begin(), ids.end(), 0);
        return ids;
    }
    if (given.size() != prompts) throw InputError("--class-ids needs one id per prompt");
    return given;
}

void prepare_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
}

Mesh load_input(const std::string& path)
{
    Mesh m = load_mesh(path);
    if (!m.has_face_labels() && m.has_vertex_labels()) derive_face_labels(m);
    return m;
}

std::string view_name(int v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", v);
    return buf;
}

int run_segment(const ConfigArgs& cfg, const std::string& mesh_path, const std::vector<std::string>& prompts,
                const std::vector<int>& class_ids, const fs::path& out_dir)
{
    const PipelineConfig config = cfg.build();
    Mesh input = load_input(mesh_path);
    const auto classes = class_ids_for(class_ids, prompts.size());
    auto inner = make_detector(config, input.face_labels, classes);
    RecordingDetector detector(*inner);

    const auto result = segment(input, prompts, config, detector);
    const auto total = static_cast<int>(prompts.size()) * config.n_views;
    if (result.empty_queries == total)
        std::cerr << "warning: the detector returned no boxes for any view; labels follow the tie-break policy\n";

    prepare_dir(out_dir);
    Mesh out = input;
    out.face_labels = result.labels;
    out.vertex_labels.clear();
    save_mesh(out_dir / "segmented.ply", out, PlyEncoding::BinaryLittleEndian, label_colors(result.labels));
    detector.log().save(out_dir / "detections.json");
    {
        std::ofstream s(out_dir / "scores.bin", std::ios::binary);
        write_score_matrix(s, result.scores);
    }
    save_config(out_dir / "config.toml", config);

    std::vector<int> counts(prompts.size(), 0);
    for (int l : result.labels)
        if (l >= 0) ++counts[l];
    for (std::size_t k = 0; k < prompts.size(); ++k) std::cout << prompts[k] << ": " << counts[k] << " faces\n";
    return 0;
}

void print_report(const PartIoUReport& r)
{
    std::cout << std::fixed << std::setprecision(4);
    for (std::size_t k = 0; k < r.part_names.size(); ++k) {
        std::cout << "  " << r.part_names[k] << ": ";
        if (r.part_iou[k])
            std::cout << *r.part_iou[k] << '\n';
        else
            std::cout << "n/a\n";
    }
    for (const auto& s : r.shapes)
        if (s.failed) std::cout << "  FAILED " << s.mesh << ": " << s.error << '\n';
    std::cout << "overall mIoU: ";
    if (r.overall)
        std::cout << *r.overall << '\n';
    else
        std::cout << "n/a\n";
}

int run_evaluate(const ConfigArgs& cfg, const std::string& manifest_path, const fs::path& out_dir)
{
    const PipelineConfig config = cfg.build();
    const auto manifest = load_manifest(manifest_path);
    const auto report = run_benchmark(manifest, config);
    prepare_dir(out_dir);
    write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(out_dir / "report.csv", report_to_csv(report));
    save_config(out_dir / "config.toml", config);
    print_report(report);
    return 0;
}

/// Writes a fixture and a one-shape manifest for it into `dir`.
fs::path fixture_manifest(const std::string& kind, const fs::path& dir)
{
    const auto fx = make_fixture(kind);
    const auto mesh_name = kind + ".ply";
    save_mesh(dir / mesh_name, fx.mesh, PlyEncoding::BinaryLittleEndian, label_colors(fx.mesh.face_labels));
    nlohmann::json parts = nlohmann::json::array();
    for (std::size_t k = 0; k < fx.part_names.size(); ++k) parts.push_back({{"class_id", k}, {"prompt", fx.part_names[k]}});
    const nlohmann::json j = {{"shapes", {{{"mesh", mesh_name}, {"category", kind}}}}, {"parts", parts}};
    const auto path = dir / "manifest.json";
    write_text(path, j.dump(2) + "\n");
    return path;
}

int run_sweep(const ConfigArgs& cfg, std::string manifest_path, const std::string& fixture, const std::string& axis,
              const std::vector<std::string>& values, const fs::path& out_dir)
{
    const PipelineConfig config = cfg.build();
    prepare_dir(out_dir);
    if (manifest_path.empty() == fixture.empty()) throw InputError("sweep needs exactly one of --manifest or --fixture");
    if (!fixture.empty()) manifest_path = fixture_manifest(fixture, out_dir).string();
    const auto table = ablation_sweep(load_manifest(manifest_path), axis, values, config);
    const auto csv = sweep_to_csv(table);
    write_text(out_dir / "sweep.csv", csv);
    write_text(out_dir / "sweep.json", sweep_to_json(table).dump(2) + "\n");
    save_config(out_dir / "config.toml", config);
    std::cout << csv;
    return 0;
}

int run_render(const ConfigArgs& cfg, const std::string& mesh_path, const fs::path& out_dir)
{
    const PipelineConfig config = cfg.build();
    const Mesh mesh = normalize_mesh(load_input(mesh_path));
    const auto cameras = sample_views(config.n_views, config.sampling, config.view_seed, base_camera(config));
    const auto settings = raster_settings(config);
    prepare_dir(out_dir);
    nlohmann::json cams = nlohmann::json::array();
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const auto r = rasterize(mesh, cameras[v], settings);
        const auto name = view_name(static_cast<int>(v));
        write_png(out_dir / (name + ".png"), r.image);
        std::ofstream p2f(out_dir / (name + ".pixel2face.bin"), std::ios::binary);
        write_pixel2face(p2f, r);
        cams.push_back({{"view_index", v}, {"elevation", cameras[v].elevation}, {"azimuth", cameras[v].azimuth},
                        {"distance", cameras[v].distance}, {"fov_y", cameras[v].fov_y}});
    }
    write_text(out_dir / "cameras.json", cams.dump(2) + "\n");
    save_config(out_dir / "config.toml", config);
    std::cout << "rendered " << cameras.size() << " views to " << out_dir.string() << '\n';
    return 0;
}

int run_record(const ConfigArgs& cfg, const std::string& mesh_path, const std::vector<std::string>& prompts,
               const std::vector<int>& class_ids, const fs::path& out_path)
{
    const PipelineConfig config = cfg.build();
    const Mesh input = load_input(mesh_path);
    const Mesh mesh = normalize_mesh(input);
    const auto classes = class_ids_for(class_ids, prompts.size());
    auto inner = make_detector(config, input.face_labels, classes);
    RecordingDetector detector(*inner);
    const auto cameras = sample_views(config.n_views, config.sampling, config.view_seed, base_camera(config));
    const auto settings = raster_settings(config);
    parallel_for(static_cast<int>(cameras.size()), config.threads, [&](int v) {
        const auto r = rasterize(mesh, cameras[v], settings);
        for (std::size_t k = 0; k < prompts.size(); ++k) detector.detect({r, v, static_cast<int>(k), prompts[k]});
    });
    if (out_path.has_parent_path()) prepare_dir(out_path.parent_path());
    detector.log().save(out_path);
    std::cout << "recorded " << detector.log().size() << " (view, prompt) entries to " << out_path.string() << '\n';
    return 0;
}

int run_make_fixture(const std::string& kind, const std::vector<std::string>& params, const fs::path& out_path)
{
    FixtureParams p;
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InputError("--param expects key=value, got '" + kv + "'");
        p.set(detail::trim(kv.substr(0, eq)), detail::to_double(kv.substr(0, eq), detail::trim(kv.substr(eq + 1))));
    }
    const auto fx = make_fixture(kind, std::move(p));
    if (out_path.has_parent_path()) prepare_dir(out_path.parent_path());
    save_mesh(out_path, fx.mesh, PlyEncoding::BinaryLittleEndian, label_colors(fx.mesh.face_labels));
    std::cout << kind << ": " << fx.mesh.num_faces() << " faces, parts";
    for (std::size_t k = 0; k < fx.part_names.size(); ++k) std::cout << ' ' << k << '=' << fx.part_names[k];
    std::cout << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Zero-shot part segmentation of triangle meshes from multi-view 2D detections"};
    app.require_subcommand(1);

    ConfigArgs cfg;
    std::string mesh_path, manifest_path, fixture, axis, kind;
    std::vector<std::string> prompts, values, params;
    std::vector<int> class_ids;
    std::string out;

    auto* seg = app.add_subcommand("segment", "Segment a mesh into the given prompts");
    seg->add_option("mesh", mesh_path, "Input mesh (.obj or .ply)")->required()->check(CLI::ExistingFile);
    seg->add_option("-p,--prompts", prompts, "Part prompts")->required()->delimiter(',');
    seg->add_option("--class-ids", class_ids, "Ground-truth class id per prompt (oracle detector)")->delimiter(',');
    seg->add_option("-o,--out", out, "Output directory")->required();
    cfg.attach(seg);

    auto* eval = app.add_subcommand("evaluate", "Run the benchmark over a manifest");
    eval->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
    eval->add_option("-o,--out", out, "Output directory")->required();
    cfg.attach(eval);

    auto* sweep = app.add_subcommand("sweep", "Benchmark once per value of one config key");
    sweep->add_option("--manifest", manifest_path, "Manifest JSON")->check(CLI::ExistingFile);
    sweep->add_option("--fixture", fixture, "Sweep a generated fixture instead of a manifest");
    sweep->add_option("--axis", axis, "Config key to vary, e.g. n_views, sampling, reweight, smoothing, color")->required();
    sweep->add_option("--values", values, "Axis values")->required()->delimiter(',');
    sweep->add_option("-o,--out", out, "Output directory")->required();
    cfg.attach(sweep);

    auto* render = app.add_subcommand("render", "Write per-view PNGs and pixel-to-face rasters");
    render->add_option("mesh", mesh_path, "Input mesh")->required()->check(CLI::ExistingFile);
    render->add_option("-o,--out", out, "Output directory")->required();
    cfg.attach(render);

    auto* record = app.add_subcommand("record", "Record detector answers for later replay");
    record->add_option("mesh", mesh_path, "Input mesh")->required()->check(CLI::ExistingFile);
    record->add_option("-p,--prompts", prompts, "Part prompts")->required()->delimiter(',');
    record->add_option("--class-ids", class_ids, "Ground-truth class id per prompt (oracle detector)")->delimiter(',');
    record->add_option("-o,--out", out, "Output detection record (.json)")->required();
    cfg.attach(record);

    auto* fixture_cmd = app.add_subcommand("make-fixture", "Generate a labeled synthetic mesh");
    fixture_cmd->add_option("kind", kind, "snowman | dumbbell | humanoid | grid | icosphere")->required();
    fixture_cmd->add_option("--param", params, "Fixture parameter key=value (repeatable)");
    fixture_cmd->add_option("-o,--out", out, "Output mesh (.ply or .obj)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    try {
        if (seg->parsed()) return run_segment(cfg, mesh_path, prompts, class_ids, out);
        if (eval->parsed()) return run_evaluate(cfg, manifest_path, out);
        if (sweep->parsed()) return run_sweep(cfg, manifest_path, fixture, axis, values, out);
        if (render->parsed()) return run_render(cfg, mesh_path, out);
        if (record->parsed()) return run_record(cfg, mesh_path, prompts, class_ids, out);
        if (fixture_cmd->parsed()) return run_make_fixture(kind, params, out);
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitTransport;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
