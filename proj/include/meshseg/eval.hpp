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

// Part-wise IoU and the benchmark / sweep harness.
//
// Per shape, IoU_k = |pred = k AND gt = k| / |pred = k OR gt = k| for every
// class k present in either labeling; classes absent from both are skipped.
// Unlabeled (-1) faces count as "not k" everywhere. Across shapes, each part's
// IoU is averaged over the shapes where it is defined, and the overall mIoU
// is the mean over parts.

#include <meshseg/pipeline.hpp>

#include <optional>

namespace meshseg {

/// IoU per class 0..K-1; nullopt where the class is absent from both inputs.
inline std::vector<std::optional<double>> iou_per_part(std::span<const int> pred, std::span<const int> gt, int num_classes)
{
    if (pred.size() != gt.size()) throw InputError("prediction and ground truth have different lengths");
    std::vector<std::int64_t> inter(num_classes, 0), uni(num_classes, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i];
        const int g = gt[i];
        if (p < kUnlabeled || p >= num_classes || g < kUnlabeled || g >= num_classes)
            throw InputError("label out of range at index " + std::to_string(i));
        if (p == g) {
            if (p >= 0) {
                ++inter[p];
                ++uni[p];
            }
            continue;
        }
        if (p >= 0) ++uni[p];
        if (g >= 0) ++uni[g];
    }
    std::vector<std::optional<double>> out(num_classes);
    for (int k = 0; k < num_classes; ++k)
        if (uni[k] > 0) out[k] = static_cast<double>(inter[k]) / static_cast<double>(uni[k]);
    return out;
}

/// Mean over the defined entries, nullopt when none is defined.
inline std::optional<double> mean_defined(std::span<const std::optional<double>> values)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

struct ShapeReport
{
    std::string mesh;
    std::string category;
    bool failed = false;
    std::string error;
    std::vector<std::optional<double>> part_iou;
    std::optional<double> miou;
};

struct PartIoUReport
{
    std::vector<std::string> part_names;
    /// Mean IoU per class over the shapes where the class is defined.
    std::vector<std::optional<double>> part_iou;
    /// Ground-truth face count per class over all evaluated shapes.
    std::vector<std::int64_t> part_faces;
    std::map<std::string, std::optional<double>> category_miou;
    std::optional<double> overall;
    std::vector<ShapeReport> shapes;
};

/// Folds per-shape reports into the two-level summary. Failed shapes are skipped.
inline PartIoUReport summarize(std::vector<ShapeReport> shapes, std::vector<std::string> part_names)
{
    PartIoUReport rep;
    const auto K = part_names.size();
    rep.part_names = std::move(part_names);
    auto part_means = [&](const std::string* category) {
        std::vector<std::optional<double>> means(K);
        for (std::size_t k = 0; k < K; ++k) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& s : shapes) {
                if (s.failed || (category && s.category != *category)) continue;
                if (k < s.part_iou.size() && s.part_iou[k]) {
                    sum += *s.part_iou[k];
                    ++n;
                }
            }
            if (n > 0) means[k] = sum / static_cast<double>(n);
        }
        return means;
    };
    rep.part_iou = part_means(nullptr);
    rep.overall = mean_defined(rep.part_iou);
    for (const auto& s : shapes) {
        if (s.failed || rep.category_miou.count(s.category)) continue;
        rep.category_miou[s.category] = mean_defined(part_means(&s.category));
    }
    rep.part_faces.assign(K, 0);
    rep.shapes = std::move(shapes);
    return rep;
}

struct ManifestShape
{
    std::filesystem::path mesh;
    /// Per-face labels file (one integer per line); empty = labels inside the mesh file.
    std::filesystem::path labels;
    /// Optional labeled mesh whose vertex labels are transferred by nearest vertex.
    std::filesystem::path label_source;
    /// Optional recorded detections for the replay backend.
    std::filesystem::path detections;
    std::string category;
};

struct ManifestPart
{
    int class_id = 0;
    std::string prompt;
};

struct Manifest
{
    std::vector<ManifestShape> shapes;
    std::vector<ManifestPart> parts;

    int num_classes() const
    {
        int k = 0;
        for (const auto& p : parts) k = std::max(k, p.class_id + 1);
        return k;
    }
};

/// {"shapes": [{"mesh", "labels"?, "label_source"?, "detections"?, "category"?}],
///  "parts": [{"class_id", "prompt"}]}; relative paths resolve against `base_dir`.
inline Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    Manifest m;
    auto resolve = [&](const nlohmann::json& node, const char* key) -> std::filesystem::path {
        if (!node.contains(key) || node.at(key).is_null()) return {};
        std::filesystem::path p = node.at(key).get<std::string>();
        return p.is_relative() ? base_dir / p : p;
    };
    try {
        for (const auto& s : j.at("shapes")) {
            ManifestShape shape;
            shape.mesh = resolve(s, "mesh");
            if (shape.mesh.empty()) throw InputError("manifest shape without a mesh");
            shape.labels = resolve(s, "labels");
            shape.label_source = resolve(s, "label_source");
            shape.detections = resolve(s, "detections");
            shape.category = s.value("category", std::string("default"));
            m.shapes.push_back(std::move(shape));
        }
        for (const auto& p : j.at("parts")) m.parts.push_back({p.at("class_id").get<int>(), p.at("prompt").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
    if (m.shapes.empty()) throw InputError("manifest lists no shapes, nothing to evaluate");
    if (m.parts.empty()) throw InputError("manifest lists no parts");
    for (const auto& p : m.parts)
        if (p.class_id < 0) throw InputError("manifest class ids must be non-negative");
    return m;
}

inline Manifest load_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
    return parse_manifest(j, path.parent_path());
}

inline std::vector<int> load_label_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label file '" + path.string() + "'");
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        try {
            labels.push_back(static_cast<int>(detail::to_int("label", t)));
        } catch (const InputError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return labels;
}

/// Loads a shape with ground-truth face labels attached.
inline Mesh load_labeled_shape(const ManifestShape& s)
{
    Mesh mesh = load_mesh(s.mesh);
    if (!s.label_source.empty()) {
        // Same frame is assumed: both meshes are normalized before transfer.
        const Mesh src = normalize_mesh(load_mesh(s.label_source));
        Mesh dst = transfer_labels(src, normalize_mesh(mesh));
        mesh.face_labels = dst.face_labels;
        mesh.vertex_labels = dst.vertex_labels;
    } else if (!s.labels.empty()) {
        mesh.face_labels = load_label_file(s.labels);
    }
    if (!mesh.has_face_labels()) {
        if (mesh.has_vertex_labels())
            derive_face_labels(mesh);
        else
            throw InputError("shape '" + s.mesh.string() + "' has no ground-truth labels");
    }
    if (mesh.face_labels.size() != mesh.num_faces())
        throw InputError("label count does not match face count for '" + s.mesh.string() + "'");
    return mesh;
}

/// Maps prompt-index labels to class ids (kUnlabeled passes through).
inline std::vector<int> prompt_labels_to_classes(const std::vector<int>& labels, const std::vector<int>& class_of_prompt)
{
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] < 0 ? kUnlabeled : class_of_prompt[labels[i]];
    return out;
}

/// Builds a detector for one shape. Defaults to make_detector.
using DetectorFactory = std::function<std::unique_ptr<Detector>(
    const PipelineConfig&, const Mesh& gt, const std::vector<int>& class_of_prompt, const ManifestShape&)>;

inline std::unique_ptr<Detector> default_detector_factory(
    const PipelineConfig& config,
    const Mesh& gt,
    const std::vector<int>& class_of_prompt,
    const ManifestShape& shape)
{
    return make_detector(config, gt.face_labels, class_of_prompt, shape.detections.string());
}

/// Evaluates one already-loaded shape.
inline ShapeReport evaluate_shape(
    const Mesh& gt,
    const std::vector<std::string>& prompts,
    const std::vector<int>& class_of_prompt,
    int num_classes,
    const PipelineConfig& config,
    Detector& detector)
{
    ShapeReport rep;
    const auto result = segment(gt, prompts, config, detector);
    const auto pred = prompt_labels_to_classes(result.labels, class_of_prompt);
    std::vector<int> truth(gt.face_labels);
    // Ground-truth classes not queried by any prompt count as unlabeled.
    for (auto& t : truth)
        if (t >= num_classes) t = kUnlabeled;
    rep.part_iou = iou_per_part(pred, truth, num_classes);
    rep.miou = mean_defined(rep.part_iou);
    return rep;
}

/// Runs the pipeline over every manifest shape. Shapes that fail to load or
/// segment are reported as failed and excluded from the summary.
inline PartIoUReport run_benchmark(
    const Manifest& manifest,
    const PipelineConfig& config,
    const DetectorFactory& factory = default_detector_factory)
{
    if (manifest.shapes.empty()) throw InputError("manifest lists no shapes, nothing to evaluate");
    const int K = manifest.num_classes();
    std::vector<std::string> prompts;
    std::vector<int> class_of_prompt;
    std::vector<std::string> names(K);
    for (const auto& p : manifest.parts) {
        prompts.push_back(p.prompt);
        class_of_prompt.push_back(p.class_id);
        names[p.class_id] = p.prompt;
    }

    std::vector<ShapeReport> shapes;
    std::vector<std::int64_t> faces(K, 0);
    for (const auto& s : manifest.shapes) {
        ShapeReport rep;
        try {
            const Mesh gt = load_labeled_shape(s);
            auto detector = factory(config, gt, class_of_prompt, s);
            rep = evaluate_shape(gt, prompts, class_of_prompt, K, config, *detector);
            for (int l : gt.face_labels)
                if (l >= 0 && l < K) ++faces[l];
        } catch (const TransportError&) {
            throw;
        } catch (const Error& e) {
            rep.failed = true;
            rep.error = e.what();
        }
        rep.mesh = s.mesh.string();
        rep.category = s.category;
        shapes.push_back(std::move(rep));
    }
    auto report = summarize(std::move(shapes), std::move(names));
    report.part_faces = std::move(faces);
    return report;
}

inline nlohmann::json optional_json(const std::optional<double>& v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json report_to_json(const PartIoUReport& r)
{
    nlohmann::json parts = nlohmann::json::array();
    for (std::size_t k = 0; k < r.part_names.size(); ++k)
        parts.push_back({{"class_id", k}, {"name", r.part_names[k]}, {"iou", optional_json(r.part_iou[k])},
                         {"faces", k < r.part_faces.size() ? r.part_faces[k] : 0}});
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [c, v] : r.category_miou) cats[c] = optional_json(v);
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& s : r.shapes) {
        nlohmann::json ious = nlohmann::json::array();
        for (const auto& v : s.part_iou) ious.push_back(optional_json(v));
        nlohmann::json js = {{"mesh", s.mesh}, {"category", s.category}, {"failed", s.failed},
                             {"part_iou", ious}, {"miou", optional_json(s.miou)}};
        if (s.failed) js["error"] = s.error;
        shapes.push_back(js);
    }
    return {{"overall_miou", optional_json(r.overall)}, {"parts", parts}, {"categories", cats}, {"shapes", shapes}};
}

/// CSV with one row per part, per category and the overall mean.
inline std::string report_to_csv(const PartIoUReport& r)
{
    std::ostringstream os;
    os << std::setprecision(10);
    auto cell = [&](const std::optional<double>& v) {
        if (v) os << *v;
    };
    os << "kind,name,iou,faces\n";
    for (std::size_t k = 0; k < r.part_names.size(); ++k) {
        os << "part," << r.part_names[k] << ',';
        cell(r.part_iou[k]);
        os << ',' << (k < r.part_faces.size() ? r.part_faces[k] : 0) << '\n';
    }
    for (const auto& [c, v] : r.category_miou) {
        os << "category," << c << ',';
        cell(v);
        os << ",\n";
    }
    os << "overall,all,";
    cell(r.overall);
    os << ",\n";
    return os.str();
}

struct SweepRow
{
    std::string value;
    PartIoUReport report;
};

struct SweepTable
{
    std::string axis;
    std::vector<SweepRow> rows;
};

/// Common axis spellings mapped to config keys.
inline std::string sweep_axis_key(const std::string& axis)
{
    if (axis == "views") return "n_views";
    if (axis == "reweight_mode") return "reweight";
    if (axis == "color") return "mesh_color";
    return axis;
}

/// One benchmark per axis value; all other settings (seeds included) fixed.
inline SweepTable ablation_sweep(
    const Manifest& manifest,
    const std::string& axis,
    const std::vector<std::string>& values,
    const PipelineConfig& base,
    const DetectorFactory& factory = default_detector_factory)
{
    if (values.empty()) throw InputError("sweep needs at least one axis value");
    SweepTable table{axis, {}};
    const auto key = sweep_axis_key(axis);
    for (const auto& v : values) {
        PipelineConfig c = base;
        set_config_value(c, key, v);
        validate(c);
        table.rows.push_back({v, run_benchmark(manifest, c, factory)});
    }
    return table;
}

inline std::string sweep_to_csv(const SweepTable& t)
{
    std::ostringstream os;
    os << std::setprecision(10);
    os << t.axis << ",overall";
    const auto& names = t.rows.empty() ? std::vector<std::string>{} : t.rows.front().report.part_names;
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (const auto& row : t.rows) {
        os << row.value << ',';
        if (row.report.overall) os << *row.report.overall;
        for (const auto& v : row.report.part_iou) {
            os << ',';
            if (v) os << *v;
        }
        os << '\n';
    }
    return os.str();
}

inline nlohmann::json sweep_to_json(const SweepTable& t)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back({{"value", r.value}, {"report", report_to_json(r.report)}});
    return {{"axis", t.axis}, {"rows", rows}};
}

} // namespace meshseg
