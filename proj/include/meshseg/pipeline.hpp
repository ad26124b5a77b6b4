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

// End-to-end segmentation: normalize, sample views, render, detect, score,
// aggregate, normalize scores, label.

#include <meshseg/fixtures.hpp>
#include <meshseg/image_io.hpp>
#include <meshseg/mesh_io.hpp>
#include <meshseg/remote_detector.hpp>
#include <meshseg/scoring.hpp>

#include <atomic>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

namespace meshseg {

enum class DetectorBackend { Oracle, Replay, Remote };

struct PipelineConfig
{
    int n_views = 10;
    ViewSampling sampling = ViewSampling::Normal;
    std::uint64_t view_seed = 0;
    int resolution = 1024;
    double camera_distance = 2.2;
    double fov_y_deg = 60.0;
    Rgb mesh_color = {180, 180, 180};
    Rgb background = {0, 0, 0};

    int q = 5;
    ReweightMode reweight = ReweightMode::Gaussian;
    bool smoothing = true;
    BoxCombine combine = BoxCombine::SumThenMultiply;
    CapitalAverage capital = CapitalAverage::AreaWeightedCentroids;
    GeodesicBackend geodesic = GeodesicBackend::Graph;
    DualAdjacency adjacency = DualAdjacency::SharedVertex;
    /// Gaussian std floor as a fraction of the mesh bounding-box diagonal.
    double sigma_floor_rel = 1e-6;

    ViewAggregation aggregation = ViewAggregation::Max;
    NormalizeAxis normalize = NormalizeAxis::PerPrompt;
    bool background_label = false;
    double tau = 0.0;

    DetectorBackend detector = DetectorBackend::Oracle;
    std::string endpoint = "http://127.0.0.1:8080";
    double threshold = 0.5;
    int max_retries = 2;
    int max_in_flight = 4;
    std::string replay_file;
    NoiseModel noise;

    int threads = 1;

    bool operator==(const PipelineConfig&) const = default;
};

namespace detail {

template <typename E>
struct EnumNames;

template <>
struct EnumNames<ViewSampling>
{
    static constexpr std::array<std::pair<ViewSampling, const char*>, 2> values{
        {{ViewSampling::Normal, "normal"}, {ViewSampling::Uniform, "uniform"}}};
};
template <>
struct EnumNames<ReweightMode>
{
    static constexpr std::array<std::pair<ReweightMode, const char*>, 4> values{
        {{ReweightMode::None, "none"},
         {ReweightMode::Gaussian, "gaussian"},
         {ReweightMode::MaxGeodesic, "max"},
         {ReweightMode::Softmax, "softmax"}}};
};
template <>
struct EnumNames<BoxCombine>
{
    static constexpr std::array<std::pair<BoxCombine, const char*>, 2> values{
        {{BoxCombine::SumThenMultiply, "sum_then_multiply"}, {BoxCombine::MultiplyThenSum, "multiply_then_sum"}}};
};
template <>
struct EnumNames<CapitalAverage>
{
    static constexpr std::array<std::pair<CapitalAverage, const char*>, 2> values{
        {{CapitalAverage::AreaWeightedCentroids, "centroids"}, {CapitalAverage::UniqueVertices, "vertices"}}};
};
template <>
struct EnumNames<GeodesicBackend>
{
    static constexpr std::array<std::pair<GeodesicBackend, const char*>, 2> values{
        {{GeodesicBackend::Graph, "graph"}, {GeodesicBackend::Heat, "heat"}}};
};
template <>
struct EnumNames<DualAdjacency>
{
    static constexpr std::array<std::pair<DualAdjacency, const char*>, 2> values{
        {{DualAdjacency::SharedVertex, "vertex"}, {DualAdjacency::SharedEdge, "edge"}}};
};
template <>
struct EnumNames<ViewAggregation>
{
    static constexpr std::array<std::pair<ViewAggregation, const char*>, 2> values{
        {{ViewAggregation::Max, "max"}, {ViewAggregation::Sum, "sum"}}};
};
template <>
struct EnumNames<NormalizeAxis>
{
    static constexpr std::array<std::pair<NormalizeAxis, const char*>, 2> values{
        {{NormalizeAxis::PerPrompt, "per_prompt"}, {NormalizeAxis::PerFace, "per_face"}}};
};
template <>
struct EnumNames<DetectorBackend>
{
    static constexpr std::array<std::pair<DetectorBackend, const char*>, 3> values{
        {{DetectorBackend::Oracle, "oracle"}, {DetectorBackend::Replay, "replay"}, {DetectorBackend::Remote, "remote"}}};
};

template <typename E>
std::string enum_name(E e)
{
    for (const auto& [v, n] : EnumNames<E>::values)
        if (v == e) return n;
    return "?";
}

template <typename E>
E parse_enum(const std::string& key, const std::string& text)
{
    std::string choices;
    for (const auto& [v, n] : EnumNames<E>::values) {
        if (text == n) return v;
        choices += choices.empty() ? n : std::string("|") + n;
    }
    throw InputError("invalid value '" + text + "' for " + key + " (expected " + choices + ")");
}

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw InputError("invalid number '" + v + "' for " + key);
    }
}

inline long long to_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw InputError("invalid integer '" + v + "' for " + key);
    }
}

inline bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw InputError("invalid boolean '" + v + "' for " + key);
}

inline Rgb to_rgb(const std::string& key, const std::string& v)
{
    if (v == "gray" || v == "grey") return {180, 180, 180};
    if (v == "white") return {255, 255, 255};
    if (v == "red") return {200, 60, 60};
    if (v == "blue") return {60, 90, 200};
    std::stringstream ss(v);
    std::string part;
    Rgb out{};
    int i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) throw InputError("invalid color '" + v + "' for " + key);
        const auto c = to_int(key, trim(part));
        if (c < 0 || c > 255) throw InputError("color channel out of range for " + key);
        out[i++] = static_cast<std::uint8_t>(c);
    }
    if (i != 3) throw InputError("invalid color '" + v + "' for " + key + " (expected r,g,b or a name)");
    return out;
}

inline std::string rgb_text(const Rgb& c)
{
    return std::to_string(c[0]) + "," + std::to_string(c[1]) + "," + std::to_string(c[2]);
}

inline std::string double_text(double d)
{
    std::ostringstream os;
    os << std::setprecision(17) << d;
    return os.str();
}

inline std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

inline std::string unquoted(const std::string& s)
{
    if (s.size() < 2 || s.front() != '"' || s.back() != '"') return s;
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) ++i;
        out += s[i];
    }
    return out;
}

} // namespace detail

/// Sets one configuration key from its text form. Keys match the config file.
inline void set_config_value(PipelineConfig& c, const std::string& key, const std::string& raw)
{
    using namespace detail;
    const std::string v = unquoted(trim(raw));
    if (key == "n_views") c.n_views = static_cast<int>(to_int(key, v));
    else if (key == "sampling") c.sampling = parse_enum<ViewSampling>(key, v);
    else if (key == "view_seed") c.view_seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "resolution") c.resolution = static_cast<int>(to_int(key, v));
    else if (key == "camera_distance") c.camera_distance = to_double(key, v);
    else if (key == "fov_y_deg") c.fov_y_deg = to_double(key, v);
    else if (key == "mesh_color" || key == "color") c.mesh_color = to_rgb(key, v);
    else if (key == "background") c.background = to_rgb(key, v);
    else if (key == "q") c.q = static_cast<int>(to_int(key, v));
    else if (key == "reweight" || key == "reweight_mode") c.reweight = parse_enum<ReweightMode>(key, v);
    else if (key == "smoothing") c.smoothing = to_bool(key, v);
    else if (key == "combine") c.combine = parse_enum<BoxCombine>(key, v);
    else if (key == "capital") c.capital = parse_enum<CapitalAverage>(key, v);
    else if (key == "geodesic") c.geodesic = parse_enum<GeodesicBackend>(key, v);
    else if (key == "dual_adjacency") c.adjacency = parse_enum<DualAdjacency>(key, v);
    else if (key == "sigma_floor_rel") c.sigma_floor_rel = to_double(key, v);
    else if (key == "aggregation") c.aggregation = parse_enum<ViewAggregation>(key, v);
    else if (key == "normalize") c.normalize = parse_enum<NormalizeAxis>(key, v);
    else if (key == "background_label") c.background_label = to_bool(key, v);
    else if (key == "tau") c.tau = to_double(key, v);
    else if (key == "detector") c.detector = parse_enum<DetectorBackend>(key, v);
    else if (key == "endpoint") c.endpoint = v;
    else if (key == "threshold") c.threshold = to_double(key, v);
    else if (key == "max_retries") c.max_retries = static_cast<int>(to_int(key, v));
    else if (key == "max_in_flight") c.max_in_flight = static_cast<int>(to_int(key, v));
    else if (key == "replay_file") c.replay_file = v;
    else if (key == "noise_jitter") c.noise.jitter_frac = to_double(key, v);
    else if (key == "noise_drop") c.noise.drop_prob = to_double(key, v);
    else if (key == "noise_spurious") c.noise.spurious_rate = to_double(key, v);
    else if (key == "noise_score_min") c.noise.score_min = to_double(key, v);
    else if (key == "noise_score_max") c.noise.score_max = to_double(key, v);
    else if (key == "noise_seed") c.noise.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "threads") c.threads = static_cast<int>(to_int(key, v));
    else throw InputError("unknown configuration key '" + key + "'");
}

/// Every key with its current value, in file order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& c)
{
    using namespace detail;
    return {
        {"n_views", std::to_string(c.n_views)},
        {"sampling", quoted(enum_name(c.sampling))},
        {"view_seed", std::to_string(c.view_seed)},
        {"resolution", std::to_string(c.resolution)},
        {"camera_distance", double_text(c.camera_distance)},
        {"fov_y_deg", double_text(c.fov_y_deg)},
        {"mesh_color", quoted(rgb_text(c.mesh_color))},
        {"background", quoted(rgb_text(c.background))},
        {"q", std::to_string(c.q)},
        {"reweight", quoted(enum_name(c.reweight))},
        {"smoothing", c.smoothing ? "true" : "false"},
        {"combine", quoted(enum_name(c.combine))},
        {"capital", quoted(enum_name(c.capital))},
        {"geodesic", quoted(enum_name(c.geodesic))},
        {"dual_adjacency", quoted(enum_name(c.adjacency))},
        {"sigma_floor_rel", double_text(c.sigma_floor_rel)},
        {"aggregation", quoted(enum_name(c.aggregation))},
        {"normalize", quoted(enum_name(c.normalize))},
        {"background_label", c.background_label ? "true" : "false"},
        {"tau", double_text(c.tau)},
        {"detector", quoted(enum_name(c.detector))},
        {"endpoint", quoted(c.endpoint)},
        {"threshold", double_text(c.threshold)},
        {"max_retries", std::to_string(c.max_retries)},
        {"max_in_flight", std::to_string(c.max_in_flight)},
        {"replay_file", quoted(c.replay_file)},
        {"noise_jitter", double_text(c.noise.jitter_frac)},
        {"noise_drop", double_text(c.noise.drop_prob)},
        {"noise_spurious", double_text(c.noise.spurious_rate)},
        {"noise_score_min", double_text(c.noise.score_min)},
        {"noise_score_max", double_text(c.noise.score_max)},
        {"noise_seed", std::to_string(c.noise.seed)},
        {"threads", std::to_string(c.threads)},
    };
}

inline void validate(const PipelineConfig& c)
{
    if (c.n_views < 1) throw InputError("n_views must be >= 1");
    if (c.resolution < 16) throw InputError("resolution must be >= 16");
    if (c.q < 1) throw InputError("q must be >= 1");
    if (!(c.camera_distance > 1.0)) throw InputError("camera_distance must exceed 1");
    if (!(c.fov_y_deg > 0.0 && c.fov_y_deg < 180.0)) throw InputError("fov_y_deg must lie in (0, 180)");
    if (!(c.sigma_floor_rel > 0.0)) throw InputError("sigma_floor_rel must be positive");
    if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw InputError("threshold must lie in [0, 1]");
    if (c.threads < 1) throw InputError("threads must be >= 1");
    if (c.max_retries < 0) throw InputError("max_retries must be >= 0");
    validate(c.noise);
}

/// `key = value` lines; `#` starts a comment; strings may be double-quoted.
inline std::string format_config(const PipelineConfig& c)
{
    std::string out;
    for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
    return out;
}

inline PipelineConfig parse_config(std::istream& in, PipelineConfig c = {})
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                line.resize(i);
                break;
            }
        }
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        try {
            set_config_value(c, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {})
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path.string() + "'");
    return parse_config(in, std::move(base));
}

inline void save_config(const std::filesystem::path& path, const PipelineConfig& c)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write config file '" + path.string() + "'");
    out << format_config(c);
}

inline Camera base_camera(const PipelineConfig& c)
{
    Camera cam;
    cam.distance = c.camera_distance;
    cam.fov_y = c.fov_y_deg * kPi / 180.0;
    return cam;
}

inline RasterSettings raster_settings(const PipelineConfig& c)
{
    RasterSettings s;
    s.width = s.height = c.resolution;
    s.mesh_color = c.mesh_color;
    s.background = c.background;
    return s;
}

inline SatrOptions satr_options(const PipelineConfig& c, const Mesh& normalized)
{
    SatrOptions o;
    o.reweight = c.reweight;
    o.smoothing = c.smoothing;
    o.combine = c.combine;
    o.capital = c.capital;
    o.sigma_floor = c.sigma_floor_rel * diameter(normalized);
    return o;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers; results must be
/// written to per-index slots by the caller.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn)
{
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, n); ++t) {
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct SegmentationResult
{
    /// Normalized input with face_labels set to the predicted prompt index.
    Mesh mesh;
    std::vector<Camera> cameras;
    /// Aggregated scores before normalization.
    ScoreMatrix raw_scores;
    ScoreMatrix scores;
    std::vector<int> labels;
    /// Number of (view, prompt) queries that returned no box.
    int empty_queries = 0;
};

/// Optional per-view hook, e.g. to export renders.
using ViewCallback = std::function<void(int view_index, const RenderOutput&)>;

inline SegmentationResult segment(
    const Mesh& input,
    const std::vector<std::string>& prompts,
    const PipelineConfig& config,
    Detector& detector,
    const ViewCallback& on_view = {})
{
    validate(config);
    if (prompts.empty()) throw InputError("at least one prompt is required");
    for (const auto& p : prompts)
        if (p.empty()) throw InputError("prompts must be non-empty");

    SegmentationResult res;
    const Mesh mesh = normalize_mesh(input);
    res.cameras = sample_views(config.n_views, config.sampling, config.view_seed, base_camera(config));
    const auto settings = raster_settings(config);
    const auto options = satr_options(config, mesh);

    std::unique_ptr<GeodesicEngine> geodesics;
    if (config.reweight != ReweightMode::None) geodesics = std::make_unique<GeodesicEngine>(mesh, config.geodesic, config.adjacency);
    std::unique_ptr<QRingIndex> qring;
    if (config.smoothing) qring = std::make_unique<QRingIndex>(mesh, config.q);

    const auto K = prompts.size();
    std::vector<ScoreMatrix> per_view(res.cameras.size());
    std::vector<int> empties(res.cameras.size(), 0);
    parallel_for(static_cast<int>(res.cameras.size()), config.threads, [&](int v) {
        const auto render = rasterize(mesh, res.cameras[v], settings);
        if (on_view) on_view(v, render);
        std::vector<Detection> dets;
        for (std::size_t k = 0; k < K; ++k) {
            auto d = detector.detect({render, v, static_cast<int>(k), prompts[k]});
            for (auto& det : d) {
                det.view_index = v;
                det.prompt_index = static_cast<int>(k);
            }
            d = sanitize_detections(std::move(d), render.width, render.height);
            if (d.empty()) ++empties[v];
            dets.insert(dets.end(), d.begin(), d.end());
        }
        per_view[v] = satr_view_scores(mesh, render, dets, K, geodesics.get(), qring.get(), options);
    });

    res.raw_scores = ScoreMatrix(mesh.num_faces(), K);
    for (const auto& s : per_view) accumulate_view(res.raw_scores, s, config.aggregation);
    for (int e : empties) res.empty_queries += e;
    res.scores = normalize_scores(res.raw_scores, config.normalize);
    res.labels = assign_labels(res.scores, {config.background_label, config.tau});
    res.mesh = mesh;
    res.mesh.face_labels = res.labels;
    return res;
}

/// Builds the configured detector. `gt_face_labels` and `class_of_prompt` feed
/// the oracle; `replay_file` overrides config.replay_file when non-empty.
inline std::unique_ptr<Detector> make_detector(
    const PipelineConfig& config,
    const std::vector<int>& gt_face_labels,
    const std::vector<int>& class_of_prompt,
    const std::string& replay_file = {})
{
    switch (config.detector) {
    case DetectorBackend::Oracle:
        if (gt_face_labels.empty()) throw InputError("the oracle detector needs ground-truth face labels");
        return std::make_unique<OracleDetector>(gt_face_labels, class_of_prompt, config.noise);
    case DetectorBackend::Replay: {
        const auto& path = replay_file.empty() ? config.replay_file : replay_file;
        if (path.empty()) throw InputError("the replay detector needs a replay_file");
        return std::make_unique<ReplayDetector>(DetectionLog::load(path));
    }
    case DetectorBackend::Remote: {
        RemoteDetectorOptions o;
        o.endpoint = config.endpoint;
        o.threshold = config.threshold;
        o.max_retries = config.max_retries;
        o.max_in_flight = config.max_in_flight;
        return std::make_unique<RemoteDetector>(o);
    }
    }
    throw InputError("unknown detector backend");
}

/// Fixed 20-color palette indexed by class; unlabeled faces are dark gray.
inline Rgb class_color(int label)
{
    static constexpr std::array<Rgb, 20> kPalette{{
        {31, 119, 180}, {255, 127, 14}, {44, 160, 44},   {214, 39, 40},   {148, 103, 189},
        {140, 86, 75},  {227, 119, 194}, {127, 127, 127}, {188, 189, 34},  {23, 190, 207},
        {174, 199, 232}, {255, 187, 120}, {152, 223, 138}, {255, 152, 150}, {197, 176, 213},
        {196, 156, 148}, {247, 182, 210}, {199, 199, 199}, {219, 219, 141}, {158, 218, 229},
    }};
    if (label < 0) return {40, 40, 40};
    return kPalette[static_cast<std::size_t>(label) % kPalette.size()];
}

inline PlyExtras label_colors(const std::vector<int>& labels)
{
    PlyExtras extras;
    extras.face_colors.reserve(labels.size());
    for (int l : labels) extras.face_colors.push_back(class_color(l));
    return extras;
}

} // namespace meshseg
