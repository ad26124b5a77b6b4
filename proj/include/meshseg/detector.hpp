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

#include <meshseg/render.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string_view>

namespace meshseg {

struct Detection
{
    Box box;
    double score = 0.0;
    int prompt_index = 0;
    int view_index = 0;

    bool operator==(const Detection&) const = default;
};

/// One detector query: a rendered view and a text prompt.
struct DetectionRequest
{
    const RenderOutput& view;
    int view_index = 0;
    int prompt_index = 0;
    std::string_view prompt;
};

/// Open-vocabulary 2D detector. Implementations must be safe to call
/// concurrently for distinct requests.
class Detector
{
public:
    virtual ~Detector() = default;
    virtual std::vector<Detection> detect(const DetectionRequest& request) = 0;
};

/// Clamps boxes to the image, clamps scores to [0, 1] and drops boxes that no
/// longer overlap the image.
inline std::vector<Detection> sanitize_detections(std::vector<Detection> dets, int width, int height)
{
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (auto& d : dets) {
        if (!std::isfinite(d.box.x) || !std::isfinite(d.box.y) || !std::isfinite(d.box.w) || !std::isfinite(d.box.h))
            continue;
        d.box = d.box.clamped(width, height);
        if (d.box.empty()) continue;
        d.score = std::isfinite(d.score) ? std::clamp(d.score, 0.0, 1.0) : 0.0;
        out.push_back(d);
    }
    return out;
}

// --------------------------------------------------------------------------
// Ground-truth oracle
// --------------------------------------------------------------------------

struct NoiseModel
{
    /// Each box edge moves by up to this fraction of the box extent.
    double jitter_frac = 0.0;
    /// Probability that a true box is omitted.
    double drop_prob = 0.0;
    /// Expected number of random false boxes per (view, prompt).
    double spurious_rate = 0.0;
    /// Confidence interval scores are drawn from.
    double score_min = 1.0;
    double score_max = 1.0;
    std::uint64_t seed = 0;

    bool noise_free() const { return jitter_frac == 0.0 && drop_prob == 0.0 && spurious_rate == 0.0; }

    bool operator==(const NoiseModel&) const = default;
};

inline void validate(const NoiseModel& n)
{
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(n.jitter_frac) || !prob(n.drop_prob))
        throw InputError("noise jitter and drop probability must lie in [0, 1]");
    if (!(n.spurious_rate >= 0.0)) throw InputError("spurious box rate must be non-negative");
    if (!prob(n.score_min) || !prob(n.score_max) || n.score_min > n.score_max)
        throw InputError("score range must satisfy 0 <= min <= max <= 1");
}

/// Tight pixel box of every pixel whose face carries `class_id`, or nothing
/// when the class owns no pixel in this view.
inline std::optional<Box> class_pixel_box(const RenderOutput& r, std::span<const int> face_labels, int class_id)
{
    int x0 = r.width, y0 = r.height, x1 = -1, y1 = -1;
    for (int row = 0; row < r.height; ++row) {
        for (int col = 0; col < r.width; ++col) {
            const auto f = r.face_at(col, row);
            if (f == kBackground || face_labels[f] != class_id) continue;
            const int j = r.height - 1 - row;
            x0 = std::min(x0, col);
            x1 = std::max(x1, col);
            y0 = std::min(y0, j);
            y1 = std::max(y1, j);
        }
    }
    if (x1 < 0) return std::nullopt;
    return Box{double(x0), double(y0), double(x1 - x0 + 1), double(y1 - y0 + 1)};
}

/// Simulated detector answering with the ground-truth part box, perturbed by
/// `noise`. Randomness depends only on (seed, view, prompt).
inline std::vector<Detection> oracle_detect(
    const RenderOutput& r,
    std::span<const int> face_labels,
    int class_id,
    const NoiseModel& noise,
    int view_index = 0,
    int prompt_index = 0)
{
    std::vector<Detection> out;
    const auto truth = class_pixel_box(r, face_labels, class_id);
    if (noise.noise_free()) {
        if (truth) out.push_back({*truth, noise.score_max, prompt_index, view_index});
        return out;
    }

    std::seed_seq seq{
        static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
        static_cast<std::uint32_t>(view_index), static_cast<std::uint32_t>(prompt_index)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw_score = [&] { return noise.score_min + (noise.score_max - noise.score_min) * unit(rng); };

    if (truth) {
        const double drop = unit(rng);
        double x0 = truth->x, y0 = truth->y;
        double x1 = truth->x + truth->w, y1 = truth->y + truth->h;
        const double jx = noise.jitter_frac * truth->w;
        const double jy = noise.jitter_frac * truth->h;
        x0 += (2.0 * unit(rng) - 1.0) * jx;
        x1 += (2.0 * unit(rng) - 1.0) * jx;
        y0 += (2.0 * unit(rng) - 1.0) * jy;
        y1 += (2.0 * unit(rng) - 1.0) * jy;
        const double score = draw_score();
        if (drop >= noise.drop_prob && x1 > x0 && y1 > y0)
            out.push_back({Box{x0, y0, x1 - x0, y1 - y0}, score, prompt_index, view_index});
    }

    std::poisson_distribution<int> spurious(noise.spurious_rate);
    const int count = noise.spurious_rate > 0.0 ? spurious(rng) : 0;
    const double frame = static_cast<double>(r.width) * r.height;
    for (int i = 0; i < count; ++i) {
        const double area = frame * (0.01 + 0.24 * unit(rng));
        const double aspect = std::exp(std::log(0.5) + std::log(4.0) * unit(rng));
        const double w = std::min(static_cast<double>(r.width), std::sqrt(area * aspect));
        const double h = std::min(static_cast<double>(r.height), area / w);
        const double x = (r.width - w) * unit(rng);
        const double y = (r.height - h) * unit(rng);
        out.push_back({Box{x, y, w, h}, draw_score(), prompt_index, view_index});
    }
    return sanitize_detections(std::move(out), r.width, r.height);
}

class OracleDetector : public Detector
{
public:
    /// `class_of_prompt[k]` is the ground-truth class queried by prompt k.
    OracleDetector(std::vector<int> face_labels, std::vector<int> class_of_prompt, NoiseModel noise = {})
        : m_labels(std::move(face_labels))
        , m_class_of_prompt(std::move(class_of_prompt))
        , m_noise(noise)
    {
        validate(m_noise);
    }

    std::vector<Detection> detect(const DetectionRequest& req) override
    {
        if (req.prompt_index < 0 || req.prompt_index >= static_cast<int>(m_class_of_prompt.size()))
            throw InputError("oracle detector has no class for prompt " + std::to_string(req.prompt_index));
        if (m_labels.size() != req.view.face_pixel_area.size())
            throw InputError("oracle labels do not match the rendered mesh");
        return oracle_detect(
            req.view, m_labels, m_class_of_prompt[req.prompt_index], m_noise, req.view_index, req.prompt_index);
    }

private:
    std::vector<int> m_labels;
    std::vector<int> m_class_of_prompt;
    NoiseModel m_noise;
};

// --------------------------------------------------------------------------
// Record / replay
// --------------------------------------------------------------------------

inline constexpr int kDetectionRecordVersion = 1;

/// Detections keyed by (view_index, prompt_index).
class DetectionLog
{
public:
    using Key = std::pair<int, int>;

    void set(int view_index, int prompt_index, std::vector<Detection> dets)
    {
        std::lock_guard lock(m_mutex);
        m_entries[{view_index, prompt_index}] = std::move(dets);
    }

    /// Empty when the key was never recorded.
    std::vector<Detection> get(int view_index, int prompt_index) const
    {
        std::lock_guard lock(m_mutex);
        auto it = m_entries.find({view_index, prompt_index});
        return it == m_entries.end() ? std::vector<Detection>{} : it->second;
    }

    std::size_t size() const
    {
        std::lock_guard lock(m_mutex);
        return m_entries.size();
    }

    nlohmann::json to_json() const
    {
        std::lock_guard lock(m_mutex);
        nlohmann::json views = nlohmann::json::array();
        for (const auto& [key, dets] : m_entries) {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& d : dets)
                list.push_back({{"x", d.box.x}, {"y", d.box.y}, {"w", d.box.w}, {"h", d.box.h}, {"score", d.score}});
            views.push_back({{"view_index", key.first}, {"prompt_index", key.second}, {"detections", list}});
        }
        return {{"version", kDetectionRecordVersion}, {"views", views}};
    }

    static DetectionLog from_json(const nlohmann::json& j)
    {
        DetectionLog log;
        try {
            if (!j.is_object() || !j.contains("version")) throw InputError("detection record lacks a version");
            const int version = j.at("version").get<int>();
            if (version != kDetectionRecordVersion) {
                throw InputError(
                    "detection record version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kDetectionRecordVersion) + ")");
            }
            for (const auto& v : j.at("views")) {
                const int view = v.at("view_index").get<int>();
                const int prompt = v.at("prompt_index").get<int>();
                std::vector<Detection> dets;
                for (const auto& d : v.at("detections")) {
                    dets.push_back(
                        {Box{d.at("x").get<double>(), d.at("y").get<double>(), d.at("w").get<double>(),
                             d.at("h").get<double>()},
                         d.at("score").get<double>(), prompt, view});
                }
                log.m_entries[{view, prompt}] = std::move(dets);
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("malformed detection record: ") + e.what());
        }
        return log;
    }

    void save(const std::filesystem::path& path) const
    {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write detection record '" + path.string() + "'");
        out << to_json().dump(1) << '\n';
    }

    static DetectionLog load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open detection record '" + path.string() + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("malformed detection record: ") + e.what());
        }
        return from_json(j);
    }

    DetectionLog() = default;
    DetectionLog(const DetectionLog& other)
        : m_entries(other.snapshot())
    {}
    DetectionLog& operator=(const DetectionLog& other)
    {
        if (this != &other) {
            auto copy = other.snapshot();
            std::lock_guard lock(m_mutex);
            m_entries = std::move(copy);
        }
        return *this;
    }

private:
    std::map<Key, std::vector<Detection>> snapshot() const
    {
        std::lock_guard lock(m_mutex);
        return m_entries;
    }

    mutable std::mutex m_mutex;
    std::map<Key, std::vector<Detection>> m_entries;
};

/// Serves detections from a recorded log; unknown keys answer with nothing.
class ReplayDetector : public Detector
{
public:
    explicit ReplayDetector(DetectionLog log)
        : m_log(std::move(log))
    {}

    std::vector<Detection> detect(const DetectionRequest& req) override
    {
        return m_log.get(req.view_index, req.prompt_index);
    }

private:
    DetectionLog m_log;
};

/// Forwards to another detector and keeps a copy of every answer.
class RecordingDetector : public Detector
{
public:
    explicit RecordingDetector(Detector& inner)
        : m_inner(inner)
    {}

    std::vector<Detection> detect(const DetectionRequest& req) override
    {
        auto dets = m_inner.detect(req);
        m_log.set(req.view_index, req.prompt_index, dets);
        return dets;
    }

    const DetectionLog& log() const { return m_log; }

private:
    Detector& m_inner;
    DetectionLog m_log;
};

} // namespace meshseg
