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

// Lifting 2D boxes to per-face prompt scores.
//
// For one view and one prompt with boxes l = 1..L, let T_l be the visible
// faces with a projected vertex inside box l and s_n the pixel area of face n:
//
//   base[n]  = max_l { p_l : n in T_l }
//   geo[n]   = sum_l reweight_l[n]          (0 outside T_l)
//   vis[n]   = sum_l |N_q(n) ∩ T_l| / |N_q(n)|
//   W[n, k]  = s_n * base[n] * geo[n] * vis[n]
//
// with geo and vis replaced by 1 when the corresponding stage is disabled.
// Views are then merged (max or sum), columns or rows normalized, and each
// face takes the argmax prompt.

#include <meshseg/detector.hpp>
#include <meshseg/geodesic.hpp>

namespace meshseg {

/// Dense faces x prompts matrix, row-major.
class ScoreMatrix
{
public:
    ScoreMatrix() = default;
    ScoreMatrix(std::size_t faces, std::size_t prompts)
        : m_faces(faces)
        , m_prompts(prompts)
        , m_values(faces * prompts, 0.0)
    {}

    std::size_t faces() const { return m_faces; }
    std::size_t prompts() const { return m_prompts; }

    double& operator()(std::size_t n, std::size_t k) { return m_values[n * m_prompts + k]; }
    double operator()(std::size_t n, std::size_t k) const { return m_values[n * m_prompts + k]; }

    std::span<const double> row(std::size_t n) const { return {m_values.data() + n * m_prompts, m_prompts}; }
    const std::vector<double>& values() const { return m_values; }
    std::vector<double>& values() { return m_values; }

    bool operator==(const ScoreMatrix&) const = default;

private:
    std::size_t m_faces = 0;
    std::size_t m_prompts = 0;
    std::vector<double> m_values;
};

/// Binary dump: uint32 faces, uint32 prompts, then faces*prompts float64, little-endian.
inline void write_score_matrix(std::ostream& out, const ScoreMatrix& s)
{
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.faces()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.prompts()));
    for (double v : s.values()) detail::write_le<double>(out, v);
}

inline ScoreMatrix read_score_matrix(std::istream& in)
{
    const auto n = detail::read_le<std::uint32_t>(in);
    const auto k = detail::read_le<std::uint32_t>(in);
    ScoreMatrix s(n, k);
    for (auto& v : s.values()) v = detail::read_le<double>(in);
    return s;
}

/// Detections grouped by prompt, in input order.
inline std::vector<std::vector<const Detection*>> group_by_prompt(std::span<const Detection> dets, std::size_t prompts)
{
    std::vector<std::vector<const Detection*>> by_prompt(prompts);
    for (const auto& d : dets) {
        if (d.prompt_index < 0 || static_cast<std::size_t>(d.prompt_index) >= prompts)
            throw InputError("detection references prompt " + std::to_string(d.prompt_index) + " out of range");
        by_prompt[d.prompt_index].push_back(&d);
    }
    return by_prompt;
}

/// Area-weighted box confidences for one view: W[n,k] = s_n * max box score.
inline ScoreMatrix baseline_view_scores(
    const Mesh& m,
    const RenderOutput& r,
    std::span<const Detection> dets,
    std::size_t prompts)
{
    ScoreMatrix w(m.num_faces(), prompts);
    for (const auto& d : dets) {
        if (d.prompt_index < 0 || static_cast<std::size_t>(d.prompt_index) >= prompts)
            throw InputError("detection references prompt " + std::to_string(d.prompt_index) + " out of range");
        for (auto f : faces_in_box(m, r, d.box)) w(f, d.prompt_index) = std::max(w(f, d.prompt_index), d.score);
    }
    for (std::size_t n = 0; n < m.num_faces(); ++n) {
        const auto area = static_cast<double>(r.face_pixel_area[n]);
        for (std::size_t k = 0; k < prompts; ++k) w(n, k) *= area;
    }
    return w;
}

/// Fraction of each query face's q-ring that lies in `visible`. Query faces
/// default to the visible set itself.
struct VisibilityWeights
{
    std::vector<FaceId> faces;
    std::vector<double> ratios;
};

inline VisibilityWeights visibility_weights(
    std::span<const FaceId> visible,
    const QRingIndex& qring,
    std::span<const FaceId> query = {})
{
    if (query.empty()) query = visible;
    std::vector<char> in_set(qring.num_faces(), 0);
    for (auto f : visible) in_set[f] = 1;
    VisibilityWeights out{{query.begin(), query.end()}, {}};
    out.ratios.reserve(query.size());
    for (auto f : query) {
        const auto ring = qring[f];
        std::size_t hits = 0;
        for (auto g : ring) hits += in_set[g];
        out.ratios.push_back(static_cast<double>(hits) / static_cast<double>(ring.size()));
    }
    return out;
}

enum class ReweightMode { None, Gaussian, MaxGeodesic, Softmax };

/// How per-box weights merge when a prompt has several boxes in one view.
enum class BoxCombine {
    /// Max confidence times the summed geodesic and summed visibility vectors.
    SumThenMultiply,
    /// Sum over boxes of (confidence * geodesic * visibility).
    MultiplyThenSum,
};

struct SatrOptions
{
    ReweightMode reweight = ReweightMode::Gaussian;
    bool smoothing = true;
    BoxCombine combine = BoxCombine::SumThenMultiply;
    CapitalAverage capital = CapitalAverage::AreaWeightedCentroids;
    /// Lower bound on the fitted Gaussian std (mesh units).
    double sigma_floor = 1e-6;
};

inline ReweightVector reweight(const GeodesicField& field, ReweightMode mode, double sigma_floor)
{
    switch (mode) {
    case ReweightMode::Gaussian: return gaussian_reweight(field, sigma_floor);
    case ReweightMode::MaxGeodesic: return max_geodesic_reweight(field);
    case ReweightMode::Softmax: return softmax_geodesic_reweight(field);
    case ReweightMode::None: break;
    }
    return {field.faces, std::vector<double>(field.size(), 1.0)};
}

/// Per-view scores with geodesic reweighting and visibility smoothing.
/// `geodesics` may be null when reweighting is off, `qring` when smoothing is off.
inline ScoreMatrix satr_view_scores(
    const Mesh& m,
    const RenderOutput& r,
    std::span<const Detection> dets,
    std::size_t prompts,
    const GeodesicEngine* geodesics,
    const QRingIndex* qring,
    const SatrOptions& opt)
{
    if (opt.smoothing && qring == nullptr) throw InputError("visibility smoothing needs a q-ring index");
    if (opt.reweight != ReweightMode::None && geodesics == nullptr)
        throw InputError("geodesic reweighting needs a geodesic engine");
    const std::size_t n_faces = m.num_faces();
    ScoreMatrix w(n_faces, prompts);
    const auto by_prompt = group_by_prompt(dets, prompts);

    std::vector<double> base(n_faces), geo(n_faces), vis(n_faces), acc(n_faces);
    std::vector<char> in_union(n_faces);
    for (std::size_t k = 0; k < prompts; ++k) {
        if (by_prompt[k].empty()) continue;

        std::vector<std::vector<FaceId>> targets;
        targets.reserve(by_prompt[k].size());
        std::fill(in_union.begin(), in_union.end(), 0);
        std::vector<FaceId> united;
        for (const auto* d : by_prompt[k]) {
            targets.push_back(faces_in_box(m, r, d->box));
            for (auto f : targets.back())
                if (!in_union[f]) {
                    in_union[f] = 1;
                    united.push_back(f);
                }
        }
        std::sort(united.begin(), united.end());

        std::fill(base.begin(), base.end(), 0.0);
        std::fill(geo.begin(), geo.end(), 0.0);
        std::fill(vis.begin(), vis.end(), 0.0);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t l = 0; l < targets.size(); ++l) {
            const auto& t = targets[l];
            if (t.empty()) continue;
            const double p = by_prompt[k][l]->score;

            // Per-box factors, indexed by face; only entries of `t` (geodesic)
            // or `united` (visibility) are meaningful.
            std::vector<double> box_geo;
            if (opt.reweight != ReweightMode::None) {
                const auto capital = capital_face<std::int64_t>(m, t, r.face_pixel_area, opt.capital);
                const auto rw = reweight(geodesics->distances(capital, t), opt.reweight, opt.sigma_floor);
                box_geo.assign(n_faces, 0.0);
                for (std::size_t i = 0; i < rw.faces.size(); ++i) box_geo[rw.faces[i]] = rw.weights[i];
            }
            std::vector<double> box_vis;
            if (opt.smoothing) {
                const auto vw = visibility_weights(t, *qring, united);
                box_vis.assign(n_faces, 0.0);
                for (std::size_t i = 0; i < vw.faces.size(); ++i) box_vis[vw.faces[i]] = vw.ratios[i];
            }

            if (opt.combine == BoxCombine::SumThenMultiply) {
                for (auto f : t) base[f] = std::max(base[f], p);
                if (!box_geo.empty())
                    for (auto f : t) geo[f] += box_geo[f];
                if (!box_vis.empty())
                    for (auto f : united) vis[f] += box_vis[f];
            } else {
                for (auto f : t) {
                    double c = p;
                    if (!box_geo.empty()) c *= box_geo[f];
                    if (!box_vis.empty()) c *= box_vis[f];
                    acc[f] += c;
                }
            }
        }

        for (auto f : united) {
            double v;
            if (opt.combine == BoxCombine::SumThenMultiply) {
                v = base[f];
                if (opt.reweight != ReweightMode::None) v *= geo[f];
                if (opt.smoothing) v *= vis[f];
            } else {
                v = acc[f];
            }
            w(f, k) = static_cast<double>(r.face_pixel_area[f]) * v;
        }
    }
    return w;
}

enum class ViewAggregation { Max, Sum };

/// Folds one view's scores into a running aggregate.
inline void accumulate_view(ScoreMatrix& acc, const ScoreMatrix& view, ViewAggregation mode)
{
    if (acc.faces() != view.faces() || acc.prompts() != view.prompts())
        throw InputError("score matrices have different shapes");
    auto& a = acc.values();
    const auto& v = view.values();
    if (mode == ViewAggregation::Max) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::max(a[i], v[i]);
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += v[i];
    }
}

inline ScoreMatrix aggregate_views(std::span<const ScoreMatrix> views, ViewAggregation mode = ViewAggregation::Max)
{
    if (views.empty()) return {};
    ScoreMatrix acc(views.front().faces(), views.front().prompts());
    for (const auto& v : views) accumulate_view(acc, v, mode);
    return acc;
}

enum class NormalizeAxis { PerPrompt, PerFace };

/// Divides each prompt column (or face row) by its maximum; all-zero columns
/// or rows stay zero.
inline ScoreMatrix normalize_scores(const ScoreMatrix& s, NormalizeAxis axis = NormalizeAxis::PerPrompt)
{
    ScoreMatrix out = s;
    if (axis == NormalizeAxis::PerPrompt) {
        for (std::size_t k = 0; k < s.prompts(); ++k) {
            double mx = 0.0;
            for (std::size_t n = 0; n < s.faces(); ++n) mx = std::max(mx, s(n, k));
            if (mx > 0.0)
                for (std::size_t n = 0; n < s.faces(); ++n) out(n, k) = s(n, k) / mx;
        }
    } else {
        for (std::size_t n = 0; n < s.faces(); ++n) {
            double mx = 0.0;
            for (std::size_t k = 0; k < s.prompts(); ++k) mx = std::max(mx, s(n, k));
            if (mx > 0.0)
                for (std::size_t k = 0; k < s.prompts(); ++k) out(n, k) = s(n, k) / mx;
        }
    }
    return out;
}

struct LabelPolicy
{
    /// When set, faces whose best score is below `tau` are labeled kUnlabeled.
    bool background = false;
    double tau = 0.0;
};

/// Argmax prompt per face, lowest index on ties.
inline std::vector<int> assign_labels(const ScoreMatrix& s, const LabelPolicy& policy = {})
{
    std::vector<int> labels(s.faces(), kUnlabeled);
    for (std::size_t n = 0; n < s.faces(); ++n) {
        if (s.prompts() == 0) continue;
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.prompts(); ++k)
            if (s(n, k) > s(n, best)) best = k;
        if (policy.background && s(n, best) < policy.tau) continue;
        labels[n] = static_cast<int>(best);
    }
    return labels;
}

} // namespace meshseg
