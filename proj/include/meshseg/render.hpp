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

// Deterministic perspective rasterizer with a face-ID buffer.
//
// Screen coordinates are continuous pixel units with the origin at the lower
// left corner of the image, x to the right and y up. Pixel (i, j) covers
// [i, i+1) x [j, j+1) and is sampled at its center. Image rows are stored top
// down, so screen row j lives in storage row (height - 1 - j).

#include <meshseg/mesh.hpp>

#include <optional>
#include <random>

namespace meshseg {

using Rgb = std::array<std::uint8_t, 3>;

/// Sentinel in the face-ID buffer for pixels not covered by any face.
inline constexpr FaceId kBackground = -1;

/// Axis-aligned box in screen coordinates, anchored at its lower-left corner.
struct Box
{
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    bool contains(double px, double py) const { return px >= x && px < x + w && py >= y && py < y + h; }

    bool empty() const { return !(w > 0.0) || !(h > 0.0); }

    /// Intersection with [0, width] x [0, height].
    Box clamped(int width, int height) const
    {
        const double x0 = std::clamp(x, 0.0, static_cast<double>(width));
        const double y0 = std::clamp(y, 0.0, static_cast<double>(height));
        const double x1 = std::clamp(x + w, 0.0, static_cast<double>(width));
        const double y1 = std::clamp(y + h, 0.0, static_cast<double>(height));
        return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
    }

    bool operator==(const Box&) const = default;
};

struct Camera
{
    double elevation = 0.0;
    double azimuth = 0.0;
    double distance = 2.2;
    double fov_y = kPi / 3.0;
    Vec3 look_at = Vec3::Zero();

    /// Y-up spherical placement around look_at.
    Vec3 position() const
    {
        const double ce = std::cos(elevation);
        return look_at +
               distance * Vec3(ce * std::sin(azimuth), std::sin(elevation), ce * std::cos(azimuth));
    }

    bool operator==(const Camera&) const = default;
};

inline void validate(const Camera& cam)
{
    if (!(cam.distance > 1.0)) throw InputError("camera distance must exceed the unit sphere radius");
    if (!(cam.fov_y > 0.0 && cam.fov_y < kPi)) throw InputError("camera fov_y must lie in (0, pi)");
}

enum class ViewSampling { Normal, Uniform };

/// Draws `count` cameras. Normal mode samples elevation and azimuth from
/// N(0.7, 4^2) radians; uniform mode from U[0, 2pi).
inline std::vector<Camera> sample_views(int count, ViewSampling mode, std::uint64_t seed, const Camera& base = {})
{
    if (count < 1) throw InputError("view count must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.7, 4.0);
    std::uniform_real_distribution<double> uniform(0.0, 2.0 * kPi);
    std::vector<Camera> cams;
    cams.reserve(count);
    for (int i = 0; i < count; ++i) {
        Camera c = base;
        if (mode == ViewSampling::Normal) {
            c.elevation = normal(rng);
            c.azimuth = normal(rng);
        } else {
            c.elevation = uniform(rng);
            c.azimuth = uniform(rng);
        }
        cams.push_back(c);
    }
    return cams;
}

/// Orthonormal camera frame; `forward` points from the eye toward look_at.
struct ViewFrame
{
    Vec3 eye;
    Vec3 right;
    Vec3 up;
    Vec3 forward;

    explicit ViewFrame(const Camera& cam)
        : eye(cam.position())
    {
        forward = (cam.look_at - eye).normalized();
        Vec3 world_up(0.0, 1.0, 0.0);
        // Looking straight up or down: any horizontal axis will do.
        if (forward.cross(world_up).norm() < 1e-9) world_up = Vec3(0.0, 0.0, 1.0);
        right = forward.cross(world_up).normalized();
        up = right.cross(forward);
    }
};

struct ProjectedVertex
{
    double x = 0.0;
    double y = 0.0;
    /// View-space depth along the viewing direction.
    double depth = 0.0;
};

struct Image
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, Rgb fill = {0, 0, 0})
        : width(w)
        , height(h)
        , rgb(static_cast<std::size_t>(w) * h * 3)
    {
        for (std::size_t i = 0; i < rgb.size(); i += 3) std::copy(fill.begin(), fill.end(), rgb.begin() + i);
    }

    /// Pixel in storage order (row 0 at the top).
    Rgb at(int col, int row) const
    {
        const auto i = (static_cast<std::size_t>(row) * width + col) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
};

struct RenderOutput
{
    int width = 0;
    int height = 0;
    Camera camera;
    Image image;
    /// Face ID per pixel, storage order (row 0 at the top), kBackground if uncovered.
    std::vector<FaceId> pixel2face;
    /// Pixel count per face.
    std::vector<std::int64_t> face_pixel_area;
    /// Sorted IDs of faces owning at least one pixel.
    std::vector<FaceId> visible_faces;
    /// Per mesh vertex, screen position and view depth.
    std::vector<ProjectedVertex> projected_vertices;

    FaceId face_at(int col, int row) const { return pixel2face[static_cast<std::size_t>(row) * width + col]; }

    bool is_visible(FaceId f) const { return face_pixel_area[f] > 0; }

    std::int64_t background_pixels() const
    {
        return std::count(pixel2face.begin(), pixel2face.end(), kBackground);
    }
};

struct RasterSettings
{
    int width = 1024;
    int height = 1024;
    Rgb background = {0, 0, 0};
    /// Base color for flat-shaded faces when no per-face colors are given.
    Rgb mesh_color = {180, 180, 180};
    /// Per-face colors written unshaded; empty means shade mesh_color.
    std::vector<Rgb> face_colors;
    double ambient = 0.3;
    double near_plane = 1e-3;
};

/// Rasterizes `m` with a Z-buffer. Depth ties go to the lower face index.
inline RenderOutput rasterize(const Mesh& m, const Camera& cam, const RasterSettings& settings = {})
{
    if (settings.width < 16 || settings.height < 16) throw InputError("render resolution must be at least 16x16");
    if (!settings.face_colors.empty() && settings.face_colors.size() != m.num_faces())
        throw InputError("face color count does not match face count");
    validate(cam);

    const int W = settings.width;
    const int H = settings.height;
    const ViewFrame frame(cam);
    const double focal = 1.0 / std::tan(cam.fov_y / 2.0);
    const double aspect = static_cast<double>(W) / H;

    RenderOutput out;
    out.width = W;
    out.height = H;
    out.camera = cam;
    out.image = Image(W, H, settings.background);
    out.pixel2face.assign(static_cast<std::size_t>(W) * H, kBackground);
    out.face_pixel_area.assign(m.num_faces(), 0);
    out.projected_vertices.resize(m.num_vertices());

    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        const Vec3 d = m.vertices[v] - frame.eye;
        const double z = d.dot(frame.forward);
        auto& pv = out.projected_vertices[v];
        pv.depth = z;
        if (z > settings.near_plane) {
            pv.x = (focal * d.dot(frame.right) / (z * aspect) + 1.0) * 0.5 * W;
            pv.y = (focal * d.dot(frame.up) / z + 1.0) * 0.5 * H;
        } else {
            pv.x = pv.y = std::numeric_limits<double>::quiet_NaN();
        }
    }

    std::vector<double> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<double>::infinity());
    for (std::size_t fi = 0; fi < m.num_faces(); ++fi) {
        const auto& t = m.faces[fi];
        const auto& a = out.projected_vertices[t[0]];
        const auto& b = out.projected_vertices[t[1]];
        const auto& c = out.projected_vertices[t[2]];
        if (!(a.depth > settings.near_plane && b.depth > settings.near_plane && c.depth > settings.near_plane)) continue;

        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area == 0.0 || !std::isfinite(area)) continue;

        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
        const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
        const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));
        if (x0 > x1 || y0 > y1) continue;

        const double inv_area = 1.0 / area;
        const double iza = 1.0 / a.depth;
        const double izb = 1.0 / b.depth;
        const double izc = 1.0 / c.depth;
        const auto face = static_cast<FaceId>(fi);
        for (int j = y0; j <= y1; ++j) {
            const double py = j + 0.5;
            for (int i = x0; i <= x1; ++i) {
                const double px = i + 0.5;
                const double w0 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) * inv_area;
                const double w1 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) * inv_area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double depth = 1.0 / (w0 * iza + w1 * izb + w2 * izc);
                const auto idx = static_cast<std::size_t>(H - 1 - j) * W + i;
                if (depth < zbuf[idx]) {
                    zbuf[idx] = depth;
                    out.pixel2face[idx] = face;
                }
            }
        }
    }

    std::vector<Rgb> shade(m.num_faces());
    for (std::size_t f = 0; f < m.num_faces(); ++f) {
        if (!settings.face_colors.empty()) {
            shade[f] = settings.face_colors[f];
            continue;
        }
        const auto face = static_cast<FaceId>(f);
        const Vec3 to_eye = (frame.eye - m.centroid(face)).normalized();
        const double lambert = std::abs(m.face_normal(face).dot(to_eye));
        const double k = settings.ambient + (1.0 - settings.ambient) * lambert;
        for (int ch = 0; ch < 3; ++ch)
            shade[f][ch] = static_cast<std::uint8_t>(std::lround(std::clamp(settings.mesh_color[ch] * k, 0.0, 255.0)));
    }

    for (std::size_t idx = 0; idx < out.pixel2face.size(); ++idx) {
        const auto f = out.pixel2face[idx];
        if (f == kBackground) continue;
        ++out.face_pixel_area[f];
        std::copy(shade[f].begin(), shade[f].end(), out.image.rgb.begin() + idx * 3);
    }
    for (std::size_t f = 0; f < m.num_faces(); ++f)
        if (out.face_pixel_area[f] > 0) out.visible_faces.push_back(static_cast<FaceId>(f));
    return out;
}

/// Visible faces with at least one projected vertex inside `box` (clamped to the image).
inline std::vector<FaceId> faces_in_box(const Mesh& m, const RenderOutput& r, const Box& box)
{
    const Box b = box.clamped(r.width, r.height);
    std::vector<FaceId> out;
    if (b.empty()) return out;
    for (auto f : r.visible_faces) {
        for (auto v : m.faces[f]) {
            const auto& p = r.projected_vertices[v];
            if (b.contains(p.x, p.y)) {
                out.push_back(f);
                break;
            }
        }
    }
    return out;
}

} // namespace meshseg
