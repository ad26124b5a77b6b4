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

// HTTP client for a detection service.
//
//   POST /detect  {"image": <base64 PNG>, "prompt": <string>, "threshold": <number>}
//   200           {"detections": [{"x", "y", "w", "h", "score"}, ...]}
//
// Boxes use the lower-left anchored pixel convention. An empty list is a
// valid answer; any other status is a transport error.

#include <meshseg/detector.hpp>
#include <meshseg/image_io.hpp>

// Eigen must come first: <resolv.h> (pulled in by httplib) defines a `_res` macro.
#include <Eigen/SparseCore>
#include <httplib.h>

#include <chrono>
#include <semaphore>
#include <thread>

namespace meshseg {

struct RemoteDetectorOptions
{
    /// Base URL, e.g. "http://127.0.0.1:8080".
    std::string endpoint = "http://127.0.0.1:8080";
    std::string path = "/detect";
    double threshold = 0.5;
    /// Attempts after the first one for connection failures and 5xx answers.
    int max_retries = 2;
    int max_in_flight = 4;
    std::chrono::milliseconds retry_backoff{100};
    std::chrono::seconds timeout{60};
};

inline nlohmann::json make_detect_request(const Image& image, std::string_view prompt, double threshold)
{
    return {{"image", base64_encode(encode_png(image))}, {"prompt", std::string(prompt)}, {"threshold", threshold}};
}

/// Parses a 200 response body; throws TransportError when it does not match the protocol.
inline std::vector<Detection> parse_detect_response(const std::string& body, int view_index, int prompt_index)
{
    std::vector<Detection> out;
    try {
        const auto j = nlohmann::json::parse(body);
        for (const auto& d : j.at("detections")) {
            out.push_back(
                {Box{d.at("x").get<double>(), d.at("y").get<double>(), d.at("w").get<double>(), d.at("h").get<double>()},
                 d.at("score").get<double>(), prompt_index, view_index});
        }
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed detector response: ") + e.what());
    }
    return out;
}

class RemoteDetector : public Detector
{
public:
    explicit RemoteDetector(RemoteDetectorOptions options)
        : m_options(std::move(options))
        , m_slots(std::max(1, m_options.max_in_flight))
    {
        if (m_options.max_in_flight < 1 || m_options.max_in_flight > kMaxInFlight)
            throw InputError("max_in_flight must lie in [1, " + std::to_string(kMaxInFlight) + "]");
        if (!(m_options.threshold >= 0.0 && m_options.threshold <= 1.0))
            throw InputError("detector threshold must lie in [0, 1]");
    }

    std::vector<Detection> detect(const DetectionRequest& req) override
    {
        const std::string body = make_detect_request(req.view.image, req.prompt, m_options.threshold).dump();

        m_slots.acquire();
        struct Release
        {
            std::counting_semaphore<kMaxInFlight>& s;
            ~Release() { s.release(); }
        } release{m_slots};

        std::string last_error;
        for (int attempt = 0; attempt <= m_options.max_retries; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(m_options.retry_backoff * attempt);
            httplib::Client client(m_options.endpoint);
            client.set_connection_timeout(m_options.timeout);
            client.set_read_timeout(m_options.timeout);
            client.set_write_timeout(m_options.timeout);
            auto res = client.Post(m_options.path, body, "application/json");
            if (!res) {
                last_error = "request failed: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 200) {
                auto dets = parse_detect_response(res->body, req.view_index, req.prompt_index);
                std::erase_if(dets, [&](const Detection& d) { return d.score < m_options.threshold; });
                return sanitize_detections(std::move(dets), req.view.width, req.view.height);
            }
            last_error = "detector answered HTTP " + std::to_string(res->status);
            if (res->status < 500) break; // 4xx: not retried
        }
        throw TransportError(last_error);
    }

    const RemoteDetectorOptions& options() const { return m_options; }

private:
    static constexpr std::ptrdiff_t kMaxInFlight = 256;

    RemoteDetectorOptions m_options;
    std::counting_semaphore<kMaxInFlight> m_slots;
};

} // namespace meshseg
