// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "vides/backend.hpp"
#include "vides/guidance.hpp"
#include "vides/mask.hpp"
#include "vides/serialization.hpp"

namespace vides {

// Wire format shared by the out-of-process plugin clients below and any
// server implementing them. Images travel as base64 PNG.
Json image_to_json(const Image& image);
Image image_from_json(const Json& j);
Json backend_request_to_json(const BackendRequest& request);
BackendRequest backend_request_from_json(const Json& j);

/// Client for a generation model served over HTTP:
///   POST {url}/invoke  body = backend_request_to_json(...)
///   200 -> {"images": [<base64 png>, ...]}
///   non-200 -> {"message": "..."} surfaced as BackendError
class HttpGenerationBackend final : public GenerationBackend {
public:
    HttpGenerationBackend(std::string name, std::string url, BackendCapabilities caps,
                          std::chrono::milliseconds timeout = std::chrono::seconds(300));
    std::string name() const override { return name_; }
    BackendCapabilities capabilities() const override { return caps_; }
    std::vector<Image> invoke(const BackendRequest& request) override;

private:
    std::string name_;
    std::string url_;
    BackendCapabilities caps_;
    std::chrono::milliseconds timeout_;
};

/// POST {url}/depth {"image": png} -> {"width", "height", "values": [...]}
class HttpDepthEstimator final : public DepthEstimator {
public:
    HttpDepthEstimator(std::string name, std::string url,
                       std::chrono::milliseconds timeout = std::chrono::seconds(120));
    std::string name() const override { return name_; }
    DepthField estimate(const Image& image) const override;

private:
    std::string name_;
    std::string url_;
    std::chrono::milliseconds timeout_;
};

/// POST {url}/segment {"image": png, "interactions": [...]} -> {"mask": png}
class HttpSegmenter final : public SegmentationBackend {
public:
    HttpSegmenter(std::string name, std::string url, bool single_occupancy = true,
                  std::chrono::milliseconds timeout = std::chrono::seconds(120));
    std::string name() const override { return name_; }
    bool single_occupancy() const override { return single_occupancy_; }
    Image segment(const Image& image, const std::vector<Interaction>& interactions) const override;

private:
    std::string name_;
    std::string url_;
    bool single_occupancy_;
    std::chrono::milliseconds timeout_;
};

/// Everything a process needs to run the pipeline, assembled from a plugin
/// configuration file.
struct PluginSet {
    std::shared_ptr<BackendRegistry> backends = std::make_shared<BackendRegistry>();
    std::shared_ptr<DepthEstimatorRegistry> depth = std::make_shared<DepthEstimatorRegistry>();
    std::map<std::string, std::shared_ptr<const SegmentationBackend>> segmenters;
    std::string default_depth_estimator = "intensity";
    std::string default_segmenter;  ///< empty: no segmentation, boxes only

    /// Null when `name` (or the default, for an empty name) is not configured.
    std::shared_ptr<const SegmentationBackend> segmenter(std::string_view name = {}) const;
};

/// Stub backend "stub" (all capabilities, default), depth estimator
/// "intensity", segmenter "floodfill" available but not selected.
PluginSet default_plugins();

/// {
///   "default_backend": "stub",
///   "backends": [{"name", "type": "stub"|"http", "url"?, "timeout_ms"?, "capabilities"?}],
///   "depth_estimators": [{"name", "type": "intensity"|"http", "url"?}],
///   "default_depth_estimator": "intensity",
///   "segmenters": [{"name", "type": "floodfill"|"http", "url"?, "tolerance"?}],
///   "default_segmenter": "floodfill"
/// }
PluginSet load_plugins(const Json& config);
PluginSet load_plugins(const std::filesystem::path& path);

}  // namespace vides
