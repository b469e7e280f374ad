// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vides/image.hpp"

namespace vides {

enum class ConditionKind { none, edge, depth };

std::string_view to_string(ConditionKind kind);
/// Accepts "none", "edge", "depth"; throws ValidationError otherwise.
ConditionKind parse_condition_kind(std::string_view text);

/// A single-channel control image plus where it came from.
struct GuidanceCondition {
    ConditionKind kind = ConditionKind::none;
    Image image;
    std::string source_hash;
    std::map<std::string, std::string> extractor_params;
};

struct EdgeThresholds {
    double low = 100.0;
    double high = 200.0;
};

/// Canny edge map: 3x3 Sobel (replicate border) on luma, non-maximum
/// suppression over four quantized directions, then 8-connected hysteresis.
/// Magnitudes are unnormalized Sobel L2 norms, so a full 0->255 step has
/// magnitude 1020. Output pixels are 0 or 255.
GuidanceCondition extract_edges(const Image& image, EdgeThresholds thresholds = {});

/// Relative depth, larger = farther or nearer depending on the estimator;
/// only the ordering matters after normalization.
struct DepthField {
    int width = 0;
    int height = 0;
    std::vector<float> values;
};

/// Monocular depth estimator plugin. estimate() must be a pure function of the
/// image and safe to call concurrently.
class DepthEstimator {
public:
    virtual ~DepthEstimator() = default;
    virtual std::string name() const = 0;
    virtual DepthField estimate(const Image& image) const = 0;
};

/// Uses luma as depth. Ships for tests and demos; never a real estimate.
class IntensityDepthEstimator final : public DepthEstimator {
public:
    std::string name() const override { return "intensity"; }
    DepthField estimate(const Image& image) const override;
};

/// Min-max normalizes a raw field into the 8-bit control range. A constant
/// field maps to all-128.
Image normalize_depth(const DepthField& field);

/// Runs the estimator, resizes its field to the source size when it differs
/// and normalizes.
GuidanceCondition extract_depth(const Image& image, const DepthEstimator& estimator);

class DepthEstimatorRegistry {
public:
    void add(std::shared_ptr<const DepthEstimator> estimator);
    /// Throws CapabilityError for unknown names.
    std::shared_ptr<const DepthEstimator> get(std::string_view name) const;
    bool contains(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const DepthEstimator>, std::less<>> estimators_;
};

}  // namespace vides
