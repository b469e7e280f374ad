// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "vides/error.hpp"

namespace vides {

std::string_view to_string(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::none: return "none";
        case ConditionKind::edge: return "edge";
        case ConditionKind::depth: return "depth";
    }
    return "none";
}

ConditionKind parse_condition_kind(std::string_view text) {
    if (text == "none" || text.empty()) return ConditionKind::none;
    if (text == "edge") return ConditionKind::edge;
    if (text == "depth") return ConditionKind::depth;
    throw ValidationError("unknown condition kind '" + std::string(text) + "'", "condition_kind");
}

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

GuidanceCondition extract_edges(const Image& image, EdgeThresholds thresholds) {
    if (image.empty()) throw ValidationError("edge extraction needs a non-empty image", "image");
    if (!(thresholds.low >= 0.0) || !(thresholds.high >= thresholds.low))
        throw ValidationError("edge thresholds must satisfy high >= low >= 0", "thresholds");

    const Image gray = to_gray(image);
    const int w = gray.width();
    const int h = gray.height();
    auto px = [&](int x, int y) -> int {
        return gray.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
    };

    const std::size_t n = gray.pixel_count();
    std::vector<int> gx(n), gy(n);
    std::vector<std::int64_t> mag(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int dx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                           (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            const int dy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                           (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = static_cast<std::int64_t>(dx) * dx + static_cast<std::int64_t>(dy) * dy;
        }
    }

    auto mag_at = [&](int x, int y) -> std::int64_t {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0;
        return mag[static_cast<std::size_t>(y) * w + x];
    };
    const double low2 = thresholds.low * thresholds.low;
    const double high2 = thresholds.high * thresholds.high;

    // tan(22.5 deg) and tan(67.5 deg) in 1/32768 units.
    constexpr std::int64_t kTan22 = 13573;
    constexpr std::int64_t kTan67 = kTan22 + (1 << 16);

    // 0 = suppressed, 1 = weak candidate, 2 = strong.
    std::vector<std::uint8_t> state(n, 0);
    std::vector<std::size_t> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const std::int64_t m = mag[i];
            if (!(static_cast<double>(m) > low2)) continue;
            const std::int64_t ax = std::abs(gx[i]);
            const std::int64_t ay = std::abs(gy[i]);
            const int sx = gx[i] > 0 ? 1 : (gx[i] < 0 ? -1 : 0);
            const int sy = gy[i] > 0 ? 1 : (gy[i] < 0 ? -1 : 0);
            int ux, uy;  // unit step toward the brighter side
            if (ay * 32768 < kTan22 * ax) {
                ux = sx, uy = 0;
            } else if (ay * 32768 > kTan67 * ax) {
                ux = 0, uy = sy;
            } else {
                ux = sx, uy = sy;
            }
            const std::int64_t ahead = mag_at(x + ux, y + uy);
            const std::int64_t behind = mag_at(x - ux, y - uy);
            if (m >= behind && m > ahead) {
                if (static_cast<double>(m) > high2) {
                    state[i] = 2;
                    stack.push_back(i);
                } else {
                    state[i] = 1;
                }
            }
        }
    }

    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w);
        const int y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                if (state[j] == 1) {
                    state[j] = 2;
                    stack.push_back(j);
                }
            }
        }
    }

    GuidanceCondition out;
    out.kind = ConditionKind::edge;
    out.image = Image(w, h, 1);
    auto dst = out.image.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] = state[i] == 2 ? 255 : 0;
    out.source_hash = content_hash(image);
    out.extractor_params = {{"algorithm", "canny"},
                            {"sobel_aperture", "3"},
                            {"low_threshold", format_double(thresholds.low)},
                            {"high_threshold", format_double(thresholds.high)}};
    return out;
}

DepthField IntensityDepthEstimator::estimate(const Image& image) const {
    const Image gray = to_gray(image);
    DepthField field{gray.width(), gray.height(), {}};
    field.values.assign(gray.data().begin(), gray.data().end());
    return field;
}

Image normalize_depth(const DepthField& field) {
    if (field.width <= 0 || field.height <= 0 ||
        field.values.size() != static_cast<std::size_t>(field.width) * field.height)
        throw BackendError("depth field geometry is inconsistent");
    float lo = field.values.front();
    float hi = lo;
    for (float v : field.values) {
        if (!std::isfinite(v)) throw BackendError("depth estimator returned a non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image out(field.width, field.height, 1, std::uint8_t{128});
    if (lo == hi) return out;
    auto dst = out.data();
    const double range = static_cast<double>(hi) - lo;
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        const double t = (static_cast<double>(field.values[i]) - lo) / range;
        dst[i] = static_cast<std::uint8_t>(std::clamp(std::floor(t * 255.0 + 0.5), 0.0, 255.0));
    }
    return out;
}

GuidanceCondition extract_depth(const Image& image, const DepthEstimator& estimator) {
    if (image.empty()) throw ValidationError("depth extraction needs a non-empty image", "image");
    DepthField field = estimator.estimate(image);
    if (field.width <= 0 || field.height <= 0 ||
        field.values.size() != static_cast<std::size_t>(field.width) * field.height)
        throw BackendError("depth estimator '" + estimator.name() + "' returned a malformed field");
    if (field.width != image.width() || field.height != image.height()) {
        field.values = resize_bilinear(field.values, field.width, field.height, image.width(),
                                       image.height());
        field.width = image.width();
        field.height = image.height();
    }
    GuidanceCondition out;
    out.kind = ConditionKind::depth;
    out.image = normalize_depth(field);
    out.source_hash = content_hash(image);
    out.extractor_params = {{"estimator", estimator.name()}, {"normalization", "minmax"}};
    return out;
}

void DepthEstimatorRegistry::add(std::shared_ptr<const DepthEstimator> estimator) {
    std::lock_guard lock(mutex_);
    auto name = estimator->name();
    if (estimators_.contains(name))
        throw ValidationError("depth estimator '" + name + "' is already registered", "name");
    estimators_.emplace(std::move(name), std::move(estimator));
}

std::shared_ptr<const DepthEstimator> DepthEstimatorRegistry::get(std::string_view name) const {
    std::lock_guard lock(mutex_);
    auto it = estimators_.find(name);
    if (it == estimators_.end())
        throw CapabilityError("depth estimator '" + std::string(name) + "' is not available");
    return it->second;
}

bool DepthEstimatorRegistry::contains(std::string_view name) const {
    std::lock_guard lock(mutex_);
    return estimators_.find(name) != estimators_.end();
}

std::vector<std::string> DepthEstimatorRegistry::names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, _] : estimators_) out.push_back(name);
    return out;
}

}  // namespace vides
