// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "vides/image.hpp"

namespace vides {

enum class PointLabel { foreground, background };

struct PointInteraction {
    int x = 0;
    int y = 0;
    PointLabel label = PointLabel::foreground;
    friend bool operator==(const PointInteraction&, const PointInteraction&) = default;
};

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct BoxInteraction {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
    friend bool operator==(const BoxInteraction&, const BoxInteraction&) = default;
};

using Interaction = std::variant<PointInteraction, BoxInteraction>;

struct PostprocessRecord {
    int dilation_radius = 0;
    bool holes_filled = false;
    friend bool operator==(const PostprocessRecord&, const PostprocessRecord&) = default;
};

/// Binary region-of-interest mask together with the interactions that
/// produced it. area_fraction() is kept in sync with the mask on every
/// mutation.
class MaskSpec {
public:
    MaskSpec() = default;
    /// Throws ValidationError unless the image is 1-channel with values in {0, 255}.
    explicit MaskSpec(Image mask, std::vector<Interaction> interactions = {},
                      PostprocessRecord postprocess = {});

    const Image& mask() const noexcept { return mask_; }
    const std::vector<Interaction>& interactions() const noexcept { return interactions_; }
    const PostprocessRecord& postprocess() const noexcept { return postprocess_; }
    double area_fraction() const noexcept { return area_fraction_; }
    std::size_t foreground_count() const noexcept { return foreground_; }
    int width() const noexcept { return mask_.width(); }
    int height() const noexcept { return mask_.height(); }

    void set_mask(Image mask);
    void set_postprocess(PostprocessRecord record) { postprocess_ = record; }

    friend bool operator==(const MaskSpec&, const MaskSpec&) = default;

private:
    void recount();

    Image mask_;
    std::vector<Interaction> interactions_;
    PostprocessRecord postprocess_;
    std::size_t foreground_ = 0;
    double area_fraction_ = 0.0;
};

/// Throws ValidationError if the interaction is outside a width x height image
/// or the box is degenerate.
void check_interaction(const Interaction& interaction, int width, int height);

/// Pluggable interactive segmentation model. Implementations return a single
/// binary mask for all interactions (foreground objects unioned).
class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;
    virtual std::string name() const = 0;
    /// True when the backend tolerates only one in-flight call.
    virtual bool single_occupancy() const { return false; }
    virtual Image segment(const Image& image, const std::vector<Interaction>& interactions) const = 0;
};

/// Deterministic stand-in: each foreground click flood-fills (4-connected) the
/// pixels whose per-channel difference to the clicked colour is <= tolerance;
/// boxes contribute their rectangle; background clicks subtract their region.
class FloodFillSegmenter final : public SegmentationBackend {
public:
    explicit FloodFillSegmenter(int tolerance = 10) : tolerance_(tolerance) {}
    std::string name() const override { return "floodfill"; }
    Image segment(const Image& image, const std::vector<Interaction>& interactions) const override;

private:
    int tolerance_;
};

/// Validates the interactions, calls the backend and records the
/// interactions verbatim. A null backend raises CapabilityError.
MaskSpec segment(const Image& image, const std::vector<Interaction>& interactions,
                 const SegmentationBackend* backend);

MaskSpec box_to_mask(const Image& image, const BoxInteraction& box);
MaskSpec box_to_mask(int width, int height, const BoxInteraction& box);

/// Axis-aligned rectangle whose area fraction is drawn uniformly from
/// [min_fraction, max_fraction]; deterministic per seed.
MaskSpec random_region_mask(int width, int height, double min_fraction, double max_fraction,
                            std::uint64_t seed);

/// Offsets (dx, dy) with dx*dx + dy*dy <= r*r.
std::vector<std::pair<int, int>> disk_offsets(int radius);

/// Dilates by a discrete disk, then optionally fills holes (background not
/// 4-connected to the border). Foreground never shrinks.
MaskSpec postprocess(const MaskSpec& mask, int dilation_radius, bool fill_holes);

}  // namespace vides
