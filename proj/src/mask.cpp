// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/mask.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/random.hpp"

namespace vides {

MaskSpec::MaskSpec(Image mask, std::vector<Interaction> interactions, PostprocessRecord postprocess)
    : interactions_(std::move(interactions)), postprocess_(postprocess) {
    set_mask(std::move(mask));
}

void MaskSpec::set_mask(Image mask) {
    if (mask.channels() != 1) throw ValidationError("mask must be single-channel", "mask");
    for (auto v : mask.data())
        if (v != 0 && v != 255) throw ValidationError("mask values must be 0 or 255", "mask");
    mask_ = std::move(mask);
    recount();
}

void MaskSpec::recount() {
    foreground_ = static_cast<std::size_t>(std::count(mask_.data().begin(), mask_.data().end(), 255));
    area_fraction_ = mask_.pixel_count() == 0
                         ? 0.0
                         : static_cast<double>(foreground_) / static_cast<double>(mask_.pixel_count());
}

void check_interaction(const Interaction& interaction, int width, int height) {
    if (const auto* p = std::get_if<PointInteraction>(&interaction)) {
        if (p->x < 0 || p->y < 0 || p->x >= width || p->y >= height)
            throw ValidationError("point (" + std::to_string(p->x) + ", " + std::to_string(p->y) +
                                      ") is outside the image",
                                  "interactions");
        return;
    }
    const auto& b = std::get<BoxInteraction>(interaction);
    if (b.x0 >= b.x1 || b.y0 >= b.y1)
        throw ValidationError("degenerate box: need x0 < x1 and y0 < y1", "interactions");
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > width || b.y1 > height)
        throw ValidationError("box is outside the image", "interactions");
}

namespace {

void flood(const Image& image, int sx, int sy, int tolerance, Image& out, std::uint8_t value) {
    const int w = image.width(), h = image.height(), ch = image.channels();
    std::vector<std::uint8_t> seen(image.pixel_count(), 0);
    std::vector<std::pair<int, int>> stack{{sx, sy}};
    seen[static_cast<std::size_t>(sy) * w + sx] = 1;
    auto close = [&](int x, int y) {
        for (int c = 0; c < ch; ++c)
            if (std::abs(int(image.at(x, y, c)) - int(image.at(sx, sy, c))) > tolerance) return false;
        return true;
    };
    while (!stack.empty()) {
        auto [x, y] = stack.back();
        stack.pop_back();
        out.at(x, y) = value;
        constexpr int kDx[] = {1, -1, 0, 0};
        constexpr int kDy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int nx = x + kDx[k], ny = y + kDy[k];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            auto& s = seen[static_cast<std::size_t>(ny) * w + nx];
            if (s || !close(nx, ny)) continue;
            s = 1;
            stack.emplace_back(nx, ny);
        }
    }
}

void fill_box(Image& out, const BoxInteraction& b) {
    for (int y = b.y0; y < b.y1; ++y)
        for (int x = b.x0; x < b.x1; ++x) out.at(x, y) = 255;
}

}  // namespace

Image FloodFillSegmenter::segment(const Image& image,
                                  const std::vector<Interaction>& interactions) const {
    Image out(image.width(), image.height(), 1);
    for (const auto& it : interactions) {
        if (const auto* p = std::get_if<PointInteraction>(&it)) {
            if (p->label == PointLabel::foreground) flood(image, p->x, p->y, tolerance_, out, 255);
        } else {
            fill_box(out, std::get<BoxInteraction>(it));
        }
    }
    for (const auto& it : interactions)
        if (const auto* p = std::get_if<PointInteraction>(&it); p && p->label == PointLabel::background)
            flood(image, p->x, p->y, tolerance_, out, 0);
    return out;
}

MaskSpec segment(const Image& image, const std::vector<Interaction>& interactions,
                 const SegmentationBackend* backend) {
    if (interactions.empty())
        throw ValidationError("at least one interaction is required", "interactions");
    for (const auto& it : interactions) check_interaction(it, image.width(), image.height());
    if (!backend) throw CapabilityError("no segmentation backend is configured; use a box selection");
    Image mask = backend->segment(image, interactions);
    if (mask.width() != image.width() || mask.height() != image.height())
        throw BackendError("segmentation backend '" + backend->name() + "' returned a mask of the wrong size");
    return MaskSpec(binarize(mask), interactions);
}

MaskSpec box_to_mask(int width, int height, const BoxInteraction& box) {
    check_interaction(box, width, height);
    Image out(width, height, 1);
    fill_box(out, box);
    return MaskSpec(std::move(out), {box});
}

MaskSpec box_to_mask(const Image& image, const BoxInteraction& box) {
    return box_to_mask(image.width(), image.height(), box);
}

MaskSpec random_region_mask(int width, int height, double min_fraction, double max_fraction,
                            std::uint64_t seed) {
    if (width <= 0 || height <= 0) throw ValidationError("mask dimensions must be positive", "size");
    if (!(min_fraction > 0.0) || !(min_fraction <= max_fraction) || !(max_fraction <= 1.0))
        throw ValidationError("need 0 < min_fraction <= max_fraction <= 1", "fraction");

    std::mt19937_64 rng(seed);
    const double total = static_cast<double>(width) * height;
    const double fraction = min_fraction + (max_fraction - min_fraction) * uniform01(rng);
    const double area = fraction * total;
    const auto lo_area = static_cast<std::int64_t>(std::ceil(min_fraction * total - 1e-9));
    const auto hi_area = static_cast<std::int64_t>(std::floor(max_fraction * total + 1e-9));

    const int min_w = std::clamp(static_cast<int>(std::ceil(area / height)), 1, width);
    const int rect_w = static_cast<int>(uniform_int(rng, min_w, width));
    int rect_h = std::clamp(static_cast<int>(std::lround(area / rect_w)), 1, height);
    const auto cells = [&] { return static_cast<std::int64_t>(rect_w) * rect_h; };
    if (cells() < lo_area && rect_h < height && cells() + rect_w <= hi_area) ++rect_h;
    if (cells() > hi_area && rect_h > 1 && cells() - rect_w >= lo_area) --rect_h;

    const int x0 = static_cast<int>(uniform_int(rng, 0, width - rect_w));
    const int y0 = static_cast<int>(uniform_int(rng, 0, height - rect_h));
    Image out(width, height, 1);
    fill_box(out, {x0, y0, x0 + rect_w, y0 + rect_h});
    return MaskSpec(std::move(out), {BoxInteraction{x0, y0, x0 + rect_w, y0 + rect_h}});
}

std::vector<std::pair<int, int>> disk_offsets(int radius) {
    std::vector<std::pair<int, int>> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) out.emplace_back(dx, dy);
    return out;
}

MaskSpec postprocess(const MaskSpec& mask, int dilation_radius, bool fill_holes) {
    if (dilation_radius < 0) throw ValidationError("dilation radius must be >= 0", "dilation_radius");
    const Image& src = mask.mask();
    const int w = src.width(), h = src.height();
    Image out = src;
    if (dilation_radius > 0) {
        const auto offsets = disk_offsets(dilation_radius);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (src.at(x, y) != 255) continue;
                for (auto [dx, dy] : offsets) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx >= 0 && ny >= 0 && nx < w && ny < h) out.at(nx, ny) = 255;
                }
            }
    }
    if (fill_holes && w > 0 && h > 0) {
        std::vector<std::uint8_t> outside(out.pixel_count(), 0);
        std::vector<std::pair<int, int>> stack;
        auto seed = [&](int x, int y) {
            auto& o = outside[static_cast<std::size_t>(y) * w + x];
            if (!o && out.at(x, y) == 0) {
                o = 1;
                stack.emplace_back(x, y);
            }
        };
        for (int x = 0; x < w; ++x) seed(x, 0), seed(x, h - 1);
        for (int y = 0; y < h; ++y) seed(0, y), seed(w - 1, y);
        while (!stack.empty()) {
            auto [x, y] = stack.back();
            stack.pop_back();
            if (x > 0) seed(x - 1, y);
            if (x + 1 < w) seed(x + 1, y);
            if (y > 0) seed(x, y - 1);
            if (y + 1 < h) seed(x, y + 1);
        }
        for (std::size_t i = 0; i < outside.size(); ++i)
            if (!outside[i]) out.data()[i] = 255;
    }
    PostprocessRecord record = mask.postprocess();
    record.dilation_radius += dilation_radius;
    record.holes_filled = record.holes_filled || fill_holes;
    return MaskSpec(std::move(out), mask.interactions(), record);
}

}  // namespace vides
