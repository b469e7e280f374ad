// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vides {

/// Interleaved 8-bit raster. Channels is 1 (gray, masks, conditions) or 3 (RGB).
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, std::uint8_t fill = 0);
    Image(int width, int height, int channels, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    std::uint8_t& at(int x, int y, int c = 0) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<std::uint8_t> data() noexcept { return data_; }
    std::span<const std::uint8_t> data() const noexcept { return data_; }
    const std::vector<std::uint8_t>& bytes() const noexcept { return data_; }

    bool same_size(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Luma with fixed 0.299/0.587/0.114 weights in 16.16 fixed point so the
/// result does not depend on floating-point evaluation order.
Image to_gray(const Image& image);

/// Expands 1-channel images to RGB; RGB images are returned unchanged.
Image to_rgb(const Image& image);

/// Bilinear resampling of a dense float field (row-major, width*height).
std::vector<float> resize_bilinear(std::span<const float> field, int width, int height,
                                   int out_width, int out_height);

/// Box-filter downsample of an 8-bit image to exactly out_width x out_height.
Image resize_area(const Image& image, int out_width, int out_height);

}  // namespace vides

#include <string>

namespace vides {

/// SHA-256 over geometry and pixel bytes; used as GuidanceCondition::source_hash.
std::string content_hash(const Image& image);

}  // namespace vides
