// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/image.hpp"

#include <algorithm>
#include <cmath>

#include "vides/error.hpp"

namespace vides {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3))
        throw ValidationError("invalid image geometry");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), data_(std::move(pixels)) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3))
        throw ValidationError("invalid image geometry");
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
        throw ValidationError("pixel buffer does not match image geometry");
}

Image to_gray(const Image& image) {
    if (image.channels() == 1) return image;
    Image out(image.width(), image.height(), 1);
    // round(0.299 * 65536) etc.; the three weights sum to 65536.
    constexpr std::uint32_t kR = 19595, kG = 38470, kB = 7471;
    auto src = image.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        const std::uint32_t v = kR * src[3 * i] + kG * src[3 * i + 1] + kB * src[3 * i + 2];
        dst[i] = static_cast<std::uint8_t>((v + 32768) >> 16);
    }
    return out;
}

Image to_rgb(const Image& image) {
    if (image.channels() == 3) return image;
    Image out(image.width(), image.height(), 3);
    auto src = image.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < image.pixel_count(); ++i)
        dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
    return out;
}

std::vector<float> resize_bilinear(std::span<const float> field, int width, int height,
                                   int out_width, int out_height) {
    if (width == out_width && height == out_height)
        return {field.begin(), field.end()};
    std::vector<float> out(static_cast<std::size_t>(out_width) * out_height);
    const double sx = static_cast<double>(width) / out_width;
    const double sy = static_cast<double>(height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, width - 1);
            const double wx = fx - x0;
            auto v = [&](int xx, int yy) {
                return static_cast<double>(field[static_cast<std::size_t>(yy) * width + xx]);
            };
            const double top = v(x0, y0) * (1 - wx) + v(x1, y0) * wx;
            const double bottom = v(x0, y1) * (1 - wx) + v(x1, y1) * wx;
            out[static_cast<std::size_t>(y) * out_width + x] =
                static_cast<float>(top * (1 - wy) + bottom * wy);
        }
    }
    return out;
}

Image resize_area(const Image& image, int out_width, int out_height) {
    if (image.empty() || out_width <= 0 || out_height <= 0)
        throw ValidationError("cannot resize an empty image");
    Image out(out_width, out_height, image.channels());
    for (int oy = 0; oy < out_height; ++oy) {
        const int y0 = static_cast<int>(static_cast<long long>(oy) * image.height() / out_height);
        const int y1 = std::max(
            y0 + 1, static_cast<int>(static_cast<long long>(oy + 1) * image.height() / out_height));
        for (int ox = 0; ox < out_width; ++ox) {
            const int x0 = static_cast<int>(static_cast<long long>(ox) * image.width() / out_width);
            const int x1 = std::max(
                x0 + 1, static_cast<int>(static_cast<long long>(ox + 1) * image.width() / out_width));
            for (int c = 0; c < image.channels(); ++c) {
                std::uint64_t sum = 0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) sum += image.at(x, y, c);
                const std::uint64_t n = static_cast<std::uint64_t>(y1 - y0) * (x1 - x0);
                out.at(ox, oy, c) = static_cast<std::uint8_t>((sum + n / 2) / n);
            }
        }
    }
    return out;
}

}  // namespace vides

#include "vides/hash.hpp"

namespace vides {

std::string content_hash(const Image& image) {
    std::vector<std::uint8_t> buf;
    buf.reserve(12 + image.bytes().size());
    for (int v : {image.width(), image.height(), image.channels()})
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> (8 * i)));
    buf.insert(buf.end(), image.bytes().begin(), image.bytes().end());
    return sha256_hex(buf);
}

}  // namespace vides
