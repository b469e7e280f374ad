// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>

#include "vides/image.hpp"

namespace testing_support {

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view tag = "t") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("vides-" + std::string(tag) + "-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Plain FNV-1a64, written out separately from the library.
inline std::uint64_t fnv_bytes(std::uint64_t h, const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline vides::Image square_image(int w, int h, int x0, int y0, int side) {
    vides::Image img(w, h, 3);
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = 255;
    return img;
}

inline vides::Image noise_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    vides::Image img(w, h, 3);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng() & 0xff);
    return img;
}

// Stand-in room photo: lit back wall with a vertical gradient, floor, a
// window with mullions, a sofa, a rug, a lamp and mild sensor noise.
inline vides::Image room_scene(int w, int h, std::uint64_t seed = 11) {
    vides::Image img(w, h, 3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 3.0);
    auto put = [&](int x, int y, double r, double g, double b) {
        const double v[3] = {r, g, b};
        for (int c = 0; c < 3; ++c) {
            const double n = v[c] + noise(rng);
            img.at(x, y, c) = static_cast<std::uint8_t>(n < 0 ? 0 : n > 255 ? 255 : n);
        }
    };
    const int horizon = h * 62 / 100;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double fx = double(x) / w, fy = double(y) / h;
            if (y < horizon) {
                const double shade = 200 - 40 * fy - 30 * std::abs(fx - 0.5);
                put(x, y, shade, shade * 0.95, shade * 0.85);
            } else {
                const double plank = ((x / (w / 12)) % 2) ? 8 : 0;
                put(x, y, 130 + plank - 30 * fy, 90 + plank - 20 * fy, 60);
            }
            // window
            if (fx > 0.58 && fx < 0.86 && fy > 0.12 && fy < 0.45) {
                const bool mullion = std::abs(fx - 0.72) < 0.006 || std::abs(fy - 0.285) < 0.008;
                if (mullion)
                    put(x, y, 240, 240, 235);
                else
                    put(x, y, 150 + 60 * (0.45 - fy), 190 + 40 * (0.45 - fy), 235);
            }
            // sofa: seat, back, arms
            if (fx > 0.12 && fx < 0.52 && fy > 0.50 && fy < 0.75) {
                const bool back = fy < 0.60;
                const bool arm = fx < 0.16 || fx > 0.48;
                const double k = back ? 1.0 : arm ? 0.85 : 0.92;
                put(x, y, 70 * k, 95 * k, 120 * k);
            }
            // rug
            const double ex = (fx - 0.45) / 0.30, ey = (fy - 0.88) / 0.08;
            if (ex * ex + ey * ey < 1.0) put(x, y, 170, 60, 50);
            // lamp shade and stem
            if (fx > 0.04 && fx < 0.10 && fy > 0.30 && fy < 0.40) put(x, y, 245, 225, 170);
            if (fx > 0.066 && fx < 0.074 && fy >= 0.40 && fy < 0.74) put(x, y, 40, 40, 40);
        }
    }
    return img;
}

}  // namespace testing_support
