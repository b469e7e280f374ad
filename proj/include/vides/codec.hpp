// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vides/image.hpp"

namespace vides {

/// Encodes 1-channel images as 8-bit gray PNG and 3-channel images as 8-bit
/// RGB PNG. Output bytes are a pure function of the pixels (fixed zlib level,
/// no time chunks).
std::vector<std::uint8_t> encode_png(const Image& image);

/// Decodes PNG or JPEG (sniffed by signature). Gray/gray+alpha decode to 1
/// channel, everything else to 3 channels; alpha is dropped and 16-bit
/// samples are reduced to 8 bits.
Image decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never observe a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Image load_image(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);

/// Interprets any 1- or 3-channel image as a binary mask: pixels whose gray
/// value is >= 128 become 255, the rest 0.
Image binarize(const Image& image);

}  // namespace vides
