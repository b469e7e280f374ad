// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vides {

/// Streaming 64-bit FNV-1a. Integers are fed little-endian so digests are
/// identical on every platform.
class Fnv1a64 {
public:
    static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    constexpr Fnv1a64& byte(std::uint8_t b) noexcept {
        state_ = (state_ ^ b) * kPrime;
        return *this;
    }
    Fnv1a64& bytes(std::span<const std::uint8_t> data) noexcept {
        for (auto b : data) byte(b);
        return *this;
    }
    Fnv1a64& text(std::string_view s) noexcept {
        for (char c : s) byte(static_cast<std::uint8_t>(c));
        return *this;
    }
    constexpr Fnv1a64& u32(std::uint32_t v) noexcept {
        for (int i = 0; i < 4; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
        return *this;
    }
    constexpr Fnv1a64& u64(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
        return *this;
    }
    constexpr std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = kOffsetBasis;
};

std::string to_hex(std::uint64_t value);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws DecodeError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace vides
