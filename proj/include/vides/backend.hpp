// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vides/guidance.hpp"
#include "vides/image.hpp"

namespace vides {

/// Sampler settings handed to a backend. Defaults are common serving values.
struct GenerationParams {
    int width = 512;
    int height = 512;
    int num_images = 1;
    double guidance_scale = 7.5;
    int steps = 30;
    double strength = 0.8;

    friend bool operator==(const GenerationParams&, const GenerationParams&) = default;
};

/// Throws ValidationError naming the first invalid field.
void validate_params(const GenerationParams& params, int max_images);

struct BackendCapabilities {
    bool supports_text2img = true;
    bool supports_inpaint = true;
    bool supports_condition_edge = true;
    bool supports_condition_depth = true;
    int max_resolution = 2048;
    bool single_occupancy = false;

    friend bool operator==(const BackendCapabilities&, const BackendCapabilities&) = default;
};

struct BackendRequest {
    std::string prompt;
    std::string negative_prompt;
    std::optional<Image> init_image;
    std::optional<Image> mask;
    std::optional<GuidanceCondition> condition;
    std::uint64_t seed = 0;
    GenerationParams params;
};

/// Structural invariants of a request (mask needs init image, sizes agree).
void validate_request(const BackendRequest& request);

/// Throws CapabilityError if `caps` cannot serve the request.
void check_capabilities(const BackendCapabilities& caps, const BackendRequest& request,
                        std::string_view backend_name);

/// A generation model: text-to-image, image-conditioned and inpainting, each
/// optionally control-conditioned. Image i of a call must use seed + i.
///
/// Backends are not trusted to preserve pixels outside a mask; the
/// orchestrator re-composites the source over every inpainting result.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string name() const = 0;
    virtual BackendCapabilities capabilities() const = 0;
    virtual std::vector<Image> invoke(const BackendRequest& request) = 0;
};

/// Deterministic procedural backend. For text-to-image, channel c of pixel
/// (x, y) in image i is FNV-1a64(prompt bytes, seed + i, x, y, c) mod 256 with
/// integers fed little-endian (u64 seed, u32 x, u32 y, u8 c). With a
/// condition image the value becomes (h >> 1) + (cond >> 1); with an init
/// image and no mask it is mixed as (init * (256 - s) + h * s) >> 8 with
/// s = round(strength * 256); with a mask the init image is copied outside it.
/// No floating point touches pixel values, so output is identical on every
/// platform.
class StubBackend : public GenerationBackend {
public:
    explicit StubBackend(BackendCapabilities caps = {}, std::string name = "stub")
        : caps_(caps), name_(std::move(name)) {}

    std::string name() const override { return name_; }
    BackendCapabilities capabilities() const override { return caps_; }
    std::vector<Image> invoke(const BackendRequest& request) override;

    /// The raw text-to-image rule for one image.
    static Image procedural(std::string_view prompt, std::uint64_t seed, int width, int height);

private:
    BackendCapabilities caps_;
    std::string name_;
};

/// Wraps a backend and holds a mutex around invoke() when the backend
/// declares single occupancy.
class SerializingBackend final : public GenerationBackend {
public:
    explicit SerializingBackend(std::shared_ptr<GenerationBackend> inner) : inner_(std::move(inner)) {}
    std::string name() const override { return inner_->name(); }
    BackendCapabilities capabilities() const override { return inner_->capabilities(); }
    std::vector<Image> invoke(const BackendRequest& request) override;
    const std::shared_ptr<GenerationBackend>& inner() const { return inner_; }

private:
    std::shared_ptr<GenerationBackend> inner_;
    std::mutex mutex_;
};

/// Runs a backend call with a deadline and checks the result shape. On
/// timeout the call is abandoned on its thread and BackendError is raised.
std::vector<Image> invoke_checked(const std::shared_ptr<GenerationBackend>& backend, const BackendRequest& request,
                                  std::chrono::milliseconds timeout);

class BackendRegistry {
public:
    /// Throws ValidationError for a duplicate name. The first registered
    /// backend becomes the default.
    void register_backend(std::string name, std::shared_ptr<GenerationBackend> backend);
    void set_default(std::string_view name);
    std::string default_name() const;

    /// Throws CapabilityError for unknown names; empty name means the default.
    std::shared_ptr<GenerationBackend> get(std::string_view name = {}) const;
    bool contains(std::string_view name) const;

    struct Entry {
        std::string name;
        BackendCapabilities capabilities;
        bool is_default = false;
    };
    std::vector<Entry> list() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<GenerationBackend>, std::less<>> backends_;
    std::string default_;
};

}  // namespace vides
