// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/backend.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "vides/error.hpp"
#include "vides/hash.hpp"

namespace vides {

void validate_params(const GenerationParams& p, int max_images) {
    if (p.width <= 0 || p.width % 8 != 0)
        throw ValidationError("width must be a positive multiple of 8", "params.width");
    if (p.height <= 0 || p.height % 8 != 0)
        throw ValidationError("height must be a positive multiple of 8", "params.height");
    if (p.num_images < 1)
        throw ValidationError("num_images must be at least 1", "params.num_images");
    if (p.num_images > max_images)
        throw ValidationError("num_images exceeds the configured maximum of " +
                                  std::to_string(max_images),
                              "params.num_images");
    if (!(p.guidance_scale >= 0.0) || !std::isfinite(p.guidance_scale))
        throw ValidationError("guidance_scale must be >= 0", "params.guidance_scale");
    if (p.steps < 1) throw ValidationError("steps must be at least 1", "params.steps");
    if (!(p.strength >= 0.0 && p.strength <= 1.0))
        throw ValidationError("strength must lie in [0, 1]", "params.strength");
}

void validate_request(const BackendRequest& r) {
    if (r.mask && !r.init_image)
        throw ValidationError("a mask requires an init image", "mask");
    if (r.mask) {
        if (r.mask->channels() != 1) throw ValidationError("mask must be single-channel", "mask");
        if (!r.mask->same_size(*r.init_image))
            throw ValidationError("mask and init image sizes differ", "mask");
    }
    if (r.init_image && (r.init_image->width() != r.params.width ||
                         r.init_image->height() != r.params.height))
        throw ValidationError("init image size must equal the requested output size", "init_image");
    if (r.condition && (r.condition->image.width() != r.params.width ||
                        r.condition->image.height() != r.params.height))
        throw ValidationError("condition size must equal the requested output size", "condition");
}

void check_capabilities(const BackendCapabilities& caps, const BackendRequest& r,
                        std::string_view backend_name) {
    const std::string who = "backend '" + std::string(backend_name) + "'";
    if (r.mask && !caps.supports_inpaint) throw CapabilityError(who + " does not support inpainting");
    if (!r.mask && !caps.supports_text2img)
        throw CapabilityError(who + " does not support text-to-image generation");
    if (r.condition) {
        if (r.condition->kind == ConditionKind::edge && !caps.supports_condition_edge)
            throw CapabilityError(who + " does not support edge conditioning");
        if (r.condition->kind == ConditionKind::depth && !caps.supports_condition_depth)
            throw CapabilityError(who + " does not support depth conditioning");
    }
    if (r.params.width > caps.max_resolution || r.params.height > caps.max_resolution)
        throw CapabilityError(who + " supports at most " + std::to_string(caps.max_resolution) +
                              " pixels per side");
}

Image StubBackend::procedural(std::string_view prompt, std::uint64_t seed, int width, int height) {
    Fnv1a64 prefix;
    prefix.text(prompt).u64(seed);
    Image out(width, height, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Fnv1a64 row = prefix;
            row.u32(static_cast<std::uint32_t>(x)).u32(static_cast<std::uint32_t>(y));
            for (int c = 0; c < 3; ++c) {
                Fnv1a64 h = row;
                h.byte(static_cast<std::uint8_t>(c));
                out.at(x, y, c) = static_cast<std::uint8_t>(h.digest() & 0xff);
            }
        }
    }
    return out;
}

std::vector<Image> StubBackend::invoke(const BackendRequest& r) {
    validate_request(r);
    check_capabilities(caps_, r, name_);
    const int w = r.params.width, h = r.params.height;
    const auto strength = static_cast<std::uint32_t>(std::llround(r.params.strength * 256.0));
    std::optional<Image> init;
    if (r.init_image) init = to_rgb(*r.init_image);
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(r.params.num_images));
    for (int i = 0; i < r.params.num_images; ++i) {
        Image img = procedural(r.prompt, r.seed + static_cast<std::uint64_t>(i), w, h);
        if (r.condition) {
            const Image& cond = r.condition->image;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    for (int c = 0; c < 3; ++c)
                        img.at(x, y, c) = static_cast<std::uint8_t>((img.at(x, y, c) >> 1) +
                                                                    (cond.at(x, y) >> 1));
        }
        if (init && !r.mask) {
            for (std::size_t k = 0; k < img.bytes().size(); ++k) {
                const std::uint32_t a = init->data()[k], b = img.data()[k];
                img.data()[k] = static_cast<std::uint8_t>((a * (256 - strength) + b * strength) >> 8);
            }
        }
        if (r.mask) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    if (r.mask->at(x, y) == 0)
                        for (int c = 0; c < 3; ++c) img.at(x, y, c) = init->at(x, y, c);
        }
        out.push_back(std::move(img));
    }
    return out;
}

std::vector<Image> SerializingBackend::invoke(const BackendRequest& request) {
    if (!inner_->capabilities().single_occupancy) return inner_->invoke(request);
    std::lock_guard lock(mutex_);
    return inner_->invoke(request);
}

std::vector<Image> invoke_checked(const std::shared_ptr<GenerationBackend>& backend, const BackendRequest& request,
                                  std::chrono::milliseconds timeout) {
    // The promise outlives a timed-out wait because the worker owns a copy.
    auto promise = std::make_shared<std::promise<std::vector<Image>>>();
    auto future = promise->get_future();
    std::thread([promise, backend, request]() mutable {
        try {
            promise->set_value(backend->invoke(request));
        } catch (...) {
            promise->set_exception(std::current_exception());
        }
    }).detach();
    if (future.wait_for(timeout) != std::future_status::ready)
        throw BackendError("backend '" + backend->name() + "' timed out after " +
                           std::to_string(timeout.count()) + " ms");
    std::vector<Image> images;
    try {
        images = future.get();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError("backend '" + backend->name() + "' failed: " + e.what());
    }
    if (images.size() != static_cast<std::size_t>(request.params.num_images))
        throw BackendError("backend '" + backend->name() + "' returned " +
                           std::to_string(images.size()) + " images, expected " +
                           std::to_string(request.params.num_images));
    for (auto& img : images) {
        if (img.width() != request.params.width || img.height() != request.params.height)
            throw BackendError("backend '" + backend->name() + "' returned an image of the wrong size");
        img = to_rgb(img);
    }
    return images;
}

void BackendRegistry::register_backend(std::string name, std::shared_ptr<GenerationBackend> backend) {
    if (!backend) throw ValidationError("backend must not be null", "backend");
    std::lock_guard lock(mutex_);
    if (backends_.contains(name))
        throw ValidationError("backend '" + name + "' is already registered", "name");
    if (default_.empty()) default_ = name;
    backends_.emplace(std::move(name), std::make_shared<SerializingBackend>(std::move(backend)));
}

void BackendRegistry::set_default(std::string_view name) {
    std::lock_guard lock(mutex_);
    if (backends_.find(name) == backends_.end())
        throw CapabilityError("backend '" + std::string(name) + "' is not registered");
    default_ = std::string(name);
}

std::string BackendRegistry::default_name() const {
    std::lock_guard lock(mutex_);
    return default_;
}

std::shared_ptr<GenerationBackend> BackendRegistry::get(std::string_view name) const {
    std::lock_guard lock(mutex_);
    const std::string_view key = name.empty() ? std::string_view(default_) : name;
    auto it = backends_.find(key);
    if (it == backends_.end())
        throw CapabilityError(key.empty() ? std::string("no generation backend is registered")
                                          : "backend '" + std::string(key) + "' is not registered");
    return it->second;
}

bool BackendRegistry::contains(std::string_view name) const {
    std::lock_guard lock(mutex_);
    return backends_.find(name) != backends_.end();
}

std::vector<BackendRegistry::Entry> BackendRegistry::list() const {
    std::lock_guard lock(mutex_);
    std::vector<Entry> out;
    for (const auto& [name, b] : backends_) out.push_back({name, b->capabilities(), name == default_});
    return out;
}

}  // namespace vides
