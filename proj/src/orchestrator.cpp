// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/orchestrator.hpp"

#include "vides/error.hpp"

namespace vides {

std::string_view to_string(JobKind kind) {
    switch (kind) {
        case JobKind::generate: return "generate";
        case JobKind::restyle: return "restyle";
        case JobKind::edit: return "edit";
    }
    return "generate";
}

std::string_view to_string(JobStatus status) {
    switch (status) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::succeeded: return "succeeded";
        case JobStatus::failed: return "failed";
    }
    return "queued";
}

JobKind parse_job_kind(std::string_view text) {
    if (text == "generate") return JobKind::generate;
    if (text == "restyle") return JobKind::restyle;
    if (text == "edit") return JobKind::edit;
    throw ValidationError("unknown job kind '" + std::string(text) + "'", "kind");
}

JobStatus parse_job_status(std::string_view text) {
    if (text == "queued") return JobStatus::queued;
    if (text == "running") return JobStatus::running;
    if (text == "succeeded") return JobStatus::succeeded;
    if (text == "failed") return JobStatus::failed;
    throw ValidationError("unknown job status '" + std::string(text) + "'", "status");
}

void DesignJob::advance(JobStatus next) {
    const bool ok = (status == JobStatus::queued && next == JobStatus::running) ||
                    (status == JobStatus::running &&
                     (next == JobStatus::succeeded || next == JobStatus::failed));
    if (!ok)
        throw ValidationError("illegal job transition " + std::string(to_string(status)) + " -> " +
                                  std::string(to_string(next)),
                              "status");
    status = next;
}

std::size_t utf8_length(std::string_view text) {
    std::size_t n = 0;
    for (char c : text)
        if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
    return n;
}

Orchestrator::Orchestrator(std::shared_ptr<BackendRegistry> backends,
                           std::shared_ptr<DepthEstimatorRegistry> depth, OrchestratorConfig config)
    : backends_(std::move(backends)), depth_(std::move(depth)), config_(std::move(config)) {
    if (!backends_) throw ValidationError("orchestrator needs a backend registry");
    if (!depth_) depth_ = std::make_shared<DepthEstimatorRegistry>();
}

GenerationParams Orchestrator::effective_params(const JobRequest& r) const {
    GenerationParams p = r.params;
    validate_params(p, config_.max_images);
    if (r.source_image) {
        // Outputs keep the size of the image they were derived from.
        p.width = r.source_image->width();
        p.height = r.source_image->height();
    }
    return p;
}

void Orchestrator::validate(const JobRequest& r) const {
    if (utf8_length(r.prompt) > config_.max_prompt_length)
        throw ValidationError("prompt exceeds " + std::to_string(config_.max_prompt_length) +
                                  " characters",
                              "prompt");
    if (r.kind != JobKind::edit && r.prompt.empty())
        throw ValidationError("prompt must not be empty", "prompt");
    if (r.source_image && r.source_image->empty())
        throw ValidationError("source image has zero area", "source_image");
    switch (r.kind) {
        case JobKind::generate:
            if (r.condition_kind != ConditionKind::none)
                throw ValidationError("generate does not take a condition", "condition_kind");
            break;
        case JobKind::restyle:
            if (!r.source_image) throw ValidationError("restyle needs a source image", "source_image");
            if (r.condition_kind == ConditionKind::none)
                throw ValidationError("restyle needs condition_kind edge or depth", "condition_kind");
            break;
        case JobKind::edit:
            if (!r.source_image) throw ValidationError("edit needs a source image", "source_image");
            if (!r.mask) throw ValidationError("edit needs a mask", "mask");
            if (r.mask->width() != r.source_image->width() ||
                r.mask->height() != r.source_image->height())
                throw ValidationError("mask size differs from source image size", "mask");
            if (r.mask->foreground_count() == 0)
                throw ValidationError("mask is empty", "mask");
            break;
    }
    const GenerationParams p = effective_params(r);

    const auto backend = backends_->get(r.backend);
    const auto caps = backend->capabilities();
    const std::string who = "backend '" + backend->name() + "'";
    if (r.kind == JobKind::edit && !caps.supports_inpaint)
        throw CapabilityError(who + " does not support inpainting");
    if (r.kind != JobKind::edit && !caps.supports_text2img)
        throw CapabilityError(who + " does not support text-to-image generation");
    if (r.condition_kind == ConditionKind::edge && !caps.supports_condition_edge)
        throw CapabilityError(who + " does not support edge conditioning");
    if (r.condition_kind == ConditionKind::depth) {
        if (!caps.supports_condition_depth)
            throw CapabilityError(who + " does not support depth conditioning");
        depth_->get(config_.depth_estimator);
    }
    if (p.width > caps.max_resolution || p.height > caps.max_resolution)
        throw CapabilityError(who + " supports at most " + std::to_string(caps.max_resolution) +
                              " pixels per side");
}

GuidanceCondition Orchestrator::extract_condition(const Image& source, ConditionKind kind) const {
    switch (kind) {
        case ConditionKind::edge: return extract_edges(source, config_.edge_thresholds);
        case ConditionKind::depth: return extract_depth(source, *depth_->get(config_.depth_estimator));
        case ConditionKind::none: break;
    }
    throw ValidationError("no condition requested", "condition_kind");
}

JobResult Orchestrator::run(const JobRequest& request) const {
    JobRequest r = request;
    if (r.kind == JobKind::generate) r.mask.reset();
    validate(r);

    JobResult result;
    result.effective_params = effective_params(r);
    const auto backend = backends_->get(r.backend);

    BackendRequest br;
    br.prompt = r.prompt;
    br.negative_prompt = r.negative_prompt;
    br.seed = r.seed;
    br.params = result.effective_params;

    std::optional<Image> source;
    if (r.source_image) source = to_rgb(*r.source_image);
    if (r.condition_kind != ConditionKind::none) {
        result.condition = extract_condition(*source, r.condition_kind);
        br.condition = result.condition;
    }

    switch (r.kind) {
        case JobKind::generate:
            br.init_image = source;
            break;
        case JobKind::restyle:
            // Layout comes through the condition alone.
            break;
        case JobKind::edit:
            result.applied_mask = postprocess(*r.mask, config_.dilation_radius, false);
            br.init_image = source;
            br.mask = result.applied_mask->mask();
            break;
    }

    result.images = invoke_checked(backend, br, config_.backend_timeout);

    if (r.kind == JobKind::edit) {
        const Image& keep = result.applied_mask->mask();
        for (auto& img : result.images)
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    if (keep.at(x, y) == 0)
                        for (int c = 0; c < 3; ++c) img.at(x, y, c) = source->at(x, y, c);
    }
    return result;
}

std::vector<Image> Orchestrator::generate_scene(std::string_view prompt,
                                                const GenerationParams& params, std::uint64_t seed,
                                                const std::optional<Image>& source_image,
                                                const std::optional<MaskSpec>& ignored_mask,
                                                std::string_view backend) const {
    JobRequest r;
    r.kind = JobKind::generate;
    r.prompt = std::string(prompt);
    r.params = params;
    r.seed = seed;
    r.source_image = source_image;
    r.mask = ignored_mask;
    r.backend = std::string(backend);
    return run(r).images;
}

JobResult Orchestrator::restyle_scene(const Image& source_image, std::string_view prompt,
                                      ConditionKind condition_kind, const GenerationParams& params,
                                      std::uint64_t seed, std::string_view backend) const {
    JobRequest r;
    r.kind = JobKind::restyle;
    r.prompt = std::string(prompt);
    r.source_image = source_image;
    r.condition_kind = condition_kind;
    r.params = params;
    r.seed = seed;
    r.backend = std::string(backend);
    return run(r);
}

JobResult Orchestrator::edit_object(const Image& source_image, const MaskSpec& mask,
                                    std::string_view prompt, ConditionKind condition_kind,
                                    const GenerationParams& params, std::uint64_t seed,
                                    std::string_view backend) const {
    JobRequest r;
    r.kind = JobKind::edit;
    r.prompt = std::string(prompt);
    r.source_image = source_image;
    r.mask = mask;
    r.condition_kind = condition_kind;
    r.params = params;
    r.seed = seed;
    r.backend = std::string(backend);
    return run(r);
}

JobResult Orchestrator::remove_object(const Image& source_image, const MaskSpec& mask,
                                      const GenerationParams& params, std::uint64_t seed,
                                      std::string_view backend) const {
    return edit_object(source_image, mask, "", ConditionKind::none, params, seed, backend);
}

}  // namespace vides
