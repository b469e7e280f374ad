// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vides/backend.hpp"
#include "vides/guidance.hpp"
#include "vides/mask.hpp"

namespace vides {

enum class JobKind { generate, restyle, edit };
enum class JobStatus { queued, running, succeeded, failed };

std::string_view to_string(JobKind kind);
std::string_view to_string(JobStatus status);
JobKind parse_job_kind(std::string_view text);
JobStatus parse_job_status(std::string_view text);

/// Persistent record of one pipeline request. Images are referenced by id
/// (service) or by path (CLI).
struct DesignJob {
    std::string job_id;
    JobKind kind = JobKind::generate;
    std::string prompt;
    std::string negative_prompt;
    std::optional<std::string> source_image;
    std::optional<std::string> mask;
    ConditionKind condition_kind = ConditionKind::none;
    std::uint64_t seed = 0;
    GenerationParams params;
    std::string backend;
    JobStatus status = JobStatus::queued;
    std::vector<std::string> outputs;
    std::optional<std::string> condition_image;
    std::optional<int> dilation_radius;
    std::optional<std::string> error;
    std::string created_at;
    std::string updated_at;

    /// Moves along queued -> running -> {succeeded, failed}; anything else
    /// throws ValidationError.
    void advance(JobStatus next);
};

struct OrchestratorConfig {
    int max_images = 8;
    int dilation_radius = 8;
    std::size_t max_prompt_length = 512;
    EdgeThresholds edge_thresholds;
    std::string depth_estimator = "intensity";
    std::chrono::milliseconds backend_timeout{300'000};
};

/// In-memory inputs of a job, as consumed by Orchestrator::run.
struct JobRequest {
    JobKind kind = JobKind::generate;
    std::string prompt;
    std::string negative_prompt;
    std::optional<Image> source_image;
    std::optional<MaskSpec> mask;
    ConditionKind condition_kind = ConditionKind::none;
    std::uint64_t seed = 0;
    GenerationParams params;
    std::string backend;  ///< empty selects the registry default
};

struct JobResult {
    std::vector<Image> images;
    std::optional<GuidanceCondition> condition;
    /// The dilated mask the source was re-composited against (edit only).
    std::optional<MaskSpec> applied_mask;
    GenerationParams effective_params;
};

/// Validates requests, extracts guidance, masks and calls the backend. Holds
/// no mutable state of its own, so concurrent calls are safe.
class Orchestrator {
public:
    Orchestrator(std::shared_ptr<BackendRegistry> backends,
                 std::shared_ptr<DepthEstimatorRegistry> depth, OrchestratorConfig config = {});

    const OrchestratorConfig& config() const noexcept { return config_; }
    const std::shared_ptr<BackendRegistry>& backends() const noexcept { return backends_; }
    const std::shared_ptr<DepthEstimatorRegistry>& depth_estimators() const noexcept { return depth_; }

    /// All checks that can run before generation, including backend
    /// capability routing. Throws ValidationError or CapabilityError.
    void validate(const JobRequest& request) const;

    /// Validates, then executes. A request of kind generate drops any mask.
    JobResult run(const JobRequest& request) const;

    std::vector<Image> generate_scene(std::string_view prompt, const GenerationParams& params,
                                      std::uint64_t seed,
                                      const std::optional<Image>& source_image = std::nullopt,
                                      const std::optional<MaskSpec>& ignored_mask = std::nullopt,
                                      std::string_view backend = {}) const;

    JobResult restyle_scene(const Image& source_image, std::string_view prompt,
                            ConditionKind condition_kind, const GenerationParams& params,
                            std::uint64_t seed, std::string_view backend = {}) const;

    JobResult edit_object(const Image& source_image, const MaskSpec& mask, std::string_view prompt,
                          ConditionKind condition_kind, const GenerationParams& params,
                          std::uint64_t seed, std::string_view backend = {}) const;

    /// Same as edit_object with an empty prompt and no condition.
    JobResult remove_object(const Image& source_image, const MaskSpec& mask,
                            const GenerationParams& params, std::uint64_t seed,
                            std::string_view backend = {}) const;

    GuidanceCondition extract_condition(const Image& source, ConditionKind kind) const;

private:
    GenerationParams effective_params(const JobRequest& request) const;

    std::shared_ptr<BackendRegistry> backends_;
    std::shared_ptr<DepthEstimatorRegistry> depth_;
    OrchestratorConfig config_;
};

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

}  // namespace vides
