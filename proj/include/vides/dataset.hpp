// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vides/backend.hpp"
#include "vides/guidance.hpp"
#include "vides/serialization.hpp"

namespace vides::dataset {

/// Template x vocabulary product that stands in for hand-written captions.
/// Templates contain each of {room}, {style} and {color} exactly once.
struct PromptGrammar {
    std::vector<std::string> room_types;
    std::vector<std::string> styles;
    std::vector<std::string> color_schemes;
    std::vector<std::string> templates;

    /// Throws ValidationError naming the offending component.
    void validate() const;
};

void to_json(Json& j, const PromptGrammar& g);
void from_json(const Json& j, PromptGrammar& g);

/// 10 templates x 5 rooms x 10 styles x 3 colour schemes = 1,500 prompts.
PromptGrammar default_grammar();

struct Prompt {
    std::string prompt_id;
    std::string text;
    std::string room;
    std::string style;
    std::string color;
    friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// Stable id for a prompt text: 16 hex digits of FNV-1a64.
std::string prompt_id_for(std::string_view text);

/// Every (template, room, style, colour) combination in list order, template
/// outermost. Throws if two combinations render to the same text.
std::vector<Prompt> expand_grammar(const PromptGrammar& grammar);

/// Externally authored captions (one per element); no vocabulary slots.
std::vector<Prompt> import_prompts(const std::vector<std::string>& lines);

struct BatchTask {
    std::string prompt_id;
    std::string prompt;
    std::string room;
    std::string style;
    std::string color;
    int replica = 0;
    std::uint64_t seed = 0;
    friend bool operator==(const BatchTask&, const BatchTask&) = default;
};

struct GenerationPlan {
    int schema_version = 1;
    std::uint64_t base_seed = 0;
    int images_per_prompt = 30;
    GenerationParams params;
    std::vector<BatchTask> tasks;
    friend bool operator==(const GenerationPlan&, const GenerationPlan&) = default;
};

void to_json(Json& j, const BatchTask& t);
void from_json(const Json& j, BatchTask& t);
void to_json(Json& j, const GenerationPlan& p);
void from_json(const Json& j, GenerationPlan& p);

/// FNV-1a64(prompt_id, replica, base_seed) truncated to 53 bits.
std::uint64_t task_seed(std::string_view prompt_id, int replica, std::uint64_t base_seed);

GenerationPlan plan_batch(const std::vector<Prompt>& prompts, int images_per_prompt,
                          std::uint64_t base_seed, GenerationParams params = {});

struct ManifestEntry {
    std::string prompt_id;
    std::string prompt;
    std::string room;
    std::string style;
    std::string color;
    std::uint64_t seed = 0;
    std::string image_path;  ///< relative to the manifest directory
    std::optional<std::string> edge_path;
    std::optional<std::string> depth_path;
    std::string created_at;
    std::optional<std::string> export_error;
};

void to_json(Json& j, const ManifestEntry& e);
void from_json(const Json& j, ManifestEntry& e);

inline constexpr int kManifestSchemaVersion = 1;

/// JSON Lines manifest, one entry per line.
struct DatasetManifest {
    std::filesystem::path path;
    std::vector<ManifestEntry> entries;
    /// Set by load() when the file ends in a torn or unterminated line.
    bool needs_rewrite = false;

    std::filesystem::path root() const { return path.parent_path(); }
    std::set<std::pair<std::string, std::uint64_t>> keys() const;

    /// An absent file loads as an empty manifest. A torn trailing line (crash
    /// mid-append) is ignored; any other malformed line throws.
    static DatasetManifest load(const std::filesystem::path& path);
    /// Atomic rewrite of the whole file.
    void save() const;
};

/// Serializes appends from concurrent workers; each line is flushed before
/// append() returns.
class ManifestWriter {
public:
    explicit ManifestWriter(const std::filesystem::path& path);
    ~ManifestWriter();
    ManifestWriter(const ManifestWriter&) = delete;
    ManifestWriter& operator=(const ManifestWriter&) = delete;
    void append(const ManifestEntry& entry);

private:
    std::mutex mutex_;
    std::FILE* file_ = nullptr;
    std::filesystem::path path_;
};

struct RunOptions {
    std::filesystem::path root;  ///< manifest.jsonl and {prompt_id}/{seed}.png live here
    bool resume = false;
    int workers = 1;
    /// Stop claiming new tasks after this many (simulates an interrupted run).
    std::optional<std::size_t> max_tasks;
    std::chrono::milliseconds timeout{300'000};
};

struct TaskFailure {
    BatchTask task;
    std::string error;
};

struct RunResult {
    DatasetManifest manifest;
    std::size_t added = 0;
    std::size_t skipped = 0;
    std::vector<TaskFailure> failures;
};

std::filesystem::path manifest_path(const std::filesystem::path& root);

/// Executes the plan's text-to-image tasks. Backend failures are recorded and
/// the run continues; storage failures abort it.
RunResult run_batch(const GenerationPlan& plan, const std::shared_ptr<GenerationBackend>& backend,
                    const RunOptions& options);

struct ExportOptions {
    EdgeThresholds edge_thresholds;
    std::shared_ptr<const DepthEstimator> depth_estimator;
};

struct ExportResult {
    DatasetManifest manifest;
    std::size_t written = 0;
    std::vector<std::string> flagged;  ///< "prompt_id/seed: reason"
};

/// Produces {prompt_id}/{seed}.edge.png / .depth.png next to each entry's
/// image, records the paths and rewrites the manifest.
ExportResult export_training_pairs(const std::filesystem::path& manifest_file,
                                   const std::set<ConditionKind>& conditions,
                                   const ExportOptions& options);

/// Re-extracts every recorded condition and returns the entries whose stored
/// PNG differs from a fresh extraction.
std::vector<std::string> audit_conditions(const DatasetManifest& manifest,
                                          const ExportOptions& options);

}  // namespace vides::dataset
