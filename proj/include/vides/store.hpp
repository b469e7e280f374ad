// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vides/orchestrator.hpp"
#include "vides/serialization.hpp"

struct sqlite3;

namespace vides {

enum class ImageRole { uploaded, generated, condition, mask };
std::string_view to_string(ImageRole role);
ImageRole parse_image_role(std::string_view text);

struct ImageRecord {
    std::string image_id;
    std::optional<std::string> project_id;
    ImageRole role = ImageRole::uploaded;
    std::optional<std::string> parent_image_id;
    std::optional<std::string> job_id;
    std::string blob;  ///< SHA-256 of the PNG bytes
    int width = 0;
    int height = 0;
    std::string created_at;
};

struct Project {
    std::string project_id;
    std::string name;
    std::vector<ImageRecord> images;  ///< creation order
    std::string created_at;
    std::string updated_at;
};

struct MaskRecord {
    std::string mask_id;
    std::string image_id;       ///< the image the mask was drawn on
    std::string mask_image_id;  ///< the mask PNG as an image record (role mask)
    Json metadata;              ///< interactions, postprocess, area_fraction
    std::string created_at;
};

void to_json(Json& j, const ImageRecord& r);
void to_json(Json& j, const Project& p);

/// Single-file SQLite metadata plus a content-addressed blob directory.
/// Every method is serialized on one connection.
class Store {
public:
    explicit Store(const std::filesystem::path& root);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Returns the blob hash; identical bytes are stored once.
    std::string put_blob(std::span<const std::uint8_t> bytes);
    std::vector<std::uint8_t> get_blob(std::string_view hash) const;
    std::filesystem::path blob_path(std::string_view hash) const;
    std::size_t blob_count() const;

    Project create_project(const std::string& name);
    std::optional<Project> get_project(std::string_view project_id) const;

    ImageRecord add_image(std::optional<std::string> project_id, ImageRole role,
                          std::optional<std::string> parent_image_id, std::optional<std::string> job_id,
                          std::span<const std::uint8_t> png, int width, int height);
    /// Deleted images are not returned.
    std::optional<ImageRecord> get_image(std::string_view image_id) const;
    /// Soft delete: lineage of descendants stays intact. False if absent.
    bool delete_image(std::string_view image_id);

    MaskRecord add_mask(const std::string& image_id, const std::string& mask_image_id, const Json& metadata);
    std::optional<MaskRecord> get_mask(std::string_view mask_id) const;

    void insert_job(const DesignJob& job, const std::optional<std::string>& project_id);
    void update_job(const DesignJob& job);
    std::optional<DesignJob> get_job(std::string_view job_id) const;
    std::optional<std::string> job_project(std::string_view job_id) const;
    std::vector<DesignJob> jobs_with_status(JobStatus status) const;

private:
    std::filesystem::path root_;
    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
};

/// Random identifier with a type prefix, e.g. "img_3f9c...".
std::string make_id(std::string_view prefix);

}  // namespace vides
