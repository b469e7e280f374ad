// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "vides/error.hpp"
#include "vides/orchestrator.hpp"
#include "vides/plugins.hpp"
#include "vides/serialization.hpp"
#include "vides/store.hpp"

namespace vides {

class QueueFullError : public Error {
public:
    explicit QueueFullError(const std::string& message) : Error("queue_full", message) {}
};

struct ServiceConfig {
    std::filesystem::path storage_root = "vides-data";
    int workers = 1;
    std::size_t max_queue = 64;
    OrchestratorConfig orchestrator;
    std::optional<std::filesystem::path> static_dir;
};

/// HTTP front end and job runner. Owns the store, the in-process queue and the
/// worker pool. On construction, jobs journaled as queued are re-enqueued and
/// jobs journaled as running are failed (their worker died with the process).
///
/// REST surface (all under /api/v1, JSON unless noted):
///   POST   /projects                {name}
///   GET    /projects/{id}
///   POST   /projects/{id}/images    PNG or JPEG body -> image record
///   GET    /images/{id}             PNG
///   DELETE /images/{id}
///   POST   /masks                   {image_id, interactions[], dilation_radius?, fill_holes?, segmenter?}
///   GET    /masks/{id}              PNG
///   POST   /jobs                    {kind, prompt, image_id?, mask_id?, condition_kind?, seed?,
///                                    params?, negative_prompt?, backend?, project_id?}
///   GET    /jobs/{id}
///   GET    /backends
/// Errors are {code, message, field?}.
class Service {
public:
    Service(ServiceConfig config, PluginSet plugins);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    Store& store();
    const Orchestrator& orchestrator() const;

    /// Validates synchronously and journals the job as queued.
    std::string submit_job(const Json& request);
    DesignJob get_job(const std::string& job_id) const;
    MaskRecord create_mask(const Json& request);
    Json backends_json() const;

    /// Blocks until the queue is drained and no job is running, or the
    /// timeout elapses. Returns true when idle.
    bool wait_idle(std::chrono::milliseconds timeout) const;

    /// Binds the HTTP server (port 0 picks a free port) and serves on a
    /// background thread. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    /// Stops HTTP, lets the running jobs finish and joins the workers.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vides
