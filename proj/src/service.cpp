// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/service.hpp"

#include "httplib.h"

#include <condition_variable>
#include <deque>
#include <random>
#include <thread>

#include "vides/codec.hpp"
#include "vides/error.hpp"

namespace vides {
namespace {

int http_status(const Error& e) {
    const auto& c = e.code();
    if (c == "validation_error" || c == "decode_error") return 400;
    if (c == "not_found") return 404;
    if (c == "capability_error") return 422;
    if (c == "queue_full") return 429;
    return 500;
}

Json error_body(const std::string& code, const std::string& message, const std::string& field = {}) {
    Json j{{"code", code}, {"message", message}};
    if (!field.empty()) j["field"] = field;
    return j;
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_png(httplib::Response& res, const std::vector<std::uint8_t>& bytes) {
    res.status = 200;
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
}

std::string string_field(const Json& j, const char* key, const std::string& fallback = {}) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_string()) throw ValidationError(std::string(key) + " must be a string", key);
    return it->get<std::string>();
}

}  // namespace

struct Service::Impl {
    ServiceConfig config;
    PluginSet plugins;
    Store store;
    Orchestrator orchestrator;

    mutable std::mutex queue_mutex;
    std::condition_variable queue_cv;
    mutable std::condition_variable idle_cv;
    std::deque<std::string> queue;
    int running = 0;
    bool stopping = false;
    std::vector<std::thread> workers;

    std::mutex segment_mutex;

    httplib::Server http;
    std::thread http_thread;

    Impl(ServiceConfig cfg, PluginSet p)
        : config(std::move(cfg)),
          plugins(std::move(p)),
          store(config.storage_root),
          orchestrator(plugins.backends, plugins.depth, [&] {
              auto o = config.orchestrator;
              if (o.depth_estimator.empty()) o.depth_estimator = plugins.default_depth_estimator;
              return o;
          }()) {}

    void recover() {
        for (auto job : store.jobs_with_status(JobStatus::running)) {
            job.advance(JobStatus::failed);
            job.error = "interrupted by service restart";
            job.updated_at = utc_timestamp();
            store.update_job(job);
        }
        std::lock_guard lock(queue_mutex);
        for (const auto& job : store.jobs_with_status(JobStatus::queued)) queue.push_back(job.job_id);
    }

    void start_workers() {
        for (int i = 0; i < config.workers; ++i) workers.emplace_back([this] { worker_loop(); });
    }

    void worker_loop() {
        for (;;) {
            std::string job_id;
            {
                std::unique_lock lock(queue_mutex);
                queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
                if (stopping) return;
                job_id = std::move(queue.front());
                queue.pop_front();
                ++running;
            }
            execute(job_id);
            {
                std::lock_guard lock(queue_mutex);
                --running;
            }
            idle_cv.notify_all();
        }
    }

    Image load_image_record(const std::string& image_id) const {
        const auto rec = store.get_image(image_id);
        if (!rec) throw NotFoundError("image " + image_id + " does not exist");
        return decode_image(store.get_blob(rec->blob));
    }

    MaskSpec load_mask(const std::string& mask_id) const {
        const auto rec = store.get_mask(mask_id);
        if (!rec) throw NotFoundError("mask " + mask_id + " does not exist");
        const auto img = store.get_image(rec->mask_image_id);
        if (!img) throw NotFoundError("mask image for " + mask_id + " does not exist");
        std::vector<Interaction> interactions;
        PostprocessRecord post;
        try {
            interactions = rec->metadata.at("interactions").get<std::vector<Interaction>>();
            post = rec->metadata.at("postprocess").get<PostprocessRecord>();
        } catch (const Json::exception& e) {
            throw StorageError("mask " + mask_id + " metadata is corrupt: " + e.what());
        }
        return MaskSpec(binarize(decode_image(store.get_blob(img->blob))), std::move(interactions), post);
    }

    JobRequest build_request(const DesignJob& job) const {
        JobRequest r;
        r.kind = job.kind;
        r.prompt = job.prompt;
        r.negative_prompt = job.negative_prompt;
        r.condition_kind = job.condition_kind;
        r.seed = job.seed;
        r.params = job.params;
        r.backend = job.backend;
        if (job.source_image) r.source_image = load_image_record(*job.source_image);
        if (job.mask) r.mask = load_mask(*job.mask);
        return r;
    }

    void execute(const std::string& job_id) {
        auto found = store.get_job(job_id);
        if (!found || found->status != JobStatus::queued) return;
        DesignJob job = std::move(*found);
        job.advance(JobStatus::running);
        job.updated_at = utc_timestamp();
        store.update_job(job);
        const auto project = store.job_project(job_id);
        try {
            const JobResult result = orchestrator.run(build_request(job));
            if (result.condition) {
                const auto png = encode_png(result.condition->image);
                job.condition_image = store.add_image(project, ImageRole::condition, job.source_image, job.job_id,
                                                      png, result.condition->image.width(),
                                                      result.condition->image.height())
                                          .image_id;
            }
            if (result.applied_mask) job.dilation_radius = result.applied_mask->postprocess().dilation_radius;
            for (const auto& img : result.images)
                job.outputs.push_back(store.add_image(project, ImageRole::generated, job.source_image, job.job_id,
                                                      encode_png(img), img.width(), img.height())
                                          .image_id);
            job.params = result.effective_params;
            job.advance(JobStatus::succeeded);
        } catch (const std::exception& e) {
            job.outputs.clear();
            job.advance(JobStatus::failed);
            job.error = e.what();
        }
        job.updated_at = utc_timestamp();
        store.update_job(job);
    }

    std::string submit(const Json& body) {
        if (!body.is_object()) throw ValidationError("job request must be a JSON object");
        DesignJob job;
        std::string kind = string_field(body, "kind");
        if (kind.empty()) throw ValidationError("kind is required", "kind");
        const bool remove = kind == "remove";
        job.kind = remove ? JobKind::edit : parse_job_kind(kind);
        job.prompt = remove ? std::string() : string_field(body, "prompt");
        job.negative_prompt = string_field(body, "negative_prompt");
        job.condition_kind = remove ? ConditionKind::none : parse_condition_kind(string_field(body, "condition_kind", "none"));
        job.backend = string_field(body, "backend", plugins.backends->default_name());
        if (auto it = body.find("seed"); it != body.end() && !it->is_null()) {
            if (!it->is_number_integer() || (!it->is_number_unsigned() && it->get<std::int64_t>() < 0)) throw ValidationError("seed must be a non-negative integer", "seed");
            job.seed = it->get<std::uint64_t>();
        } else {
            job.seed = std::random_device{}();
        }
        if (auto it = body.find("params"); it != body.end() && !it->is_null()) {
            if (!it->is_object()) throw ValidationError("params must be an object", "params");
            try {
                job.params = it->get<GenerationParams>();
            } catch (const Json::exception& e) {
                throw ValidationError(std::string("malformed params: ") + e.what(), "params");
            }
        }
        const std::string image_id = string_field(body, "image_id");
        const std::string mask_id = string_field(body, "mask_id");
        std::optional<std::string> project = std::nullopt;
        if (const auto p = string_field(body, "project_id"); !p.empty()) {
            if (!store.get_project(p)) throw NotFoundError("project " + p + " does not exist");
            project = p;
        }
        if (!image_id.empty()) {
            const auto rec = store.get_image(image_id);
            if (!rec) throw NotFoundError("image " + image_id + " does not exist");
            job.source_image = image_id;
            if (!project) project = rec->project_id;
        }
        if (!mask_id.empty() && job.kind != JobKind::generate) job.mask = mask_id;

        // Everything that can fail before generation fails here, synchronously.
        orchestrator.validate(build_request(job));

        job.job_id = make_id("job");
        job.status = JobStatus::queued;
        job.created_at = job.updated_at = utc_timestamp();
        {
            std::lock_guard lock(queue_mutex);
            if (queue.size() >= config.max_queue)
                throw QueueFullError("job queue is full (" + std::to_string(config.max_queue) + " pending)");
            store.insert_job(job, project);
            queue.push_back(job.job_id);
        }
        queue_cv.notify_one();
        return job.job_id;
    }

    MaskRecord create_mask(const Json& body) {
        if (!body.is_object()) throw ValidationError("mask request must be a JSON object");
        const std::string image_id = string_field(body, "image_id");
        if (image_id.empty()) throw ValidationError("image_id is required", "image_id");
        const auto rec = store.get_image(image_id);
        if (!rec) throw NotFoundError("image " + image_id + " does not exist");
        std::vector<Interaction> interactions;
        try {
            interactions = body.at("interactions").get<std::vector<Interaction>>();
        } catch (const Json::exception& e) {
            throw ValidationError(std::string("malformed interactions: ") + e.what(), "interactions");
        }
        if (interactions.empty()) throw ValidationError("at least one interaction is required", "interactions");
        for (const auto& it : interactions) check_interaction(it, rec->width, rec->height);

        const Image image = decode_image(store.get_blob(rec->blob));
        const auto segmenter = plugins.segmenter(string_field(body, "segmenter"));
        MaskSpec mask;
        if (segmenter) {
            std::unique_lock<std::mutex> lock(segment_mutex, std::defer_lock);
            if (segmenter->single_occupancy()) lock.lock();
            mask = segment(image, interactions, segmenter.get());
        } else {
            Image united(image.width(), image.height(), 1);
            for (const auto& it : interactions) {
                const auto* box = std::get_if<BoxInteraction>(&it);
                if (!box)
                    throw CapabilityError("point selection needs a segmentation backend; draw a box instead");
                for (int y = box->y0; y < box->y1; ++y)
                    for (int x = box->x0; x < box->x1; ++x) united.at(x, y) = 255;
            }
            mask = MaskSpec(std::move(united), interactions);
        }
        const int radius = body.value("dilation_radius", 0);
        const bool fill = body.value("fill_holes", false);
        if (radius != 0 || fill) mask = postprocess(mask, radius, fill);

        const auto png = encode_png(mask.mask());
        const auto mask_image =
            store.add_image(rec->project_id, ImageRole::mask, image_id, std::nullopt, png, mask.width(), mask.height());
        return store.add_mask(image_id, mask_image.image_id, mask_metadata(mask));
    }

    Json backends() const {
        Json list = Json::array();
        for (const auto& e : plugins.backends->list())
            list.push_back(Json{{"name", e.name}, {"capabilities", e.capabilities}, {"default", e.is_default}});
        Json segs = Json::array();
        for (const auto& [name, s] : plugins.segmenters)
            segs.push_back(Json{{"name", name},
                                {"single_occupancy", s->single_occupancy()},
                                {"default", name == plugins.default_segmenter}});
        return Json{{"backends", list},
                    {"depth_estimators", plugins.depth->names()},
                    {"default_depth_estimator", orchestrator.config().depth_estimator},
                    {"segmenters", segs}};
    }

    template <typename F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const ValidationError& e) {
            send_json(res, 400, error_body(e.code(), e.what(), e.field()));
        } catch (const Error& e) {
            send_json(res, http_status(e), error_body(e.code(), e.what()));
        } catch (const Json::exception& e) {
            send_json(res, 400, error_body("validation_error", e.what()));
        } catch (const std::exception& e) {
            send_json(res, 500, error_body("internal_error", e.what()));
        }
    }

    void routes() {
        http.Post("/api/v1/projects", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const Json body = req.body.empty() ? Json::object() : parse_json(req.body);
                const auto name = string_field(body, "name", "untitled");
                send_json(res, 201, Json(store.create_project(name)));
            });
        });
        http.Get(R"(/api/v1/projects/([A-Za-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto p = store.get_project(req.matches[1].str());
                if (!p) throw NotFoundError("project " + req.matches[1].str() + " does not exist");
                send_json(res, 200, Json(*p));
            });
        });
        http.Post(R"(/api/v1/projects/([A-Za-z0-9_]+)/images)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const std::string project = req.matches[1].str();
                          if (!store.get_project(project)) throw NotFoundError("project " + project + " does not exist");
                          std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
                          const Image img = decode_image(bytes);
                          // Binary payloads are PNG; anything else is stored re-encoded.
                          if (bytes.size() < 8 || bytes[0] != 0x89) bytes = encode_png(img);
                          send_json(res, 201,
                                    Json(store.add_image(project, ImageRole::uploaded, std::nullopt, std::nullopt, bytes,
                                                         img.width(), img.height())));
                      });
                  });
        http.Get(R"(/api/v1/images/([A-Za-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto rec = store.get_image(req.matches[1].str());
                if (!rec) throw NotFoundError("image " + req.matches[1].str() + " does not exist");
                send_png(res, store.get_blob(rec->blob));
            });
        });
        http.Delete(R"(/api/v1/images/([A-Za-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                if (!store.delete_image(req.matches[1].str()))
                    throw NotFoundError("image " + req.matches[1].str() + " does not exist");
                res.status = 204;
            });
        });
        http.Post("/api/v1/masks", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto m = create_mask(parse_json(req.body));
                send_json(res, 201,
                          Json{{"mask_id", m.mask_id},
                               {"image_id", m.image_id},
                               {"mask_image_id", m.mask_image_id},
                               {"metadata", m.metadata},
                               {"created_at", m.created_at}});
            });
        });
        http.Get(R"(/api/v1/masks/([A-Za-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto m = store.get_mask(req.matches[1].str());
                if (!m) throw NotFoundError("mask " + req.matches[1].str() + " does not exist");
                const auto img = store.get_image(m->mask_image_id);
                if (!img) throw NotFoundError("mask image for " + m->mask_id + " does not exist");
                send_png(res, store.get_blob(img->blob));
            });
        });
        http.Post("/api/v1/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto id = submit(parse_json(req.body));
                send_json(res, 202, Json{{"job_id", id}, {"status", "queued"}});
            });
        });
        http.Get(R"(/api/v1/jobs/([A-Za-z0-9_]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto job = store.get_job(req.matches[1].str());
                if (!job) throw NotFoundError("job " + req.matches[1].str() + " does not exist");
                send_json(res, 200, Json(*job));
            });
        });
        http.Get("/api/v1/backends", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, backends()); });
        });
        if (config.static_dir) http.set_mount_point("/", config.static_dir->string());
    }

    void shutdown() {
        if (http.is_running()) http.stop();
        if (http_thread.joinable()) http_thread.join();
        {
            std::lock_guard lock(queue_mutex);
            stopping = true;
        }
        queue_cv.notify_all();
        for (auto& w : workers)
            if (w.joinable()) w.join();
        workers.clear();
    }
};

Service::Service(ServiceConfig config, PluginSet plugins)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(plugins))) {
    if (impl_->config.workers < 0) throw ValidationError("workers must be >= 0", "workers");
    impl_->recover();
    impl_->routes();
    impl_->start_workers();
}

Service::~Service() { impl_->shutdown(); }

Store& Service::store() { return impl_->store; }
const Orchestrator& Service::orchestrator() const { return impl_->orchestrator; }

std::string Service::submit_job(const Json& request) { return impl_->submit(request); }

DesignJob Service::get_job(const std::string& job_id) const {
    auto job = impl_->store.get_job(job_id);
    if (!job) throw NotFoundError("job " + job_id + " does not exist");
    return *job;
}

MaskRecord Service::create_mask(const Json& request) { return impl_->create_mask(request); }
Json Service::backends_json() const { return impl_->backends(); }

bool Service::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(impl_->queue_mutex);
    return impl_->idle_cv.wait_for(lock, timeout, [&] { return impl_->queue.empty() && impl_->running == 0; });
}

int Service::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->http.bind_to_any_port(host);
    } else if (!impl_->http.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
    impl_->http_thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return bound;
}

void Service::listen(const std::string& host, int port) {
    if (!impl_->http.listen(host, port)) throw StorageError("cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() { impl_->shutdown(); }

}  // namespace vides
