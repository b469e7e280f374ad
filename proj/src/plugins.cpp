// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/plugins.hpp"

#include "httplib.h"

#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/hash.hpp"

namespace vides {
namespace {

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;  // prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ValidationError("plugin url must be absolute: " + url, "url");
    const auto slash = url.find('/', scheme + 3);
    Endpoint e{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

Json post_json(const std::string& url, const std::string& route, const Json& body,
               std::chrono::milliseconds timeout, const std::string& who) {
    const Endpoint ep = split_url(url);
    httplib::Client client(ep.base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout).count() % 1000000;
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    client.set_connection_timeout(10, 0);
    auto res = client.Post(ep.path + route, body.dump(), "application/json");
    if (!res) throw BackendError(who + " is unreachable: " + httplib::to_string(res.error()));
    Json reply;
    try {
        reply = Json::parse(res->body);
    } catch (const Json::exception&) {
        if (res->status != 200)
            throw BackendError(who + " returned HTTP " + std::to_string(res->status) + ": " + res->body);
        throw BackendError(who + " returned malformed JSON");
    }
    if (res->status != 200)
        throw BackendError(who + " returned HTTP " + std::to_string(res->status) + ": " +
                           reply.value("message", res->body));
    return reply;
}

}  // namespace

Json image_to_json(const Image& image) { return base64_encode(encode_png(image)); }

Image image_from_json(const Json& j) {
    if (!j.is_string()) throw DecodeError("image must be a base64 PNG string");
    return decode_image(base64_decode(j.get<std::string>()));
}

Json backend_request_to_json(const BackendRequest& r) {
    Json j{{"prompt", r.prompt},
           {"negative_prompt", r.negative_prompt},
           {"seed", r.seed},
           {"params", r.params}};
    j["init_image"] = r.init_image ? image_to_json(*r.init_image) : Json(nullptr);
    j["mask"] = r.mask ? image_to_json(*r.mask) : Json(nullptr);
    if (r.condition)
        j["condition"] = Json{{"kind", to_string(r.condition->kind)},
                              {"image", image_to_json(r.condition->image)},
                              {"source_hash", r.condition->source_hash},
                              {"extractor_params", r.condition->extractor_params}};
    else
        j["condition"] = nullptr;
    return j;
}

BackendRequest backend_request_from_json(const Json& j) {
    BackendRequest r;
    r.prompt = j.value("prompt", std::string{});
    r.negative_prompt = j.value("negative_prompt", std::string{});
    r.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) r.params = j.at("params").get<GenerationParams>();
    if (auto it = j.find("init_image"); it != j.end() && !it->is_null()) r.init_image = image_from_json(*it);
    if (auto it = j.find("mask"); it != j.end() && !it->is_null()) r.mask = binarize(image_from_json(*it));
    if (auto it = j.find("condition"); it != j.end() && !it->is_null()) {
        GuidanceCondition c;
        c.kind = parse_condition_kind(it->at("kind").get<std::string>());
        c.image = to_gray(image_from_json(it->at("image")));
        c.source_hash = it->value("source_hash", std::string{});
        c.extractor_params = it->value("extractor_params", std::map<std::string, std::string>{});
        r.condition = std::move(c);
    }
    return r;
}

HttpGenerationBackend::HttpGenerationBackend(std::string name, std::string url, BackendCapabilities caps,
                                             std::chrono::milliseconds timeout)
    : name_(std::move(name)), url_(std::move(url)), caps_(caps), timeout_(timeout) {
    split_url(url_);
}

std::vector<Image> HttpGenerationBackend::invoke(const BackendRequest& request) {
    validate_request(request);
    check_capabilities(caps_, request, name_);
    const Json reply = post_json(url_, "/invoke", backend_request_to_json(request), timeout_,
                                 "backend '" + name_ + "'");
    std::vector<Image> out;
    try {
        for (const auto& img : reply.at("images")) out.push_back(to_rgb(image_from_json(img)));
    } catch (const Json::exception& e) {
        throw BackendError("backend '" + name_ + "' returned a malformed reply: " + e.what());
    } catch (const DecodeError& e) {
        throw BackendError("backend '" + name_ + "' returned an undecodable image: " + e.what());
    }
    return out;
}

HttpDepthEstimator::HttpDepthEstimator(std::string name, std::string url, std::chrono::milliseconds timeout)
    : name_(std::move(name)), url_(std::move(url)), timeout_(timeout) {
    split_url(url_);
}

DepthField HttpDepthEstimator::estimate(const Image& image) const {
    const Json reply = post_json(url_, "/depth", Json{{"image", image_to_json(image)}}, timeout_,
                                 "depth estimator '" + name_ + "'");
    try {
        DepthField f;
        f.width = reply.at("width").get<int>();
        f.height = reply.at("height").get<int>();
        f.values = reply.at("values").get<std::vector<float>>();
        return f;
    } catch (const Json::exception& e) {
        throw BackendError("depth estimator '" + name_ + "' returned a malformed reply: " + e.what());
    }
}

HttpSegmenter::HttpSegmenter(std::string name, std::string url, bool single_occupancy,
                             std::chrono::milliseconds timeout)
    : name_(std::move(name)), url_(std::move(url)), single_occupancy_(single_occupancy), timeout_(timeout) {
    split_url(url_);
}

Image HttpSegmenter::segment(const Image& image, const std::vector<Interaction>& interactions) const {
    const Json reply = post_json(url_, "/segment",
                                 Json{{"image", image_to_json(image)}, {"interactions", interactions}},
                                 timeout_, "segmenter '" + name_ + "'");
    try {
        return binarize(image_from_json(reply.at("mask")));
    } catch (const Json::exception& e) {
        throw BackendError("segmenter '" + name_ + "' returned a malformed reply: " + e.what());
    }
}

std::shared_ptr<const SegmentationBackend> PluginSet::segmenter(std::string_view name) const {
    const std::string key(name.empty() ? std::string_view(default_segmenter) : name);
    if (key.empty()) return nullptr;
    auto it = segmenters.find(key);
    return it == segmenters.end() ? nullptr : it->second;
}

PluginSet default_plugins() {
    PluginSet p;
    p.backends->register_backend("stub", std::make_shared<StubBackend>());
    p.depth->add(std::make_shared<IntensityDepthEstimator>());
    p.segmenters["floodfill"] = std::make_shared<FloodFillSegmenter>();
    return p;
}

PluginSet load_plugins(const Json& config) {
    PluginSet p;
    try {
        for (const auto& b : config.value("backends", Json::array())) {
            const auto name = b.at("name").get<std::string>();
            const auto type = b.value("type", std::string("stub"));
            BackendCapabilities caps;
            if (b.contains("capabilities")) caps = b.at("capabilities").get<BackendCapabilities>();
            if (type == "stub") {
                p.backends->register_backend(name, std::make_shared<StubBackend>(caps, name));
            } else if (type == "http") {
                const std::chrono::milliseconds timeout(b.value("timeout_ms", 300'000));
                p.backends->register_backend(
                    name, std::make_shared<HttpGenerationBackend>(name, b.at("url").get<std::string>(), caps, timeout));
            } else {
                throw ValidationError("unknown backend type '" + type + "'", "backends");
            }
        }
        if (auto d = config.find("default_backend"); d != config.end() && !d->is_null())
            p.backends->set_default(d->get<std::string>());

        const Json depth = config.value("depth_estimators", Json::array({Json{{"name", "intensity"}, {"type", "intensity"}}}));
        for (const auto& d : depth) {
            const auto type = d.value("type", std::string("intensity"));
            if (type == "intensity") {
                p.depth->add(std::make_shared<IntensityDepthEstimator>());
            } else if (type == "http") {
                p.depth->add(std::make_shared<HttpDepthEstimator>(d.at("name").get<std::string>(),
                                                                  d.at("url").get<std::string>()));
            } else {
                throw ValidationError("unknown depth estimator type '" + type + "'", "depth_estimators");
            }
        }
        p.default_depth_estimator = config.value("default_depth_estimator", std::string("intensity"));

        for (const auto& s : config.value("segmenters", Json::array())) {
            const auto name = s.at("name").get<std::string>();
            const auto type = s.value("type", std::string("floodfill"));
            if (type == "floodfill")
                p.segmenters[name] = std::make_shared<FloodFillSegmenter>(s.value("tolerance", 10));
            else if (type == "http")
                p.segmenters[name] = std::make_shared<HttpSegmenter>(name, s.at("url").get<std::string>(),
                                                                    s.value("single_occupancy", true));
            else
                throw ValidationError("unknown segmenter type '" + type + "'", "segmenters");
        }
        if (auto s = config.find("default_segmenter"); s != config.end() && !s->is_null()) {
            p.default_segmenter = s->get<std::string>();
            if (!p.segmenters.contains(p.default_segmenter))
                throw ValidationError("default_segmenter '" + p.default_segmenter + "' is not configured",
                                      "default_segmenter");
        }
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed plugin configuration: ") + e.what(), "config");
    }
    return p;
}

PluginSet load_plugins(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return load_plugins(
        parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string()));
}

}  // namespace vides
