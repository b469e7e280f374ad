// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/serialization.hpp"

#include <charconv>
#include <vector>

#include "vides/error.hpp"

namespace vides {
namespace {

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

std::vector<int> parse_ints(std::string_view text, std::size_t count, std::string_view what) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto part = text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos);
        int v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty())
            throw ValidationError("malformed " + std::string(what) + " '" + std::string(text) + "'",
                                  std::string(what));
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (out.size() != count)
        throw ValidationError(std::string(what) + " needs " + std::to_string(count) +
                                  " comma-separated integers",
                              std::string(what));
    return out;
}

}  // namespace

void to_json(Json& j, const GenerationParams& p) {
    j = Json{{"width", p.width},         {"height", p.height},
             {"num_images", p.num_images}, {"guidance_scale", p.guidance_scale},
             {"steps", p.steps},         {"strength", p.strength}};
}

void from_json(const Json& j, GenerationParams& p) {
    read_opt(j, "width", p.width);
    read_opt(j, "height", p.height);
    read_opt(j, "num_images", p.num_images);
    read_opt(j, "guidance_scale", p.guidance_scale);
    read_opt(j, "steps", p.steps);
    read_opt(j, "strength", p.strength);
}

void to_json(Json& j, const BackendCapabilities& c) {
    j = Json{{"supports_text2img", c.supports_text2img},
             {"supports_inpaint", c.supports_inpaint},
             {"supports_condition_edge", c.supports_condition_edge},
             {"supports_condition_depth", c.supports_condition_depth},
             {"max_resolution", c.max_resolution},
             {"single_occupancy", c.single_occupancy}};
}

void from_json(const Json& j, BackendCapabilities& c) {
    read_opt(j, "supports_text2img", c.supports_text2img);
    read_opt(j, "supports_inpaint", c.supports_inpaint);
    read_opt(j, "supports_condition_edge", c.supports_condition_edge);
    read_opt(j, "supports_condition_depth", c.supports_condition_depth);
    read_opt(j, "max_resolution", c.max_resolution);
    read_opt(j, "single_occupancy", c.single_occupancy);
}

void to_json(Json& j, const Interaction& i) {
    if (const auto* p = std::get_if<PointInteraction>(&i)) {
        j = Json{{"type", "point"},
                 {"x", p->x},
                 {"y", p->y},
                 {"label", p->label == PointLabel::foreground ? "fg" : "bg"}};
    } else {
        const auto& b = std::get<BoxInteraction>(i);
        j = Json{{"type", "box"}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}};
    }
}

void from_json(const Json& j, Interaction& i) {
    if (!j.is_object()) throw ValidationError("interaction must be an object", "interactions");
    const auto type = j.value("type", std::string{});
    if (type == "point") {
        PointInteraction p;
        p.x = j.at("x").get<int>();
        p.y = j.at("y").get<int>();
        const auto label = j.value("label", std::string("fg"));
        if (label != "fg" && label != "bg")
            throw ValidationError("point label must be fg or bg", "interactions");
        p.label = label == "fg" ? PointLabel::foreground : PointLabel::background;
        i = p;
    } else if (type == "box") {
        i = BoxInteraction{j.at("x0").get<int>(), j.at("y0").get<int>(), j.at("x1").get<int>(),
                           j.at("y1").get<int>()};
    } else {
        throw ValidationError("interaction type must be point or box", "interactions");
    }
}

void to_json(Json& j, const PostprocessRecord& r) {
    j = Json{{"dilation_radius", r.dilation_radius}, {"holes_filled", r.holes_filled}};
}

void from_json(const Json& j, PostprocessRecord& r) {
    read_opt(j, "dilation_radius", r.dilation_radius);
    read_opt(j, "holes_filled", r.holes_filled);
}

void to_json(Json& j, const DesignJob& job) {
    j = Json{{"job_id", job.job_id},
             {"kind", to_string(job.kind)},
             {"prompt", job.prompt},
             {"negative_prompt", job.negative_prompt},
             {"condition_kind", to_string(job.condition_kind)},
             {"seed", job.seed},
             {"params", job.params},
             {"backend", job.backend},
             {"status", to_string(job.status)},
             {"outputs", job.outputs},
             {"created_at", job.created_at},
             {"updated_at", job.updated_at}};
    j["source_image"] = job.source_image ? Json(*job.source_image) : Json(nullptr);
    j["mask"] = job.mask ? Json(*job.mask) : Json(nullptr);
    j["condition_image"] = job.condition_image ? Json(*job.condition_image) : Json(nullptr);
    j["dilation_radius"] = job.dilation_radius ? Json(*job.dilation_radius) : Json(nullptr);
    j["error"] = job.error ? Json(*job.error) : Json(nullptr);
}

void from_json(const Json& j, DesignJob& job) {
    job.job_id = j.value("job_id", std::string{});
    job.kind = parse_job_kind(j.at("kind").get<std::string>());
    job.prompt = j.value("prompt", std::string{});
    job.negative_prompt = j.value("negative_prompt", std::string{});
    job.condition_kind = parse_condition_kind(j.value("condition_kind", std::string("none")));
    job.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) job.params = j.at("params").get<GenerationParams>();
    job.backend = j.value("backend", std::string{});
    job.status = parse_job_status(j.value("status", std::string("queued")));
    job.outputs = j.value("outputs", std::vector<std::string>{});
    job.created_at = j.value("created_at", std::string{});
    job.updated_at = j.value("updated_at", std::string{});
    auto opt_str = [&](const char* key) -> std::optional<std::string> {
        if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<std::string>();
        return std::nullopt;
    };
    job.source_image = opt_str("source_image");
    job.mask = opt_str("mask");
    job.condition_image = opt_str("condition_image");
    job.error = opt_str("error");
    if (auto it = j.find("dilation_radius"); it != j.end() && !it->is_null())
        job.dilation_radius = it->get<int>();
}

Json mask_metadata(const MaskSpec& mask) {
    return Json{{"width", mask.width()},
                {"height", mask.height()},
                {"interactions", mask.interactions()},
                {"postprocess", mask.postprocess()},
                {"area_fraction", mask.area_fraction()}};
}

BoxInteraction parse_box(std::string_view text) {
    const auto v = parse_ints(text, 4, "box");
    return {v[0], v[1], v[2], v[3]};
}

PointInteraction parse_point(std::string_view text, PointLabel label) {
    const auto v = parse_ints(text, 2, "point");
    return {v[0], v[1], label};
}

Json parse_json(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError("malformed JSON in " + std::string(what) + ": " + e.what());
    }
}

}  // namespace vides

#include <chrono>
#include <ctime>

namespace vides {

std::string utc_timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    std::snprintf(buf + n, sizeof buf - n, ".%03dZ", static_cast<int>(ms));
    return buf;
}

}  // namespace vides
