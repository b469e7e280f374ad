// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/dataset.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/hash.hpp"

namespace vides::dataset {
namespace {

constexpr std::string_view kSlots[] = {"{room}", "{style}", "{color}"};

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

void check_list(const std::vector<std::string>& list, const char* field) {
    if (list.empty()) throw ValidationError(std::string(field) + " must not be empty", field);
    std::unordered_set<std::string> seen;
    for (const auto& item : list) {
        if (item.empty()) throw ValidationError(std::string(field) + " contains an empty entry", field);
        if (!seen.insert(item).second)
            throw ValidationError(std::string(field) + " contains duplicate '" + item + "'", field);
    }
}

}  // namespace

void PromptGrammar::validate() const {
    check_list(room_types, "room_types");
    check_list(styles, "styles");
    check_list(color_schemes, "color_schemes");
    check_list(templates, "templates");
    for (const auto& t : templates)
        for (auto slot : kSlots)
            if (count_occurrences(t, slot) != 1)
                throw ValidationError("template '" + t + "' must use " + std::string(slot) +
                                          " exactly once",
                                      "templates");
}

void to_json(Json& j, const PromptGrammar& g) {
    j = Json{{"room_types", g.room_types},
             {"styles", g.styles},
             {"color_schemes", g.color_schemes},
             {"templates", g.templates}};
}

void from_json(const Json& j, PromptGrammar& g) {
    g.room_types = j.at("room_types").get<std::vector<std::string>>();
    g.styles = j.at("styles").get<std::vector<std::string>>();
    g.color_schemes = j.at("color_schemes").get<std::vector<std::string>>();
    g.templates = j.at("templates").get<std::vector<std::string>>();
}

PromptGrammar default_grammar() {
    return {
        {"living room", "bedroom", "kitchen", "bathroom", "dining room"},
        {"minimalist", "farmhouse", "Scandinavian", "industrial", "mid-century modern", "bohemian",
         "coastal", "Japandi", "rustic", "contemporary"},
        {"monochromatic", "warm", "cool"},
        {
            "a {style} {room} with a {color} color scheme",
            "a photo of a cozy {style} {room}, {color} tones",
            "interior design of a {room} in {style} style with {color} colors",
            "a spacious {style} {room} featuring a {color} palette",
            "a high-end {room} decorated in {style} style, {color} lighting",
            "a bright {room} with {style} furniture and {color} accents",
            "an elegant {style} {room}, {color} color palette, natural light",
            "a {color} {room} designed in a {style} aesthetic",
            "a realistic render of a {style} {room} with {color} walls",
            "a luxury villa {room} with {style} decor in {color} hues",
        },
    };
}

std::string prompt_id_for(std::string_view text) { return to_hex(Fnv1a64{}.text(text).digest()); }

std::vector<Prompt> expand_grammar(const PromptGrammar& g) {
    g.validate();
    std::vector<Prompt> out;
    out.reserve(g.templates.size() * g.room_types.size() * g.styles.size() * g.color_schemes.size());
    std::unordered_set<std::string> seen;
    for (const auto& t : g.templates)
        for (const auto& room : g.room_types)
            for (const auto& style : g.styles)
                for (const auto& color : g.color_schemes) {
                    // Fill by position so a vocabulary word containing "{style}"
                    // cannot be re-substituted.
                    std::string text;
                    std::size_t pos = 0;
                    while (pos < t.size()) {
                        bool matched = false;
                        for (auto [slot, value] :
                             {std::pair{kSlots[0], std::string_view(room)},
                              std::pair{kSlots[1], std::string_view(style)},
                              std::pair{kSlots[2], std::string_view(color)}}) {
                            if (t.compare(pos, slot.size(), slot) == 0) {
                                text += value;
                                pos += slot.size();
                                matched = true;
                                break;
                            }
                        }
                        if (!matched) text += t[pos++];
                    }
                    if (!seen.insert(text).second)
                        throw ValidationError("grammar renders duplicate prompt '" + text + "'",
                                              "templates");
                    out.push_back({prompt_id_for(text), std::move(text), room, style, color});
                }
    return out;
}

std::vector<Prompt> import_prompts(const std::vector<std::string>& lines) {
    std::vector<Prompt> out;
    std::unordered_set<std::string> seen;
    for (const auto& line : lines) {
        if (line.empty()) continue;
        if (!seen.insert(line).second)
            throw ValidationError("duplicate imported prompt '" + line + "'", "prompts");
        out.push_back({prompt_id_for(line), line, {}, {}, {}});
    }
    if (out.empty()) throw ValidationError("no prompts to import", "prompts");
    return out;
}

void to_json(Json& j, const BatchTask& t) {
    j = Json{{"prompt_id", t.prompt_id}, {"prompt", t.prompt}, {"room", t.room},
             {"style", t.style},         {"color", t.color},   {"replica", t.replica},
             {"seed", t.seed}};
}

void from_json(const Json& j, BatchTask& t) {
    t.prompt_id = j.at("prompt_id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.room = j.value("room", std::string{});
    t.style = j.value("style", std::string{});
    t.color = j.value("color", std::string{});
    t.replica = j.at("replica").get<int>();
    t.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(Json& j, const GenerationPlan& p) {
    j = Json{{"schema_version", p.schema_version},
             {"base_seed", p.base_seed},
             {"images_per_prompt", p.images_per_prompt},
             {"params", p.params},
             {"tasks", p.tasks}};
}

void from_json(const Json& j, GenerationPlan& p) {
    p.schema_version = j.value("schema_version", 1);
    if (p.schema_version != 1)
        throw ValidationError("unsupported plan schema_version " + std::to_string(p.schema_version),
                              "schema_version");
    p.base_seed = j.at("base_seed").get<std::uint64_t>();
    p.images_per_prompt = j.at("images_per_prompt").get<int>();
    if (j.contains("params")) p.params = j.at("params").get<GenerationParams>();
    p.tasks = j.at("tasks").get<std::vector<BatchTask>>();
}

std::uint64_t task_seed(std::string_view prompt_id, int replica, std::uint64_t base_seed) {
    return Fnv1a64{}.text(prompt_id).u32(static_cast<std::uint32_t>(replica)).u64(base_seed).digest() &
           ((std::uint64_t{1} << 53) - 1);
}

GenerationPlan plan_batch(const std::vector<Prompt>& prompts, int images_per_prompt,
                          std::uint64_t base_seed, GenerationParams params) {
    if (images_per_prompt < 1)
        throw ValidationError("images_per_prompt must be at least 1", "images_per_prompt");
    GenerationPlan plan;
    plan.base_seed = base_seed;
    plan.images_per_prompt = images_per_prompt;
    params.num_images = 1;
    plan.params = params;
    plan.tasks.reserve(prompts.size() * static_cast<std::size_t>(images_per_prompt));
    for (const auto& p : prompts) {
        std::unordered_set<std::uint64_t> used;
        for (int r = 0; r < images_per_prompt; ++r) {
            std::uint64_t seed = task_seed(p.prompt_id, r, base_seed);
            while (!used.insert(seed).second) seed = (seed + 1) & ((std::uint64_t{1} << 53) - 1);
            plan.tasks.push_back({p.prompt_id, p.text, p.room, p.style, p.color, r, seed});
        }
    }
    return plan;
}

void to_json(Json& j, const ManifestEntry& e) {
    j = Json{{"schema_version", kManifestSchemaVersion},
             {"prompt_id", e.prompt_id},
             {"prompt", e.prompt},
             {"room", e.room},
             {"style", e.style},
             {"color", e.color},
             {"seed", e.seed},
             {"image_path", e.image_path},
             {"edge_path", e.edge_path ? Json(*e.edge_path) : Json(nullptr)},
             {"depth_path", e.depth_path ? Json(*e.depth_path) : Json(nullptr)},
             {"created_at", e.created_at}};
    if (e.export_error) j["export_error"] = *e.export_error;
}

void from_json(const Json& j, ManifestEntry& e) {
    const int version = j.value("schema_version", kManifestSchemaVersion);
    if (version != kManifestSchemaVersion)
        throw ValidationError("unsupported manifest schema_version " + std::to_string(version),
                              "schema_version");
    e.prompt_id = j.at("prompt_id").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.room = j.value("room", std::string{});
    e.style = j.value("style", std::string{});
    e.color = j.value("color", std::string{});
    e.seed = j.at("seed").get<std::uint64_t>();
    e.image_path = j.at("image_path").get<std::string>();
    auto opt = [&](const char* key) -> std::optional<std::string> {
        if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<std::string>();
        return std::nullopt;
    };
    e.edge_path = opt("edge_path");
    e.depth_path = opt("depth_path");
    e.export_error = opt("export_error");
    e.created_at = j.value("created_at", std::string{});
}

std::set<std::pair<std::string, std::uint64_t>> DatasetManifest::keys() const {
    std::set<std::pair<std::string, std::uint64_t>> out;
    for (const auto& e : entries) out.emplace(e.prompt_id, e.seed);
    return out;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    DatasetManifest m;
    m.path = path;
    std::ifstream in(path, std::ios::binary);
    if (!in) return m;
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    m.needs_rewrite = !text.empty() && text.back() != '\n';
    std::vector<std::string> lines;
    std::istringstream ss(text);
    for (std::string line; std::getline(ss, line);)
        if (!line.empty()) lines.push_back(std::move(line));
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            m.entries.push_back(Json::parse(lines[i]).get<ManifestEntry>());
        } catch (const Json::exception& e) {
            if (i + 1 == lines.size()) {
                m.needs_rewrite = true;
                break;
            }
            throw ValidationError("manifest " + path.string() + " line " + std::to_string(i + 1) +
                                      " is malformed: " + e.what(),
                                  "manifest");
        }
    }
    return m;
}

void DatasetManifest::save() const {
    std::string text;
    for (const auto& e : entries) text += Json(e).dump() + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ManifestWriter::ManifestWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) throw StorageError("cannot open manifest " + path.string() + " for appending");
}

ManifestWriter::~ManifestWriter() {
    if (file_) std::fclose(file_);
}

void ManifestWriter::append(const ManifestEntry& entry) {
    const std::string line = Json(entry).dump() + "\n";
    std::lock_guard lock(mutex_);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
        throw StorageError("failed to append to manifest " + path_.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& root) {
    return root / "manifest.jsonl";
}

namespace {

std::string image_rel_path(const std::string& prompt_id, std::uint64_t seed,
                           std::string_view suffix = ".png") {
    return prompt_id + "/" + std::to_string(seed) + std::string(suffix);
}

}  // namespace

RunResult run_batch(const GenerationPlan& plan, const std::shared_ptr<GenerationBackend>& backend,
                    const RunOptions& options) {
    if (!backend) throw CapabilityError("no generation backend is configured");
    if (options.workers < 1) throw ValidationError("workers must be at least 1", "workers");
    const auto caps = backend->capabilities();
    if (!caps.supports_text2img)
        throw CapabilityError("backend '" + backend->name() + "' does not support text-to-image generation");
    validate_params(plan.params, std::max(1, plan.params.num_images));

    const auto mpath = manifest_path(options.root);
    RunResult result;
    result.manifest = DatasetManifest::load(mpath);
    if (!options.resume && !result.manifest.entries.empty())
        throw ValidationError("manifest " + mpath.string() + " already has entries; use resume",
                              "resume");
    // Appending after a torn line would glue two records together.
    if (result.manifest.needs_rewrite) {
        result.manifest.save();
        result.manifest.needs_rewrite = false;
    }
    const auto done = result.manifest.keys();

    std::vector<const BatchTask*> pending;
    for (const auto& t : plan.tasks) {
        if (done.contains({t.prompt_id, t.seed}))
            ++result.skipped;
        else
            pending.push_back(&t);
    }
    if (options.max_tasks && pending.size() > *options.max_tasks) pending.resize(*options.max_tasks);

    ManifestWriter writer(mpath);
    std::atomic<std::size_t> next{0};
    std::mutex result_mutex;
    std::exception_ptr fatal;

    auto work = [&] {
        for (;;) {
            {
                std::lock_guard lock(result_mutex);
                if (fatal) return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const BatchTask& task = *pending[i];
            BackendRequest req;
            req.prompt = task.prompt;
            req.seed = task.seed;
            req.params = plan.params;
            req.params.num_images = 1;
            std::vector<Image> images;
            try {
                images = invoke_checked(backend, req, options.timeout);
            } catch (const std::exception& e) {
                std::lock_guard lock(result_mutex);
                result.failures.push_back({task, e.what()});
                continue;
            }
            try {
                ManifestEntry entry;
                entry.prompt_id = task.prompt_id;
                entry.prompt = task.prompt;
                entry.room = task.room;
                entry.style = task.style;
                entry.color = task.color;
                entry.seed = task.seed;
                entry.image_path = image_rel_path(task.prompt_id, task.seed);
                save_png(options.root / entry.image_path, images.front());
                entry.created_at = utc_timestamp();
                writer.append(entry);
                std::lock_guard lock(result_mutex);
                result.manifest.entries.push_back(std::move(entry));
                ++result.added;
            } catch (...) {
                std::lock_guard lock(result_mutex);
                if (!fatal) fatal = std::current_exception();
                return;
            }
        }
    };

    const int n = std::min<int>(options.workers, static_cast<int>(std::max<std::size_t>(1, pending.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> threads;
        for (int i = 0; i < n; ++i) threads.emplace_back(work);
    }
    if (fatal) std::rethrow_exception(fatal);
    return result;
}

namespace {

Image make_condition(const Image& image, ConditionKind kind, const ExportOptions& options) {
    if (kind == ConditionKind::edge) return extract_edges(image, options.edge_thresholds).image;
    if (!options.depth_estimator) throw CapabilityError("depth export needs a depth estimator");
    return extract_depth(image, *options.depth_estimator).image;
}

}  // namespace

ExportResult export_training_pairs(const std::filesystem::path& manifest_file,
                                   const std::set<ConditionKind>& conditions,
                                   const ExportOptions& options) {
    if (conditions.contains(ConditionKind::none))
        throw ValidationError("export conditions must be edge and/or depth", "conditions");
    if (conditions.contains(ConditionKind::depth) && !options.depth_estimator)
        throw CapabilityError("depth export needs a depth estimator");
    ExportResult result;
    result.manifest = DatasetManifest::load(manifest_file);
    if (conditions.empty()) return result;
    const auto root = result.manifest.root();
    for (auto& e : result.manifest.entries) {
        Image image;
        try {
            image = load_image(root / e.image_path);
        } catch (const std::exception& ex) {
            e.export_error = std::string("missing source image: ") + ex.what();
            result.flagged.push_back(e.prompt_id + "/" + std::to_string(e.seed) + ": " + *e.export_error);
            continue;
        }
        e.export_error.reset();
        for (auto kind : conditions) {
            const bool edge = kind == ConditionKind::edge;
            const auto rel = image_rel_path(e.prompt_id, e.seed, edge ? ".edge.png" : ".depth.png");
            save_png(root / rel, make_condition(image, kind, options));
            (edge ? e.edge_path : e.depth_path) = rel;
            ++result.written;
        }
    }
    result.manifest.save();
    return result;
}

std::vector<std::string> audit_conditions(const DatasetManifest& manifest,
                                          const ExportOptions& options) {
    std::vector<std::string> mismatched;
    const auto root = manifest.root();
    for (const auto& e : manifest.entries) {
        const std::string key = e.prompt_id + "/" + std::to_string(e.seed);
        try {
            const Image image = load_image(root / e.image_path);
            for (auto [kind, path] : {std::pair{ConditionKind::edge, e.edge_path},
                                      std::pair{ConditionKind::depth, e.depth_path}}) {
                if (!path) continue;
                const auto stored = read_file(root / *path);
                if (encode_png(make_condition(image, kind, options)) != stored)
                    mismatched.push_back(key + " (" + std::string(to_string(kind)) + ")");
            }
        } catch (const std::exception& ex) {
            mismatched.push_back(key + ": " + ex.what());
        }
    }
    return mismatched;
}

}  // namespace vides::dataset
