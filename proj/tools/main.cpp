// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "CLI11.hpp"

#include <csignal>
#include <cstdio>
#include <iostream>
#include <fstream>
#include <random>
#include <thread>

#include "vides/codec.hpp"
#include "vides/dataset.hpp"
#include "vides/error.hpp"
#include "vides/metrics.hpp"
#include "vides/orchestrator.hpp"
#include "vides/plugins.hpp"
#include "vides/serialization.hpp"
#include "vides/service.hpp"

namespace fs = std::filesystem;
using namespace vides;

namespace {

// Bad input detected while interpreting flags; reported like a parse error.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::string plugins_file;
    std::string backend;
    std::string segmenter;
    int dilation = 8;
    int workers = 1;
    int timeout_ms = 300'000;
};

struct PipelineFlags {
    std::string prompt;
    std::string negative_prompt;
    std::string image;
    std::string mask;
    std::vector<std::string> boxes;
    std::vector<std::string> clicks;
    std::vector<std::string> bg_clicks;
    std::string condition = "none";
    std::optional<std::uint64_t> seed;
    int width = 512;
    int height = 512;
    int num_images = 1;
    double guidance = 7.5;
    int steps = 30;
    double strength = 0.8;
    std::string out = "out";
};

PluginSet plugins_from(const Globals& g) {
    PluginSet p = g.plugins_file.empty() ? default_plugins() : load_plugins(fs::path(g.plugins_file));
    if (!g.segmenter.empty()) {
        if (g.segmenter == "none") {
            p.default_segmenter.clear();
        } else if (!p.segmenters.count(g.segmenter)) {
            throw UsageError("unknown segmenter '" + g.segmenter + "'");
        } else {
            p.default_segmenter = g.segmenter;
        }
    }
    return p;
}

OrchestratorConfig orchestrator_config(const Globals& g, const PluginSet& p) {
    OrchestratorConfig c;
    c.dilation_radius = g.dilation;
    c.depth_estimator = p.default_depth_estimator;
    c.backend_timeout = std::chrono::milliseconds(g.timeout_ms);
    return c;
}

Image read_input(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("no such file: " + path);
    return load_image(path);
}

void write_json(const fs::path& path, const Json& j) {
    const auto text = j.dump(2) + "\n";
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

MaskSpec build_mask(const PipelineFlags& f, const PluginSet& plugins, const Image& source) {
    std::vector<Interaction> interactions;
    try {
        for (const auto& b : f.boxes) interactions.emplace_back(parse_box(b));
        for (const auto& c : f.clicks) interactions.emplace_back(parse_point(c));
        for (const auto& c : f.bg_clicks) interactions.emplace_back(parse_point(c, PointLabel::background));
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    if (!f.mask.empty()) {
        if (!interactions.empty()) throw UsageError("--mask cannot be combined with --box or --click");
        Image m = read_input(f.mask);
        return MaskSpec(binarize(to_gray(m)));
    }
    if (interactions.empty()) throw UsageError("edit needs --box, --click or --mask");
    if (const auto seg = plugins.segmenter()) return segment(source, interactions, seg.get());
    if (!f.clicks.empty() || !f.bg_clicks.empty())
        throw CapabilityError("--click needs a segmentation backend (see --segmenter); use --box instead");
    Image united(source.width(), source.height(), 1);
    for (const auto& it : interactions) {
        const auto& box = std::get<BoxInteraction>(it);
        check_interaction(box, source.width(), source.height());
        for (int y = box.y0; y < box.y1; ++y)
            for (int x = box.x0; x < box.x1; ++x) united.at(x, y) = 255;
    }
    return MaskSpec(std::move(united), interactions);
}

int run_pipeline(JobKind kind, bool removal, const PipelineFlags& f, const Globals& g,
                 const std::vector<std::string>& argv) {
    PluginSet plugins = plugins_from(g);
    Orchestrator orch(plugins.backends, plugins.depth, orchestrator_config(g, plugins));

    JobRequest req;
    req.kind = kind;
    req.prompt = removal ? std::string() : f.prompt;
    req.negative_prompt = f.negative_prompt;
    try {
        req.condition_kind = removal ? ConditionKind::none : parse_condition_kind(f.condition);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    req.seed = f.seed ? *f.seed : std::random_device{}() | (std::uint64_t(std::random_device{}()) << 21);
    req.params = GenerationParams{f.width, f.height, f.num_images, f.guidance, f.steps, f.strength};
    req.backend = g.backend;
    if (!f.image.empty()) req.source_image = read_input(f.image);
    if (kind == JobKind::edit) {
        if (!req.source_image) throw UsageError("--image is required");
        req.mask = build_mask(f, plugins, *req.source_image);
    }

    DesignJob job;
    job.job_id = make_id("job");
    job.kind = kind;
    job.prompt = req.prompt;
    job.negative_prompt = req.negative_prompt;
    job.condition_kind = req.condition_kind;
    job.seed = req.seed;
    job.params = req.params;
    job.backend = g.backend.empty() ? plugins.backends->default_name() : g.backend;
    if (!f.image.empty()) job.source_image = f.image;
    if (!f.mask.empty()) job.mask = f.mask;
    job.created_at = utc_timestamp();
    job.advance(JobStatus::running);

    const fs::path out(f.out);
    fs::create_directories(out);
    Json sidecar;
    int code = 0;
    try {
        const JobResult result = orch.run(req);
        for (std::size_t i = 0; i < result.images.size(); ++i) {
            const auto name = std::to_string(i) + ".png";
            save_png(out / name, result.images[i]);
            job.outputs.push_back((out / name).string());
        }
        if (result.condition) {
            save_png(out / "condition.png", result.condition->image);
            job.condition_image = (out / "condition.png").string();
        }
        if (result.applied_mask) {
            save_png(out / "mask.png", result.applied_mask->mask());
            job.dilation_radius = result.applied_mask->postprocess().dilation_radius;
        }
        job.params = result.effective_params;
        job.advance(JobStatus::succeeded);
    } catch (const Error& e) {
        job.advance(JobStatus::failed);
        job.error = e.what();
        std::cerr << "vides: " << e.code() << ": " << e.what() << "\n";
        code = 1;
    }
    job.updated_at = utc_timestamp();
    sidecar = Json(job);
    if (req.mask) sidecar["mask_metadata"] = mask_metadata(*req.mask);
    sidecar["argv"] = argv;
    write_json(out / "job.json", sidecar);
    if (code == 0)
        for (const auto& o : job.outputs) std::cout << o << "\n";
    return code;
}

void add_pipeline_flags(CLI::App* sub, PipelineFlags& f, JobKind kind, bool removal) {
    if (!removal) sub->add_option("--prompt,-p", f.prompt, "Text prompt")->required(kind != JobKind::edit);
    sub->add_option("--negative-prompt", f.negative_prompt, "Negative prompt");
    auto* image = sub->add_option("--image,-i", f.image, "Source image (PNG or JPEG)");
    if (kind != JobKind::generate) image->required();
    if (kind == JobKind::edit) {
        sub->add_option("--box", f.boxes, "Selection box x0,y0,x1,y1 (half-open, repeatable)");
        sub->add_option("--click", f.clicks, "Foreground click x,y (repeatable; needs a segmenter)");
        sub->add_option("--bg-click", f.bg_clicks, "Background click x,y (repeatable; needs a segmenter)");
        sub->add_option("--mask", f.mask, "Binary mask image instead of selections");
    }
    if (!removal)
        sub->add_option("--condition,-c", f.condition, "Guidance condition")
            ->check(CLI::IsMember({"none", "edge", "depth"}));
    sub->add_option("--seed,-s", f.seed, "Seed (random and recorded when omitted)");
    sub->add_option("--width", f.width, "Output width (ignored with --image)");
    sub->add_option("--height", f.height, "Output height (ignored with --image)");
    sub->add_option("--num-images,-n", f.num_images, "Images per request");
    sub->add_option("--guidance-scale", f.guidance, "Classifier-free guidance scale");
    sub->add_option("--steps", f.steps, "Denoising steps");
    sub->add_option("--strength", f.strength, "img2img strength");
    sub->add_option("--out,-o", f.out, "Output directory");
}

std::set<ConditionKind> parse_conditions(const std::vector<std::string>& names) {
    std::set<ConditionKind> out;
    for (const auto& n : names) {
        const auto kind = parse_condition_kind(n);
        if (kind == ConditionKind::none) throw UsageError("condition must be edge or depth");
        out.insert(kind);
    }
    return out;
}

void emit_report(const metrics::MetricReport& report, const std::string& out) {
    const auto text = report.to_text();
    std::cout << text;
    if (!out.empty()) {
        write_json(out, report.to_json());
        fs::path txt(out);
        txt.replace_extension(".txt");
        write_file_atomic(txt, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }
}

metrics::Corpus corpus_at(const std::string& dir, const std::string& label) {
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
    auto c = metrics::load_corpus(dir, label);
    if (c.images.empty()) throw UsageError("no images in " + dir);
    return c;
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vides: interior design generation, editing, dataset and evaluation tools"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.set_config("--config", "vides.toml", "Defaults file (key = value, sections per subcommand)");
    Globals g;
    app.add_option("--plugins", g.plugins_file, "Plugin configuration (JSON)");
    app.add_option("--backend", g.backend, "Generation backend (default from plugins)");
    app.add_option("--segmenter", g.segmenter, "Segmentation backend, or 'none'");
    app.add_option("--dilation", g.dilation, "Mask dilation radius for edits")->check(CLI::NonNegativeNumber);
    app.add_option("--workers,-j", g.workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--timeout-ms", g.timeout_ms, "Backend call timeout")->check(CLI::PositiveNumber);

    PipelineFlags gen_f, res_f, edit_f, rem_f;
    auto* gen = app.add_subcommand("generate", "Text-to-image scene generation");
    add_pipeline_flags(gen, gen_f, JobKind::generate, false);
    auto* res = app.add_subcommand("restyle", "Restyle a room image, keeping layout via a condition");
    add_pipeline_flags(res, res_f, JobKind::restyle, false);
    auto* edit = app.add_subcommand("edit", "Inpaint a selected object (no prompt removes it)");
    add_pipeline_flags(edit, edit_f, JobKind::edit, false);
    auto* rem = app.add_subcommand("remove", "Remove a selected object");
    add_pipeline_flags(rem, rem_f, JobKind::edit, true);

    auto* ds = app.add_subcommand("dataset", "Synthetic training corpus");
    ds->require_subcommand(1);
    std::string grammar_file, prompts_file, plan_out = "plan.json";
    int per_prompt = 30;
    std::uint64_t base_seed = 0;
    GenerationParams plan_params;
    auto* plan = ds->add_subcommand("plan", "Expand a prompt grammar into a generation plan");
    plan->add_option("--grammar", grammar_file, "Grammar JSON (default: built-in)");
    plan->add_option("--prompts", prompts_file, "Plain-text captions, one per line, instead of a grammar");
    plan->add_option("--per-prompt", per_prompt, "Images per prompt")->check(CLI::PositiveNumber);
    plan->add_option("--base-seed", base_seed, "Base seed");
    plan->add_option("--width", plan_params.width, "Image width");
    plan->add_option("--height", plan_params.height, "Image height");
    plan->add_option("--steps", plan_params.steps, "Denoising steps");
    plan->add_option("--out,-o", plan_out, "Plan file");

    std::string plan_file, run_out = "dataset";
    bool resume = false;
    std::optional<std::size_t> max_tasks;
    auto* run = ds->add_subcommand("run", "Execute a plan");
    run->add_option("plan", plan_file, "Plan file")->required()->check(CLI::ExistingFile);
    run->add_option("--out,-o", run_out, "Dataset root");
    run->add_flag("--resume", resume, "Skip tasks already in the manifest");
    run->add_option("--max-tasks", max_tasks, "Stop after this many tasks");

    std::string manifest_file;
    std::vector<std::string> export_conditions{"edge", "depth"};
    EdgeThresholds thresholds;
    auto* exp = ds->add_subcommand("export", "Write condition images for every manifest entry");
    exp->add_option("manifest", manifest_file, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    exp->add_option("--conditions", export_conditions, "edge,depth")->delimiter(',');
    exp->add_option("--low", thresholds.low, "Edge low threshold");
    exp->add_option("--high", thresholds.high, "Edge high threshold");

    auto* ev = app.add_subcommand("eval", "Evaluation reports");
    ev->require_subcommand(1);
    std::vector<std::string> fid_a, fid_b;
    std::string embedder = "pixel8", fid_out;
    auto* fid = ev->add_subcommand("fid", "FID between image directories");
    fid->add_option("--a", fid_a, "Row corpus directory (repeatable)")->required();
    fid->add_option("--b", fid_b, "Column corpus directory (repeatable)")->required();
    fid->add_option("--embedder", embedder, "Feature embedder")->check(CLI::IsMember({"pixel8"}));
    fid->add_option("--out,-o", fid_out, "JSON report (a .txt table is written beside it)");

    std::vector<std::string> lp_corpora, lp_conditions{"edge", "depth"};
    metrics::InpaintEvalConfig lp_cfg;
    std::string lp_pipeline = "stub", lp_weights, lp_out;
    auto* lp = ev->add_subcommand("lpips", "Inpainting LPIPS under random region masks");
    lp->add_option("--corpus", lp_corpora, "Image directory (repeatable)")->required();
    lp->add_option("--condition", lp_conditions, "edge and/or depth")->delimiter(',');
    lp->add_option("--min-frac", lp_cfg.min_fraction, "Minimum mask area fraction");
    lp->add_option("--max-frac", lp_cfg.max_fraction, "Maximum mask area fraction");
    lp->add_option("--seed", lp_cfg.base_seed, "Base mask seed");
    lp->add_option("--pipeline", lp_pipeline, "'stub' runs the orchestrator; 'identity' returns the source")
        ->check(CLI::IsMember({"stub", "identity"}));
    lp->add_option("--weights", lp_weights, "Per-layer weights JSON");
    lp->add_option("--out,-o", lp_out, "JSON report (a .txt table is written beside it)");

    ServiceConfig svc;
    std::string host = "127.0.0.1", storage = "vides-data", static_dir;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the REST service");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");
    serve->add_option("--storage", storage, "Storage root (SQLite + blobs)");
    serve->add_option("--static", static_dir, "Directory served at /");
    serve->add_option("--max-queue", svc.max_queue, "Pending job limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try {
        if (gen->parsed()) return run_pipeline(JobKind::generate, false, gen_f, g, args);
        if (res->parsed()) return run_pipeline(JobKind::restyle, false, res_f, g, args);
        if (edit->parsed()) return run_pipeline(JobKind::edit, false, edit_f, g, args);
        if (rem->parsed()) return run_pipeline(JobKind::edit, true, rem_f, g, args);

        if (plan->parsed()) {
            std::vector<dataset::Prompt> prompts;
            if (!prompts_file.empty()) {
                if (!grammar_file.empty()) throw UsageError("--grammar and --prompts are exclusive");
                std::ifstream in(prompts_file);
                if (!in) throw UsageError("cannot read " + prompts_file);
                std::vector<std::string> lines;
                for (std::string line; std::getline(in, line);)
                    if (!line.empty()) lines.push_back(line);
                prompts = dataset::import_prompts(lines);
            } else {
                dataset::PromptGrammar grammar = dataset::default_grammar();
                if (!grammar_file.empty()) {
                    const auto bytes = read_file(grammar_file);
                    grammar = parse_json(std::string(bytes.begin(), bytes.end()), "grammar")
                                  .get<dataset::PromptGrammar>();
                }
                prompts = dataset::expand_grammar(grammar);
            }
            const auto p = dataset::plan_batch(prompts, per_prompt, base_seed, plan_params);
            write_json(plan_out, Json(p));
            std::cout << prompts.size() << " prompts, " << p.tasks.size() << " tasks -> " << plan_out << "\n";
            return 0;
        }
        if (run->parsed()) {
            const auto bytes = read_file(plan_file);
            const auto p = parse_json(std::string(bytes.begin(), bytes.end()), "plan").get<dataset::GenerationPlan>();
            const PluginSet plugins = plugins_from(g);
            dataset::RunOptions opts;
            opts.root = run_out;
            opts.resume = resume;
            opts.workers = g.workers;
            opts.max_tasks = max_tasks;
            opts.timeout = std::chrono::milliseconds(g.timeout_ms);
            const auto r = dataset::run_batch(p, plugins.backends->get(g.backend), opts);
            std::cout << "added " << r.added << ", skipped " << r.skipped << ", failed " << r.failures.size()
                      << " -> " << dataset::manifest_path(run_out).string() << "\n";
            for (const auto& f : r.failures)
                std::cerr << "failed " << f.task.prompt_id << "/" << f.task.seed << ": " << f.error << "\n";
            return r.failures.empty() ? 0 : 1;
        }
        if (exp->parsed()) {
            const PluginSet plugins = plugins_from(g);
            dataset::ExportOptions opts;
            opts.edge_thresholds = thresholds;
            opts.depth_estimator = plugins.depth->get(plugins.default_depth_estimator);
            const auto r = dataset::export_training_pairs(manifest_file, parse_conditions(export_conditions), opts);
            std::cout << "wrote " << r.written << " condition images, " << r.flagged.size() << " entries flagged\n";
            for (const auto& f : r.flagged) std::cerr << "flagged " << f << "\n";
            return r.flagged.empty() ? 0 : 1;
        }
        if (fid->parsed()) {
            std::vector<metrics::Corpus> rows, cols;
            for (const auto& d : fid_a) rows.push_back(corpus_at(d, "a:" + d));
            for (const auto& d : fid_b) cols.push_back(corpus_at(d, "b:" + d));
            const metrics::PixelEmbedder emb;
            emit_report(metrics::fid_report(rows, cols, emb, g.workers), fid_out);
            return 0;
        }
        if (lp->parsed()) {
            std::vector<metrics::Corpus> corpora;
            for (const auto& d : lp_corpora) corpora.push_back(corpus_at(d, fs::path(d).filename().string()));
            lp_cfg.conditions.clear();
            for (auto k : parse_conditions(lp_conditions)) lp_cfg.conditions.push_back(k);
            std::shared_ptr<const metrics::PerceptualEmbedder> emb = std::make_shared<metrics::PyramidEmbedder>();
            if (!lp_weights.empty())
                emb = std::make_shared<metrics::ReweightedEmbedder>(emb, metrics::load_layer_weights(lp_weights));
            const PluginSet plugins = plugins_from(g);
            Orchestrator orch(plugins.backends, plugins.depth, orchestrator_config(g, plugins));
            const auto pipeline =
                lp_pipeline == "identity" ? metrics::identity_pipeline() : metrics::orchestrator_pipeline(orch, g.backend);
            emit_report(metrics::inpaint_eval(corpora, pipeline, *emb, lp_cfg), lp_out);
            return 0;
        }
        if (serve->parsed()) {
            svc.storage_root = storage;
            svc.workers = g.workers;
            if (!static_dir.empty()) svc.static_dir = static_dir;
            PluginSet plugins = plugins_from(g);
            svc.orchestrator = orchestrator_config(g, plugins);
            Service service(svc, std::move(plugins));
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int bound = service.start(host, port);
            std::cout << "serving on http://" << host << ":" << bound << "/api/v1" << std::endl;
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            service.stop();
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "vides: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "vides: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "vides: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
