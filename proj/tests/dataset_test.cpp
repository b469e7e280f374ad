// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "vides/codec.hpp"
#include "vides/dataset.hpp"
#include "vides/error.hpp"

using namespace vides;
using namespace vides::dataset;
using testing_support::TempDir;

namespace {

PromptGrammar grammar(int templates, int rooms, int styles, int colors) {
    PromptGrammar g;
    for (int i = 0; i < templates; ++i) g.templates.push_back("t" + std::to_string(i) + " {style} {room} in {color}");
    for (int i = 0; i < rooms; ++i) g.room_types.push_back("room" + std::to_string(i));
    for (int i = 0; i < styles; ++i) g.styles.push_back("style" + std::to_string(i));
    for (int i = 0; i < colors; ++i) g.color_schemes.push_back("color" + std::to_string(i));
    return g;
}

GenerationPlan small_plan(std::size_t prompts, int per_prompt) {
    auto all = expand_grammar(default_grammar());
    all.resize(prompts);
    GenerationParams p;
    p.width = 16;
    p.height = 16;
    return plan_batch(all, per_prompt, 99, p);
}

class FlakyBackend final : public GenerationBackend {
public:
    std::string name() const override { return "flaky"; }
    BackendCapabilities capabilities() const override { return {}; }
    std::vector<Image> invoke(const BackendRequest& r) override {
        if (r.seed % 3 == 0) throw BackendError("out of memory");
        return StubBackend().invoke(r);
    }
};

std::size_t line_count(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty();
    return n;
}

}  // namespace

TEST(Grammar, ProductCounts) {
    EXPECT_EQ(expand_grammar(grammar(1, 5, 10, 3)).size(), 150u);
    EXPECT_EQ(expand_grammar(grammar(2, 1, 1, 1)).size(), 2u);
    EXPECT_EQ(expand_grammar(default_grammar()).size(), 1500u);
}

TEST(Grammar, DefaultShape) {
    const auto g = default_grammar();
    EXPECT_EQ(g.templates.size(), 10u);
    EXPECT_EQ(g.room_types.size(), 5u);
    EXPECT_EQ(g.styles.size(), 10u);
    EXPECT_EQ(g.color_schemes.size(), 3u);
    std::set<std::string> ids;
    for (const auto& p : expand_grammar(g)) ids.insert(p.prompt_id);
    EXPECT_EQ(ids.size(), 1500u);
}

TEST(Grammar, SlotsAndOrder) {
    const auto prompts = expand_grammar(grammar(1, 2, 1, 1));
    EXPECT_EQ(prompts[0].text, "t0 style0 room0 in color0");
    EXPECT_EQ(prompts[1].room, "room1");
    EXPECT_EQ(prompts[0].prompt_id, prompt_id_for(prompts[0].text));
    EXPECT_EQ(prompts[0].prompt_id.size(), 16u);
}

TEST(Grammar, Validation) {
    auto g = grammar(1, 1, 1, 1);
    g.templates = {"{room} only"};
    EXPECT_THROW(expand_grammar(g), ValidationError);
    g.templates = {"{room} {room} {style} {color}"};
    EXPECT_THROW(expand_grammar(g), ValidationError);
    g = grammar(1, 1, 1, 1);
    g.styles.clear();
    EXPECT_THROW(expand_grammar(g), ValidationError);
    g = grammar(1, 2, 1, 1);
    g.room_types = {"x", "x"};
    EXPECT_THROW(expand_grammar(g), ValidationError);
}

TEST(Grammar, JsonRoundTrip) {
    const auto g = default_grammar();
    const PromptGrammar back = Json(g).get<PromptGrammar>();
    EXPECT_EQ(expand_grammar(back), expand_grammar(g));
}

TEST(Import, PlainCaptions) {
    const auto p = import_prompts({"a sunny loft", "a dark den"});
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[1].text, "a dark den");
    EXPECT_THROW(import_prompts({"a", "a"}), ValidationError);
    EXPECT_THROW(import_prompts({}), ValidationError);
}

TEST(Plan, Counts) {
    EXPECT_EQ(plan_batch(expand_grammar(default_grammar()), 30, 0).tasks.size(), 45000u);
    EXPECT_EQ(plan_batch(import_prompts({"one"}), 1, 0).tasks.size(), 1u);
    EXPECT_THROW(plan_batch(import_prompts({"one"}), 0, 0), ValidationError);
}

TEST(Plan, DeterministicWithUniqueSeeds) {
    const auto prompts = expand_grammar(default_grammar());
    const auto a = plan_batch(prompts, 30, 5);
    EXPECT_EQ(a, plan_batch(prompts, 30, 5));
    std::set<std::pair<std::string, std::uint64_t>> keys;
    std::set<std::uint64_t> seeds;
    for (const auto& t : a.tasks) {
        keys.emplace(t.prompt_id, t.seed);
        seeds.insert(t.seed);
        EXPECT_LT(t.seed, 1ULL << 53);
    }
    EXPECT_EQ(keys.size(), 45000u);
    EXPECT_EQ(seeds.size(), 45000u);
    EXPECT_NE(plan_batch(prompts, 1, 6).tasks[0].seed, a.tasks[0].seed);
    EXPECT_EQ(a.tasks[0].seed, task_seed(a.tasks[0].prompt_id, 0, 5));
}

TEST(Plan, JsonRoundTrip) {
    const auto p = small_plan(3, 2);
    EXPECT_EQ(Json(p).get<GenerationPlan>(), p);
    Json j = p;
    j["schema_version"] = 99;
    EXPECT_THROW(j.get<GenerationPlan>(), ValidationError);
}

TEST(Run, TenTasksTenEntries) {
    TempDir dir("ds");
    const auto plan = small_plan(5, 2);
    RunOptions o;
    o.root = dir.path();
    const auto r = run_batch(plan, std::make_shared<StubBackend>(), o);
    EXPECT_EQ(r.added, 10u);
    EXPECT_EQ(line_count(manifest_path(dir.path())), 10u);
    std::size_t pngs = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path()))
        pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 10u);
    const auto& e = r.manifest.entries.front();
    EXPECT_EQ(load_image(dir.path() / e.image_path), StubBackend::procedural(e.prompt, e.seed, 16, 16));
    EXPECT_EQ(e.image_path, e.prompt_id + "/" + std::to_string(e.seed) + ".png");
}

TEST(Run, KillAndResume) {
    TempDir dir("ds");
    const auto plan = small_plan(5, 2);
    RunOptions o;
    o.root = dir.path();
    o.max_tasks = 5;
    EXPECT_EQ(run_batch(plan, std::make_shared<StubBackend>(), o).added, 5u);
    o.max_tasks.reset();
    EXPECT_THROW(run_batch(plan, std::make_shared<StubBackend>(), o), ValidationError);
    o.resume = true;
    const auto r = run_batch(plan, std::make_shared<StubBackend>(), o);
    EXPECT_EQ(r.added, 5u);
    EXPECT_EQ(r.skipped, 5u);
    const auto m = DatasetManifest::load(manifest_path(dir.path()));
    EXPECT_EQ(m.entries.size(), 10u);
    EXPECT_EQ(m.keys().size(), 10u);
    const auto again = run_batch(plan, std::make_shared<StubBackend>(), o);
    EXPECT_EQ(again.added, 0u);
    EXPECT_EQ(again.skipped, 10u);
}

TEST(Run, ResumeAfterTornLine) {
    TempDir dir("ds");
    const auto plan = small_plan(2, 2);
    RunOptions o;
    o.root = dir.path();
    o.max_tasks = 2;
    run_batch(plan, std::make_shared<StubBackend>(), o);
    {
        std::ofstream out(manifest_path(dir.path()), std::ios::app);
        out << "{\"prompt_id\":\"abc";
    }
    o.max_tasks.reset();
    o.resume = true;
    EXPECT_EQ(run_batch(plan, std::make_shared<StubBackend>(), o).added, 2u);
    const auto m = DatasetManifest::load(manifest_path(dir.path()));
    EXPECT_EQ(m.entries.size(), 4u);
    EXPECT_FALSE(m.needs_rewrite);
}

TEST(Run, MalformedMiddleLineIsAnError) {
    TempDir dir("ds");
    {
        std::ofstream out(manifest_path(dir.path()));
        out << "garbage\n{}\n";
    }
    EXPECT_THROW(DatasetManifest::load(manifest_path(dir.path())), ValidationError);
}

TEST(Run, ParallelWorkersMatchSerial) {
    TempDir a("ds"), b("ds");
    const auto plan = small_plan(4, 3);
    RunOptions o;
    o.root = a.path();
    run_batch(plan, std::make_shared<StubBackend>(), o);
    o.root = b.path();
    o.workers = 4;
    const auto r = run_batch(plan, std::make_shared<StubBackend>(), o);
    EXPECT_EQ(r.added, 12u);
    for (const auto& e : r.manifest.entries)
        EXPECT_EQ(read_file(a.path() / e.image_path), read_file(b.path() / e.image_path));
}

TEST(Run, BackendFailuresAreRecorded) {
    TempDir dir("ds");
    const auto plan = small_plan(10, 3);
    std::size_t bad = 0;
    for (const auto& t : plan.tasks) bad += t.seed % 3 == 0;
    ASSERT_GT(bad, 0u);
    RunOptions o;
    o.root = dir.path();
    const auto r = run_batch(plan, std::make_shared<FlakyBackend>(), o);
    EXPECT_EQ(r.failures.size(), bad);
    EXPECT_EQ(r.added, plan.tasks.size() - bad);
}

TEST(Export, EdgeOnly) {
    TempDir dir("ds");
    const auto plan = small_plan(3, 1);
    RunOptions o;
    o.root = dir.path();
    run_batch(plan, std::make_shared<StubBackend>(), o);
    ExportOptions eo;
    const auto r = export_training_pairs(manifest_path(dir.path()), {ConditionKind::edge}, eo);
    EXPECT_EQ(r.written, 3u);
    const auto m = DatasetManifest::load(manifest_path(dir.path()));
    for (const auto& e : m.entries) {
        ASSERT_TRUE(e.edge_path);
        EXPECT_FALSE(e.depth_path);
        EXPECT_TRUE(std::filesystem::exists(dir.path() / *e.edge_path));
    }
}

TEST(Export, BothConditionsAndAudit) {
    TempDir dir("ds");
    RunOptions o;
    o.root = dir.path();
    run_batch(small_plan(3, 2), std::make_shared<StubBackend>(), o);
    ExportOptions eo;
    eo.depth_estimator = std::make_shared<IntensityDepthEstimator>();
    const auto r = export_training_pairs(manifest_path(dir.path()), {ConditionKind::edge, ConditionKind::depth}, eo);
    EXPECT_EQ(r.written, 12u);
    const auto m = DatasetManifest::load(manifest_path(dir.path()));
    for (const auto& e : m.entries) EXPECT_TRUE(e.edge_path && e.depth_path);
    EXPECT_TRUE(audit_conditions(m, eo).empty());
    // tamper with one condition file
    const auto& e = m.entries[1];
    save_png(dir.path() / *e.edge_path, Image(16, 16, 1, 255));
    EXPECT_EQ(audit_conditions(m, eo).size(), 1u);
}

TEST(Export, EmptyConditionSetLeavesManifest) {
    TempDir dir("ds");
    RunOptions o;
    o.root = dir.path();
    run_batch(small_plan(2, 1), std::make_shared<StubBackend>(), o);
    const auto before = read_file(manifest_path(dir.path()));
    export_training_pairs(manifest_path(dir.path()), {}, {});
    EXPECT_EQ(read_file(manifest_path(dir.path())), before);
}

TEST(Export, MissingImageIsFlagged) {
    TempDir dir("ds");
    RunOptions o;
    o.root = dir.path();
    const auto run = run_batch(small_plan(2, 1), std::make_shared<StubBackend>(), o);
    std::filesystem::remove(dir.path() / run.manifest.entries[0].image_path);
    ExportOptions eo;
    const auto r = export_training_pairs(manifest_path(dir.path()), {ConditionKind::edge}, eo);
    EXPECT_EQ(r.flagged.size(), 1u);
    const auto m = DatasetManifest::load(manifest_path(dir.path()));
    std::size_t flagged = 0;
    for (const auto& e : m.entries) flagged += e.export_error.has_value();
    EXPECT_EQ(flagged, 1u);
}

TEST(Export, DepthWithoutEstimator) {
    TempDir dir("ds");
    EXPECT_THROW(export_training_pairs(manifest_path(dir.path()), {ConditionKind::depth}, {}), CapabilityError);
}
