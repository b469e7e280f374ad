// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "support.hpp"
#include "vides/backend.hpp"
#include "vides/error.hpp"

using namespace vides;
using namespace std::chrono_literals;

namespace {

std::uint8_t stub_pixel(std::string_view prompt, std::uint64_t seed, std::uint32_t x, std::uint32_t y, std::uint8_t c) {
    using testing_support::fnv_bytes;
    std::uint64_t h = fnv_bytes(testing_support::kFnvOffset, prompt.data(), prompt.size());
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(seed >> (8 * i));
    h = fnv_bytes(h, le, 8);
    for (int i = 0; i < 4; ++i) le[i] = static_cast<unsigned char>(x >> (8 * i));
    h = fnv_bytes(h, le, 4);
    for (int i = 0; i < 4; ++i) le[i] = static_cast<unsigned char>(y >> (8 * i));
    h = fnv_bytes(h, le, 4);
    h = fnv_bytes(h, &c, 1);
    return static_cast<std::uint8_t>(h % 256);
}

BackendRequest text_request(std::string prompt, std::uint64_t seed, int w, int h, int n = 1) {
    BackendRequest r;
    r.prompt = std::move(prompt);
    r.seed = seed;
    r.params.width = w;
    r.params.height = h;
    r.params.num_images = n;
    return r;
}

class SlowBackend final : public GenerationBackend {
public:
    explicit SlowBackend(std::chrono::milliseconds d, bool single = false) : delay_(d), single_(single) {}
    std::string name() const override { return "slow"; }
    BackendCapabilities capabilities() const override {
        BackendCapabilities c;
        c.single_occupancy = single_;
        return c;
    }
    std::vector<Image> invoke(const BackendRequest& r) override {
        const int now = ++in_flight;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(delay_);
        --in_flight;
        return std::vector<Image>(std::size_t(r.params.num_images), Image(r.params.width, r.params.height, 3));
    }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};

private:
    std::chrono::milliseconds delay_;
    bool single_;
};

class WrongShapeBackend final : public GenerationBackend {
public:
    std::string name() const override { return "wrong"; }
    BackendCapabilities capabilities() const override { return {}; }
    std::vector<Image> invoke(const BackendRequest&) override { return {Image(3, 3, 3)}; }
};

}  // namespace

TEST(Stub, TextToImageMatchesHashRule) {
    StubBackend stub;
    const auto out = stub.invoke(text_request("a cozy farmhouse living room", 42, 13, 7));
    ASSERT_EQ(out.size(), 1u);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 13; ++x)
            for (int c = 0; c < 3; ++c)
                ASSERT_EQ(out[0].at(x, y, c), stub_pixel("a cozy farmhouse living room", 42, x, y, c));
}

TEST(Stub, DeterministicAndSeedOffsetPerImage) {
    StubBackend stub;
    const auto a = stub.invoke(text_request("room", 7, 16, 16, 4));
    const auto b = stub.invoke(text_request("room", 7, 16, 16, 4));
    ASSERT_EQ(a.size(), 4u);
    EXPECT_EQ(a, b);
    std::set<std::string> hashes;
    for (const auto& img : a) hashes.insert(content_hash(img));
    EXPECT_EQ(hashes.size(), 4u);
    EXPECT_EQ(a[2], StubBackend::procedural("room", 9, 16, 16));
}

TEST(Stub, ConditionMix) {
    StubBackend stub;
    auto r = text_request("p", 1, 8, 8);
    GuidanceCondition cond;
    cond.kind = ConditionKind::edge;
    cond.image = Image(8, 8, 1, 255);
    r.condition = cond;
    const auto out = stub.invoke(r)[0];
    const auto raw = StubBackend::procedural("p", 1, 8, 8);
    for (std::size_t i = 0; i < out.bytes().size(); ++i) EXPECT_EQ(out.bytes()[i], (raw.bytes()[i] >> 1) + 127);
}

TEST(Stub, InpaintKeepsInitOutsideMask) {
    StubBackend stub;
    auto r = text_request("p", 3, 10, 10);
    r.init_image = testing_support::noise_image(10, 10, 5);
    Image m(10, 10, 1);
    for (int x = 2; x < 6; ++x) m.at(x, 4) = 255;
    r.mask = m;
    const auto out = stub.invoke(r)[0];
    const auto raw = StubBackend::procedural("p", 3, 10, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            for (int c = 0; c < 3; ++c)
                EXPECT_EQ(out.at(x, y, c), m.at(x, y) ? raw.at(x, y, c) : r.init_image->at(x, y, c));
}

TEST(Stub, Img2ImgStrengthMix) {
    StubBackend stub;
    auto r = text_request("p", 3, 4, 4);
    r.init_image = Image(4, 4, 3, 200);
    r.params.strength = 0.0;
    EXPECT_EQ(stub.invoke(r)[0], Image(4, 4, 3, 200));
    r.params.strength = 1.0;
    EXPECT_EQ(stub.invoke(r)[0], StubBackend::procedural("p", 3, 4, 4));
}

TEST(Request, StructuralChecks) {
    auto r = text_request("p", 1, 8, 8);
    r.mask = Image(8, 8, 1);
    EXPECT_THROW(validate_request(r), ValidationError);  // mask without init
    r.init_image = Image(8, 8, 3);
    EXPECT_NO_THROW(validate_request(r));
    r.init_image = Image(9, 8, 3);
    EXPECT_THROW(validate_request(r), ValidationError);
}

TEST(Params, Validation) {
    GenerationParams p;
    EXPECT_NO_THROW(validate_params(p, 8));
    p.num_images = 9;
    EXPECT_THROW(validate_params(p, 8), ValidationError);
    p = {};
    p.width = 0;
    EXPECT_THROW(validate_params(p, 8), ValidationError);
    p = {};
    p.strength = 1.5;
    EXPECT_THROW(validate_params(p, 8), ValidationError);
    p = {};
    p.steps = 0;
    EXPECT_THROW(validate_params(p, 8), ValidationError);
}

TEST(Capabilities, RoutingMismatch) {
    BackendCapabilities caps;
    caps.supports_condition_depth = false;
    auto r = text_request("p", 1, 8, 8);
    GuidanceCondition cond;
    cond.kind = ConditionKind::depth;
    cond.image = Image(8, 8, 1);
    r.init_image = Image(8, 8, 3);
    r.condition = cond;
    EXPECT_THROW(check_capabilities(caps, r, "x"), CapabilityError);
    caps = {};
    caps.max_resolution = 4;
    EXPECT_THROW(check_capabilities(caps, text_request("p", 1, 8, 8), "x"), CapabilityError);
    caps = {};
    caps.supports_inpaint = false;
    r = text_request("p", 1, 8, 8);
    r.init_image = Image(8, 8, 3);
    r.mask = Image(8, 8, 1);
    EXPECT_THROW(check_capabilities(caps, r, "x"), CapabilityError);
}

TEST(Registry, DefaultAndDuplicates) {
    BackendRegistry reg;
    reg.register_backend("stub", std::make_shared<StubBackend>());
    EXPECT_EQ(reg.default_name(), "stub");
    EXPECT_EQ(reg.get()->name(), "stub");
    EXPECT_THROW(reg.register_backend("stub", std::make_shared<StubBackend>()), ValidationError);
    reg.register_backend("other", std::make_shared<StubBackend>(BackendCapabilities{}, "other"));
    EXPECT_EQ(reg.default_name(), "stub");
    reg.set_default("other");
    EXPECT_EQ(reg.get()->name(), "other");
    EXPECT_THROW(reg.get("missing"), CapabilityError);
    EXPECT_THROW(reg.set_default("missing"), CapabilityError);
    const auto list = reg.list();
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[0].name, "other");
    EXPECT_TRUE(list[0].is_default);
}

TEST(Invoke, TimeoutRaisesBackendError) {
    auto slow = std::make_shared<SlowBackend>(400ms);
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_THROW(invoke_checked(slow, text_request("p", 1, 4, 4), 50ms), BackendError);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, 350ms);
    std::this_thread::sleep_for(450ms);  // let the abandoned call finish
}

TEST(Invoke, ShapeIsChecked) {
    auto wrong = std::make_shared<WrongShapeBackend>();
    EXPECT_THROW(invoke_checked(wrong, text_request("p", 1, 4, 4), 1000ms), BackendError);
    EXPECT_THROW(invoke_checked(wrong, text_request("p", 1, 3, 3, 2), 1000ms), BackendError);
}

TEST(Registry, SingleOccupancyIsSerialized) {
    BackendRegistry reg;
    auto slow = std::make_shared<SlowBackend>(30ms, true);
    reg.register_backend("gpu", slow);
    std::vector<std::thread> ts;
    for (int i = 0; i < 4; ++i)
        ts.emplace_back([&] { invoke_checked(reg.get("gpu"), text_request("p", 1, 4, 4), 5000ms); });
    for (auto& t : ts) t.join();
    EXPECT_EQ(slow->peak.load(), 1);
}
