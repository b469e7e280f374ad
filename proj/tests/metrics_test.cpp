// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/metrics.hpp"
#include "vides/orchestrator.hpp"

using namespace vides;
using namespace vides::metrics;
using testing_support::TempDir;

namespace {

// Denman-Beavers iteration on the (non-symmetric) product; tr sqrt(S1 S2)
// equals tr sqrt(S1^1/2 S2 S1^1/2) since the two are similar.
double trace_sqrt_db(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
    Eigen::MatrixXd y = s1 * s2;
    Eigen::MatrixXd z = Eigen::MatrixXd::Identity(y.rows(), y.cols());
    for (int i = 0; i < 100; ++i) {
        const Eigen::MatrixXd yn = 0.5 * (y + z.inverse());
        const Eigen::MatrixXd zn = 0.5 * (z + y.inverse());
        y = yn;
        z = zn;
    }
    return y.trace();
}

Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = n(rng);
    return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
}

// Identity feature map with one layer and arbitrary channels.
class ChannelEmbedder final : public PerceptualEmbedder {
public:
    explicit ChannelEmbedder(int channels) : channels_(channels) {}
    std::string name() const override { return "channels"; }
    std::vector<FeatureMap> features(const Image& img) const override {
        FeatureMap f{channels_, img.height(), img.width(), {}};
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                for (int c = 0; c < channels_; ++c) f.data.push_back(img.at(x, y, c));
        return {f};
    }
    std::vector<std::vector<double>> layer_weights() const override {
        return {std::vector<double>(std::size_t(channels_), 1.0)};
    }

private:
    int channels_;
};

// Straight-line evaluation of the layer formula, independent of the library.
double brute_lpips(const std::vector<FeatureMap>& a, const std::vector<FeatureMap>& b,
                   const std::vector<std::vector<double>>& w) {
    double total = 0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const int C = a[l].channels, H = a[l].height, W = a[l].width;
        double layer = 0;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double na = 0, nb = 0;
                for (int c = 0; c < C; ++c) {
                    const double va = a[l].data[(std::size_t(y) * W + x) * C + c];
                    const double vb = b[l].data[(std::size_t(y) * W + x) * C + c];
                    na += va * va;
                    nb += vb * vb;
                }
                na = std::sqrt(na) + 1e-10;
                nb = std::sqrt(nb) + 1e-10;
                double s = 0;
                for (int c = 0; c < C; ++c) {
                    const double va = a[l].data[(std::size_t(y) * W + x) * C + c] / na;
                    const double vb = b[l].data[(std::size_t(y) * W + x) * C + c] / nb;
                    s += w[l][c] * (va - vb) * (va - vb);
                }
                layer += s;
            }
        total += layer / (double(H) * W);
    }
    return total;
}

std::vector<FeatureMap> random_stack(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> layers(1, 4), dim(1, 6);
    std::normal_distribution<double> n;
    std::vector<FeatureMap> out;
    const int L = layers(rng);
    for (int l = 0; l < L; ++l) {
        FeatureMap f{dim(rng), dim(rng), dim(rng), {}};
        f.data.resize(std::size_t(f.channels) * f.height * f.width);
        for (auto& v : f.data) v = n(rng);
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<FeatureMap> like(const std::vector<FeatureMap>& shape, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    auto out = shape;
    for (auto& f : out)
        for (auto& v : f.data) v = n(rng);
    return out;
}

Corpus rooms(int n, std::uint64_t seed0, int w = 64, int h = 48) {
    Corpus c{"rooms", {}};
    for (int i = 0; i < n; ++i)
        c.images.push_back({"r" + std::to_string(i), testing_support::room_scene(w, h, seed0 + i)});
    return c;
}

Orchestrator stub_orchestrator() {
    auto reg = std::make_shared<BackendRegistry>();
    reg->register_backend("stub", std::make_shared<StubBackend>());
    auto depth = std::make_shared<DepthEstimatorRegistry>();
    depth->add(std::make_shared<IntensityDepthEstimator>());
    return Orchestrator(reg, depth);
}

}  // namespace

TEST(Summary, HandComputed) {
    const std::vector<std::vector<double>> v{{0, 0}, {2, 2}};
    const auto s = summarize(v);
    EXPECT_DOUBLE_EQ(s.mean(0), 1);
    EXPECT_DOUBLE_EQ(s.mean(1), 1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(s.covariance(i, j), 2);
    EXPECT_EQ(s.n, 2u);
    const std::vector<std::vector<double>> one{{1, 2}};
    EXPECT_THROW(summarize(one), ValidationError);
}

TEST(Summary, MonteCarloMean) {
    std::mt19937_64 rng(3);
    const double mu[3] = {1.5, -2.0, 0.25}, sd[3] = {1.0, 3.0, 0.5};
    std::vector<std::normal_distribution<double>> d;
    for (int i = 0; i < 3; ++i) d.emplace_back(mu[i], sd[i]);
    std::vector<std::vector<double>> v(10000, std::vector<double>(3));
    for (auto& x : v)
        for (int i = 0; i < 3; ++i) x[i] = d[i](rng);
    const auto s = summarize(v);
    for (int i = 0; i < 3; ++i) {
        EXPECT_LE(std::abs(s.mean(i) - mu[i]), 3 * sd[i] / 100.0);
        EXPECT_NEAR(s.covariance(i, i), sd[i] * sd[i], 0.1 * sd[i] * sd[i]);
    }
}

TEST(Frechet, ScalarCases) {
    GaussianSummary a{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0), 10};
    GaussianSummary b{Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 1.0), 10};
    EXPECT_NEAR(frechet_distance(a, b), 9.0, 1e-12);
    GaussianSummary c{Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 4.0), 10};
    EXPECT_NEAR(frechet_distance(a, c), 1.0, 1e-12);
    EXPECT_NEAR(frechet_distance(a, a), 0.0, 1e-12);
}

TEST(Frechet, TraceSqrtMatchesDenmanBeavers) {
    std::mt19937_64 rng(17);
    for (int d : {1, 2, 5, 8, 16}) {
        const auto s1 = random_spd(d, rng), s2 = random_spd(d, rng);
        EXPECT_NEAR(trace_sqrt_product(s1, s2), trace_sqrt_db(s1, s2), 1e-8 * trace_sqrt_db(s1, s2)) << d;
    }
}

TEST(Frechet, SymmetricBitForBit) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        GaussianSummary a{Eigen::VectorXd::Random(6), random_spd(6, rng), 100};
        GaussianSummary b{Eigen::VectorXd::Random(6), random_spd(6, rng), 100};
        EXPECT_EQ(frechet_distance(a, b), frechet_distance(b, a));
        EXPECT_GE(frechet_distance(a, b), 0.0);
    }
}

TEST(Frechet, RejectsIndefinite) {
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 0, 0, -1;
    GaussianSummary a{Eigen::VectorXd::Zero(2), bad, 5};
    GaussianSummary b{Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 5};
    EXPECT_THROW(frechet_distance(a, b), NumericalError);
    Eigen::MatrixXd tiny(2, 2);
    tiny << 1, 0, 0, -1e-9;  // round-off sized, clipped
    GaussianSummary c{Eigen::VectorXd::Zero(2), tiny, 5};
    EXPECT_NO_THROW(frechet_distance(c, b));
}

TEST(Fid, SelfAndSymmetry) {
    const auto a = rooms(12, 100).pixels();
    const auto b = rooms(12, 300).pixels();
    PixelEmbedder emb;
    EXPECT_LE(std::abs(fid(a, a, emb).value), 1e-6);
    EXPECT_LE(std::abs(fid(a, b, emb).value - fid(b, a, emb).value), 1e-9);
    EXPECT_TRUE(fid(a, b, emb).rank_deficient);
    EXPECT_EQ(fid(a, b, emb, 3).value, fid(a, b, emb, 1).value);
}

TEST(Fid, NoiseIsFartherThanSplit) {
    PixelEmbedder emb;
    std::vector<Image> n1, n2, noise;
    for (int i = 0; i < 40; ++i) (i % 2 ? n1 : n2).push_back(testing_support::room_scene(64, 48, 1000 + i));
    for (int i = 0; i < 20; ++i) noise.push_back(testing_support::noise_image(64, 48, 50 + i));
    const double split = fid(n1, n2, emb).value;
    const double far = fid(n1, noise, emb).value;
    EXPECT_GT(far, split);
    // Regression pins (measured). Covariances are singular here, so no
    // inverse-based oracle applies.
    EXPECT_NEAR(split, 2.11231755e-4, 1e-11);
    EXPECT_NEAR(far, 2.12452427, 1e-7);
}

TEST(Fid, PixelEmbedderRange) {
    PixelEmbedder emb;
    const auto f = emb.embed(Image(32, 32, 3, 255));
    ASSERT_EQ(f.size(), 64u);
    for (double v : f) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Lpips, HandCase) {
    ChannelEmbedder emb(2);
    Image a(1, 1, 3, std::vector<std::uint8_t>{1, 0, 0});
    Image b(1, 1, 3, std::vector<std::uint8_t>{0, 1, 0});
    EXPECT_NEAR(lpips(a, b, emb), 2.0, 1e-9);
}

TEST(Lpips, ZeroForIdentical) {
    PyramidEmbedder emb;
    const Image x = testing_support::room_scene(40, 30);
    EXPECT_EQ(lpips(x, x, emb), 0.0);
    EXPECT_GT(lpips(x, testing_support::noise_image(40, 30, 1), emb), 0.0);
}

TEST(Lpips, MatchesBruteForce) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int k = 0; k < 20; ++k) {
        const auto a = random_stack(rng);
        const auto b = like(a, rng);
        std::vector<std::vector<double>> w;
        for (const auto& f : a) {
            w.emplace_back();
            for (int c = 0; c < f.channels; ++c) w.back().push_back(u(rng));
        }
        EXPECT_NEAR(lpips_features(a, b, w), brute_lpips(a, b, w), 1e-10);
    }
}

TEST(Lpips, ShapeErrors) {
    PyramidEmbedder emb;
    EXPECT_THROW(lpips(Image(8, 8, 3), Image(8, 9, 3), emb), ValidationError);
    std::mt19937_64 rng(1);
    const auto a = random_stack(rng);
    EXPECT_THROW(lpips_features(a, a, {}), ValidationError);
}

TEST(Lpips, WeightsFile) {
    TempDir dir("w");
    const std::string text = R"({"layers": [[1, 2], [3]]})";
    write_file_atomic(dir / "w.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    const auto w = load_layer_weights(dir / "w.json");
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0][1], 2.0);
    const std::string bad = R"({"weights": 1})";
    write_file_atomic(dir / "b.json", std::span(reinterpret_cast<const std::uint8_t*>(bad.data()), bad.size()));
    EXPECT_THROW(load_layer_weights(dir / "b.json"), ValidationError);
}

TEST(Inpaint, IdentityPipelineIsZero) {
    const std::vector<Corpus> corpora{rooms(5, 1)};
    PyramidEmbedder emb;
    const auto r = inpaint_eval(corpora, identity_pipeline(), emb, {});
    ASSERT_EQ(r.rows, std::vector<std::string>{"rooms"});
    ASSERT_EQ(r.columns, (std::vector<std::string>{"Image Gradient", "Depth Map"}));
    EXPECT_EQ(*r.values[0][0], 0.0);
    EXPECT_EQ(*r.values[0][1], 0.0);
}

TEST(Inpaint, StubPipelineReproducible) {
    const auto orch = stub_orchestrator();
    std::vector<Corpus> corpora{rooms(4, 1)};
    corpora.push_back(rooms(4, 50));
    corpora[1].name = "other";
    PyramidEmbedder emb;
    const auto a = inpaint_eval(corpora, orchestrator_pipeline(orch), emb, {});
    const auto b = inpaint_eval(corpora, orchestrator_pipeline(orch), emb, {});
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_GT(*a.values[0][0], 0.0);
    EXPECT_NE(*a.values[0][0], *a.values[0][1]);
    EXPECT_EQ(a.rows.size(), 2u);
    EXPECT_TRUE(a.errors.empty());
}

TEST(Inpaint, PipelineErrorsAreRecorded) {
    std::vector<Corpus> corpora{rooms(3, 1)};
    PyramidEmbedder emb;
    int calls = 0;
    InpaintPipeline flaky = [&](const Image& src, const MaskSpec&, ConditionKind, std::uint64_t) {
        if (calls++ == 0) throw BackendError("boom");
        return src;
    };
    InpaintEvalConfig cfg;
    cfg.conditions = {ConditionKind::edge};
    const auto r = inpaint_eval(corpora, flaky, emb, cfg);
    EXPECT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(*r.values[0][0], 0.0);
}

TEST(Report, FidMatrix) {
    std::vector<Corpus> cs{rooms(6, 1), rooms(6, 40)};
    cs[0].name = "A";
    cs[1].name = "B";
    PixelEmbedder emb;
    const auto r = fid_report(cs, cs, emb);
    EXPECT_FALSE(r.values[0][0]);
    EXPECT_FALSE(r.values[1][1]);
    EXPECT_EQ(*r.values[0][1], *r.values[1][0]);
    EXPECT_TRUE(r.config["symmetric"].get<bool>());
    const auto text = r.to_text();
    EXPECT_NE(text.find(" - "), std::string::npos);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *r.values[0][1]);
    EXPECT_NE(text.find(buf), std::string::npos);
}

TEST(Report, TextLayout) {
    MetricReport r;
    r.metric = Metric::lpips;
    r.rows = {"Ours", "SD-1.5"};
    r.columns = {"Image Gradient", "Depth Map"};
    r.values = {{0.1234, 0.5}, {std::nullopt, 1.0}};
    EXPECT_EQ(r.to_text(),
              "        Image Gradient  Depth Map\n"
              "Ours             0.123      0.500\n"
              "SD-1.5               -      1.000\n");
}

TEST(Corpus, LoadsSortedImages) {
    TempDir dir("corpus");
    save_png(dir / "b.png", Image(8, 8, 3, 1));
    save_png(dir / "a.png", Image(8, 8, 3, 2));
    write_file_atomic(dir / "notes.txt", std::vector<std::uint8_t>{'x'});
    const auto c = load_corpus(dir.path(), "set");
    ASSERT_EQ(c.images.size(), 2u);
    EXPECT_EQ(c.images[0].id, "a.png");
    EXPECT_EQ(c.images[0].image.at(0, 0), 2);
    EXPECT_THROW(load_corpus(dir / "missing"), NotFoundError);
}
