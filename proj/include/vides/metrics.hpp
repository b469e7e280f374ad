// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vides/guidance.hpp"
#include "vides/image.hpp"
#include "vides/mask.hpp"
#include "vides/serialization.hpp"

namespace vides {
class Orchestrator;
}

namespace vides::metrics {

/// Image -> fixed-length feature vector. embed() must be deterministic and
/// thread-safe.
class FeatureEmbedder {
public:
    virtual ~FeatureEmbedder() = default;
    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual std::vector<double> embed(const Image& image) const = 0;
};

/// Reference embedder for tests and CI: area-downsample the luma to 8x8 and
/// flatten to 64 values in [0, 1]. Numbers produced with it are only
/// comparable to other "pixel8" numbers.
class PixelEmbedder final : public FeatureEmbedder {
public:
    std::string name() const override { return "pixel8"; }
    int dim() const override { return 64; }
    std::vector<double> embed(const Image& image) const override;
};

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::size_t n = 0;
};

/// Sample mean and unbiased (n - 1) covariance.
GaussianSummary summarize(std::span<const std::vector<double>> features);

/// Squared Frechet distance ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2).
/// Eigenvalues down to -1e-6 * max|eigenvalue| are clipped to zero; anything
/// more negative raises NumericalError. Argument order is canonicalized so the
/// result is bit-for-bit symmetric.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

/// Trace of the PSD square root of S1^1/2 S2 S1^1/2 (exposed for tests).
double trace_sqrt_product(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2);

struct FidResult {
    double value = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    std::string embedder;
    bool rank_deficient = false;  ///< fewer than dim + 1 images in a corpus
};

std::vector<std::vector<double>> embed_all(std::span<const Image> images,
                                           const FeatureEmbedder& embedder, int workers = 1);

FidResult fid(std::span<const Image> corpus_a, std::span<const Image> corpus_b,
              const FeatureEmbedder& embedder, int workers = 1);

/// FID on already-embedded corpora.
double fid_features(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b);

/// Dense feature map, stored location-major: data[(y * width + x) * channels + c].
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;
};

/// Multi-layer feature extractor with per-layer channel weights, as used by
/// LPIPS.
class PerceptualEmbedder {
public:
    virtual ~PerceptualEmbedder() = default;
    virtual std::string name() const = 0;
    virtual std::vector<FeatureMap> features(const Image& image) const = 0;
    /// One weight vector per layer, sized to that layer's channel count.
    virtual std::vector<std::vector<double>> layer_weights() const = 0;
};

/// CI stand-in: at 1x, 1/2x and 1/4x scale, channels are centred RGB plus the
/// central-difference luma gradient (5 channels); unit weights.
class PyramidEmbedder final : public PerceptualEmbedder {
public:
    std::string name() const override { return "pyramid"; }
    std::vector<FeatureMap> features(const Image& image) const override;
    std::vector<std::vector<double>> layer_weights() const override;
};

/// Replaces the weights of another embedder (e.g. loaded from JSON
/// {"layers": [[w...], ...]}).
class ReweightedEmbedder final : public PerceptualEmbedder {
public:
    ReweightedEmbedder(std::shared_ptr<const PerceptualEmbedder> inner,
                       std::vector<std::vector<double>> weights)
        : inner_(std::move(inner)), weights_(std::move(weights)) {}
    std::string name() const override { return inner_->name() + "+weights"; }
    std::vector<FeatureMap> features(const Image& image) const override {
        return inner_->features(image);
    }
    std::vector<std::vector<double>> layer_weights() const override { return weights_; }

private:
    std::shared_ptr<const PerceptualEmbedder> inner_;
    std::vector<std::vector<double>> weights_;
};

std::vector<std::vector<double>> load_layer_weights(const std::filesystem::path& path);

/// Per layer: unit-normalize each location's channel vector (x / (|x| + 1e-10)),
/// weight the squared difference per channel, average over locations; sum
/// over layers.
double lpips(const Image& a, const Image& b, const PerceptualEmbedder& embedder);

/// Feature-level LPIPS, shared by lpips().
double lpips_features(const std::vector<FeatureMap>& a, const std::vector<FeatureMap>& b,
                      const std::vector<std::vector<double>>& weights);

struct NamedImage {
    std::string id;
    Image image;
};

struct Corpus {
    std::string name;
    std::vector<NamedImage> images;
    std::vector<Image> pixels() const;
};

/// Every .png/.jpg/.jpeg file of a directory, sorted by filename.
Corpus load_corpus(const std::filesystem::path& dir, std::string name = {});

/// Returns the inpainted version of `source` for one region mask.
using InpaintPipeline =
    std::function<Image(const Image& source, const MaskSpec& mask, ConditionKind kind, std::uint64_t seed)>;

InpaintPipeline identity_pipeline();
/// Object removal through the orchestrator (empty prompt, given condition).
InpaintPipeline orchestrator_pipeline(const Orchestrator& orchestrator, std::string backend = {});

enum class Metric { fid, lpips };

/// Table-shaped result. Missing cells (e.g. an FID diagonal) are nullopt.
struct MetricReport {
    Metric metric = Metric::fid;
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> values;
    Json config = Json::object();
    std::vector<std::string> errors;

    Json to_json() const;
    /// Aligned columns; FID cells use 2 decimals, LPIPS 3.
    std::string to_text() const;
};

struct InpaintEvalConfig {
    double min_fraction = 0.25;
    double max_fraction = 0.64;
    std::uint64_t base_seed = 1;
    std::vector<ConditionKind> conditions{ConditionKind::edge, ConditionKind::depth};
};

std::string condition_column(ConditionKind kind);

/// For each image i: mask = random_region_mask(seed = base_seed + i), run the
/// pipeline for every condition with the same mask and seed, score
/// lpips(original, result). Cells hold corpus means; pipeline errors are
/// recorded and skipped.
MetricReport inpaint_eval(std::span<const Corpus> corpora, const InpaintPipeline& pipeline,
                          const PerceptualEmbedder& embedder, const InpaintEvalConfig& config);

/// FID for every (row, column) pair; cells where the names match stay empty.
MetricReport fid_report(std::span<const Corpus> rows, std::span<const Corpus> columns,
                        const FeatureEmbedder& embedder, int workers = 1);

}  // namespace vides::metrics
