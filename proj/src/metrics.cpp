// Copyright (C) 2026 The vides Authors
// SPDX-License-Identifier: Apache-2.0

#include "vides/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "vides/codec.hpp"
#include "vides/error.hpp"
#include "vides/orchestrator.hpp"

namespace vides::metrics {

std::vector<double> PixelEmbedder::embed(const Image& image) const {
    const Image small = resize_area(to_gray(image), 8, 8);
    std::vector<double> out(64);
    for (std::size_t i = 0; i < 64; ++i) out[i] = small.data()[i] / 255.0;
    return out;
}

GaussianSummary summarize(std::span<const std::vector<double>> features) {
    if (features.size() < 2) throw ValidationError("need at least 2 feature vectors", "features");
    const std::size_t dim = features.front().size();
    if (dim == 0) throw ValidationError("feature vectors are empty", "features");
    for (const auto& f : features)
        if (f.size() != dim) throw ValidationError("feature vectors have inconsistent lengths", "features");

    const auto n = static_cast<Eigen::Index>(features.size());
    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < d; ++k) x(i, k) = features[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];

    GaussianSummary s;
    s.n = features.size();
    s.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
    s.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
    return s;
}

namespace {

constexpr double kEigenClip = 1e-6;

/// Eigenvalues of a symmetric matrix with small negatives clipped.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& m, Eigen::VectorXd& values,
                                                         const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) throw NumericalError(std::string("eigendecomposition of ") + what + " failed");
    values = solver.eigenvalues();
    const double scale = values.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < 0.0) {
            if (values(i) < -kEigenClip * scale)
                throw NumericalError(std::string(what) + " is not positive semi-definite (eigenvalue " +
                                     std::to_string(values(i)) + ")");
            values(i) = 0.0;
        }
    }
    return solver;
}

bool lexicographic_less(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.n != b.n) return a.n < b.n;
    for (Eigen::Index i = 0; i < a.mean.size(); ++i)
        if (a.mean(i) != b.mean(i)) return a.mean(i) < b.mean(i);
    for (Eigen::Index i = 0; i < a.covariance.size(); ++i)
        if (a.covariance.data()[i] != b.covariance.data()[i])
            return a.covariance.data()[i] < b.covariance.data()[i];
    return false;
}

}  // namespace

double trace_sqrt_product(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
    Eigen::VectorXd values;
    const auto solver = psd_eigen(s1, values, "first covariance");
    const Eigen::MatrixXd root =
        solver.eigenvectors() * values.cwiseSqrt().asDiagonal() * solver.eigenvectors().transpose();
    Eigen::MatrixXd product = root * s2 * root;
    product = 0.5 * (product + product.transpose()).eval();
    Eigen::VectorXd pvalues;
    psd_eigen(product, pvalues, "covariance product");
    return pvalues.cwiseSqrt().sum();
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows())
        throw ValidationError("summaries have different dimensionality", "summary");
    const GaussianSummary& first = lexicographic_less(b, a) ? b : a;
    const GaussianSummary& second = &first == &a ? b : a;
    const double mean_term = (a.mean - b.mean).squaredNorm();
    const double trace_term = a.covariance.trace() + b.covariance.trace();
    const double cross = trace_sqrt_product(first.covariance, second.covariance);
    return std::max(0.0, mean_term + trace_term - 2.0 * cross);
}

std::vector<std::vector<double>> embed_all(std::span<const Image> images,
                                           const FeatureEmbedder& embedder, int workers) {
    std::vector<std::vector<double>> out(images.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < images.size();) {
            out[i] = embedder.embed(images[i]);
            if (out[i].size() != static_cast<std::size_t>(embedder.dim()))
                throw BackendError("embedder '" + embedder.name() + "' returned a vector of the wrong size");
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, images.size())));
    if (n == 1) {
        work();
        return out;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < n; ++t)
            threads.emplace_back([&, t] {
                try {
                    work();
                } catch (...) {
                    errors[static_cast<std::size_t>(t)] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

double fid_features(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) {
    return frechet_distance(summarize(a), summarize(b));
}

FidResult fid(std::span<const Image> corpus_a, std::span<const Image> corpus_b,
              const FeatureEmbedder& embedder, int workers) {
    if (corpus_a.empty() || corpus_b.empty()) throw ValidationError("FID needs non-empty corpora", "corpus");
    FidResult r;
    r.n_a = corpus_a.size();
    r.n_b = corpus_b.size();
    r.embedder = embedder.name();
    const auto dim = static_cast<std::size_t>(embedder.dim());
    r.rank_deficient = r.n_a < dim + 1 || r.n_b < dim + 1;
    const auto fa = embed_all(corpus_a, embedder, workers);
    const auto fb = embed_all(corpus_b, embedder, workers);
    r.value = fid_features(fa, fb);
    return r;
}

namespace {

double centred(std::uint8_t v) { return v / 127.5 - 1.0; }

FeatureMap pyramid_level(const Image& rgb) {
    const Image gray = to_gray(rgb);
    const int w = rgb.width(), h = rgb.height();
    FeatureMap m{5, h, w, std::vector<double>(static_cast<std::size_t>(w) * h * 5)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double* f = &m.data[(static_cast<std::size_t>(y) * w + x) * 5];
            for (int c = 0; c < 3; ++c) f[c] = centred(rgb.at(x, y, c));
            const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
            const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
            f[3] = (gray.at(xr, y) - gray.at(xl, y)) / 255.0;
            f[4] = (gray.at(x, yd) - gray.at(x, yu)) / 255.0;
        }
    return m;
}

}  // namespace

std::vector<FeatureMap> PyramidEmbedder::features(const Image& image) const {
    const Image rgb = to_rgb(image);
    std::vector<FeatureMap> out;
    for (int scale : {1, 2, 4}) {
        const int w = std::max(1, rgb.width() / scale), h = std::max(1, rgb.height() / scale);
        out.push_back(pyramid_level(scale == 1 ? rgb : resize_area(rgb, w, h)));
    }
    return out;
}

std::vector<std::vector<double>> PyramidEmbedder::layer_weights() const {
    return std::vector<std::vector<double>>(3, std::vector<double>(5, 1.0));
}

std::vector<std::vector<double>> load_layer_weights(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    const Json j = parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                              path.string());
    try {
        return j.at("layers").get<std::vector<std::vector<double>>>();
    } catch (const Json::exception& e) {
        throw ValidationError("weights file " + path.string() + " needs {\"layers\": [[...]]}: " + e.what(),
                              "weights");
    }
}

double lpips_features(const std::vector<FeatureMap>& a, const std::vector<FeatureMap>& b,
                      const std::vector<std::vector<double>>& weights) {
    if (a.size() != b.size()) throw ValidationError("feature stacks have different depths", "features");
    if (weights.size() != a.size())
        throw ValidationError("perceptual embedder is missing layer weights", "weights");
    constexpr double kEps = 1e-10;
    double total = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        const FeatureMap& fa = a[l];
        const FeatureMap& fb = b[l];
        if (fa.channels != fb.channels || fa.width != fb.width || fa.height != fb.height)
            throw ValidationError("feature maps differ in shape at layer " + std::to_string(l), "features");
        if (weights[l].size() != static_cast<std::size_t>(fa.channels))
            throw ValidationError("layer " + std::to_string(l) + " weights do not match its channels", "weights");
        const std::size_t locations = static_cast<std::size_t>(fa.width) * fa.height;
        const auto ch = static_cast<std::size_t>(fa.channels);
        double layer = 0.0;
        for (std::size_t p = 0; p < locations; ++p) {
            const double* va = &fa.data[p * ch];
            const double* vb = &fb.data[p * ch];
            double na = 0.0, nb = 0.0;
            for (std::size_t c = 0; c < ch; ++c) {
                na += va[c] * va[c];
                nb += vb[c] * vb[c];
            }
            na = std::sqrt(na) + kEps;
            nb = std::sqrt(nb) + kEps;
            double s = 0.0;
            for (std::size_t c = 0; c < ch; ++c) {
                const double d = va[c] / na - vb[c] / nb;
                s += weights[l][c] * d * d;
            }
            layer += s;
        }
        total += layer / static_cast<double>(locations);
    }
    return total;
}

double lpips(const Image& a, const Image& b, const PerceptualEmbedder& embedder) {
    if (!a.same_size(b)) throw ValidationError("LPIPS needs images of equal size", "image");
    return lpips_features(embedder.features(a), embedder.features(b), embedder.layer_weights());
}

std::vector<Image> Corpus::pixels() const {
    std::vector<Image> out;
    out.reserve(images.size());
    for (const auto& n : images) out.push_back(n.image);
    return out;
}

Corpus load_corpus(const std::filesystem::path& dir, std::string name) {
    if (!std::filesystem::is_directory(dir))
        throw NotFoundError("corpus directory " + dir.string() + " does not exist");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    Corpus c;
    c.name = name.empty() ? dir.filename().string() : std::move(name);
    if (c.name.empty()) c.name = dir.parent_path().filename().string();
    for (const auto& f : files) c.images.push_back({f.filename().string(), load_image(f)});
    return c;
}

InpaintPipeline identity_pipeline() {
    return [](const Image& source, const MaskSpec&, ConditionKind, std::uint64_t) { return to_rgb(source); };
}

InpaintPipeline orchestrator_pipeline(const Orchestrator& orchestrator, std::string backend) {
    return [&orchestrator, backend](const Image& source, const MaskSpec& mask, ConditionKind kind,
                                    std::uint64_t seed) {
        GenerationParams params;
        params.width = source.width();
        params.height = source.height();
        params.num_images = 1;
        return orchestrator.edit_object(source, mask, "", kind, params, seed, backend).images.front();
    };
}

Json MetricReport::to_json() const {
    Json cells = Json::array();
    for (const auto& row : values) {
        Json r = Json::array();
        for (const auto& v : row) r.push_back(v ? Json(*v) : Json(nullptr));
        cells.push_back(std::move(r));
    }
    return Json{{"metric", metric == Metric::fid ? "fid" : "lpips"},
                {"rows", rows},
                {"columns", columns},
                {"values", cells},
                {"config", config},
                {"errors", errors}};
}

std::string MetricReport::to_text() const {
    const int decimals = metric == Metric::fid ? 2 : 3;
    auto cell = [&](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
        return std::string(buf);
    };
    std::size_t label_width = 0;
    for (const auto& r : rows) label_width = std::max(label_width, r.size());
    std::vector<std::size_t> widths(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        widths[c] = columns[c].size();
        for (const auto& row : values)
            if (c < row.size()) widths[c] = std::max(widths[c], cell(row[c]).size());
    }
    std::ostringstream os;
    os << std::string(label_width, ' ');
    for (std::size_t c = 0; c < columns.size(); ++c)
        os << "  " << std::string(widths[c] - columns[c].size(), ' ') << columns[c];
    os << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << rows[r] << std::string(label_width - rows[r].size(), ' ');
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto text = c < values[r].size() ? cell(values[r][c]) : std::string("-");
            os << "  " << std::string(widths[c] - text.size(), ' ') << text;
        }
        os << '\n';
    }
    return os.str();
}

std::string condition_column(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::edge: return "Image Gradient";
        case ConditionKind::depth: return "Depth Map";
        case ConditionKind::none: return "No Guidance";
    }
    return "No Guidance";
}

MetricReport inpaint_eval(std::span<const Corpus> corpora, const InpaintPipeline& pipeline,
                          const PerceptualEmbedder& embedder, const InpaintEvalConfig& config) {
    if (corpora.empty()) throw ValidationError("inpaint_eval needs at least one corpus", "corpus");
    if (config.conditions.empty()) throw ValidationError("no conditions selected", "conditions");
    MetricReport report;
    report.metric = Metric::lpips;
    for (auto k : config.conditions) report.columns.push_back(condition_column(k));
    Json counts = Json::object();
    for (const auto& corpus : corpora) {
        if (corpus.images.empty()) throw ValidationError("corpus '" + corpus.name + "' is empty", "corpus");
        report.rows.push_back(corpus.name);
        std::vector<double> sums(config.conditions.size(), 0.0);
        std::vector<std::size_t> n(config.conditions.size(), 0);
        for (std::size_t i = 0; i < corpus.images.size(); ++i) {
            const Image& original = corpus.images[i].image;
            const std::uint64_t seed = config.base_seed + i;
            const MaskSpec mask = random_region_mask(original.width(), original.height(),
                                                     config.min_fraction, config.max_fraction, seed);
            for (std::size_t k = 0; k < config.conditions.size(); ++k) {
                try {
                    const Image result = pipeline(original, mask, config.conditions[k], seed);
                    sums[k] += lpips(to_rgb(original), to_rgb(result), embedder);
                    ++n[k];
                } catch (const std::exception& e) {
                    report.errors.push_back(corpus.name + "/" + corpus.images[i].id + " [" +
                                            std::string(to_string(config.conditions[k])) + "]: " + e.what());
                }
            }
        }
        std::vector<std::optional<double>> row;
        Json row_counts = Json::array();
        for (std::size_t k = 0; k < sums.size(); ++k) {
            row.push_back(n[k] ? std::optional<double>(sums[k] / static_cast<double>(n[k])) : std::nullopt);
            row_counts.push_back(n[k]);
        }
        report.values.push_back(std::move(row));
        counts[corpus.name] = row_counts;
    }
    report.config = Json{{"embedder", embedder.name()},
                         {"min_fraction", config.min_fraction},
                         {"max_fraction", config.max_fraction},
                         {"base_seed", config.base_seed},
                         {"mask_shape", "axis-aligned rectangle"},
                         {"images_scored", counts}};
    return report;
}

MetricReport fid_report(std::span<const Corpus> rows, std::span<const Corpus> columns,
                        const FeatureEmbedder& embedder, int workers) {
    MetricReport report;
    report.metric = Metric::fid;
    std::vector<std::vector<std::vector<double>>> row_features, col_features;
    for (const auto& c : rows) {
        report.rows.push_back(c.name);
        row_features.push_back(embed_all(c.pixels(), embedder, workers));
    }
    for (const auto& c : columns) {
        report.columns.push_back(c.name);
        col_features.push_back(embed_all(c.pixels(), embedder, workers));
    }
    bool symmetric = true;
    Json sizes = Json::object();
    for (std::size_t r = 0; r < rows.size(); ++r) {
        sizes[rows[r].name] = rows[r].images.size();
        std::vector<std::optional<double>> line;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            sizes[columns[c].name] = columns[c].images.size();
            if (rows[r].name == columns[c].name) {
                line.emplace_back();
                continue;
            }
            const double ab = fid_features(row_features[r], col_features[c]);
            const double ba = fid_features(col_features[c], row_features[r]);
            symmetric = symmetric && std::abs(ab - ba) <= 1e-9;
            line.emplace_back(ab);
        }
        report.values.push_back(std::move(line));
    }
    report.config = Json{{"embedder", embedder.name()},
                         {"embedder_dim", embedder.dim()},
                         {"corpus_sizes", sizes},
                         {"preprocessing", embedder.name() == "pixel8" ? "luma, area-downsample to 8x8, scale to [0,1]" : "embedder-defined"},
                         {"symmetric", symmetric}};
    return report;
}

}  // namespace vides::metrics
