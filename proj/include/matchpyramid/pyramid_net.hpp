#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matchpyramid/matching_matrix.hpp"
#include "matchpyramid/text.hpp"

namespace matchpyramid {

/// Architecture hyperparameters. Pool sizes name the fixed OUTPUT grid of
/// the dynamic pooling layer (query cells x document cells).
struct PyramidConfig {
    std::size_t kernel_rows = 1;
    std::size_t kernel_cols = 3;
    std::size_t feature_maps = 8;
    std::size_t pool_rows = 3;
    std::size_t pool_cols = 10;
    std::size_t hidden_units = 128;
    SimilarityKind similarity = SimilarityKind::gaussian;
    double gaussian_sigma = 1.0;
    std::size_t query_max_len = 5;
    std::size_t doc_max_len = 500;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    std::size_t pooled_size() const noexcept { return feature_maps * pool_rows * pool_cols; }
    SimilarityOptions similarity_options() const { return {gaussian_sigma}; }
};

/// Every learnable parameter, grouped in named blocks. The same layout is
/// reused for gradients and for Adam moment accumulators.
///
/// Layouts:
///   conv_kernels  [map][kernel_row][kernel_col]
///   conv_bias     [map]
///   fc1_weights   [input][hidden], input index = map-major, then row-major
///   fc1_bias      [hidden]
///   fc2_weights   [hidden]
///   fc2_bias      [1]
struct Parameters {
    std::vector<double> conv_kernels;
    std::vector<double> conv_bias;
    std::vector<double> fc1_weights;
    std::vector<double> fc1_bias;
    std::vector<double> fc2_weights;
    std::vector<double> fc2_bias;

    static Parameters zeros(const PyramidConfig& config);

    template <typename Fn>
    void for_each_block(Fn&& fn) {
        fn(std::string_view("conv_kernels"), conv_kernels);
        fn(std::string_view("conv_bias"), conv_bias);
        fn(std::string_view("fc1_weights"), fc1_weights);
        fn(std::string_view("fc1_bias"), fc1_bias);
        fn(std::string_view("fc2_weights"), fc2_weights);
        fn(std::string_view("fc2_bias"), fc2_bias);
    }
    template <typename Fn>
    void for_each_block(Fn&& fn) const {
        fn(std::string_view("conv_kernels"), conv_kernels);
        fn(std::string_view("conv_bias"), conv_bias);
        fn(std::string_view("fc1_weights"), fc1_weights);
        fn(std::string_view("fc1_bias"), fc1_bias);
        fn(std::string_view("fc2_weights"), fc2_weights);
        fn(std::string_view("fc2_bias"), fc2_bias);
    }

    std::size_t count() const;
    bool same_shape(const Parameters& other) const;
    bool all_finite() const;
    bool operator==(const Parameters&) const = default;
};

using Gradients = Parameters;

struct PyramidModel {
    PyramidConfig config;
    Parameters params;

    /// Zero biases; weights uniform in +-sqrt(6 / (fan_in + fan_out)).
    static PyramidModel initialize(const PyramidConfig& config, std::uint64_t seed);

    /// Throws ShapeError if a parameter block does not match the config.
    void check_shapes() const;

    bool operator==(const PyramidModel& other) const { return params == other.params && same_config(other); }
    bool same_config(const PyramidModel& other) const;
};

/// num_maps grids of rows x cols, stored [map][row][col].
struct FeatureMaps {
    std::size_t maps = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    FeatureMaps() = default;
    FeatureMaps(std::size_t m, std::size_t r, std::size_t c) : maps(m), rows(r), cols(c), values(m * r * c, 0.0) {}

    double at(std::size_t f, std::size_t i, std::size_t j) const { return values[(f * rows + i) * cols + j]; }
    double& at(std::size_t f, std::size_t i, std::size_t j) { return values[(f * rows + i) * cols + j]; }
};

struct GridCoord {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GridCoord&) const = default;
};

/// Output of dynamic max pooling. `argmax` holds one coordinate per output
/// cell in the (possibly zero-padded) input; coordinates at or beyond the
/// unpadded extent point into padding.
struct PooledMaps {
    FeatureMaps values;
    std::vector<GridCoord> argmax;
    std::size_t padded_rows = 0;
    std::size_t padded_cols = 0;
};

/// Region boundaries for dynamic pooling of `length` input cells into
/// `cells` output cells: b_i = floor(i * L / cells) with L = max(length, cells).
std::vector<std::size_t> pool_boundaries(std::size_t length, std::size_t cells);

/// "Same" zero-padded cross-correlation. Window rows span
/// [i - (kr-1)/2, i + kr/2], likewise columns.
FeatureMaps conv2d_forward(const MatchingMatrix& matrix, const PyramidModel& model);

FeatureMaps relu(const FeatureMaps& maps);

/// Ties resolve to the first maximum in row-major order.
PooledMaps dynamic_max_pool(const FeatureMaps& maps, std::size_t pool_rows, std::size_t pool_cols);

struct MlpTrace {
    std::vector<double> hidden_pre;
    std::vector<double> hidden_post;
    double score = 0.0;
};

/// score = fc2 . relu(fc1^T x + b1) + b2.
MlpTrace mlp_forward(std::span<const double> pooled, const PyramidModel& model);

/// Every intermediate of one forward pass, as needed by backpropagation.
struct ForwardTrace {
    MatchingMatrix matrix;
    FeatureMaps conv_pre;
    FeatureMaps conv_post;
    PooledMaps pooled;
    std::vector<double> hidden_pre;
    std::vector<double> hidden_post;
    double score = 0.0;
};

ForwardTrace forward_matrix(MatchingMatrix matrix, const PyramidModel& model);
ForwardTrace forward(const TokenizedText& query, const TokenizedText& doc, const PyramidModel& model,
                     const EmbeddingTable& embeddings);

/// Score only; same arithmetic as forward().
double score(const TokenizedText& query, const TokenizedText& doc, const PyramidModel& model,
             const EmbeddingTable& embeddings);

/// Free-form string metadata stored next to the model (tokenizer settings etc.).
using ModelMetadata = std::map<std::string, std::string>;

/// Text checkpoint tagged "matchpyramid-model v1". Every real is written as a
/// C99 hex float so a save/load round trip is value-exact.
void save_model(std::ostream& out, const PyramidModel& model, const ModelMetadata& metadata = {});
void save_model(const std::string& path, const PyramidModel& model, const ModelMetadata& metadata = {});
PyramidModel load_model(std::istream& in, const std::string& source_name, ModelMetadata* metadata = nullptr);
PyramidModel load_model(const std::string& path, ModelMetadata* metadata = nullptr);

}  // namespace matchpyramid
