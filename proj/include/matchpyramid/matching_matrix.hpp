#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matchpyramid/text.hpp"

namespace matchpyramid {

enum class SimilarityKind { indicator, cosine, dot, gaussian };

std::string_view to_string(SimilarityKind kind);
/// Accepts "indicator", "cosine", "dot", "gaussian" (and the short forms
/// "ind", "cos", "gau"). Throws ConfigError otherwise.
SimilarityKind parse_similarity_kind(std::string_view name);

struct SimilarityOptions {
    // Bandwidth of the gaussian kernel exp(-|a-b|^2 / sigma^2).
    double gaussian_sigma = 1.0;
};

/// Similarity of one word pair. The indicator compares the token strings;
/// the other three kinds compare the vectors. Cosine against a zero vector
/// is 0. Throws ShapeError if the vectors differ in length.
double word_similarity(SimilarityKind kind, std::string_view w, std::string_view v, std::span<const double> alpha,
                       std::span<const double> beta, const SimilarityOptions& options = {});

/// Query-length x document-length grid of word similarities, row-major.
struct MatchingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    SimilarityKind kind = SimilarityKind::indicator;
    std::vector<double> values;

    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

/// M[i][j] = word_similarity(query token i, doc token j). Both texts must be
/// encoded and non-empty; embeddings may be empty for the indicator kind.
MatchingMatrix build_matching_matrix(const TokenizedText& query, const TokenizedText& doc, SimilarityKind kind,
                                     const EmbeddingTable& embeddings, const SimilarityOptions& options = {});

/// Debug dump: header line "rows cols kind", then one tab-separated row per line.
void write_matrix_tsv(std::ostream& out, const MatchingMatrix& matrix);
MatchingMatrix read_matrix_tsv(std::istream& in, const std::string& source_name);

}  // namespace matchpyramid
