#include "matchpyramid/matching_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "matchpyramid/error.hpp"

namespace matchpyramid {

std::string_view to_string(SimilarityKind kind) {
    switch (kind) {
        case SimilarityKind::indicator:
            return "indicator";
        case SimilarityKind::cosine:
            return "cosine";
        case SimilarityKind::dot:
            return "dot";
        case SimilarityKind::gaussian:
            return "gaussian";
    }
    return "unknown";
}

SimilarityKind parse_similarity_kind(std::string_view name) {
    if (name == "indicator" || name == "ind") {
        return SimilarityKind::indicator;
    }
    if (name == "cosine" || name == "cos") {
        return SimilarityKind::cosine;
    }
    if (name == "dot") {
        return SimilarityKind::dot;
    }
    if (name == "gaussian" || name == "gau") {
        return SimilarityKind::gaussian;
    }
    throw ConfigError("unknown similarity kind '" + std::string(name) +
                      "' (expected indicator, cosine, dot or gaussian)");
}

double word_similarity(SimilarityKind kind, std::string_view w, std::string_view v, std::span<const double> alpha,
                       std::span<const double> beta, const SimilarityOptions& options) {
    if (alpha.size() != beta.size()) {
        throw ShapeError("word_similarity: vector dimensions differ (" + std::to_string(alpha.size()) + " vs " +
                         std::to_string(beta.size()) + ")");
    }
    switch (kind) {
        case SimilarityKind::indicator:
            return w == v ? 1.0 : 0.0;
        case SimilarityKind::dot: {
            double dot = 0.0;
            for (std::size_t k = 0; k < alpha.size(); ++k) {
                dot += alpha[k] * beta[k];
            }
            return dot;
        }
        case SimilarityKind::cosine: {
            double dot = 0.0;
            double na = 0.0;
            double nb = 0.0;
            for (std::size_t k = 0; k < alpha.size(); ++k) {
                dot += alpha[k] * beta[k];
                na += alpha[k] * alpha[k];
                nb += beta[k] * beta[k];
            }
            if (na == 0.0 || nb == 0.0) {
                return 0.0;
            }
            // Rounding can push |cos| a hair past 1 for parallel vectors.
            return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
        }
        case SimilarityKind::gaussian: {
            double dist2 = 0.0;
            for (std::size_t k = 0; k < alpha.size(); ++k) {
                const double d = alpha[k] - beta[k];
                dist2 += d * d;
            }
            return std::exp(-dist2 / (options.gaussian_sigma * options.gaussian_sigma));
        }
    }
    throw Error("word_similarity: invalid kind");
}

MatchingMatrix build_matching_matrix(const TokenizedText& query, const TokenizedText& doc, SimilarityKind kind,
                                     const EmbeddingTable& embeddings, const SimilarityOptions& options) {
    if (query.empty() || doc.empty()) {
        throw ShapeError("build_matching_matrix: empty " + std::string(query.empty() ? "query" : "document"));
    }
    const bool needs_vectors = kind != SimilarityKind::indicator;
    if (needs_vectors && (!query.encoded() || !doc.encoded())) {
        throw ShapeError("build_matching_matrix: texts must be encoded before embedding lookup");
    }
    if (needs_vectors && embeddings.dim() == 0) {
        throw ShapeError("build_matching_matrix: similarity '" + std::string(to_string(kind)) +
                         "' needs word embeddings");
    }

    MatchingMatrix m;
    m.rows = query.size();
    m.cols = doc.size();
    m.kind = kind;
    m.values.resize(m.rows * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const auto alpha = needs_vectors ? embeddings.vector(query.ids[i]) : std::span<const double>{};
        for (std::size_t j = 0; j < m.cols; ++j) {
            const auto beta = needs_vectors ? embeddings.vector(doc.ids[j]) : std::span<const double>{};
            m.at(i, j) = word_similarity(kind, query.tokens[i], doc.tokens[j], alpha, beta, options);
        }
    }
    return m;
}

void write_matrix_tsv(std::ostream& out, const MatchingMatrix& matrix) {
    out << matrix.rows << ' ' << matrix.cols << ' ' << to_string(matrix.kind) << '\n';
    out << std::setprecision(17);
    for (std::size_t i = 0; i < matrix.rows; ++i) {
        for (std::size_t j = 0; j < matrix.cols; ++j) {
            if (j > 0) {
                out << '\t';
            }
            out << matrix.at(i, j);
        }
        out << '\n';
    }
}

MatchingMatrix read_matrix_tsv(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source_name, 1, "missing 'rows cols kind' header");
    }
    MatchingMatrix m;
    std::string kind;
    {
        std::istringstream header(line);
        if (!(header >> m.rows >> m.cols >> kind) || m.rows == 0 || m.cols == 0) {
            throw ParseError(source_name, 1, "expected header 'rows cols kind'");
        }
    }
    m.kind = parse_similarity_kind(kind);
    m.values.reserve(m.rows * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (!std::getline(in, line)) {
            throw ParseError(source_name, i + 2, "expected " + std::to_string(m.rows) + " rows");
        }
        std::istringstream row(line);
        double value = 0.0;
        std::size_t count = 0;
        while (row >> value) {
            m.values.push_back(value);
            ++count;
        }
        if (count != m.cols || !row.eof()) {
            throw ParseError(source_name, i + 2, "expected " + std::to_string(m.cols) + " values");
        }
    }
    return m;
}

}  // namespace matchpyramid
