#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "matchpyramid/evaluation.hpp"
#include "matchpyramid/text.hpp"

namespace matchpyramid {

using DocIndex = std::uint32_t;

struct Posting {
    DocIndex doc = 0;
    std::uint32_t tf = 0;
    bool operator==(const Posting&) const = default;
};

struct TermStats {
    std::uint64_t df = 0;
    std::uint64_t cf = 0;
};

/// Counts needed by BM25 and Dirichlet-smoothed query likelihood.
/// Documents are numbered 0..N-1 in insertion order.
struct CollectionStats {
    std::unordered_map<std::string, TermStats> terms;
    std::vector<std::string> doc_ids;
    std::vector<std::uint32_t> doc_lengths;
    std::unordered_map<std::string, DocIndex> doc_index;
    std::uint64_t total_tokens = 0;
    double avgdl = 0.0;

    std::size_t num_docs() const noexcept { return doc_ids.size(); }
    TermStats term(std::string_view t) const;
    /// Throws Error for an unknown doc id.
    DocIndex find_doc(const std::string& doc_id) const;
};

/// term -> postings sorted by strictly increasing doc index.
class PostingsIndex {
public:
    std::span<const Posting> postings(std::string_view term) const;
    std::uint32_t tf(std::string_view term, DocIndex doc) const;

    const std::unordered_map<std::string, std::vector<Posting>>& terms() const noexcept { return lists_; }
    std::unordered_map<std::string, std::vector<Posting>>& mutable_terms() noexcept { return lists_; }

private:
    std::unordered_map<std::string, std::vector<Posting>> lists_;
};

/// Stats, postings, and the tokenizer settings they were built with.
struct Collection {
    CollectionStats stats;
    PostingsIndex index;
    TokenizerOptions tokenizer;
};

/// Exact counts over (doc id, tokens) pairs in the given order. Throws Error
/// on an empty corpus or a repeated doc id.
Collection build_collection(std::span<const std::pair<std::string, TokenizedText>> docs,
                            const TokenizerOptions& tokenizer = {});
Collection build_collection(const TokenizedCollection& docs, const TokenizerOptions& tokenizer = {});

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 with idf = ln((N - df + 0.5) / (df + 0.5) + 1), summed over the
/// query tokens (repeats count again).
double bm25_score(std::span<const std::string> query, DocIndex doc, const CollectionStats& stats,
                  const PostingsIndex& index, const Bm25Params& params = {});
double bm25_score(std::span<const std::string> query, const std::string& doc_id, const CollectionStats& stats,
                  const PostingsIndex& index, const Bm25Params& params = {});

/// Sum of ln((tf + mu * cf / C) / (dl + mu)); terms absent from the whole
/// collection contribute nothing.
double ql_dirichlet_score(std::span<const std::string> query, DocIndex doc, const CollectionStats& stats,
                          const PostingsIndex& index, double mu = 2000.0);
double ql_dirichlet_score(std::span<const std::string> query, const std::string& doc_id,
                          const CollectionStats& stats, const PostingsIndex& index, double mu = 2000.0);

enum class ScorerKind { bm25, ql };

std::string_view to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

struct ScorerOptions {
    ScorerKind kind = ScorerKind::bm25;
    Bm25Params bm25;
    double mu = 2000.0;

    void validate() const;
};

double score_document(std::span<const std::string> query, DocIndex doc, const Collection& collection,
                      const ScorerOptions& scorer);

/// Top-k documents containing at least one query term, by descending score
/// and then ascending doc id.
std::vector<ScoredDoc> rank_collection(std::span<const std::string> query, const Collection& collection,
                                       const ScorerOptions& scorer, std::size_t top_k);

/// rank_collection() for every query; queries with no match get no entry.
RankedRun retrieve(const TokenizedCollection& queries, const Collection& collection, const ScorerOptions& scorer,
                   std::size_t top_k, std::size_t threads = 1);

/// Text artifact tagged "matchpyramid-index v1".
void save_collection(std::ostream& out, const Collection& collection);
void save_collection(const std::string& path, const Collection& collection);
Collection load_collection(std::istream& in, const std::string& source_name);
Collection load_collection(const std::string& path);

}  // namespace matchpyramid
