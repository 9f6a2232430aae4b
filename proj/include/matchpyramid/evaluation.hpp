#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace matchpyramid {

/// Relevance grades: query id -> (doc id -> grade >= 0).
using Qrels = std::map<std::string, std::map<std::string, int>>;

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
    bool operator==(const ScoredDoc&) const = default;
};

/// Per query, documents in descending score order, ties by ascending doc id.
using RankedRun = std::map<std::string, std::vector<ScoredDoc>>;

/// Sorts by descending score, ties by ascending doc id. This is the single
/// tie rule shared by every ranker and by the evaluator.
void sort_ranking(std::vector<ScoredDoc>& ranking);

/// Sum of relevant-at-rank precisions divided by the total number of
/// relevant documents (grade >= 1) in `judged`. 0 when nothing is relevant.
double average_precision(std::span<const std::string> ranking, const std::map<std::string, int>& judged);

/// Exponential-gain nDCG: sum (2^g - 1) / log2(i + 1) over the top k,
/// normalised by the ideal ordering of all judged grades. 0 if the ideal is 0.
double ndcg_at_k(std::span<const std::string> ranking, const std::map<std::string, int>& judged, std::size_t k = 20);

/// Relevant (grade >= 1) documents in the top k, divided by k.
double precision_at_k(std::span<const std::string> ranking, const std::map<std::string, int>& judged,
                      std::size_t k = 20);

struct QueryMetrics {
    std::string query_id;
    double average_precision = 0.0;
    double ndcg_at_20 = 0.0;
    double precision_at_20 = 0.0;
    std::size_t relevant = 0;  // total relevant in qrels
    std::size_t retrieved = 0;
};

struct EvaluationReport {
    std::vector<QueryMetrics> per_query;
    double map = 0.0;          // over queries with >= 1 relevant document
    double ndcg_at_20 = 0.0;   // over all evaluated queries
    double precision_at_20 = 0.0;
    std::size_t map_queries = 0;
    std::vector<std::string> warnings;
};

/// Evaluates every run query that also appears in the qrels. Run-only queries
/// are reported in `warnings` and skipped. Throws Error if no query is shared.
/// Each ranking is re-sorted with sort_ranking() before scoring.
EvaluationReport evaluate_run(const RankedRun& run, const Qrels& qrels);

/// "qid 0 docid grade" lines. A repeated (qid, docid) keeps the last grade and
/// appends a warning. Malformed lines throw ParseError.
Qrels parse_qrels(std::istream& in, const std::string& source_name, std::vector<std::string>* warnings = nullptr);
Qrels parse_qrels(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// "qid Q0 docid rank score tag" lines, rank 1-based, score with 17
/// significant digits.
void write_run(std::ostream& out, const RankedRun& run, const std::string& tag);
void write_run(const std::string& path, const RankedRun& run, const std::string& tag);

/// Ordering always follows the scores (with the shared tie rule); a rank
/// column that disagrees only produces a warning. Duplicate doc ids within a
/// query throw ParseError.
RankedRun parse_run(std::istream& in, const std::string& source_name, std::vector<std::string>* warnings = nullptr);
RankedRun parse_run(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Tab-separated metrics table: one row per query, then an "all" row.
void write_report(std::ostream& out, const EvaluationReport& report);

}  // namespace matchpyramid
