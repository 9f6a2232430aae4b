#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "matchpyramid/baselines.hpp"
#include "matchpyramid/config.hpp"
#include "matchpyramid/evaluation.hpp"
#include "matchpyramid/training.hpp"

namespace matchpyramid::cli {

/// Tokenises a "docid<TAB>text" corpus and writes the stats+postings artifact.
Collection cmd_index(const std::string& corpus_path, const std::string& out_path, const TokenizerOptions& tokenizer);

/// First-stage retrieval with BM25 or QL; writes a TREC run file.
RankedRun cmd_retrieve(const std::string& queries_path, const std::string& index_path, const ScorerOptions& scorer,
                       std::size_t top_k, const std::string& out_path, std::size_t threads = 1);

struct TrainOutcome {
    TrainResult result;
    std::vector<std::string> train_queries;
    std::vector<std::string> validation_queries;
    std::vector<std::string> warnings;
};

/// Trains from paths in `config`; writes the checkpoint to paths.model_out and
/// the per-epoch log to paths.log_out.
TrainOutcome cmd_train(const RunConfig& config, std::ostream* progress = nullptr);

/// Re-orders every candidate list with the model. Never adds or drops a document.
RankedRun cmd_rerank(const std::string& model_path, const std::string& queries_path,
                     const std::string& candidates_path, const std::string& corpus_path,
                     const std::string& embeddings_path, const std::string& out_path, std::size_t threads = 1);

/// Per-query table plus means, tab-separated, written to `out`.
EvaluationReport cmd_eval(const std::string& run_path, const std::string& qrels_path, std::ostream& out);

struct GradCheckSummary {
    GradCheckReport combined;  // max over triples; mean over all checked parameters
    std::vector<GradCheckReport> per_triple;
    std::size_t parameters = 0;
};

/// Finite-difference check of backpropagation on a seeded model and seeded
/// synthetic triples. Model shape comes from config.model; the synthetic
/// data and tolerances from config.gradcheck.
GradCheckSummary cmd_gradcheck(const RunConfig& config, std::uint64_t seed);

struct QuerySplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;  // empty unless test_fraction > 0
};

/// Seeded split of the query ids shared by the candidates and the qrels.
/// Each requested part gets at least one query and train is never empty.
/// Every list is sorted.
QuerySplit split_queries(const RankedRun& candidates, const Qrels& qrels, double validation_fraction,
                         std::uint64_t seed, double test_fraction = 0.0);

struct ReportRow {
    std::string name;
    EvaluationReport report;
};

/// Evaluates several runs against one qrels file, optionally restricted to
/// the query ids in `query_filter`, and writes a Model/MAP/nDCG@20/P@20 table.
std::vector<ReportRow> cmd_report(const std::vector<std::pair<std::string, std::string>>& named_runs,
                                  const std::string& qrels_path, const std::vector<std::string>& query_filter,
                                  std::ostream& out);

/// Entry point shared by the `matchpyramid` binary and the tests. Returns the
/// process exit code; failures print one "matchpyramid: error: ..." line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matchpyramid::cli
