#include "matchpyramid/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "matchpyramid/error.hpp"
#include "matchpyramid/parallel.hpp"
#include "matchpyramid/random.hpp"

namespace matchpyramid::cli {
namespace {

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(path + ": cannot open for writing");
    }
    return out;
}

void require_path(const std::string& value, const char* key) {
    if (value.empty()) {
        throw ConfigError(std::string("missing required path: ") + key);
    }
}

std::vector<std::string> read_id_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path + ": cannot open query id list");
    }
    std::vector<std::string> ids;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string id;
        std::string extra;
        if (!(fields >> id)) {
            continue;
        }
        if (fields >> extra) {
            throw ParseError(path, line_no, "expected one query id per line");
        }
        if (!seen.insert(id).second) {
            throw ParseError(path, line_no, "duplicate query id '" + id + "'");
        }
        ids.push_back(id);
    }
    return ids;
}

void write_id_list(const std::string& path, const std::vector<std::string>& ids) {
    auto out = open_output(path);
    for (const auto& id : ids) {
        out << id << '\n';
    }
}

std::string join(const std::vector<std::string>& items, char sep) {
    std::string s;
    for (const auto& item : items) {
        if (!s.empty()) {
            s += sep;
        }
        s += item;
    }
    return s;
}

ModelMetadata tokenizer_metadata(const TokenizerOptions& tokenizer, std::size_t min_count, std::size_t dim) {
    std::vector<std::string> stopwords(tokenizer.stopwords.begin(), tokenizer.stopwords.end());
    std::sort(stopwords.begin(), stopwords.end());
    return {{"stemming", tokenizer.stemming ? "1" : "0"},
            {"stopwords", join(stopwords, ' ')},
            {"min_count", std::to_string(min_count)},
            {"embedding_dim", std::to_string(dim)}};
}

TokenizerOptions tokenizer_from_metadata(const ModelMetadata& meta, std::size_t& min_count, std::size_t& dim,
                                         const std::string& source) {
    TokenizerOptions options;
    const auto get = [&](const char* key) -> const std::string& {
        const auto it = meta.find(key);
        if (it == meta.end()) {
            throw Error(source + ": model metadata lacks '" + key + "'");
        }
        return it->second;
    };
    options.stemming = get("stemming") == "1";
    std::istringstream words(get("stopwords"));
    for (std::string w; words >> w;) {
        options.stopwords.insert(w);
    }
    min_count = std::stoul(get("min_count"));
    dim = std::stoul(get("embedding_dim"));
    return options;
}

struct PreparedTexts {
    TokenizedCollection queries;
    TokenizedCollection docs;
    EmbeddingTable embeddings;
};

/// Loads and tokenises exactly the queries and documents named in `runs`,
/// builds the vocabulary over them, encodes, and loads embeddings.
PreparedTexts prepare_texts(const std::vector<const RankedRun*>& runs, const std::string& queries_path,
                            const std::string& corpus_path, const std::string& embeddings_path,
                            const TokenizerOptions& tokenizer, std::size_t min_count, const PyramidConfig& model,
                            std::size_t expected_dim) {
    std::set<std::string> qids;
    std::set<std::string> doc_ids;
    for (const auto* run : runs) {
        for (const auto& [qid, list] : *run) {
            qids.insert(qid);
            for (const auto& d : list) {
                doc_ids.insert(d.doc_id);
            }
        }
    }
    const auto query_records = read_text_records(queries_path, &qids);
    const auto doc_records = read_text_records(corpus_path, &doc_ids);
    PreparedTexts t;
    t.queries = tokenize_records(query_records, tokenizer);
    t.docs = tokenize_records(doc_records, tokenizer);
    for (const auto* run : runs) {
        for (const auto& [qid, list] : *run) {
            if (!t.queries.contains(qid)) {
                throw Error(queries_path + ": query '" + qid + "' not found");
            }
            for (const auto& d : list) {
                if (!t.docs.contains(d.doc_id)) {
                    throw Error(corpus_path + ": document '" + d.doc_id + "' (candidate of query " + qid +
                                ") not found");
                }
            }
        }
    }

    std::vector<TokenizedText> all;
    all.reserve(t.queries.size() + t.docs.size());
    for (const auto& [id, text] : t.queries) {
        all.push_back(text);
    }
    for (const auto& [id, text] : t.docs) {
        all.push_back(text);
    }
    const Vocabulary vocab = build_vocab(all, min_count);
    all.clear();
    for (auto& [id, text] : t.queries) {
        if (!text.empty()) {
            text = encode(text, vocab, model.query_max_len);
        }
    }
    for (auto& [id, text] : t.docs) {
        if (!text.empty()) {
            text = encode(text, vocab, model.doc_max_len);
        }
    }

    if (model.similarity == SimilarityKind::indicator) {
        t.embeddings = EmbeddingTable(0, vocab.size() + 1);
    } else {
        if (embeddings_path.empty()) {
            throw ConfigError(std::string("similarity '") + std::string(to_string(model.similarity)) +
                              "' needs an embedding file");
        }
        t.embeddings = load_embeddings(embeddings_path, vocab);
        if (expected_dim != 0 && t.embeddings.dim() != expected_dim) {
            throw ConfigError(embeddings_path + ": embedding dim " + std::to_string(t.embeddings.dim()) +
                              " differs from the expected " + std::to_string(expected_dim));
        }
    }
    return t;
}

RankedRun subset(const RankedRun& run, const std::vector<std::string>& ids, const std::string& source) {
    RankedRun out;
    for (const auto& id : ids) {
        const auto it = run.find(id);
        if (it == run.end()) {
            throw Error(source + ": query '" + id + "' has no candidates");
        }
        out.emplace(id, it->second);
    }
    return out;
}

}  // namespace

Collection cmd_index(const std::string& corpus_path, const std::string& out_path, const TokenizerOptions& tokenizer) {
    const auto records = read_text_records(corpus_path);
    std::vector<std::pair<std::string, TokenizedText>> docs;
    docs.reserve(records.size());
    for (const auto& r : records) {
        docs.emplace_back(r.id, tokenize(r.text, tokenizer));
    }
    Collection collection = build_collection(docs, tokenizer);
    save_collection(out_path, collection);
    return collection;
}

RankedRun cmd_retrieve(const std::string& queries_path, const std::string& index_path, const ScorerOptions& scorer,
                       std::size_t top_k, const std::string& out_path, std::size_t threads) {
    scorer.validate();
    if (top_k < 1) {
        throw ConfigError("top_k must be >= 1");
    }
    const Collection collection = load_collection(index_path);
    const auto records = read_text_records(queries_path);
    const auto queries = tokenize_records(records, collection.tokenizer);
    RankedRun run = retrieve(queries, collection, scorer, top_k, threads);
    write_run(out_path, run, std::string(to_string(scorer.kind)));
    return run;
}

QuerySplit split_queries(const RankedRun& candidates, const Qrels& qrels, double validation_fraction,
                         std::uint64_t seed, double test_fraction) {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0) ||
        !(test_fraction >= 0.0 && validation_fraction + test_fraction < 1.0)) {
        throw ConfigError("split: need 0 < validation_fraction, 0 <= test_fraction, and their sum < 1");
    }
    std::vector<std::string> ids;
    for (const auto& [qid, list] : candidates) {
        if (!list.empty() && qrels.contains(qid)) {
            ids.push_back(qid);
        }
    }
    const std::size_t parts = test_fraction > 0.0 ? 3 : 2;
    if (ids.size() < parts) {
        throw Error("split: need at least " + std::to_string(parts) +
                    " queries present in both candidates and qrels, found " + std::to_string(ids.size()));
    }
    // Seeded Fisher-Yates over the sorted ids.
    Rng rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        std::swap(ids[i - 1], ids[rng.below(i)]);
    }
    const auto share = [&](double fraction) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * ids.size())));
    };
    const std::size_t n_val = share(validation_fraction);
    const std::size_t n_test = test_fraction > 0.0 ? share(test_fraction) : 0;
    if (n_val + n_test >= ids.size()) {
        throw Error("split: fractions leave no training queries out of " + std::to_string(ids.size()));
    }
    QuerySplit split;
    split.validation.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    split.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), ids.end());
    for (auto* part : {&split.train, &split.validation, &split.test}) {
        std::sort(part->begin(), part->end());
    }
    return split;
}

TrainOutcome cmd_train(const RunConfig& config, std::ostream* progress) {
    config.validate();
    const auto& paths = config.paths;
    require_path(paths.corpus, "paths.corpus");
    require_path(paths.queries, "paths.queries");
    require_path(paths.qrels, "paths.qrels");
    require_path(paths.candidates, "paths.candidates");

    TrainOutcome outcome;
    const Qrels qrels = parse_qrels(paths.qrels, &outcome.warnings);
    const RankedRun candidates = parse_run(paths.candidates, &outcome.warnings);

    if (!paths.train_queries.empty() || !paths.validation_queries.empty()) {
        require_path(paths.train_queries, "paths.train_queries");
        require_path(paths.validation_queries, "paths.validation_queries");
        outcome.train_queries = read_id_list(paths.train_queries);
        outcome.validation_queries = read_id_list(paths.validation_queries);
    } else {
        auto split = split_queries(candidates, qrels, config.validation_fraction, derive_seed(config.seed, "split"));
        outcome.train_queries = std::move(split.train);
        outcome.validation_queries = std::move(split.validation);
    }
    for (const auto& id : outcome.validation_queries) {
        if (!qrels.contains(id)) {
            throw Error(paths.qrels + ": validation query '" + id + "' has no judgments");
        }
    }
    RankedRun train_candidates = subset(candidates, outcome.train_queries, paths.candidates);
    const RankedRun validation_candidates = subset(candidates, outcome.validation_queries, paths.candidates);

    const TokenizerOptions tokenizer = config.text.tokenizer();
    const PreparedTexts texts =
        prepare_texts({&train_candidates, &validation_candidates}, paths.queries, paths.corpus, paths.embeddings,
                      tokenizer, config.text.min_count, config.model, config.text.embedding_dim);

    // A text with no tokens has no matching matrix, so it cannot enter a triple.
    for (auto it = train_candidates.begin(); it != train_candidates.end();) {
        if (texts.queries.at(it->first).empty()) {
            outcome.warnings.push_back("training query '" + it->first + "' is empty after tokenization; skipped");
            it = train_candidates.erase(it);
            continue;
        }
        auto& list = it->second;
        std::erase_if(list, [&](const ScoredDoc& d) {
            if (texts.docs.at(d.doc_id).empty()) {
                outcome.warnings.push_back("document '" + d.doc_id + "' is empty after tokenization; not used for "
                                           "training query '" + it->first + "'");
                return true;
            }
            return false;
        });
        ++it;
    }

    TrainingData data;
    data.queries = &texts.queries;
    data.docs = &texts.docs;
    data.embeddings = &texts.embeddings;
    data.qrels = qrels;
    data.train_candidates = std::move(train_candidates);
    data.validation_candidates = validation_candidates;

    TrainConfig train_config = config.train;
    train_config.seed = derive_seed(config.seed, "sampling");
    train_config.threads = config.threads;
    const PyramidModel initial = PyramidModel::initialize(config.model, derive_seed(config.seed, "init"));

    outcome.result = train(data, initial, train_config, [&](const EpochLog& e, const PyramidModel&) {
        if (progress != nullptr) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "epoch %zu  loss %.6f  val_MAP %.6f%s\n", e.epoch, e.mean_loss,
                          e.validation_map, e.best ? "  *" : "");
            *progress << buf << std::flush;
        }
    });

    save_model(paths.model_out, outcome.result.model,
               tokenizer_metadata(tokenizer, config.text.min_count, texts.embeddings.dim()));
    auto log = open_output(paths.log_out);
    write_training_log(log, outcome.result.log);
    return outcome;
}

RankedRun cmd_rerank(const std::string& model_path, const std::string& queries_path,
                     const std::string& candidates_path, const std::string& corpus_path,
                     const std::string& embeddings_path, const std::string& out_path, std::size_t threads) {
    ModelMetadata meta;
    const PyramidModel model = load_model(model_path, &meta);
    std::size_t min_count = 1;
    std::size_t dim = 0;
    const TokenizerOptions tokenizer = tokenizer_from_metadata(meta, min_count, dim, model_path);
    const RankedRun candidates = parse_run(candidates_path);
    const PreparedTexts texts = prepare_texts({&candidates}, queries_path, corpus_path, embeddings_path, tokenizer,
                                              min_count, model.config, dim);
    RankedRun run = rerank(candidates, texts.queries, texts.docs, model, texts.embeddings, threads);
    write_run(out_path, run, "matchpyramid-" + std::string(to_string(model.config.similarity)));
    return run;
}

EvaluationReport cmd_eval(const std::string& run_path, const std::string& qrels_path, std::ostream& out) {
    std::vector<std::string> warnings;
    const Qrels qrels = parse_qrels(qrels_path, &warnings);
    const RankedRun run = parse_run(run_path, &warnings);
    EvaluationReport report = evaluate_run(run, qrels);
    warnings.insert(warnings.end(), report.warnings.begin(), report.warnings.end());
    report.warnings = std::move(warnings);
    write_report(out, report);
    return report;
}

std::vector<ReportRow> cmd_report(const std::vector<std::pair<std::string, std::string>>& named_runs,
                                  const std::string& qrels_path, const std::vector<std::string>& query_filter,
                                  std::ostream& out) {
    if (named_runs.empty()) {
        throw Error("report: at least one run is required");
    }
    std::vector<std::string> warnings;
    const Qrels qrels = parse_qrels(qrels_path, &warnings);
    const std::set<std::string> keep(query_filter.begin(), query_filter.end());
    std::vector<ReportRow> rows;
    for (const auto& [name, path] : named_runs) {
        RankedRun run = parse_run(path, &warnings);
        if (!keep.empty()) {
            std::erase_if(run, [&](const auto& entry) { return !keep.contains(entry.first); });
        }
        rows.push_back({name, evaluate_run(run, qrels)});
    }
    out << "Model\tMAP\tnDCG@20\tP@20\tqueries\n";
    char buf[128];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "\t%.3f\t%.3f\t%.3f\t%zu\n", row.report.map, row.report.ndcg_at_20,
                      row.report.precision_at_20, row.report.per_query.size());
        out << row.name << buf;
    }
    return rows;
}

GradCheckSummary cmd_gradcheck(const RunConfig& config, std::uint64_t seed) {
    config.validate();
    const auto& gc = config.gradcheck;
    Rng rng(derive_seed(seed, "gradcheck-data"));

    std::vector<std::string> words;
    for (std::size_t i = 0; i < gc.vocab_size; ++i) {
        words.push_back("w" + std::to_string(i));
    }
    const Vocabulary vocab(words);
    EmbeddingTable embeddings(config.model.similarity == SimilarityKind::indicator ? 0 : gc.embedding_dim,
                              vocab.size() + 1);
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        for (double& x : embeddings.mutable_vector(static_cast<TokenId>(i))) {
            x = 0.3 * rng.normal();
        }
    }
    const auto random_text = [&](std::size_t max_len) {
        TokenizedText t;
        const std::size_t n = 1 + rng.below(max_len);
        for (std::size_t k = 0; k < n; ++k) {
            t.tokens.push_back(words[rng.below(words.size())]);
        }
        t.source_len = n;
        return encode(t, vocab, n);
    };

    PyramidModel model = PyramidModel::initialize(config.model, derive_seed(seed, "init"));
    // Non-zero biases keep ReLU inputs away from exact zeros on padded cells.
    for (auto* bias : {&model.params.conv_bias, &model.params.fc1_bias, &model.params.fc2_bias}) {
        for (double& b : *bias) {
            b = rng.uniform(-0.1, 0.1);
        }
    }

    GradCheckSummary summary;
    summary.parameters = model.params.count();
    summary.combined.total_parameters = summary.parameters;
    double weighted_mean = 0.0;
    const auto opts = config.model.similarity_options();
    std::vector<std::pair<MatchingMatrix, MatchingMatrix>> pairs;
    for (std::size_t t = 0; t < gc.triples; ++t) {
        const TokenizedText query = random_text(config.model.query_max_len);
        const TokenizedText pos = random_text(gc.max_doc_len);
        const TokenizedText neg = random_text(gc.max_doc_len);
        pairs.emplace_back(build_matching_matrix(query, pos, config.model.similarity, embeddings, opts),
                           build_matching_matrix(query, neg, config.model.similarity, embeddings, opts));
    }
    summary.per_triple.resize(pairs.size());
    parallel_for(pairs.size(), config.threads, [&](std::size_t t) {
        GradCheckOptions options;
        options.step = gc.step;
        options.tolerance = gc.tolerance;
        options.max_parameters = gc.max_parameters;
        options.seed = derive_seed(seed, "gradcheck-subset-" + std::to_string(t));
        summary.per_triple[t] = grad_check(model, pairs[t].first, pairs[t].second, options);
    });
    for (std::size_t t = 0; t < pairs.size(); ++t) {
        const auto& r = summary.per_triple[t];
        auto& c = summary.combined;
        if (r.max_relative_error > c.max_relative_error || c.worst_parameter.empty()) {
            c.max_relative_error = r.max_relative_error;
            c.worst_parameter = "triple " + std::to_string(t) + " " + r.worst_parameter;
        }
        weighted_mean += r.mean_relative_error * static_cast<double>(r.checked);
        c.checked += r.checked;
        c.skipped_kinks += r.skipped_kinks;
    }
    auto& c = summary.combined;
    c.mean_relative_error = c.checked > 0 ? weighted_mean / static_cast<double>(c.checked) : 0.0;
    c.passed = c.checked > 0 && c.max_relative_error < gc.tolerance;
    return summary;
}

namespace {

void print_gradcheck(std::ostream& out, const GradCheckSummary& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "gradcheck %s max_rel_error=%.3e mean_rel_error=%.3e checked=%zu skipped_kinks=%zu "
                  "parameters=%zu triples=%zu worst=%s\n",
                  s.combined.passed ? "PASS" : "FAIL", s.combined.max_relative_error, s.combined.mean_relative_error,
                  s.combined.checked, s.combined.skipped_kinks, s.parameters, s.per_triple.size(),
                  s.combined.worst_parameter.c_str());
    out << buf;
}

RunConfig effective_config(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig config = path.empty() ? RunConfig{} : load_run_config(path);
    apply_overrides(config, overrides);
    return config;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"MatchPyramid text matching and re-ranking toolkit", "matchpyramid"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "matchpyramid 0.1.0");

    std::string config_path;
    std::vector<std::string> overrides;
    std::size_t threads = 1;
    bool threads_given = false;
    const auto add_config_options = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "JSON config file (comments allowed)")->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides, "Override a config value, e.g. --set train.max_epochs=10");
    };
    const auto add_threads = [&](CLI::App* cmd) {
        cmd->add_option_function<std::size_t>(
               "-j,--threads",
               [&](const std::size_t& n) {
                   threads = n;
                   threads_given = true;
               },
               "Worker threads for scoring")
            ->check(CLI::PositiveNumber);
    };

    // index
    std::string corpus;
    std::string out_path;
    auto* index = app.add_subcommand("index", "Tokenise a corpus and write the BM25/QL index artifact");
    index->add_option("--corpus", corpus, "Corpus file: docid<TAB>text per line")->required()->check(CLI::ExistingFile);
    index->add_option("-o,--out", out_path, "Index output path")->required();
    add_config_options(index);

    // retrieve
    std::string queries;
    std::string index_path;
    std::string scorer_name;
    std::size_t top_k = 0;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "First-stage retrieval with BM25 or query likelihood");
    retrieve_cmd->add_option("--queries", queries, "Query file: qid<TAB>text per line")
        ->required()
        ->check(CLI::ExistingFile);
    retrieve_cmd->add_option("--index", index_path, "Index built by 'index'")->required()->check(CLI::ExistingFile);
    retrieve_cmd->add_option("--scorer", scorer_name, "bm25 or ql (default: baseline.scorer)");
    retrieve_cmd->add_option("-k,--top-k", top_k, "Documents per query (default: baseline.top_k)");
    retrieve_cmd->add_option("-o,--out", out_path, "Run file output path")->required();
    add_config_options(retrieve_cmd);
    add_threads(retrieve_cmd);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a MatchPyramid model on first-stage candidates");
    add_config_options(train_cmd);
    add_threads(train_cmd);
    bool quiet = false;
    train_cmd->add_flag("-q,--quiet", quiet, "Do not print per-epoch progress");

    // rerank
    std::string model_path;
    std::string candidates;
    std::string embeddings;
    auto* rerank_cmd = app.add_subcommand("rerank", "Re-order candidate lists with a trained model");
    rerank_cmd->add_option("--model", model_path, "Model checkpoint")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--queries", queries, "Query file")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--candidates", candidates, "Candidate run file")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--corpus", corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    rerank_cmd->add_option("--embeddings", embeddings, "word2vec text embeddings (not needed for indicator)")
        ->check(CLI::ExistingFile);
    rerank_cmd->add_option("-o,--out", out_path, "Run file output path")->required();
    add_threads(rerank_cmd);

    // eval
    std::string run_path;
    std::string qrels;
    auto* eval_cmd = app.add_subcommand("eval", "Per-query AP, nDCG@20 and P@20 of a run, plus means");
    eval_cmd->add_option("--run", run_path, "Run file")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--qrels", qrels, "Relevance judgments")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("-o,--out", out_path, "Write the table here instead of stdout");

    // report
    std::vector<std::string> named;
    std::string query_list;
    auto* report_cmd = app.add_subcommand("report", "Compare several runs in one MAP/nDCG@20/P@20 table");
    report_cmd->add_option("--run", named, "NAME=PATH, repeatable")->required();
    report_cmd->add_option("--qrels", qrels, "Relevance judgments")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--queries-from", query_list, "Only evaluate the query ids listed in this file")
        ->check(CLI::ExistingFile);
    report_cmd->add_option("-o,--out", out_path, "Write the table here instead of stdout");

    // gradcheck
    std::uint64_t seed = 0;
    bool seed_given = false;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference check of backpropagation");
    add_config_options(gradcheck_cmd);
    add_threads(gradcheck_cmd);
    gradcheck_cmd
        ->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& s) {
                seed = s;
                seed_given = true;
            },
            "Seed for model and triples (default: config seed)");

    // split
    double test_fraction = 0.0;
    std::string train_out;
    std::string validation_out;
    std::string test_out;
    auto* split_cmd = app.add_subcommand("split", "Seeded train/validation[/test] split of query ids");
    split_cmd->add_option("--candidates", candidates, "Candidate run file")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--qrels", qrels, "Relevance judgments")->required()->check(CLI::ExistingFile);
    split_cmd->add_option("--test-fraction", test_fraction, "Share of queries held out for testing")
        ->check(CLI::Range(0.0, 1.0));
    split_cmd->add_option("--train-out", train_out, "Training query ids")->required();
    split_cmd->add_option("--validation-out", validation_out, "Validation query ids")->required();
    split_cmd->add_option("--test-out", test_out, "Test query ids (required with --test-fraction)");
    add_config_options(split_cmd);

    // config
    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration as JSON");
    add_config_options(config_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e, out, err);  // --help, --version
        }
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "matchpyramid: error: " << msg << '\n';
        return 2;
    }

    try {
        RunConfig config = effective_config(config_path, overrides);
        if (threads_given) {
            config.threads = threads;
            config.train.threads = threads;
        }
        const auto with_output = [&](const std::function<void(std::ostream&)>& fn) {
            if (out_path.empty()) {
                fn(out);
            } else {
                auto file = open_output(out_path);
                fn(file);
            }
        };

        if (index->parsed()) {
            const Collection c = cmd_index(corpus, out_path, config.text.tokenizer());
            out << "indexed " << c.stats.num_docs() << " documents, " << c.stats.terms.size() << " terms -> "
                << out_path << '\n';
        } else if (retrieve_cmd->parsed()) {
            ScorerOptions scorer = config.baseline.scorer;
            if (!scorer_name.empty()) {
                scorer.kind = parse_scorer_kind(scorer_name);
            }
            const RankedRun r = cmd_retrieve(queries, index_path, scorer, top_k > 0 ? top_k : config.baseline.top_k,
                                             out_path, config.threads);
            out << "retrieved " << r.size() << " queries -> " << out_path << '\n';
        } else if (train_cmd->parsed()) {
            const TrainOutcome o = cmd_train(config, quiet ? nullptr : &out);
            for (const auto& w : o.warnings) {
                err << "matchpyramid: warning: " << w << '\n';
            }
            out << "best epoch " << o.result.best_epoch << " -> " << config.paths.model_out << '\n';
        } else if (rerank_cmd->parsed()) {
            const RankedRun r = cmd_rerank(model_path, queries, candidates, corpus, embeddings, out_path,
                                           config.threads);
            out << "reranked " << r.size() << " queries -> " << out_path << '\n';
        } else if (eval_cmd->parsed()) {
            EvaluationReport report;
            with_output([&](std::ostream& o) { report = cmd_eval(run_path, qrels, o); });
            for (const auto& w : report.warnings) {
                err << "matchpyramid: warning: " << w << '\n';
            }
        } else if (report_cmd->parsed()) {
            std::vector<std::pair<std::string, std::string>> runs;
            for (const auto& item : named) {
                const auto eq = item.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
                    throw ConfigError("--run expects NAME=PATH, got '" + item + "'");
                }
                runs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
            }
            const auto filter = query_list.empty() ? std::vector<std::string>{} : read_id_list(query_list);
            with_output([&](std::ostream& o) { cmd_report(runs, qrels, filter, o); });
        } else if (gradcheck_cmd->parsed()) {
            const GradCheckSummary s = cmd_gradcheck(config, seed_given ? seed : config.seed);
            print_gradcheck(out, s);
            return s.combined.passed ? 0 : 1;
        } else if (split_cmd->parsed()) {
            if (test_fraction > 0.0 && test_out.empty()) {
                throw ConfigError("--test-out is required with --test-fraction");
            }
            const QuerySplit s = split_queries(parse_run(candidates), parse_qrels(qrels), config.validation_fraction,
                                               derive_seed(config.seed, "split"), test_fraction);
            write_id_list(train_out, s.train);
            write_id_list(validation_out, s.validation);
            if (!test_out.empty()) {
                write_id_list(test_out, s.test);
            }
            out << "split " << s.train.size() << " train / " << s.validation.size() << " validation / "
                << s.test.size() << " test queries\n";
        } else if (config_cmd->parsed()) {
            out << dump_run_config(config) << '\n';
        }
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err << "matchpyramid: error: " << msg << '\n';
        return 1;
    }
    return 0;
}

}  // namespace matchpyramid::cli
