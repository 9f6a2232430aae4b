#include "matchpyramid/baselines.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "matchpyramid/error.hpp"
#include "matchpyramid/parallel.hpp"

namespace matchpyramid {

TermStats CollectionStats::term(std::string_view t) const {
    const auto it = terms.find(std::string(t));
    return it == terms.end() ? TermStats{} : it->second;
}

DocIndex CollectionStats::find_doc(const std::string& doc_id) const {
    const auto it = doc_index.find(doc_id);
    if (it == doc_index.end()) {
        throw Error("unknown document id '" + doc_id + "'");
    }
    return it->second;
}

std::span<const Posting> PostingsIndex::postings(std::string_view term) const {
    const auto it = lists_.find(std::string(term));
    if (it == lists_.end()) {
        return {};
    }
    return it->second;
}

std::uint32_t PostingsIndex::tf(std::string_view term, DocIndex doc) const {
    const auto list = postings(term);
    const auto it = std::lower_bound(list.begin(), list.end(), doc,
                                     [](const Posting& p, DocIndex d) { return p.doc < d; });
    return (it != list.end() && it->doc == doc) ? it->tf : 0;
}

Collection build_collection(std::span<const std::pair<std::string, TokenizedText>> docs,
                            const TokenizerOptions& tokenizer) {
    if (docs.empty()) {
        throw Error("build_collection: empty corpus");
    }
    Collection c;
    c.tokenizer = tokenizer;
    auto& stats = c.stats;
    auto& lists = c.index.mutable_terms();
    stats.doc_ids.reserve(docs.size());
    stats.doc_lengths.reserve(docs.size());
    for (const auto& [doc_id, text] : docs) {
        const auto doc = static_cast<DocIndex>(stats.doc_ids.size());
        if (!stats.doc_index.emplace(doc_id, doc).second) {
            throw Error("build_collection: duplicate document id '" + doc_id + "'");
        }
        stats.doc_ids.push_back(doc_id);
        stats.doc_lengths.push_back(static_cast<std::uint32_t>(text.tokens.size()));
        stats.total_tokens += text.tokens.size();

        std::map<std::string_view, std::uint32_t> counts;
        for (const auto& token : text.tokens) {
            ++counts[token];
        }
        for (const auto& [term, tf] : counts) {
            auto& ts = stats.terms[std::string(term)];
            ++ts.df;
            ts.cf += tf;
            lists[std::string(term)].push_back({doc, tf});
        }
    }
    stats.avgdl = static_cast<double>(stats.total_tokens) / static_cast<double>(stats.num_docs());
    return c;
}

Collection build_collection(const TokenizedCollection& docs, const TokenizerOptions& tokenizer) {
    std::vector<std::pair<std::string, TokenizedText>> ordered(docs.begin(), docs.end());
    return build_collection(ordered, tokenizer);
}

double bm25_score(std::span<const std::string> query, DocIndex doc, const CollectionStats& stats,
                  const PostingsIndex& index, const Bm25Params& params) {
    if (doc >= stats.num_docs()) {
        throw Error("bm25_score: document index " + std::to_string(doc) + " out of range");
    }
    const double n = static_cast<double>(stats.num_docs());
    const double norm = 1.0 - params.b + params.b * static_cast<double>(stats.doc_lengths[doc]) / stats.avgdl;
    double score = 0.0;
    for (const auto& term : query) {
        const std::uint32_t tf = index.tf(term, doc);
        if (tf == 0) {
            continue;
        }
        const double df = static_cast<double>(stats.term(term).df);
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        const double f = static_cast<double>(tf);
        score += idf * f * (params.k1 + 1.0) / (f + params.k1 * norm);
    }
    return score;
}

double bm25_score(std::span<const std::string> query, const std::string& doc_id, const CollectionStats& stats,
                  const PostingsIndex& index, const Bm25Params& params) {
    return bm25_score(query, stats.find_doc(doc_id), stats, index, params);
}

double ql_dirichlet_score(std::span<const std::string> query, DocIndex doc, const CollectionStats& stats,
                          const PostingsIndex& index, double mu) {
    if (doc >= stats.num_docs()) {
        throw Error("ql_dirichlet_score: document index " + std::to_string(doc) + " out of range");
    }
    const double dl = static_cast<double>(stats.doc_lengths[doc]);
    const double total = static_cast<double>(stats.total_tokens);
    double score = 0.0;
    for (const auto& term : query) {
        const auto cf = stats.term(term).cf;
        if (cf == 0) {
            continue;
        }
        const double tf = static_cast<double>(index.tf(term, doc));
        score += std::log((tf + mu * static_cast<double>(cf) / total) / (dl + mu));
    }
    return score;
}

double ql_dirichlet_score(std::span<const std::string> query, const std::string& doc_id,
                          const CollectionStats& stats, const PostingsIndex& index, double mu) {
    return ql_dirichlet_score(query, stats.find_doc(doc_id), stats, index, mu);
}

std::string_view to_string(ScorerKind kind) { return kind == ScorerKind::bm25 ? "bm25" : "ql"; }

ScorerKind parse_scorer_kind(std::string_view name) {
    if (name == "bm25") {
        return ScorerKind::bm25;
    }
    if (name == "ql") {
        return ScorerKind::ql;
    }
    throw ConfigError("unknown scorer '" + std::string(name) + "' (expected bm25 or ql)");
}

void ScorerOptions::validate() const {
    if (!(bm25.k1 > 0.0)) {
        throw ConfigError("bm25 k1 must be > 0");
    }
    if (!(bm25.b >= 0.0 && bm25.b <= 1.0)) {
        throw ConfigError("bm25 b must be in [0, 1]");
    }
    if (!(mu > 0.0)) {
        throw ConfigError("ql mu must be > 0");
    }
}

double score_document(std::span<const std::string> query, DocIndex doc, const Collection& collection,
                      const ScorerOptions& scorer) {
    return scorer.kind == ScorerKind::bm25
               ? bm25_score(query, doc, collection.stats, collection.index, scorer.bm25)
               : ql_dirichlet_score(query, doc, collection.stats, collection.index, scorer.mu);
}

std::vector<ScoredDoc> rank_collection(std::span<const std::string> query, const Collection& collection,
                                       const ScorerOptions& scorer, std::size_t top_k) {
    scorer.validate();
    if (top_k == 0) {
        throw ConfigError("rank_collection: top_k must be >= 1");
    }
    std::vector<DocIndex> matched;
    for (const auto& term : query) {
        for (const auto& p : collection.index.postings(term)) {
            matched.push_back(p.doc);
        }
    }
    std::sort(matched.begin(), matched.end());
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());

    std::vector<ScoredDoc> ranking;
    ranking.reserve(matched.size());
    for (const DocIndex doc : matched) {
        ranking.push_back({collection.stats.doc_ids[doc], score_document(query, doc, collection, scorer)});
    }
    const auto keep = std::min(top_k, ranking.size());
    const auto by_rank = [](const ScoredDoc& a, const ScoredDoc& b) {
        return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
    };
    std::partial_sort(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(keep), ranking.end(), by_rank);
    ranking.resize(keep);
    return ranking;
}

RankedRun retrieve(const TokenizedCollection& queries, const Collection& collection, const ScorerOptions& scorer,
                   std::size_t top_k, std::size_t threads) {
    std::vector<const std::pair<const std::string, TokenizedText>*> items;
    for (const auto& entry : queries) {
        items.push_back(&entry);
    }
    std::vector<std::vector<ScoredDoc>> results(items.size());
    parallel_for(items.size(), threads, [&](std::size_t i) {
        results[i] = rank_collection(items[i]->second.tokens, collection, scorer, top_k);
    });
    RankedRun run;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!results[i].empty()) {
            run[items[i]->first] = std::move(results[i]);
        }
    }
    return run;
}

// ---------------------------------------------------------------------------
// Artifact I/O

namespace {

constexpr std::string_view kIndexTag = "matchpyramid-index v1";

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

void save_collection(std::ostream& out, const Collection& collection) {
    const auto& stats = collection.stats;
    out << kIndexTag << '\n';
    out << "stemming " << (collection.tokenizer.stemming ? 1 : 0) << '\n';
    const std::set<std::string> stopwords(collection.tokenizer.stopwords.begin(),
                                          collection.tokenizer.stopwords.end());
    out << "stopwords " << stopwords.size();
    for (const auto& w : stopwords) {
        out << ' ' << w;
    }
    out << '\n';
    out << "docs " << stats.num_docs() << '\n';
    for (std::size_t d = 0; d < stats.num_docs(); ++d) {
        out << stats.doc_ids[d] << '\t' << stats.doc_lengths[d] << '\n';
    }
    const auto& lists = collection.index.terms();
    std::vector<const std::string*> terms;
    terms.reserve(lists.size());
    for (const auto& [term, list] : lists) {
        terms.push_back(&term);
    }
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });
    out << "terms " << terms.size() << '\n';
    for (const auto* term : terms) {
        out << *term << '\t';
        const auto& list = lists.at(*term);
        for (std::size_t i = 0; i < list.size(); ++i) {
            out << (i ? " " : "") << list[i].doc << ':' << list[i].tf;
        }
        out << '\n';
    }
    out << "end\n";
}

void save_collection(const std::string& path, const Collection& collection) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(path + ": cannot open for writing");
    }
    save_collection(out, collection);
    if (!out) {
        throw Error(path + ": write failed");
    }
}

Collection load_collection(std::istream& in, const std::string& source_name) {
    std::string line;
    std::size_t line_no = 0;
    const auto next = [&](const char* expecting) {
        if (!std::getline(in, line)) {
            throw ParseError(source_name, line_no + 1, std::string("unexpected end of file, expected ") + expecting);
        }
        ++line_no;
    };
    const auto expect_count = [&](std::string_view key) {
        next(key.data());
        std::istringstream fields(line);
        std::string got;
        std::size_t n = 0;
        if (!(fields >> got >> n) || got != key) {
            throw ParseError(source_name, line_no, "expected '" + std::string(key) + " <count>'");
        }
        return std::pair<std::size_t, std::istringstream>(n, std::move(fields));
    };

    next("header");
    if (line != kIndexTag) {
        throw ParseError(source_name, line_no, "not an index file (expected '" + std::string(kIndexTag) + "')");
    }
    Collection c;
    {
        auto [flag, rest] = expect_count("stemming");
        c.tokenizer.stemming = flag != 0;
    }
    {
        auto [n, rest] = expect_count("stopwords");
        std::string w;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(rest >> w)) {
                throw ParseError(source_name, line_no, "stopword list shorter than its count");
            }
            c.tokenizer.stopwords.insert(w);
        }
    }
    auto& stats = c.stats;
    const std::size_t num_docs = expect_count("docs").first;
    if (num_docs == 0) {
        throw ParseError(source_name, line_no, "index holds no documents");
    }
    for (std::size_t d = 0; d < num_docs; ++d) {
        next("document line");
        const auto tab = line.rfind('\t');
        std::uint32_t length = 0;
        if (tab == std::string::npos || !parse_number(std::string_view(line).substr(tab + 1), length)) {
            throw ParseError(source_name, line_no, "expected '<docid><TAB><length>'");
        }
        std::string doc_id = line.substr(0, tab);
        if (!stats.doc_index.emplace(doc_id, static_cast<DocIndex>(d)).second) {
            throw ParseError(source_name, line_no, "duplicate document id '" + doc_id + "'");
        }
        stats.doc_ids.push_back(std::move(doc_id));
        stats.doc_lengths.push_back(length);
        stats.total_tokens += length;
    }
    stats.avgdl = static_cast<double>(stats.total_tokens) / static_cast<double>(num_docs);

    auto& lists = c.index.mutable_terms();
    const std::size_t num_terms = expect_count("terms").first;
    for (std::size_t t = 0; t < num_terms; ++t) {
        next("term line");
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw ParseError(source_name, line_no, "expected '<term><TAB><doc:tf> ...'");
        }
        std::string term = line.substr(0, tab);
        std::vector<Posting> list;
        std::istringstream entries(line.substr(tab + 1));
        std::string entry;
        TermStats ts;
        while (entries >> entry) {
            const auto colon = entry.find(':');
            Posting p;
            if (colon == std::string::npos || !parse_number(std::string_view(entry).substr(0, colon), p.doc) ||
                !parse_number(std::string_view(entry).substr(colon + 1), p.tf) || p.tf == 0 ||
                p.doc >= num_docs || (!list.empty() && p.doc <= list.back().doc)) {
                throw ParseError(source_name, line_no, "bad posting '" + entry + "'");
            }
            list.push_back(p);
            ++ts.df;
            ts.cf += p.tf;
        }
        if (list.empty()) {
            throw ParseError(source_name, line_no, "term '" + term + "' has no postings");
        }
        stats.terms[term] = ts;
        lists[std::move(term)] = std::move(list);
    }
    next("end");
    if (line != "end") {
        throw ParseError(source_name, line_no, "expected 'end'");
    }
    return c;
}

Collection load_collection(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(path + ": cannot open index file");
    }
    return load_collection(in, path);
}

}  // namespace matchpyramid
