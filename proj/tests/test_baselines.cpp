#include <algorithm>
#include <cmath>
#include <sstream>

#include "baseline_oracle.hpp"
#include "doctest.h"
#include "matchpyramid/baselines.hpp"
#include "matchpyramid/error.hpp"
#include "support.hpp"

using namespace matchpyramid;
using mp_test::five_docs;
using mp_test::kFiveDocs;

namespace {

std::vector<std::string> words(const char* text) { return tokenize(text, false).tokens; }

}  // namespace

TEST_CASE("collection statistics by hand") {
    const std::vector<std::pair<std::string, TokenizedText>> single = {{"d1", tokenize("a b a", false)}};
    const auto one = build_collection(single);
    CHECK(one.stats.term("a").df == 1);
    CHECK(one.stats.term("a").cf == 2);
    CHECK(one.stats.doc_lengths[0] == 3);
    CHECK(one.stats.avgdl == 3.0);
    CHECK(one.stats.term("zzz").df == 0);

    const std::vector<std::pair<std::string, TokenizedText>> two = {{"d1", tokenize("a", false)},
                                                                    {"d2", tokenize("a", false)}};
    const auto c = build_collection(two);
    CHECK(c.stats.term("a").df == 2);
    CHECK(c.stats.num_docs() == 2);
    CHECK(c.stats.avgdl == 1.0);
    CHECK(c.index.tf("a", 1) == 1);
    CHECK(c.stats.find_doc("d2") == 1);
    CHECK_THROWS_AS(c.stats.find_doc("d3"), Error);
}

TEST_CASE("collection building rejects empty corpora and repeated ids") {
    CHECK_THROWS_AS(build_collection(std::span<const std::pair<std::string, TokenizedText>>{}), Error);
    const std::vector<std::pair<std::string, TokenizedText>> dup = {{"d", tokenize("a", false)},
                                                                    {"d", tokenize("b", false)}};
    CHECK_THROWS_AS(build_collection(dup), Error);
}

TEST_CASE("property: counts equal a naive recount") {
    Rng rng(5);
    std::vector<std::pair<std::string, TokenizedText>> docs;
    for (int d = 0; d < 50; ++d) {
        TokenizedText t;
        for (std::size_t k = 0, n = rng.below(12); k < n; ++k) {
            t.tokens.push_back("t" + std::to_string(rng.below(15)));
        }
        docs.emplace_back("doc" + std::to_string(d), t);
    }
    const auto c = build_collection(docs);
    std::size_t total = 0;
    for (const auto& [id, t] : docs) {
        total += t.size();
    }
    CHECK(c.stats.total_tokens == total);
    CHECK(c.stats.avgdl == doctest::Approx(static_cast<double>(total) / 50.0).epsilon(1e-15));
    for (int w = 0; w < 16; ++w) {
        const std::string term = "t" + std::to_string(w);
        std::uint64_t df = 0;
        std::uint64_t cf = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) {
            const auto n = static_cast<std::uint32_t>(std::count(docs[d].second.tokens.begin(),
                                                                 docs[d].second.tokens.end(), term));
            df += n > 0 ? 1 : 0;
            cf += n;
            CHECK(c.index.tf(term, static_cast<DocIndex>(d)) == n);
        }
        CHECK(c.stats.term(term).df == df);
        CHECK(c.stats.term(term).cf == cf);
    }
}

TEST_CASE("BM25 and QL equal the scripted formula oracle on five documents") {
    const auto c = five_docs();
    for (const auto& e : kFiveDocs) {
        CAPTURE(e.query);
        CAPTURE(e.doc);
        const auto q = words(e.query);
        CHECK(std::abs(bm25_score(q, e.doc, c.stats, c.index) - e.bm25) < 1e-10);
        CHECK(std::abs(ql_dirichlet_score(q, e.doc, c.stats, c.index) - e.ql2000) < 1e-10);
        CHECK(std::abs(ql_dirichlet_score(q, e.doc, c.stats, c.index, 10.0) - e.ql10) < 1e-10);
    }
}

TEST_CASE("BM25 single document and b = 0") {
    const std::vector<std::pair<std::string, TokenizedText>> docs = {{"d1", tokenize("a a b", false)}};
    const auto c = build_collection(docs);
    // tf=2, df=1, N=1, dl=avgdl=3.
    const double idf = std::log((1 - 1 + 0.5) / (1 + 0.5) + 1);
    const double expect = idf * 2 * 2.2 / (2 + 1.2);
    CHECK(std::abs(bm25_score(words("a"), "d1", c.stats, c.index) - expect) < 1e-12);
    CHECK(bm25_score(words("zzz"), "d1", c.stats, c.index) == 0.0);

    const std::vector<std::pair<std::string, TokenizedText>> varied = {
        {"short", tokenize("a x", false)}, {"long", tokenize("a x y z w v u", false)}, {"other", tokenize("q", false)}};
    const auto v = build_collection(varied);
    Bm25Params flat;
    flat.b = 0.0;
    CHECK(bm25_score(words("a"), "short", v.stats, v.index, flat) ==
          bm25_score(words("a"), "long", v.stats, v.index, flat));
    CHECK(bm25_score(words("a"), "short", v.stats, v.index) > bm25_score(words("a"), "long", v.stats, v.index));
}

TEST_CASE("QL hand value and large-mu limit") {
    const std::vector<std::pair<std::string, TokenizedText>> docs = {{"d1", tokenize("a b a", false)}};
    const auto c = build_collection(docs);
    CHECK(std::abs(ql_dirichlet_score(words("a"), "d1", c.stats, c.index, 1.0) - std::log((2.0 + 2.0 / 3.0) / 4.0)) <
          1e-12);
    CHECK(std::abs(ql_dirichlet_score(words("a"), "d1", c.stats, c.index, 1.0) - (-0.405465)) < 1e-6);

    const auto five = five_docs();
    for (const char* doc : {"d1", "d2", "d3", "d4", "d5"}) {
        CHECK(std::abs(ql_dirichlet_score(words("cat"), doc, five.stats, five.index, 1e9) - std::log(3.0 / 21.0)) <
              1e-3);
    }
    CHECK(ql_dirichlet_score(words("zebra"), "d1", five.stats, five.index) == 0.0);
}

TEST_CASE("property: BM25 and QL increase with term frequency") {
    for (std::uint32_t tf = 1; tf < 10; ++tf) {
        std::string more = "x y";
        std::string fewer = "x y";
        for (std::uint32_t k = 0; k < tf; ++k) {
            fewer += " a";
            more += " a";
        }
        more += " a";
        // Equal lengths: replace one filler so only tf changes.
        fewer += " z";
        const std::vector<std::pair<std::string, TokenizedText>> docs = {
            {"fewer", tokenize(fewer, false)}, {"more", tokenize(more, false)}, {"bg", tokenize("a b c d", false)}};
        const auto c = build_collection(docs);
        CHECK(bm25_score(words("a"), "more", c.stats, c.index) > bm25_score(words("a"), "fewer", c.stats, c.index));
        CHECK(ql_dirichlet_score(words("a"), "more", c.stats, c.index) >
              ql_dirichlet_score(words("a"), "fewer", c.stats, c.index));
        CHECK(bm25_score(words("a"), "fewer", c.stats, c.index) >= 0.0);
    }
}

TEST_CASE("ranking: singleton, tie order, top-k") {
    const auto c = five_docs();
    ScorerOptions bm25;
    const auto single = rank_collection(words("bird"), c, bm25, 10);
    REQUIRE(single.size() == 1);
    CHECK(single[0].doc_id == "d4");
    CHECK(rank_collection(words("bird"), c, bm25, 1).size() == 1);
    CHECK(rank_collection(words("zebra"), c, bm25, 10).empty());

    const std::vector<std::pair<std::string, TokenizedText>> twins = {{"b", tokenize("same text", false)},
                                                                      {"a", tokenize("same text", false)}};
    const auto t = build_collection(twins);
    const auto tied = rank_collection(words("same"), t, bm25, 5);
    REQUIRE(tied.size() == 2);
    CHECK(tied[0].score == tied[1].score);
    CHECK(tied[0].doc_id == "a");
    ScorerOptions ql;
    ql.kind = ScorerKind::ql;
    CHECK(ql_dirichlet_score(words("same"), "a", t.stats, t.index) ==
          ql_dirichlet_score(words("same"), "b", t.stats, t.index));
}

TEST_CASE("ranking equals exhaustive scoring on a 100-document corpus") {
    Rng rng(77);
    std::vector<std::pair<std::string, TokenizedText>> docs;
    for (int d = 0; d < 100; ++d) {
        TokenizedText t;
        for (std::size_t k = 0, n = 3 + rng.below(30); k < n; ++k) {
            t.tokens.push_back("t" + std::to_string(rng.below(40)));
        }
        docs.emplace_back("doc" + std::to_string(1000 + d), t);
    }
    const auto c = build_collection(docs);
    for (const auto kind : {ScorerKind::bm25, ScorerKind::ql}) {
        ScorerOptions s;
        s.kind = kind;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<std::string> q;
            for (std::size_t k = 0, n = 1 + rng.below(4); k < n; ++k) {
                q.push_back("t" + std::to_string(rng.below(45)));
            }
            std::vector<ScoredDoc> all;
            for (const auto& [id, text] : docs) {
                const bool matches = std::any_of(q.begin(), q.end(), [&](const std::string& w) {
                    return std::find(text.tokens.begin(), text.tokens.end(), w) != text.tokens.end();
                });
                if (matches) {
                    all.push_back({id, kind == ScorerKind::bm25 ? bm25_score(q, id, c.stats, c.index)
                                                                : ql_dirichlet_score(q, id, c.stats, c.index)});
                }
            }
            std::sort(all.begin(), all.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
                return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
            });
            const std::size_t k = 1 + rng.below(30);
            all.resize(std::min(all.size(), k));
            CHECK(rank_collection(q, c, s, k) == all);
        }
    }
}

TEST_CASE("retrieve is thread-count independent and skips unmatched queries") {
    const auto c = five_docs();
    TokenizedCollection queries{{"q1", tokenize("cat", false)}, {"q2", tokenize("zebra", false)},
                                {"q3", tokenize("dog the", false)}};
    const auto one = retrieve(queries, c, ScorerOptions{}, 3, 1);
    const auto four = retrieve(queries, c, ScorerOptions{}, 3, 4);
    CHECK(one == four);
    CHECK(one.size() == 2);
    CHECK_FALSE(one.contains("q2"));
    CHECK(one.at("q3").size() == 3);
}

TEST_CASE("scorer options validation and names") {
    ScorerOptions s;
    CHECK_NOTHROW(s.validate());
    s.bm25.b = 1.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = ScorerOptions{};
    s.mu = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    CHECK(parse_scorer_kind("ql") == ScorerKind::ql);
    CHECK(to_string(ScorerKind::bm25) == "bm25");
    CHECK_THROWS_AS(parse_scorer_kind("tfidf"), ConfigError);
}

TEST_CASE("index artifact round trips") {
    const auto c = five_docs();
    std::stringstream s;
    save_collection(s, c);
    CHECK(s.str().starts_with("matchpyramid-index v1\n"));
    const auto back = load_collection(s, "mem");
    CHECK(back.stats.doc_ids == c.stats.doc_ids);
    CHECK(back.stats.doc_lengths == c.stats.doc_lengths);
    CHECK(back.stats.total_tokens == c.stats.total_tokens);
    CHECK(back.tokenizer.stemming == c.tokenizer.stemming);
    for (const auto& e : kFiveDocs) {
        CHECK(bm25_score(words(e.query), e.doc, back.stats, back.index) ==
              bm25_score(words(e.query), e.doc, c.stats, c.index));
    }
    std::stringstream again;
    save_collection(again, back);
    CHECK(again.str() == s.str());

    std::istringstream broken("matchpyramid-index v1\nstemming 1\n");
    CHECK_THROWS_AS(load_collection(broken, "broken"), Error);
}
