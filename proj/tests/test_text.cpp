#include <sstream>

#include "doctest.h"
#include "matchpyramid/error.hpp"
#include "matchpyramid/porter_stemmer.hpp"
#include "matchpyramid/text.hpp"
#include "support.hpp"

using namespace matchpyramid;

namespace {

// Reference stems from NLTK's PorterStemmer in ORIGINAL_ALGORITHM mode.
const std::pair<const char*, const char*> kReferenceStems[] = {
    {"caresses", "caress"},
    {"ponies", "poni"},
    {"ties", "ti"},
    {"caress", "caress"},
    {"cats", "cat"},
    {"feed", "feed"},
    {"agreed", "agre"},
    {"plastered", "plaster"},
    {"bled", "bled"},
    {"motoring", "motor"},
    {"sing", "sing"},
    {"conflated", "conflat"},
    {"troubled", "troubl"},
    {"sized", "size"},
    {"hopping", "hop"},
    {"tanned", "tan"},
    {"falling", "fall"},
    {"hissing", "hiss"},
    {"fizzed", "fizz"},
    {"failing", "fail"},
    {"filing", "file"},
    {"happy", "happi"},
    {"sky", "sky"},
    {"relational", "relat"},
    {"conditional", "condit"},
    {"rational", "ration"},
    {"valenci", "valenc"},
    {"hesitanci", "hesit"},
    {"digitizer", "digit"},
    {"conformabli", "conform"},
    {"radicalli", "radic"},
    {"differentli", "differ"},
    {"vileli", "vile"},
    {"analogousli", "analog"},
    {"vietnamization", "vietnam"},
    {"predication", "predic"},
    {"operator", "oper"},
    {"feudalism", "feudal"},
    {"decisiveness", "decis"},
    {"hopefulness", "hope"},
    {"callousness", "callous"},
    {"formaliti", "formal"},
    {"sensitiviti", "sensit"},
    {"sensibiliti", "sensibl"},
    {"triplicate", "triplic"},
    {"formative", "form"},
    {"formalize", "formal"},
    {"electriciti", "electr"},
    {"electrical", "electr"},
    {"hopeful", "hope"},
    {"goodness", "good"},
    {"revival", "reviv"},
    {"allowance", "allow"},
    {"inference", "infer"},
    {"airliner", "airlin"},
    {"gyroscopic", "gyroscop"},
    {"adjustable", "adjust"},
    {"defensible", "defens"},
    {"irritant", "irrit"},
    {"replacement", "replac"},
    {"adjustment", "adjust"},
    {"dependent", "depend"},
    {"adoption", "adopt"},
    {"homologou", "homolog"},
    {"communism", "commun"},
    {"activate", "activ"},
    {"angulariti", "angular"},
    {"homologous", "homolog"},
    {"effective", "effect"},
    {"bowdlerize", "bowdler"},
    {"probate", "probat"},
    {"rate", "rate"},
    {"cease", "ceas"},
    {"controll", "control"},
    {"roll", "roll"},
    {"generalizations", "gener"},
    {"oscillators", "oscil"},
    {"retrieval", "retriev"},
    {"matching", "match"},
    {"pyramids", "pyramid"},
    {"documents", "document"},
    {"queries", "queri"},
    {"running", "run"},
    {"relevance", "relev"},
    {"information", "inform"},
    {"semantic", "semant"},
};

}  // namespace

TEST_CASE("porter stemmer matches the reference stems") {
    for (const auto& [word, stem] : kReferenceStems) {
        CAPTURE(word);
        CHECK(porter_stem(word) == stem);
    }
}

TEST_CASE("porter stemmer leaves words of at most two letters alone") {
    CHECK(porter_stem("is") == "is");
    CHECK(porter_stem("as") == "as");
    CHECK(porter_stem("a") == "a");
    CHECK(porter_stem("") == "");
}

TEST_CASE("porter stemmer is idempotent on its own vocabulary sample") {
    // Not a general property of Porter, but holds for these plain stems.
    for (const char* w : {"cat", "run", "match", "pyramid"}) {
        CHECK(porter_stem(porter_stem(w)) == porter_stem(w));
    }
}

TEST_CASE("tokenize lower-cases, strips edge punctuation and stems") {
    const auto t = tokenize("  The (Running) CATS... don't  --  e-mail ", true);
    CHECK(t.tokens == std::vector<std::string>{"the", "run", "cat", "don't", "e-mail"});
    CHECK(t.source_len == 5);
    CHECK_FALSE(t.encoded());

    const auto raw = tokenize("Running CATS", false);
    CHECK(raw.tokens == std::vector<std::string>{"running", "cats"});
}

TEST_CASE("tokenize drops pure punctuation and handles empty input") {
    CHECK(tokenize("", true).empty());
    CHECK(tokenize(" \t\n ", true).empty());
    CHECK(tokenize("... !!! --", true).empty());
}

TEST_CASE("stopwords are removed before stemming") {
    TokenizerOptions opt;
    opt.stopwords = {"the", "running"};
    const auto t = tokenize("The running dogs", opt);
    CHECK(t.tokens == std::vector<std::string>{"dog"});
}

TEST_CASE("vocabulary orders by frequency then lexicographically") {
    const std::vector<TokenizedText> corpus = {tokenize("b a c a", false), tokenize("b d a", false)};
    const auto vocab = build_vocab(corpus, 1);
    CHECK(vocab.tokens() == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(vocab.lookup("a") == 0);
    CHECK(vocab.lookup("zzz") == vocab.oov_index());
    CHECK(vocab.oov_index() == 4);
    CHECK_FALSE(vocab.token(vocab.oov_index()).has_value());
    CHECK(*vocab.token(1) == "b");

    const auto pruned = build_vocab(corpus, 2);
    CHECK(pruned.tokens() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("vocabulary rejects an empty corpus and duplicate tokens") {
    CHECK_THROWS_AS(build_vocab(std::span<const TokenizedText>{}, 1), Error);
    CHECK_THROWS_AS(Vocabulary({"x", "x"}), Error);
}

TEST_CASE("streaming vocabulary matches the in-memory one") {
    Rng rng(7);
    std::vector<TokenizedText> corpus;
    for (int d = 0; d < 50; ++d) {
        TokenizedText t;
        for (int k = 0; k < 20; ++k) {
            t.tokens.push_back("t" + std::to_string(rng.below(30)));
        }
        corpus.push_back(t);
    }
    std::size_t i = 0;
    const auto streamed = build_vocab(
        [&]() -> std::optional<TokenizedText> {
            if (i == corpus.size()) {
                return std::nullopt;
            }
            return corpus[i++];
        },
        2);
    CHECK(streamed.tokens() == build_vocab(corpus, 2).tokens());
}

TEST_CASE("encode and decode round trip, with truncation and OOV") {
    const Vocabulary vocab({"cat", "dog"});
    const auto t = encode(tokenize("dog cat bird dog", false), vocab, 3);
    CHECK(t.tokens == std::vector<std::string>{"dog", "cat", "bird"});
    CHECK(t.ids == std::vector<TokenId>{1, 0, 2});
    CHECK(t.source_len == 4);
    CHECK(t.encoded());
    const auto back = decode(t.ids, vocab);
    REQUIRE(back.size() == 3);
    CHECK(*back[0] == "dog");
    CHECK(*back[1] == "cat");
    CHECK_FALSE(back[2].has_value());
    CHECK_THROWS(encode(t, vocab, 0));
}

TEST_CASE("property: decode(encode(x)) recovers every in-vocabulary token") {
    Rng rng(11);
    std::vector<std::string> words;
    for (int i = 0; i < 40; ++i) {
        words.push_back("w" + std::to_string(i));
    }
    const Vocabulary vocab(std::vector<std::string>(words.begin(), words.begin() + 30));
    for (int trial = 0; trial < 200; ++trial) {
        TokenizedText text;
        const auto n = 1 + rng.below(15);
        for (std::size_t k = 0; k < n; ++k) {
            text.tokens.push_back(words[rng.below(words.size())]);
        }
        const auto max_len = 1 + rng.below(20);
        const auto enc = encode(text, vocab, max_len);
        REQUIRE(enc.size() == std::min<std::size_t>(n, max_len));
        const auto dec = decode(enc.ids, vocab);
        for (std::size_t k = 0; k < enc.size(); ++k) {
            if (vocab.contains(enc.tokens[k])) {
                CHECK(dec[k] == enc.tokens[k]);
            } else {
                CHECK_FALSE(dec[k].has_value());
            }
        }
    }
}

TEST_CASE("embedding loader fills known tokens and zeroes the rest") {
    const Vocabulary vocab({"cat", "dog", "emu"});
    std::istringstream in("3 2\ncat 0.5 -1\nzebra 9 9\ndog 1e-3 2\n");
    const auto table = load_embeddings(in, vocab, "emb.txt");
    CHECK(table.dim() == 2);
    CHECK(table.rows() == 4);
    CHECK(table.vector(0)[0] == 0.5);
    CHECK(table.vector(0)[1] == -1.0);
    CHECK(table.vector(1)[0] == 1e-3);
    CHECK(table.vector(2)[0] == 0.0);                   // emu: absent from the file
    CHECK(table.vector(vocab.oov_index())[1] == 0.0);   // OOV slot
    CHECK_THROWS_AS(table.vector(4), ShapeError);
}

TEST_CASE("embedding loader reports the offending line") {
    const Vocabulary vocab({"cat"});
    std::istringstream bad_count("1 3\ncat 1 2\n");
    try {
        load_embeddings(bad_count, vocab, "emb.txt");
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.file() == "emb.txt");
        CHECK(std::string(e.what()).starts_with("emb.txt:2:"));
    }
    std::istringstream bad_value("1 2\n\ncat 1 oops\n");
    try {
        load_embeddings(bad_value, vocab, "emb.txt");
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream bad_header("cat 1 2\n");
    CHECK_THROWS_AS(load_embeddings(bad_header, vocab, "emb.txt"), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(load_embeddings(empty, vocab, "emb.txt"), ParseError);
}

TEST_CASE("text records need a tab and can be filtered") {
    mp_test::ScratchDir dir("text");
    const auto good = dir.write("docs.tsv", "d1\tHello world\r\n\nd2\tSecond  doc\n");
    const auto all = read_text_records(good);
    REQUIRE(all.size() == 2);
    CHECK(all[0].id == "d1");
    CHECK(all[0].text == "Hello world");
    const std::set<std::string> keep{"d2"};
    const auto some = read_text_records(good, &keep);
    REQUIRE(some.size() == 1);
    CHECK(some[0].id == "d2");

    const auto bad = dir.write("bad.tsv", "d1\tok\nno tab here\n");
    try {
        read_text_records(bad);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(read_text_records(dir.file("missing.tsv")), Error);
}
