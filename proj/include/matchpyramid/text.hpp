#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace matchpyramid {

using TokenId = std::int32_t;

/// Normalised token sequence. `ids` is empty until encode() assigns it.
struct TokenizedText {
    std::vector<std::string> tokens;
    std::vector<TokenId> ids;
    std::size_t source_len = 0;  // token count before truncation

    std::size_t size() const noexcept { return tokens.size(); }
    bool empty() const noexcept { return tokens.empty(); }
    bool encoded() const noexcept { return ids.size() == tokens.size(); }
};

struct TokenizerOptions {
    bool stemming = true;
    // Applied after lower-casing and before stemming. Empty by default.
    std::unordered_set<std::string> stopwords;
};

/// Whitespace split, ASCII lower-case, strip leading/trailing
/// non-alphanumerics, drop empties, optionally Porter-stem.
TokenizedText tokenize(std::string_view text, const TokenizerOptions& options = {});
TokenizedText tokenize(std::string_view text, bool stemming);

/// Token <-> index map. Indices 0..size()-1 are bound to tokens; the OOV
/// index is size() and is never bound to a string.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return index_to_token_.size(); }
    TokenId oov_index() const noexcept { return static_cast<TokenId>(index_to_token_.size()); }

    TokenId lookup(std::string_view token) const;
    bool contains(std::string_view token) const { return lookup(token) != oov_index(); }

    /// Token bound to `id`, or std::nullopt for the OOV index / out of range.
    std::optional<std::string_view> token(TokenId id) const;
    const std::vector<std::string>& tokens() const noexcept { return index_to_token_; }

private:
    struct Hash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    };
    std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> token_to_index_;
    std::vector<std::string> index_to_token_;
};

/// Tokens with count >= min_count, ordered by descending frequency and then
/// lexicographically.
Vocabulary build_vocab(std::span<const TokenizedText> corpus, std::size_t min_count);

/// Streaming form: `next` yields documents until it returns std::nullopt.
/// Exceptions thrown by `next` propagate unchanged.
Vocabulary build_vocab(const std::function<std::optional<TokenizedText>()>& next, std::size_t min_count);

/// One vector per vocabulary index plus the OOV slot (last row).
/// A table with dim() == 0 is valid for the indicator similarity only.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::size_t rows);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t rows() const noexcept { return rows_; }

    std::span<const double> vector(TokenId id) const;
    std::span<double> mutable_vector(TokenId id);

private:
    std::size_t dim_ = 0;
    std::size_t rows_ = 0;
    std::vector<double> values_;
};

/// word2vec text format: "count dim" header then "token f1 ... fdim" lines.
/// Vocabulary tokens missing from the file and the OOV slot are zero.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab);
EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab, const std::string& source_name);

/// Assigns ids and truncates to the first max_len tokens. source_len keeps the
/// pre-truncation count.
TokenizedText encode(const TokenizedText& text, const Vocabulary& vocab, std::size_t max_len);

/// Inverse of encode for in-vocabulary ids; OOV ids decode to std::nullopt.
std::vector<std::optional<std::string>> decode(std::span<const TokenId> ids, const Vocabulary& vocab);

/// A "key<TAB>raw text" line file, as used for both corpora and query sets.
struct TextRecord {
    std::string id;
    std::string text;
};

/// Reads every record. Blank lines are skipped; a line without a tab is a
/// ParseError. If `keep` is given, only records whose id it contains are kept.
std::vector<TextRecord> read_text_records(const std::string& path, const std::set<std::string>* keep = nullptr);

/// Tokenised collection keyed by record id.
using TokenizedCollection = std::map<std::string, TokenizedText>;

TokenizedCollection tokenize_records(std::span<const TextRecord> records, const TokenizerOptions& options);

}  // namespace matchpyramid
