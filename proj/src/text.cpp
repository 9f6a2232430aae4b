#include "matchpyramid/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "matchpyramid/error.hpp"
#include "matchpyramid/porter_stemmer.hpp"

namespace matchpyramid {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) {
            ++i;
        }
        if (i > start) {
            fields.push_back(line.substr(start, i - start));
        }
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

TokenizedText tokenize(std::string_view text, const TokenizerOptions& options) {
    TokenizedText out;
    for (const auto raw : split_whitespace(text)) {
        std::size_t begin = 0;
        std::size_t end = raw.size();
        while (begin < end && !is_alnum(raw[begin])) {
            ++begin;
        }
        while (end > begin && !is_alnum(raw[end - 1])) {
            --end;
        }
        if (begin == end) {
            continue;
        }
        std::string token(raw.substr(begin, end - begin));
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (options.stopwords.contains(token)) {
            continue;
        }
        if (options.stemming) {
            token = porter_stem(token);
        }
        out.tokens.push_back(std::move(token));
    }
    out.source_len = out.tokens.size();
    return out;
}

TokenizedText tokenize(std::string_view text, bool stemming) {
    TokenizerOptions options;
    options.stemming = stemming;
    return tokenize(text, options);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : index_to_token_(std::move(tokens)) {
    token_to_index_.reserve(index_to_token_.size());
    for (std::size_t i = 0; i < index_to_token_.size(); ++i) {
        const auto [it, inserted] = token_to_index_.emplace(index_to_token_[i], static_cast<TokenId>(i));
        if (!inserted) {
            throw Error("vocabulary: duplicate token '" + index_to_token_[i] + "'");
        }
    }
}

TokenId Vocabulary::lookup(std::string_view token) const {
    const auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? oov_index() : it->second;
}

std::optional<std::string_view> Vocabulary::token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= index_to_token_.size()) {
        return std::nullopt;
    }
    return index_to_token_[static_cast<std::size_t>(id)];
}

Vocabulary build_vocab(const std::function<std::optional<TokenizedText>()>& next, std::size_t min_count) {
    std::unordered_map<std::string, std::size_t> counts;
    while (auto doc = next()) {
        for (const auto& token : doc->tokens) {
            ++counts[token];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [token, count] : counts) {
        if (count >= min_count) {
            kept.emplace_back(token, count);
        }
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& entry : kept) {
        tokens.push_back(std::move(entry.first));
    }
    return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const TokenizedText> corpus, std::size_t min_count) {
    if (corpus.empty()) {
        throw Error("build_vocab: empty corpus");
    }
    std::size_t i = 0;
    return build_vocab(
        [&]() -> std::optional<TokenizedText> {
            if (i == corpus.size()) {
                return std::nullopt;
            }
            return corpus[i++];
        },
        min_count);
}

EmbeddingTable::EmbeddingTable(std::size_t dim, std::size_t rows)
    : dim_(dim), rows_(rows), values_(dim * rows, 0.0) {}

std::span<const double> EmbeddingTable::vector(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= rows_) {
        throw ShapeError("embedding lookup: id " + std::to_string(id) + " outside table of " +
                         std::to_string(rows_) + " rows");
    }
    return {values_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

std::span<double> EmbeddingTable::mutable_vector(TokenId id) {
    if (id < 0 || static_cast<std::size_t>(id) >= rows_) {
        throw ShapeError("embedding lookup: id " + std::to_string(id) + " outside table of " +
                         std::to_string(rows_) + " rows");
    }
    return {values_.data() + static_cast<std::size_t>(id) * dim_, dim_};
}

EmbeddingTable load_embeddings(std::istream& in, const Vocabulary& vocab, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(source_name, 1, "missing 'count dim' header");
    }
    const auto header = split_whitespace(line);
    std::size_t declared_count = 0;
    std::size_t dim = 0;
    if (header.size() != 2 || !parse_number(header[0], declared_count) || !parse_number(header[1], dim) ||
        dim == 0) {
        throw ParseError(source_name, 1, "expected header 'count dim' with dim >= 1");
    }

    EmbeddingTable table(dim, vocab.size() + 1);
    std::vector<bool> seen(vocab.size(), false);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_whitespace(line);
        if (fields.empty()) {
            continue;
        }
        if (fields.size() != dim + 1) {
            throw ParseError(source_name, line_no,
                             "expected token followed by " + std::to_string(dim) + " values, got " +
                                 std::to_string(fields.size() - 1));
        }
        const TokenId id = vocab.lookup(fields[0]);
        if (id == vocab.oov_index() || seen[static_cast<std::size_t>(id)]) {
            continue;
        }
        auto row = table.mutable_vector(id);
        for (std::size_t k = 0; k < dim; ++k) {
            double value = 0.0;
            if (!parse_number(fields[k + 1], value) || !std::isfinite(value)) {
                throw ParseError(source_name, line_no,
                                 "value " + std::to_string(k + 1) + " is not a finite number: '" +
                                     std::string(fields[k + 1]) + "'");
            }
            row[k] = value;
        }
        seen[static_cast<std::size_t>(id)] = true;
    }
    if (in.bad()) {
        throw ParseError(source_name, line_no, "read failure");
    }
    return table;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path + ": cannot open embedding file");
    }
    return load_embeddings(in, vocab, path);
}

TokenizedText encode(const TokenizedText& text, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len == 0) {
        throw Error("encode: max_len must be >= 1");
    }
    TokenizedText out;
    const std::size_t n = std::min(max_len, text.tokens.size());
    out.tokens.assign(text.tokens.begin(), text.tokens.begin() + static_cast<std::ptrdiff_t>(n));
    out.ids.reserve(n);
    for (const auto& token : out.tokens) {
        out.ids.push_back(vocab.lookup(token));
    }
    out.source_len = std::max(text.source_len, text.tokens.size());
    return out;
}

std::vector<std::optional<std::string>> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
    std::vector<std::optional<std::string>> out;
    out.reserve(ids.size());
    for (const TokenId id : ids) {
        const auto token = vocab.token(id);
        out.push_back(token ? std::optional<std::string>(std::string(*token)) : std::nullopt);
    }
    return out;
}

std::vector<TextRecord> read_text_records(const std::string& path, const std::set<std::string>* keep) {
    std::ifstream in(path);
    if (!in) {
        throw Error(path + ": cannot open text file");
    }
    std::vector<TextRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (std::all_of(line.begin(), line.end(), is_space)) {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw ParseError(path, line_no, "expected '<id><TAB><text>'");
        }
        std::string id = line.substr(0, tab);
        if (keep != nullptr && !keep->contains(id)) {
            continue;
        }
        records.push_back({std::move(id), line.substr(tab + 1)});
    }
    if (in.bad()) {
        throw ParseError(path, line_no, "read failure");
    }
    return records;
}

TokenizedCollection tokenize_records(std::span<const TextRecord> records, const TokenizerOptions& options) {
    TokenizedCollection out;
    for (const auto& record : records) {
        out[record.id] = tokenize(record.text, options);
    }
    return out;
}

}  // namespace matchpyramid
