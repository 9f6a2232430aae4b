#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "matchpyramid/baselines.hpp"
#include "matchpyramid/pyramid_net.hpp"
#include "matchpyramid/text.hpp"
#include "matchpyramid/training.hpp"

namespace matchpyramid {

struct PathConfig {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string candidates;
    std::string embeddings;
    std::string train_queries;       // optional: one query id per line
    std::string validation_queries;  // optional: one query id per line
    std::string model_out = "model.mp";
    std::string log_out = "train.log";
};

struct TextConfig {
    bool stemming = true;
    std::vector<std::string> stopwords;
    std::size_t min_count = 1;
    std::size_t embedding_dim = 50;  // 0 accepts whatever the embedding file declares

    TokenizerOptions tokenizer() const;
};

struct BaselineConfig {
    ScorerOptions scorer;
    std::size_t top_k = 2000;
};

struct GradCheckConfig {
    std::size_t triples = 20;
    double step = 1e-5;
    double tolerance = 1e-4;
    std::size_t max_parameters = 10000;
    std::size_t embedding_dim = 8;
    std::size_t vocab_size = 30;
    std::size_t max_doc_len = 12;
};

/// Every tunable of the toolkit. Defaults follow the published settings
/// where one exists (Adam lr 1e-4, 50-d embeddings, query 5 / doc 500
/// tokens, 128 hidden units, 3x10 pooling).
struct RunConfig {
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    PathConfig paths;
    TextConfig text;
    PyramidConfig model;
    TrainConfig train;
    double validation_fraction = 0.2;
    BaselineConfig baseline;
    GradCheckConfig gradcheck;

    void validate() const;
};

/// Parses a JSON config (comments allowed) on top of the defaults. Unknown
/// keys and mistyped values throw ConfigError naming the key path.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text, const std::string& source_name = "<config>");

/// Applies "section.key=value" overrides. The value is read as JSON when it
/// parses, otherwise as a string.
void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides);

/// Full config as pretty JSON, for logging and for `matchpyramid config`.
std::string dump_run_config(const RunConfig& config);

}  // namespace matchpyramid
