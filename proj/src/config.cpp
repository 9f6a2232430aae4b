#include "matchpyramid/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "matchpyramid/error.hpp"

namespace matchpyramid {

using nlohmann::json;

TokenizerOptions TextConfig::tokenizer() const {
    TokenizerOptions options;
    options.stemming = stemming;
    options.stopwords.insert(stopwords.begin(), stopwords.end());
    return options;
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    baseline.scorer.validate();
    if (baseline.top_k < 1) {
        throw ConfigError("baseline.top_k must be >= 1");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("train.validation_fraction must be in (0, 1)");
    }
    if (threads < 1) {
        throw ConfigError("threads must be >= 1");
    }
    if (text.min_count < 1) {
        throw ConfigError("text.min_count must be >= 1");
    }
    if (!(gradcheck.step >= 1e-6 && gradcheck.step <= 1e-4)) {
        throw ConfigError("gradcheck.step must be in [1e-6, 1e-4]");
    }
    if (gradcheck.triples < 1 || gradcheck.vocab_size < 2 || gradcheck.max_doc_len < 1 ||
        gradcheck.embedding_dim < 1 || gradcheck.max_parameters < 1) {
        throw ConfigError("gradcheck: triples, vocab_size (>= 2), max_doc_len, embedding_dim and max_parameters "
                          "must be positive");
    }
}

namespace {

json to_json(const RunConfig& c) {
    return json{
        {"seed", c.seed},
        {"threads", c.threads},
        {"paths",
         {{"corpus", c.paths.corpus},
          {"queries", c.paths.queries},
          {"qrels", c.paths.qrels},
          {"candidates", c.paths.candidates},
          {"embeddings", c.paths.embeddings},
          {"train_queries", c.paths.train_queries},
          {"validation_queries", c.paths.validation_queries},
          {"model_out", c.paths.model_out},
          {"log_out", c.paths.log_out}}},
        {"text",
         {{"stemming", c.text.stemming},
          {"stopwords", c.text.stopwords},
          {"min_count", c.text.min_count},
          {"embedding_dim", c.text.embedding_dim}}},
        {"model",
         {{"similarity", std::string(to_string(c.model.similarity))},
          {"gaussian_sigma", c.model.gaussian_sigma},
          {"kernel_rows", c.model.kernel_rows},
          {"kernel_cols", c.model.kernel_cols},
          {"feature_maps", c.model.feature_maps},
          {"pool_rows", c.model.pool_rows},
          {"pool_cols", c.model.pool_cols},
          {"hidden_units", c.model.hidden_units},
          {"query_max_len", c.model.query_max_len},
          {"doc_max_len", c.model.doc_max_len}}},
        {"train",
         {{"max_epochs", c.train.max_epochs},
          {"triples_per_epoch", c.train.triples_per_epoch},
          {"patience", c.train.patience},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.adam.learning_rate},
          {"beta1", c.train.adam.beta1},
          {"beta2", c.train.adam.beta2},
          {"epsilon", c.train.adam.epsilon},
          {"validation_fraction", c.validation_fraction}}},
        {"baseline",
         {{"scorer", std::string(to_string(c.baseline.scorer.kind))},
          {"k1", c.baseline.scorer.bm25.k1},
          {"b", c.baseline.scorer.bm25.b},
          {"mu", c.baseline.scorer.mu},
          {"top_k", c.baseline.top_k}}},
        {"gradcheck",
         {{"triples", c.gradcheck.triples},
          {"step", c.gradcheck.step},
          {"tolerance", c.gradcheck.tolerance},
          {"max_parameters", c.gradcheck.max_parameters},
          {"embedding_dim", c.gradcheck.embedding_dim},
          {"vocab_size", c.gradcheck.vocab_size},
          {"max_doc_len", c.gradcheck.max_doc_len}}},
    };
}

bool compatible(const json& expected, const json& given) {
    if (expected.is_number()) {
        // Integers must stay integral; reals accept any number.
        return expected.is_number_float() ? given.is_number() : (given.is_number_unsigned() ||
                                                                 (given.is_number_integer() && given >= 0));
    }
    if (expected.is_array()) {
        return given.is_array() && std::all_of(given.begin(), given.end(), [](const json& v) { return v.is_string(); });
    }
    return expected.type() == given.type();
}

// Overlays `given` onto `base`; every key of `given` must already exist.
void merge_strict(json& base, const json& given, const std::string& prefix) {
    if (!given.is_object()) {
        throw ConfigError("config " + (prefix.empty() ? std::string("root") : prefix) + " must be an object");
    }
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) {
            throw ConfigError("unknown config key '" + key + "'");
        }
        auto& slot = base[it.key()];
        if (slot.is_object()) {
            merge_strict(slot, it.value(), key);
        } else if (!compatible(slot, it.value())) {
            throw ConfigError("config key '" + key + "' has the wrong type (expected " +
                              std::string(slot.type_name()) + ", got " + it.value().dump() + ")");
        } else {
            slot = it.value();
        }
    }
}

RunConfig from_json(const json& j) {
    RunConfig c;
    c.seed = j["seed"].get<std::uint64_t>();
    c.threads = j["threads"].get<std::size_t>();
    const auto& p = j["paths"];
    c.paths.corpus = p["corpus"];
    c.paths.queries = p["queries"];
    c.paths.qrels = p["qrels"];
    c.paths.candidates = p["candidates"];
    c.paths.embeddings = p["embeddings"];
    c.paths.train_queries = p["train_queries"];
    c.paths.validation_queries = p["validation_queries"];
    c.paths.model_out = p["model_out"];
    c.paths.log_out = p["log_out"];
    const auto& t = j["text"];
    c.text.stemming = t["stemming"];
    c.text.stopwords = t["stopwords"].get<std::vector<std::string>>();
    c.text.min_count = t["min_count"].get<std::size_t>();
    c.text.embedding_dim = t["embedding_dim"].get<std::size_t>();
    const auto& m = j["model"];
    c.model.similarity = parse_similarity_kind(m["similarity"].get<std::string>());
    c.model.gaussian_sigma = m["gaussian_sigma"];
    c.model.kernel_rows = m["kernel_rows"].get<std::size_t>();
    c.model.kernel_cols = m["kernel_cols"].get<std::size_t>();
    c.model.feature_maps = m["feature_maps"].get<std::size_t>();
    c.model.pool_rows = m["pool_rows"].get<std::size_t>();
    c.model.pool_cols = m["pool_cols"].get<std::size_t>();
    c.model.hidden_units = m["hidden_units"].get<std::size_t>();
    c.model.query_max_len = m["query_max_len"].get<std::size_t>();
    c.model.doc_max_len = m["doc_max_len"].get<std::size_t>();
    const auto& tr = j["train"];
    c.train.max_epochs = tr["max_epochs"].get<std::size_t>();
    c.train.triples_per_epoch = tr["triples_per_epoch"].get<std::size_t>();
    c.train.patience = tr["patience"].get<std::size_t>();
    c.train.batch_size = tr["batch_size"].get<std::size_t>();
    c.train.adam.learning_rate = tr["learning_rate"];
    c.train.adam.beta1 = tr["beta1"];
    c.train.adam.beta2 = tr["beta2"];
    c.train.adam.epsilon = tr["epsilon"];
    c.validation_fraction = tr["validation_fraction"];
    const auto& b = j["baseline"];
    c.baseline.scorer.kind = parse_scorer_kind(b["scorer"].get<std::string>());
    c.baseline.scorer.bm25.k1 = b["k1"];
    c.baseline.scorer.bm25.b = b["b"];
    c.baseline.scorer.mu = b["mu"];
    c.baseline.top_k = b["top_k"].get<std::size_t>();
    const auto& g = j["gradcheck"];
    c.gradcheck.triples = g["triples"].get<std::size_t>();
    c.gradcheck.step = g["step"];
    c.gradcheck.tolerance = g["tolerance"];
    c.gradcheck.max_parameters = g["max_parameters"].get<std::size_t>();
    c.gradcheck.embedding_dim = g["embedding_dim"].get<std::size_t>();
    c.gradcheck.vocab_size = g["vocab_size"].get<std::size_t>();
    c.gradcheck.max_doc_len = g["max_doc_len"].get<std::size_t>();
    c.train.seed = c.seed;
    c.train.threads = c.threads;
    return c;
}

RunConfig merged(const RunConfig& base, const json& given) {
    json j = to_json(base);
    merge_strict(j, given, "");
    RunConfig c = from_json(j);
    c.validate();
    return c;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source_name) {
    json given;
    try {
        given = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ConfigError(source_name + ": invalid JSON: " + e.what());
    }
    try {
        return merged(RunConfig{}, given);
    } catch (const ConfigError& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path + ": cannot open config file");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str(), path);
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("override '" + item + "' is not of the form section.key=value");
        }
        const std::string path = item.substr(0, eq);
        const std::string raw = item.substr(eq + 1);
        json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
        if (value.is_discarded()) {
            value = raw;
        }
        // Build {"a": {"b": value}} from "a.b".
        json patch = value;
        std::size_t end = path.size();
        while (true) {
            const auto dot = path.rfind('.', end - 1);
            const std::string key = path.substr(dot == std::string::npos ? 0 : dot + 1,
                                                end - (dot == std::string::npos ? 0 : dot + 1));
            patch = json{{key, patch}};
            if (dot == std::string::npos) {
                break;
            }
            end = dot;
        }
        config = merged(config, patch);
    }
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2); }

}  // namespace matchpyramid
