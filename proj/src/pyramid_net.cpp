#include "matchpyramid/pyramid_net.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "matchpyramid/error.hpp"
#include "matchpyramid/random.hpp"

namespace matchpyramid {

void PyramidConfig::validate() const {
    const auto require = [](bool ok, const char* field) {
        if (!ok) {
            throw ConfigError(std::string("model config: ") + field + " must be >= 1");
        }
    };
    require(kernel_rows >= 1, "kernel_rows");
    require(kernel_cols >= 1, "kernel_cols");
    require(feature_maps >= 1, "feature_maps");
    require(pool_rows >= 1, "pool_rows");
    require(pool_cols >= 1, "pool_cols");
    require(hidden_units >= 1, "hidden_units");
    require(query_max_len >= 1, "query_max_len");
    require(doc_max_len >= 1, "doc_max_len");
    if (!(gaussian_sigma > 0.0) || !std::isfinite(gaussian_sigma)) {
        throw ConfigError("model config: gaussian_sigma must be a positive finite number");
    }
}

Parameters Parameters::zeros(const PyramidConfig& config) {
    Parameters p;
    p.conv_kernels.assign(config.feature_maps * config.kernel_rows * config.kernel_cols, 0.0);
    p.conv_bias.assign(config.feature_maps, 0.0);
    p.fc1_weights.assign(config.pooled_size() * config.hidden_units, 0.0);
    p.fc1_bias.assign(config.hidden_units, 0.0);
    p.fc2_weights.assign(config.hidden_units, 0.0);
    p.fc2_bias.assign(1, 0.0);
    return p;
}

std::size_t Parameters::count() const {
    std::size_t n = 0;
    for_each_block([&](std::string_view, const std::vector<double>& block) { n += block.size(); });
    return n;
}

bool Parameters::same_shape(const Parameters& other) const {
    return conv_kernels.size() == other.conv_kernels.size() && conv_bias.size() == other.conv_bias.size() &&
           fc1_weights.size() == other.fc1_weights.size() && fc1_bias.size() == other.fc1_bias.size() &&
           fc2_weights.size() == other.fc2_weights.size() && fc2_bias.size() == other.fc2_bias.size();
}

bool Parameters::all_finite() const {
    bool ok = true;
    for_each_block([&](std::string_view, const std::vector<double>& block) {
        ok = ok && std::all_of(block.begin(), block.end(), [](double v) { return std::isfinite(v); });
    });
    return ok;
}

PyramidModel PyramidModel::initialize(const PyramidConfig& config, std::uint64_t seed) {
    config.validate();
    PyramidModel model{config, Parameters::zeros(config)};
    Rng rng(seed);
    const auto fill = [&](std::vector<double>& block, std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& w : block) {
            w = rng.uniform(-limit, limit);
        }
    };
    const std::size_t window = config.kernel_rows * config.kernel_cols;
    fill(model.params.conv_kernels, window, config.feature_maps * window);
    fill(model.params.fc1_weights, config.pooled_size(), config.hidden_units);
    fill(model.params.fc2_weights, config.hidden_units, 1);
    return model;
}

void PyramidModel::check_shapes() const {
    const Parameters expected = Parameters::zeros(config);
    if (!params.same_shape(expected)) {
        throw ShapeError("model parameters do not match the model config");
    }
}

bool PyramidModel::same_config(const PyramidModel& other) const {
    const auto& a = config;
    const auto& b = other.config;
    return a.kernel_rows == b.kernel_rows && a.kernel_cols == b.kernel_cols && a.feature_maps == b.feature_maps &&
           a.pool_rows == b.pool_rows && a.pool_cols == b.pool_cols && a.hidden_units == b.hidden_units &&
           a.similarity == b.similarity && a.gaussian_sigma == b.gaussian_sigma &&
           a.query_max_len == b.query_max_len && a.doc_max_len == b.doc_max_len;
}

std::vector<std::size_t> pool_boundaries(std::size_t length, std::size_t cells) {
    const std::size_t padded = std::max(length, cells);
    std::vector<std::size_t> bounds(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) {
        bounds[i] = i * padded / cells;
    }
    return bounds;
}

FeatureMaps conv2d_forward(const MatchingMatrix& matrix, const PyramidModel& model) {
    const auto& cfg = model.config;
    if (matrix.rows == 0 || matrix.cols == 0 || matrix.values.size() != matrix.rows * matrix.cols) {
        throw ShapeError("conv2d_forward: malformed matching matrix");
    }
    model.check_shapes();
    const auto kr = cfg.kernel_rows;
    const auto kc = cfg.kernel_cols;
    const auto top = static_cast<std::ptrdiff_t>((kr - 1) / 2);
    const auto left = static_cast<std::ptrdiff_t>((kc - 1) / 2);
    const auto rows = static_cast<std::ptrdiff_t>(matrix.rows);
    const auto cols = static_cast<std::ptrdiff_t>(matrix.cols);

    FeatureMaps out(cfg.feature_maps, matrix.rows, matrix.cols);
    for (std::size_t f = 0; f < cfg.feature_maps; ++f) {
        const double* kernel = model.params.conv_kernels.data() + f * kr * kc;
        const double bias = model.params.conv_bias[f];
        for (std::ptrdiff_t i = 0; i < rows; ++i) {
            for (std::ptrdiff_t j = 0; j < cols; ++j) {
                double acc = bias;
                for (std::size_t a = 0; a < kr; ++a) {
                    const std::ptrdiff_t r = i + static_cast<std::ptrdiff_t>(a) - top;
                    if (r < 0 || r >= rows) {
                        continue;
                    }
                    for (std::size_t b = 0; b < kc; ++b) {
                        const std::ptrdiff_t c = j + static_cast<std::ptrdiff_t>(b) - left;
                        if (c < 0 || c >= cols) {
                            continue;
                        }
                        acc += kernel[a * kc + b] * matrix.values[static_cast<std::size_t>(r * cols + c)];
                    }
                }
                out.at(f, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
            }
        }
    }
    return out;
}

FeatureMaps relu(const FeatureMaps& maps) {
    FeatureMaps out = maps;
    for (auto& v : out.values) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

PooledMaps dynamic_max_pool(const FeatureMaps& maps, std::size_t pool_rows, std::size_t pool_cols) {
    if (maps.rows == 0 || maps.cols == 0 || pool_rows == 0 || pool_cols == 0) {
        throw ShapeError("dynamic_max_pool: dimensions must be >= 1");
    }
    const auto row_bounds = pool_boundaries(maps.rows, pool_rows);
    const auto col_bounds = pool_boundaries(maps.cols, pool_cols);

    PooledMaps out;
    out.values = FeatureMaps(maps.maps, pool_rows, pool_cols);
    out.argmax.resize(maps.maps * pool_rows * pool_cols);
    out.padded_rows = std::max(maps.rows, pool_rows);
    out.padded_cols = std::max(maps.cols, pool_cols);

    // Cells outside the input extent read as zero padding.
    const auto value = [&](std::size_t f, std::size_t r, std::size_t c) {
        return (r < maps.rows && c < maps.cols) ? maps.at(f, r, c) : 0.0;
    };
    for (std::size_t f = 0; f < maps.maps; ++f) {
        for (std::size_t pi = 0; pi < pool_rows; ++pi) {
            for (std::size_t pj = 0; pj < pool_cols; ++pj) {
                GridCoord best{row_bounds[pi], col_bounds[pj]};
                double best_value = value(f, best.row, best.col);
                for (std::size_t r = row_bounds[pi]; r < row_bounds[pi + 1]; ++r) {
                    for (std::size_t c = col_bounds[pj]; c < col_bounds[pj + 1]; ++c) {
                        const double v = value(f, r, c);
                        if (v > best_value) {
                            best_value = v;
                            best = {r, c};
                        }
                    }
                }
                out.values.at(f, pi, pj) = best_value;
                out.argmax[(f * pool_rows + pi) * pool_cols + pj] = best;
            }
        }
    }
    return out;
}

MlpTrace mlp_forward(std::span<const double> pooled, const PyramidModel& model) {
    const auto& cfg = model.config;
    if (pooled.size() != cfg.pooled_size()) {
        throw ShapeError("mlp_forward: input length " + std::to_string(pooled.size()) + " != expected " +
                         std::to_string(cfg.pooled_size()));
    }
    model.check_shapes();
    const auto hidden = cfg.hidden_units;
    const auto& p = model.params;

    MlpTrace trace;
    trace.hidden_pre.assign(p.fc1_bias.begin(), p.fc1_bias.end());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        const double x = pooled[i];
        if (x == 0.0) {
            continue;
        }
        const double* row = p.fc1_weights.data() + i * hidden;
        for (std::size_t h = 0; h < hidden; ++h) {
            trace.hidden_pre[h] += row[h] * x;
        }
    }
    trace.hidden_post.resize(hidden);
    double s = 0.0;
    for (std::size_t h = 0; h < hidden; ++h) {
        trace.hidden_post[h] = trace.hidden_pre[h] > 0.0 ? trace.hidden_pre[h] : 0.0;
        s += p.fc2_weights[h] * trace.hidden_post[h];
    }
    trace.score = s + p.fc2_bias[0];
    return trace;
}

ForwardTrace forward_matrix(MatchingMatrix matrix, const PyramidModel& model) {
    ForwardTrace trace;
    trace.conv_pre = conv2d_forward(matrix, model);
    trace.conv_post = relu(trace.conv_pre);
    trace.pooled = dynamic_max_pool(trace.conv_post, model.config.pool_rows, model.config.pool_cols);
    auto mlp = mlp_forward(trace.pooled.values.values, model);
    trace.matrix = std::move(matrix);
    trace.hidden_pre = std::move(mlp.hidden_pre);
    trace.hidden_post = std::move(mlp.hidden_post);
    trace.score = mlp.score;
    return trace;
}

ForwardTrace forward(const TokenizedText& query, const TokenizedText& doc, const PyramidModel& model,
                     const EmbeddingTable& embeddings) {
    return forward_matrix(
        build_matching_matrix(query, doc, model.config.similarity, embeddings, model.config.similarity_options()),
        model);
}

double score(const TokenizedText& query, const TokenizedText& doc, const PyramidModel& model,
             const EmbeddingTable& embeddings) {
    return forward(query, doc, model, embeddings).score;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {

constexpr std::string_view kModelTag = "matchpyramid-model v1";

std::string hex_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hex_double(const std::string& text, const std::string& source, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') {
        throw ParseError(source, line, "not a number: '" + text + "'");
    }
    return v;
}

}  // namespace

void save_model(std::ostream& out, const PyramidModel& model, const ModelMetadata& metadata) {
    model.config.validate();
    model.check_shapes();
    const auto& c = model.config;
    out << kModelTag << '\n';
    out << "similarity " << to_string(c.similarity) << '\n';
    out << "gaussian_sigma " << hex_double(c.gaussian_sigma) << '\n';
    out << "kernel " << c.kernel_rows << ' ' << c.kernel_cols << '\n';
    out << "feature_maps " << c.feature_maps << '\n';
    out << "pool " << c.pool_rows << ' ' << c.pool_cols << '\n';
    out << "hidden_units " << c.hidden_units << '\n';
    out << "query_max_len " << c.query_max_len << '\n';
    out << "doc_max_len " << c.doc_max_len << '\n';
    for (const auto& [key, value] : metadata) {
        if (key.empty() || key.find_first_of(" \t\n") != std::string::npos ||
            value.find('\n') != std::string::npos) {
            throw Error("save_model: metadata key/value not representable: '" + key + "'");
        }
        out << "meta " << key << ' ' << value << '\n';
    }
    model.params.for_each_block([&](std::string_view name, const std::vector<double>& block) {
        out << "block " << name << ' ' << block.size() << '\n';
        for (std::size_t i = 0; i < block.size(); ++i) {
            out << hex_double(block[i]) << ((i + 1) % 8 == 0 || i + 1 == block.size() ? '\n' : ' ');
        }
    });
    out << "end\n";
}

void save_model(const std::string& path, const PyramidModel& model, const ModelMetadata& metadata) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(path + ": cannot open for writing");
    }
    save_model(out, model, metadata);
    if (!out) {
        throw Error(path + ": write failed");
    }
}

PyramidModel load_model(std::istream& in, const std::string& source_name, ModelMetadata* metadata) {
    std::string line;
    std::size_t line_no = 0;
    const auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) {
            return false;
        }
        ++line_no;
        return true;
    };
    if (!next_line() || line != kModelTag) {
        throw ParseError(source_name, 1, "not a model file (expected '" + std::string(kModelTag) + "')");
    }

    PyramidModel model;
    auto& c = model.config;
    Parameters params;
    std::map<std::string, std::vector<double>*> blocks;
    params.for_each_block([&](std::string_view name, std::vector<double>& block) { blocks[std::string(name)] = &block; });
    std::map<std::string, bool> seen_blocks;
    bool ended = false;

    const auto parse_size = [&](std::istringstream& fields) {
        std::size_t v = 0;
        if (!(fields >> v)) {
            throw ParseError(source_name, line_no, "expected an unsigned integer");
        }
        return v;
    };

    while (next_line()) {
        std::istringstream fields(line);
        std::string key;
        fields >> key;
        if (key.empty()) {
            continue;
        }
        if (key == "end") {
            ended = true;
            break;
        } else if (key == "similarity") {
            std::string name;
            fields >> name;
            c.similarity = parse_similarity_kind(name);
        } else if (key == "gaussian_sigma") {
            std::string v;
            fields >> v;
            c.gaussian_sigma = parse_hex_double(v, source_name, line_no);
        } else if (key == "kernel") {
            c.kernel_rows = parse_size(fields);
            c.kernel_cols = parse_size(fields);
        } else if (key == "feature_maps") {
            c.feature_maps = parse_size(fields);
        } else if (key == "pool") {
            c.pool_rows = parse_size(fields);
            c.pool_cols = parse_size(fields);
        } else if (key == "hidden_units") {
            c.hidden_units = parse_size(fields);
        } else if (key == "query_max_len") {
            c.query_max_len = parse_size(fields);
        } else if (key == "doc_max_len") {
            c.doc_max_len = parse_size(fields);
        } else if (key == "meta") {
            std::string meta_key;
            fields >> meta_key;
            std::string value;
            std::getline(fields, value);
            if (!value.empty() && value.front() == ' ') {
                value.erase(0, 1);
            }
            if (metadata != nullptr) {
                (*metadata)[meta_key] = value;
            }
        } else if (key == "block") {
            std::string name;
            fields >> name;
            const std::size_t size = parse_size(fields);
            const auto it = blocks.find(name);
            if (it == blocks.end()) {
                throw ParseError(source_name, line_no, "unknown parameter block '" + name + "'");
            }
            auto& block = *it->second;
            block.clear();
            block.reserve(size);
            while (block.size() < size) {
                if (!next_line()) {
                    throw ParseError(source_name, line_no, "truncated block '" + name + "'");
                }
                std::istringstream values(line);
                std::string token;
                while (values >> token) {
                    if (block.size() == size) {
                        throw ParseError(source_name, line_no, "too many values in block '" + name + "'");
                    }
                    block.push_back(parse_hex_double(token, source_name, line_no));
                }
            }
            seen_blocks[name] = true;
        } else {
            throw ParseError(source_name, line_no, "unknown key '" + key + "'");
        }
    }
    if (!ended) {
        throw ParseError(source_name, line_no, "missing 'end' line");
    }
    if (seen_blocks.size() != blocks.size()) {
        throw ParseError(source_name, line_no, "missing parameter blocks");
    }
    c.validate();
    model.params = std::move(params);
    model.check_shapes();
    if (!model.params.all_finite()) {
        throw NumericError(source_name + ": model contains non-finite parameters");
    }
    return model;
}

PyramidModel load_model(const std::string& path, ModelMetadata* metadata) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(path + ": cannot open model file");
    }
    return load_model(in, path, metadata);
}

}  // namespace matchpyramid
