#include "matchpyramid/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "matchpyramid/error.hpp"
#include "matchpyramid/parallel.hpp"
#include "matchpyramid/random.hpp"

namespace matchpyramid {
namespace {

struct Block {
    std::string_view name;
    std::vector<double>* values;
};

struct ConstBlock {
    std::string_view name;
    const std::vector<double>* values;
};

std::array<Block, 6> blocks_of(Parameters& p) {
    std::array<Block, 6> out{};
    std::size_t i = 0;
    p.for_each_block([&](std::string_view name, std::vector<double>& block) { out[i++] = {name, &block}; });
    return out;
}

std::array<ConstBlock, 6> blocks_of(const Parameters& p) {
    std::array<ConstBlock, 6> out{};
    std::size_t i = 0;
    p.for_each_block([&](std::string_view name, const std::vector<double>& block) { out[i++] = {name, &block}; });
    return out;
}

const TokenizedText& lookup_text(const TokenizedCollection& texts, const std::string& id, const char* what) {
    const auto it = texts.find(id);
    if (it == texts.end()) {
        throw Error(std::string(what) + " '" + id + "' not found");
    }
    return it->second;
}

}  // namespace

double hinge_loss(double s_pos, double s_neg) { return std::max(0.0, 1.0 - s_pos + s_neg); }

void accumulate_score_gradient(const ForwardTrace& trace, const PyramidModel& model, double dscore,
                               Gradients& grads) {
    const auto& cfg = model.config;
    const auto& p = model.params;
    const std::size_t hidden = cfg.hidden_units;
    if (!grads.same_shape(p) || trace.hidden_pre.size() != hidden || trace.hidden_post.size() != hidden ||
        trace.pooled.values.values.size() != cfg.pooled_size() || trace.pooled.argmax.size() != cfg.pooled_size() ||
        trace.conv_pre.maps != cfg.feature_maps || trace.conv_pre.rows != trace.matrix.rows ||
        trace.conv_pre.cols != trace.matrix.cols) {
        throw ShapeError("backward: trace does not match the model");
    }

    // Output layer.
    grads.fc2_bias[0] += dscore;
    std::vector<double> d_hidden(hidden, 0.0);
    for (std::size_t h = 0; h < hidden; ++h) {
        grads.fc2_weights[h] += dscore * trace.hidden_post[h];
        if (trace.hidden_pre[h] > 0.0) {
            d_hidden[h] = dscore * p.fc2_weights[h];
        }
        grads.fc1_bias[h] += d_hidden[h];
    }

    // Hidden layer, and gradient w.r.t. the pooled input.
    const auto& x = trace.pooled.values.values;
    std::vector<double> d_pooled(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double* w = p.fc1_weights.data() + i * hidden;
        double* gw = grads.fc1_weights.data() + i * hidden;
        double acc = 0.0;
        for (std::size_t h = 0; h < hidden; ++h) {
            gw[h] += x[i] * d_hidden[h];
            acc += w[h] * d_hidden[h];
        }
        d_pooled[i] = acc;
    }

    // Pooling routes each cell's gradient to its argmax; regions are disjoint,
    // so every conv cell receives at most one contribution. ReLU passes it
    // only where the pre-activation was positive.
    const auto kr = cfg.kernel_rows;
    const auto kc = cfg.kernel_cols;
    const auto top = static_cast<std::ptrdiff_t>((kr - 1) / 2);
    const auto left = static_cast<std::ptrdiff_t>((kc - 1) / 2);
    const auto rows = static_cast<std::ptrdiff_t>(trace.matrix.rows);
    const auto cols = static_cast<std::ptrdiff_t>(trace.matrix.cols);
    const std::size_t cells_per_map = cfg.pool_rows * cfg.pool_cols;
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        const std::size_t f = idx / cells_per_map;
        const GridCoord at = trace.pooled.argmax[idx];
        if (at.row >= trace.matrix.rows || at.col >= trace.matrix.cols) {
            continue;  // padding
        }
        if (!(trace.conv_pre.at(f, at.row, at.col) > 0.0)) {
            continue;
        }
        const double g = d_pooled[idx];
        grads.conv_bias[f] += g;
        double* gk = grads.conv_kernels.data() + f * kr * kc;
        for (std::size_t a = 0; a < kr; ++a) {
            const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(at.row + a) - top;
            if (r < 0 || r >= rows) {
                continue;
            }
            for (std::size_t b = 0; b < kc; ++b) {
                const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(at.col + b) - left;
                if (c < 0 || c >= cols) {
                    continue;
                }
                gk[a * kc + b] += g * trace.matrix.values[static_cast<std::size_t>(r * cols + c)];
            }
        }
    }
}

Gradients backward(const ForwardTrace& positive, const ForwardTrace& negative, const PyramidModel& model) {
    model.check_shapes();
    Gradients grads = Parameters::zeros(model.config);
    if (hinge_loss(positive.score, negative.score) <= 0.0) {
        return grads;
    }
    accumulate_score_gradient(positive, model, -1.0, grads);
    accumulate_score_gradient(negative, model, 1.0, grads);
    return grads;
}

AdamState AdamState::fresh(const PyramidModel& model, const AdamOptions& options) {
    AdamState state;
    state.first_moment = Parameters::zeros(model.config);
    state.second_moment = Parameters::zeros(model.config);
    state.options = options;
    return state;
}

void adam_step(PyramidModel& model, const Gradients& grads, AdamState& state) {
    if (!grads.same_shape(model.params) || !state.first_moment.same_shape(model.params) ||
        !state.second_moment.same_shape(model.params)) {
        throw ShapeError("adam_step: gradient/state shapes do not match the model");
    }
    const auto g_blocks = blocks_of(grads);
    for (const auto& block : g_blocks) {
        for (const double g : *block.values) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in block '" + std::string(block.name) + "'");
            }
        }
    }

    const auto& o = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);

    auto theta = blocks_of(model.params);
    auto m = blocks_of(state.first_moment);
    auto v = blocks_of(state.second_moment);
    for (std::size_t b = 0; b < theta.size(); ++b) {
        auto& tb = *theta[b].values;
        auto& mb = *m[b].values;
        auto& vb = *v[b].values;
        const auto& gb = *g_blocks[b].values;
        for (std::size_t i = 0; i < tb.size(); ++i) {
            const double g = gb[i];
            mb[i] = o.beta1 * mb[i] + (1.0 - o.beta1) * g;
            vb[i] = o.beta2 * vb[i] + (1.0 - o.beta2) * g * g;
            const double m_hat = mb[i] / correction1;
            const double v_hat = vb[i] / correction2;
            tb[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
        }
    }
}

std::vector<TrainingTriple> sample_triples(const Qrels& qrels, const RankedRun& candidates, std::uint64_t seed,
                                           std::size_t n) {
    struct Pool {
        const std::string* query;
        std::vector<const std::string*> positives;
        std::vector<const std::string*> negatives;
    };
    std::vector<Pool> eligible;
    for (const auto& [qid, docs] : candidates) {
        const auto judged = qrels.find(qid);
        Pool pool{&qid, {}, {}};
        for (const auto& d : docs) {
            int grade = 0;
            if (judged != qrels.end()) {
                const auto it = judged->second.find(d.doc_id);
                grade = it == judged->second.end() ? 0 : it->second;
            }
            (grade >= 1 ? pool.positives : pool.negatives).push_back(&d.doc_id);
        }
        if (!pool.positives.empty() && !pool.negatives.empty()) {
            eligible.push_back(std::move(pool));
        }
    }
    if (eligible.empty()) {
        throw Error("sample_triples: no query has both a positive and a negative candidate");
    }

    Rng rng(seed);
    std::vector<TrainingTriple> triples;
    triples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& pool = eligible[rng.below(eligible.size())];
        const auto* pos = pool.positives[rng.below(pool.positives.size())];
        const auto* neg = pool.negatives[rng.below(pool.negatives.size())];
        triples.push_back({*pool.query, *pos, *neg});
    }
    return triples;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) {
        throw ConfigError("train config: max_epochs must be >= 1");
    }
    if (patience < 1) {
        throw ConfigError("train config: patience must be >= 1");
    }
    if (triples_per_epoch < 1) {
        throw ConfigError("train config: triples_per_epoch must be >= 1");
    }
    if (batch_size < 1) {
        throw ConfigError("train config: batch_size must be >= 1");
    }
    if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
        !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0)) {
        throw ConfigError("train config: Adam needs learning_rate > 0, beta1/beta2 in [0,1), epsilon > 0");
    }
}

RankedRun rerank(const RankedRun& candidates, const TokenizedCollection& queries, const TokenizedCollection& docs,
                 const PyramidModel& model, const EmbeddingTable& embeddings, std::size_t threads) {
    std::vector<const std::string*> qids;
    std::vector<std::vector<ScoredDoc>> results(candidates.size());
    for (const auto& [qid, list] : candidates) {
        qids.push_back(&qid);
    }
    parallel_for(qids.size(), threads, [&](std::size_t i) {
        const auto& query = lookup_text(queries, *qids[i], "query");
        auto& out = results[i];
        for (const auto& cand : candidates.at(*qids[i])) {
            const auto& doc = lookup_text(docs, cand.doc_id, "document");
            // An empty text has no matching matrix; it sinks to the bottom.
            const double s = (query.empty() || doc.empty()) ? std::numeric_limits<double>::lowest()
                                                            : score(query, doc, model, embeddings);
            out.push_back({cand.doc_id, s});
        }
        sort_ranking(out);
    });
    RankedRun run;
    for (std::size_t i = 0; i < qids.size(); ++i) {
        run[*qids[i]] = std::move(results[i]);
    }
    return run;
}

TrainResult train(const TrainingData& data, PyramidModel model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    model.config.validate();
    model.check_shapes();
    if (data.queries == nullptr || data.docs == nullptr || data.embeddings == nullptr) {
        throw Error("train: queries, documents and embeddings are required");
    }
    if (data.train_candidates.empty() || data.validation_candidates.empty()) {
        throw Error("train: training and validation candidate sets must be non-empty");
    }

    TrainResult result;
    result.model = model;
    AdamState state = AdamState::fresh(model, config.adam);
    double best_map = -std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto triples = sample_triples(data.qrels, data.train_candidates,
                                            derive_seed(config.seed, "epoch-" + std::to_string(epoch)),
                                            config.triples_per_epoch);
        Gradients batch = Parameters::zeros(model.config);
        std::size_t in_batch = 0;
        bool batch_active = false;
        double loss_sum = 0.0;
        std::size_t updates = 0;

        for (std::size_t k = 0; k < triples.size(); ++k) {
            const auto& t = triples[k];
            const auto& query = lookup_text(*data.queries, t.query_id, "query");
            const auto pos = forward(query, lookup_text(*data.docs, t.positive_id, "document"), model,
                                     *data.embeddings);
            const auto neg = forward(query, lookup_text(*data.docs, t.negative_id, "document"), model,
                                     *data.embeddings);
            const double loss = hinge_loss(pos.score, neg.score);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", triple (" << t.query_id << ", "
                    << t.positive_id << ", " << t.negative_id << "), scores " << pos.score << " / " << neg.score;
                throw NumericError(msg.str());
            }
            loss_sum += loss;
            if (loss > 0.0) {
                accumulate_score_gradient(pos, model, -1.0, batch);
                accumulate_score_gradient(neg, model, 1.0, batch);
                batch_active = true;
            }
            ++in_batch;
            if (in_batch == config.batch_size || k + 1 == triples.size()) {
                if (batch_active) {
                    if (in_batch > 1) {
                        const double scale = 1.0 / static_cast<double>(in_batch);
                        for (auto& b : blocks_of(batch)) {
                            for (auto& g : *b.values) {
                                g *= scale;
                            }
                        }
                    }
                    adam_step(model, batch, state);
                    ++updates;
                    batch = Parameters::zeros(model.config);
                }
                in_batch = 0;
                batch_active = false;
            }
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = loss_sum / static_cast<double>(triples.size());
        entry.updates = updates;
        const auto run =
            rerank(data.validation_candidates, *data.queries, *data.docs, model, *data.embeddings, config.threads);
        entry.validation_map = evaluate_run(run, data.qrels).map;
        entry.best = entry.validation_map > best_map;
        if (entry.best) {
            best_map = entry.validation_map;
            result.model = model;
            result.best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
        }
        result.log.push_back(entry);
        if (on_epoch) {
            on_epoch(entry, model);
        }
        if (stale >= config.patience) {
            break;
        }
    }
    return result;
}

void write_training_log(std::ostream& out, const std::vector<EpochLog>& log) {
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%d\n", e.epoch, e.mean_loss, e.validation_map,
                      e.best ? 1 : 0);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check

namespace {

// Everything that decides which linear piece of the loss we are on.
struct ActivationPattern {
    std::vector<bool> active;
    std::vector<GridCoord> argmax;

    bool operator==(const ActivationPattern&) const = default;
};

struct Evaluation {
    long double loss;
    ActivationPattern pattern;
};

// Score of one matrix, recomputed in extended precision. Parameter
// gradients that cancel exactly (the output bias, or a hidden bias whose unit
// is active for both documents) would otherwise show a one-ulp loss
// difference of ~1e-11 after dividing by 2h, far above the 1e-8 floor.
long double extended_score(const PyramidModel& model, const MatchingMatrix& m, ActivationPattern& pattern) {
    using real = long double;
    const auto& cfg = model.config;
    const auto& p = model.params;
    const std::size_t kr = cfg.kernel_rows;
    const std::size_t kc = cfg.kernel_cols;
    const auto top = static_cast<std::ptrdiff_t>((kr - 1) / 2);
    const auto left = static_cast<std::ptrdiff_t>((kc - 1) / 2);
    const auto rows = static_cast<std::ptrdiff_t>(m.rows);
    const auto cols = static_cast<std::ptrdiff_t>(m.cols);

    std::vector<real> conv(cfg.feature_maps * m.rows * m.cols);
    for (std::size_t f = 0; f < cfg.feature_maps; ++f) {
        for (std::ptrdiff_t i = 0; i < rows; ++i) {
            for (std::ptrdiff_t j = 0; j < cols; ++j) {
                real acc = p.conv_bias[f];
                for (std::size_t a = 0; a < kr; ++a) {
                    for (std::size_t b = 0; b < kc; ++b) {
                        const std::ptrdiff_t r = i + static_cast<std::ptrdiff_t>(a) - top;
                        const std::ptrdiff_t c = j + static_cast<std::ptrdiff_t>(b) - left;
                        if (r >= 0 && r < rows && c >= 0 && c < cols) {
                            acc += static_cast<real>(p.conv_kernels[(f * kr + a) * kc + b]) *
                                   m.values[static_cast<std::size_t>(r * cols + c)];
                        }
                    }
                }
                pattern.active.push_back(acc > 0);
                conv[(f * m.rows + static_cast<std::size_t>(i)) * m.cols + static_cast<std::size_t>(j)] =
                    acc > 0 ? acc : 0;
            }
        }
    }

    const auto rb = pool_boundaries(m.rows, cfg.pool_rows);
    const auto cb = pool_boundaries(m.cols, cfg.pool_cols);
    std::vector<real> pooled;
    pooled.reserve(cfg.pooled_size());
    for (std::size_t f = 0; f < cfg.feature_maps; ++f) {
        const auto at = [&](std::size_t r, std::size_t c) -> real {
            return r < m.rows && c < m.cols ? conv[(f * m.rows + r) * m.cols + c] : 0;
        };
        for (std::size_t pi = 0; pi < cfg.pool_rows; ++pi) {
            for (std::size_t pj = 0; pj < cfg.pool_cols; ++pj) {
                GridCoord best{rb[pi], cb[pj]};
                real best_value = at(best.row, best.col);
                for (std::size_t r = rb[pi]; r < rb[pi + 1]; ++r) {
                    for (std::size_t c = cb[pj]; c < cb[pj + 1]; ++c) {
                        if (at(r, c) > best_value) {
                            best_value = at(r, c);
                            best = {r, c};
                        }
                    }
                }
                pooled.push_back(best_value);
                pattern.argmax.push_back(best);
            }
        }
    }

    std::vector<real> pre(p.fc1_bias.begin(), p.fc1_bias.end());
    for (std::size_t k = 0; k < pooled.size(); ++k) {
        if (pooled[k] == 0) {
            continue;
        }
        const double* w = p.fc1_weights.data() + k * cfg.hidden_units;
        for (std::size_t h = 0; h < cfg.hidden_units; ++h) {
            pre[h] += pooled[k] * static_cast<real>(w[h]);
        }
    }
    real score = p.fc2_bias[0];
    for (std::size_t h = 0; h < cfg.hidden_units; ++h) {
        pattern.active.push_back(pre[h] > 0);
        if (pre[h] > 0) {
            score += static_cast<real>(p.fc2_weights[h]) * pre[h];
        }
    }
    return score;
}

Evaluation evaluate_loss(const PyramidModel& model, const MatchingMatrix& positive, const MatchingMatrix& negative) {
    Evaluation e{};
    const long double s_pos = extended_score(model, positive, e.pattern);
    const long double s_neg = extended_score(model, negative, e.pattern);
    const long double margin = 1.0L - s_pos + s_neg;
    e.loss = margin > 0 ? margin : 0;
    e.pattern.active.push_back(margin > 0);
    return e;
}

}  // namespace

GradCheckReport grad_check_against(const PyramidModel& model, const MatchingMatrix& positive,
                                   const MatchingMatrix& negative, const Gradients& analytic,
                                   const GradCheckOptions& options) {
    model.check_shapes();
    if (!analytic.same_shape(model.params)) {
        throw ShapeError("grad_check: gradient shape does not match the model");
    }
    PyramidModel probe = model;
    auto probe_blocks = blocks_of(probe.params);
    const auto grad_blocks = blocks_of(analytic);

    struct Coord {
        std::size_t block;
        std::size_t index;
    };
    std::vector<Coord> coords;
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        for (std::size_t i = 0; i < probe_blocks[b].values->size(); ++i) {
            coords.push_back({b, i});
        }
    }
    GradCheckReport report;
    report.total_parameters = coords.size();
    if (coords.size() > options.max_parameters) {
        // Partial Fisher-Yates: a seeded uniform subset, then restore order.
        Rng rng(options.seed);
        for (std::size_t i = 0; i < options.max_parameters; ++i) {
            const std::size_t j = i + rng.below(coords.size() - i);
            std::swap(coords[i], coords[j]);
        }
        coords.resize(options.max_parameters);
        std::sort(coords.begin(), coords.end(), [](const Coord& a, const Coord& b) {
            return a.block != b.block ? a.block < b.block : a.index < b.index;
        });
    }

    const Evaluation base = evaluate_loss(probe, positive, negative);
    double sum = 0.0;
    for (const auto& c : coords) {
        double& theta = (*probe_blocks[c.block].values)[c.index];
        const double original = theta;
        theta = original + options.step;
        const Evaluation plus = evaluate_loss(probe, positive, negative);
        theta = original - options.step;
        const Evaluation minus = evaluate_loss(probe, positive, negative);
        theta = original;
        if (!(plus.pattern == base.pattern) || !(minus.pattern == base.pattern)) {
            ++report.skipped_kinks;
            continue;
        }
        const double numeric = static_cast<double>((plus.loss - minus.loss) / (2.0L * options.step));
        const double exact = (*grad_blocks[c.block].values)[c.index];
        const double rel = std::abs(exact - numeric) / std::max(std::abs(exact) + std::abs(numeric), 1e-8);
        ++report.checked;
        sum += rel;
        if (rel > report.max_relative_error || report.worst_parameter.empty()) {
            report.max_relative_error = rel;
            report.worst_parameter = std::string(probe_blocks[c.block].name) + "[" + std::to_string(c.index) + "]";
        }
    }
    report.mean_relative_error = report.checked > 0 ? sum / static_cast<double>(report.checked) : 0.0;
    report.passed = report.max_relative_error < options.tolerance;
    return report;
}

GradCheckReport grad_check(const PyramidModel& model, const MatchingMatrix& positive, const MatchingMatrix& negative,
                           const GradCheckOptions& options) {
    const auto pos = forward_matrix(positive, model);
    const auto neg = forward_matrix(negative, model);
    return grad_check_against(model, positive, negative, backward(pos, neg, model), options);
}

}  // namespace matchpyramid
