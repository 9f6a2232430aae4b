#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "matchpyramid/evaluation.hpp"
#include "matchpyramid/pyramid_net.hpp"
#include "matchpyramid/text.hpp"

namespace matchpyramid {

struct TrainingTriple {
    std::string query_id;
    std::string positive_id;
    std::string negative_id;
    bool operator==(const TrainingTriple&) const = default;
};

/// max(0, 1 - s_pos + s_neg).
double hinge_loss(double s_pos, double s_neg);

/// Adds dscore * d(score)/d(params) for one forward trace into `grads`.
/// Only pooling argmax cells inside the unpadded input receive gradient.
void accumulate_score_gradient(const ForwardTrace& trace, const PyramidModel& model, double dscore,
                               Gradients& grads);

/// Exact gradient of the hinge loss for one triple. All zero when the
/// triple's loss is already 0.
Gradients backward(const ForwardTrace& positive, const ForwardTrace& negative, const PyramidModel& model);

struct AdamOptions {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    Parameters first_moment;
    Parameters second_moment;
    std::uint64_t step = 0;
    AdamOptions options;

    static AdamState fresh(const PyramidModel& model, const AdamOptions& options = {});
};

/// One bias-corrected Adam update. Throws NumericError naming the block if a
/// gradient is not finite, ShapeError if shapes disagree.
void adam_step(PyramidModel& model, const Gradients& grads, AdamState& state);

/// Draws n triples: a query uniformly among those with >= 1 positive
/// (grade >= 1) and >= 1 negative (grade 0 or unjudged) candidate, then one
/// positive and one negative uniformly from its candidates.
std::vector<TrainingTriple> sample_triples(const Qrels& qrels, const RankedRun& candidates, std::uint64_t seed,
                                           std::size_t n);

struct TrainConfig {
    std::size_t max_epochs = 50;
    std::size_t triples_per_epoch = 1000;
    std::size_t patience = 5;
    std::size_t batch_size = 1;  // > 1 averages gradients over the batch
    AdamOptions adam;
    std::uint64_t seed = 42;     // sampling stream; initialisation is seeded separately
    std::size_t threads = 1;     // validation fan-out only

    void validate() const;
};

/// Everything train() reads. Query and document texts must be encoded.
struct TrainingData {
    const TokenizedCollection* queries = nullptr;
    const TokenizedCollection* docs = nullptr;
    const EmbeddingTable* embeddings = nullptr;
    Qrels qrels;
    RankedRun train_candidates;
    RankedRun validation_candidates;
};

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double validation_map = 0.0;
    bool best = false;
    std::size_t updates = 0;
};

struct TrainResult {
    PyramidModel model;  // best-validation snapshot
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

/// Re-scores every candidate list with the model (ties by doc id).
RankedRun rerank(const RankedRun& candidates, const TokenizedCollection& queries, const TokenizedCollection& docs,
                 const PyramidModel& model, const EmbeddingTable& embeddings, std::size_t threads = 1);

/// Called after every epoch with its log entry and the current (not the best) model.
using EpochCallback = std::function<void(const EpochLog&, const PyramidModel&)>;

/// Pairwise training with early stopping on validation MAP. Returns the
/// snapshot with the highest validation MAP; ties keep the earlier epoch.
TrainResult train(const TrainingData& data, PyramidModel model, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// "epoch<TAB>mean_loss<TAB>val_MAP<TAB>best_flag" per line.
void write_training_log(std::ostream& out, const std::vector<EpochLog>& log);

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    std::size_t max_parameters = 10000;  // above this, a seeded subsample is checked
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double mean_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;  // perturbation crossed a ReLU/argmax/hinge boundary
    std::size_t total_parameters = 0;
    std::string worst_parameter;
    bool passed = true;
};

/// Central-difference check of `analytic` against the hinge loss of the
/// (positive, negative) pair. Relative error is
/// |a - n| / max(|a| + |n|, 1e-8).
GradCheckReport grad_check_against(const PyramidModel& model, const MatchingMatrix& positive,
                                   const MatchingMatrix& negative, const Gradients& analytic,
                                   const GradCheckOptions& options = {});

/// grad_check_against() with the gradient from backward().
GradCheckReport grad_check(const PyramidModel& model, const MatchingMatrix& positive, const MatchingMatrix& negative,
                           const GradCheckOptions& options = {});

}  // namespace matchpyramid
