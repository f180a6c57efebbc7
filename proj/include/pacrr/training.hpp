#pragma once

#include "pacrr/corpus.hpp"
#include "pacrr/embedding.hpp"
#include "pacrr/model.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pacrr {

struct TrainConfig {
    /// Full passes over the training triples.
    std::size_t iterations = 100;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 1;
    /// Fraction of queries held out for validation.
    double validation_fraction = 0.2;

    void validate() const;
};

/// max(0, 1 - (rel_pos - rel_neg))
double hinge_loss(double rel_pos, double rel_neg);

/// Accumulates d_score * d(score)/d(params) for one forward trace into
/// `grads`. Max and k-max pooling route gradient to the recorded
/// argmax/source cells only; ReLU passes it where its output is positive.
void backward_score(const ForwardTrace& trace, const ModelParams& params, double d_score, GradientSet& grads);

/// Gradient of hinge_loss(forward(pos).score, forward(neg).score). All-zero
/// when the hinge is inactive. Throws pacrr::Error if a trace does not match
/// the parameters' config.
GradientSet backward(const ForwardTrace& pos, const ForwardTrace& neg, const ModelParams& params);

struct AdamState {
    explicit AdamState(const ModelConfig& config) : first(config), second(config) {}
    GradientSet first;
    GradientSet second;
};

/// One bias-corrected Adam update; `step` counts from 1.
void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state, const TrainConfig& config,
               std::size_t step);

/// A triple turned into model input.
struct SimPair {
    std::string query_id;
    SimMatrix positive;
    SimMatrix negative;
};

/// Builds both similarity matrices from the query's selected terms.
SimPair prepare_pair(const TrainingTriple& triple, const EmbeddingTable& table, const ModelConfig& config);

/// Fraction of pairs scored rel(positive) > rel(negative); ties count 0.5.
/// Empty input yields 0.0 and a warning on stderr.
double pairwise_accuracy(const ModelParams& params, std::span<const SimPair> pairs);
double pairwise_accuracy(const ModelParams& params, std::span<const TrainingTriple> triples,
                         const EmbeddingTable& table);

/// Order in which iteration `iteration` visits `count` training pairs; a
/// pure function of (seed, iteration).
std::vector<std::size_t> visit_order(std::uint64_t seed, std::size_t iteration, std::size_t count);

/// Query ids held out for validation, chosen by seeded shuffle.
std::vector<std::string> validation_queries(std::span<const TrainingTriple> triples, const TrainConfig& config);

struct HistoryRow {
    std::size_t iteration = 0;
    double mean_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<HistoryRow> history;
    std::size_t train_pairs = 0;
    std::size_t validation_pairs = 0;
};

using ProgressFn = std::function<void(const HistoryRow&)>;

/// Pairwise max-margin training with one Adam step per training triple.
TrainResult train(std::span<const TrainingTriple> triples, const EmbeddingTable& table,
                  const ModelConfig& model_config, const TrainConfig& train_config, const ProgressFn& progress = {});

/// CSV with header "iteration,mean_loss,val_accuracy".
void write_history_csv(std::ostream& out, std::span<const HistoryRow> history);

// Finite-difference check of backward().

struct TensorCheck {
    std::string name;
    double worst_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    double max_rel_error = 0.0;
    /// Instances discarded because a perturbation crossed a kink.
    std::size_t resampled = 0;
};

struct GradCheckOptions {
    double epsilon = 1e-5;
    /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
    /// Central-difference round-off is ~1e-11 at this epsilon, so gradients
    /// that are exactly zero (out.bias cancels in the hinge) need a floor
    /// well above it.
    double rel_floor = 1e-6;
    /// Test hook: perturb the analytic gradient before comparing.
    bool corrupt_backward = false;
};

/// Draws a random instance (two similarity matrices and parameters) from
/// `seed`, then compares backward() against central differences of the
/// hinge loss for every parameter entry.
GradCheckReport gradient_check(std::uint64_t seed, const ModelConfig& config, const GradCheckOptions& options = {});

/// The configuration used for gradient checks.
ModelConfig gradcheck_config();

}  // namespace pacrr
