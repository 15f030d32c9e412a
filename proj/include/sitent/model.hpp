#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sitent/corpus.hpp"
#include "sitent/crf.hpp"
#include "sitent/embed.hpp"
#include "sitent/metrics.hpp"
#include "sitent/nncore.hpp"

namespace sitent {

enum class ModelVariant {
    ClauseLevel,   // word Bi-LSTM runs per clause, no clause-level layer
    Paragraph,     // word Bi-LSTM over the whole paragraph + clause Bi-LSTM
    ParagraphCRF,  // Paragraph plus a linear-chain CRF on the emissions
};

std::string_view to_string(ModelVariant v);
std::optional<ModelVariant> parse_variant(std::string_view s);  // clause|paragraph|paragraph-crf

struct TrainConfig {
    std::size_t hidden_units = 300;  // per direction; concatenated widths are 2x
    double dropout = 0.5;
    double clip_norm = 5.0;
    double l2_lambda = 1e-4;
    double learning_rate = 0.001;
    std::size_t batch_se = 128;  // batch size counted in clauses, not paragraphs
    std::size_t max_epochs = 40;
    std::size_t runs = 10;
    std::uint64_t seed = 42;
    std::size_t workers = 1;  // paragraph-level fan-out; 1 keeps training bit-reproducible
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct ModelParams {
    ModelVariant variant = ModelVariant::Paragraph;
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    BiLstmParams word;       // input_dim -> hidden per direction
    BiLstmParams clause;     // 2*hidden -> hidden per direction; empty for ClauseLevel
    AffineParams head;       // kNumLabels x 2*hidden
    TransitionParams crf;    // empty unless ParagraphCRF

    bool has_clause_layer() const { return variant != ModelVariant::ClauseLevel; }
    bool has_crf() const { return variant == ModelVariant::ParagraphCRF; }

    static ModelParams init(ModelVariant v, std::size_t input_dim, std::size_t hidden,
                            std::uint64_t seed);
    static ModelParams zeros_like(const ModelParams& other);
};

// Flat view over every trainable buffer, in a stable order shared by the
// optimizer, gradient clipping, L2, the checkpoint format and the
// finite-difference harness.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    std::size_t size = 0;
    bool weight_matrix = false;  // L2 applies to these only
};

std::vector<TensorRef> collect_tensors(ModelParams& m);

struct ForwardTrace {
    Matrix x;                           // input rows after site-1 dropout
    DropoutMask m_in1, m_out1, m_in2, m_out2;
    std::vector<Span> segments;         // word-level run ranges
    std::vector<BiLstmTape> word_tapes; // one per segment
    Matrix word_out;                    // L x 2H after site-2 dropout
    MaxPoolTape pool_tape;
    Matrix pooled;                      // n x 2H clause embeddings
    Matrix clause_in;                   // pooled after site-3 dropout
    BiLstmTape clause_tape;
    Matrix head_in;                     // what the affine head consumed
    Matrix emissions;                   // n x kNumLabels
};

// Dropout sites: word Bi-LSTM input and output, clause Bi-LSTM input
// (the pooled clause embedding) and output. rng is required in train mode.
// When mask_connectives is set, connective tokens are excluded from pooling.
Matrix forward_paragraph(const ModelParams& m, const FeatureVectorizer::ParagraphFeatures& pf,
                         const DropoutSpec& dropout, Rng* rng = nullptr,
                         ForwardTrace* trace = nullptr, bool mask_connectives = false);

// Raw paragraph loss: sum of per-clause cross-entropies (softmax variants)
// or the sequence NLL (CRF variant), without L2. Gradients are scaled by
// weight and accumulated into grads.
double paragraph_loss(const ModelParams& m, const FeatureVectorizer::ParagraphFeatures& pf,
                      const std::vector<std::size_t>& gold, const DropoutSpec& dropout,
                      Rng* rng = nullptr, ModelParams* grads = nullptr, double weight = 1.0,
                      bool mask_connectives = false);

// Batch loss exactly as trained: per-clause mean cross-entropy (softmax
// variants) or paragraph-mean of per-clause-normalized sequence NLLs (CRF),
// plus l2_lambda * sum of squared weight-matrix entries.
double batch_loss(const ModelParams& m, const std::vector<const FeatureVectorizer::ParagraphFeatures*>& batch,
                  const std::vector<std::vector<std::size_t>>& gold, double l2_lambda,
                  const DropoutSpec& dropout, Rng* rng = nullptr, ModelParams* grads = nullptr,
                  bool mask_connectives = false);

// Greedy batch packing over paragraphs in the given order: a batch closes
// once it holds at least batch_se clauses, so every batch except possibly
// the last meets the threshold and no paragraph is ever split.
std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& order,
                                                   const std::vector<std::size_t>& clause_counts,
                                                   std::size_t batch_se);

struct EpochStats {
    std::size_t epoch = 0;       // 1-based
    double train_loss = 0.0;
    std::optional<Metrics> dev;  // when a dev set is given
};

// return false to stop training early
using EpochCallback = std::function<bool(const EpochStats&)>;

struct TrainResult {
    ModelParams params;
    std::vector<EpochStats> history;
    std::size_t best_epoch = 0;  // 1-based; epoch the returned params come from
};

struct TrainOptions {
    const Dataset* dev = nullptr;
    EpochCallback on_epoch;
    bool mask_connectives = false;
};

TrainResult train(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                  const Dataset& train_set, const TrainOptions& opts = {});

std::vector<std::vector<SELabel>> predict(const ModelParams& m, const FeatureVectorizer& fv,
                                          const Dataset& d, bool mask_connectives = false,
                                          std::size_t workers = 1);

std::vector<SELabel> flatten_gold(const Dataset& d);
std::vector<SELabel> flatten(const std::vector<std::vector<SELabel>>& per_paragraph);

// Trains config.runs models on `train_set` and evaluates each on
// `test_set`. Run seeds derive from cfg.seed unless given explicitly.
struct RepeatedRuns {
    std::vector<Metrics> per_run;
    MetricsSummary summary;
};
RepeatedRuns run_repeated(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                          const Dataset& train_set, const Dataset& test_set,
                          std::vector<std::uint64_t> seeds = {});

struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;
};

double global_grad_norm(const std::vector<TensorRef>& grads);
void clip_gradients(std::vector<TensorRef>& grads, double max_norm);
void adam_step(std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
               AdamState& state, const TrainConfig& cfg);

}  // namespace sitent
