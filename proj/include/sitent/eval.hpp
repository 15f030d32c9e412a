#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sitent/metrics.hpp"
#include "sitent/model.hpp"

namespace sitent {

struct CvResult {
    Metrics pooled;  // union of all fold predictions, each clause predicted once
    std::vector<Metrics> per_fold;
};

CvResult cross_validate(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                        const std::vector<std::pair<Dataset, Dataset>>& folds);

struct GenreFoldResult {
    std::string genre;
    Metrics metrics;
};

struct CrossGenreResult {
    std::vector<GenreFoldResult> per_genre;
    Metrics pooled;
};

CrossGenreResult cross_genre(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                             const Dataset& d);

// Nested training subsets (each larger fraction contains the smaller ones),
// one training per fraction, all evaluated on the same test set.
std::vector<std::pair<double, Metrics>> learning_curve(ModelVariant v, const TrainConfig& cfg,
                                                       const FeatureVectorizer& fv,
                                                       const Dataset& train_set,
                                                       const Dataset& test_set,
                                                       const std::vector<double>& fractions);

struct LengthBucket {
    std::string key;  // "1".."9" and "10+"
    std::size_t paragraphs = 0;
    std::size_t clauses = 0;
    Metrics metrics;
};

std::vector<LengthBucket> length_buckets(const Dataset& d,
                                         const std::vector<std::vector<SELabel>>& predicted);

struct AblationResult {
    double marked_fraction = 0.0;  // share of clauses carrying a connective
    Metrics normal_all, masked_all;
    Metrics normal_connective, masked_connective;  // connective-bearing clauses only
    Metrics normal_plain, masked_plain;            // the rest
};

// Trains and evaluates twice: once normally and once with connective tokens
// excluded from max-pooling (training included unless retrain_masked is
// false, in which case the masked run reuses the normal model and only
// prediction is masked).
AblationResult connective_ablation(ModelVariant v, const TrainConfig& cfg,
                                   const FeatureVectorizer& fv, const Dataset& train_set,
                                   const Dataset& test_set,
                                   const std::vector<std::string>& lexicon,
                                   bool retrain_masked = true);

// report files
void write_metrics_json(const std::string& path, const Metrics& m);
void write_confusion_tsv(const std::string& path, const Metrics& m);
void append_summary_row(const std::string& path, const std::string& experiment, const Metrics& m);
void write_plot_tsv(const std::string& path, const std::vector<std::pair<std::string, double>>& rows);

}  // namespace sitent
