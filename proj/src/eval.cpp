#include "sitent/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sitent {

Metrics metrics_from_confusion(const ConfusionCounts& confusion) {
    Metrics m;
    m.confusion = confusion;
    std::array<std::size_t, kNumLabels> gold_count{}, pred_count{};
    std::size_t correct = 0;
    for (std::size_t g = 0; g < kNumLabels; ++g) {
        for (std::size_t p = 0; p < kNumLabels; ++p) {
            const std::size_t c = confusion[g][p];
            m.total += c;
            gold_count[g] += c;
            pred_count[p] += c;
            if (g == p) correct += c;
        }
    }
    m.accuracy = m.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m.total);

    double f1_sum = 0.0;
    std::size_t f1_n = 0;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
        m.present[l] = gold_count[l] > 0 || pred_count[l] > 0;
        const double tp = static_cast<double>(confusion[l][l]);
        m.precision[l] = pred_count[l] == 0 ? 0.0 : tp / static_cast<double>(pred_count[l]);
        m.recall[l] = gold_count[l] == 0 ? 0.0 : tp / static_cast<double>(gold_count[l]);
        const double pr = m.precision[l] + m.recall[l];
        m.f1[l] = pr == 0.0 ? 0.0 : 2.0 * m.precision[l] * m.recall[l] / pr;
        if (m.present[l]) {
            f1_sum += m.f1[l];
            ++f1_n;
        }
    }
    m.macro_f1 = f1_n == 0 ? 0.0 : f1_sum / static_cast<double>(f1_n);
    return m;
}

Metrics score(const std::vector<SELabel>& gold, const std::vector<SELabel>& predicted) {
    if (gold.size() != predicted.size())
        throw std::runtime_error("score: gold and predicted lengths differ");
    ConfusionCounts confusion{};
    for (std::size_t i = 0; i < gold.size(); ++i)
        ++confusion[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(predicted[i])];
    return metrics_from_confusion(confusion);
}

MetricsSummary summarize(const std::vector<Metrics>& runs) {
    MetricsSummary s;
    s.runs = runs.size();
    if (runs.empty()) return s;
    const double n = static_cast<double>(runs.size());

    auto mean_std = [&](auto getter, double& mean, double& sd) {
        mean = 0.0;
        for (const auto& r : runs) mean += getter(r);
        mean /= n;
        double var = 0.0;
        for (const auto& r : runs) {
            const double d = getter(r) - mean;
            var += d * d;
        }
        sd = std::sqrt(var / n);
    };

    mean_std([](const Metrics& m) { return m.accuracy; }, s.accuracy_mean, s.accuracy_std);
    mean_std([](const Metrics& m) { return m.macro_f1; }, s.macro_f1_mean, s.macro_f1_std);
    for (std::size_t l = 0; l < kNumLabels; ++l)
        mean_std([l](const Metrics& m) { return m.f1[l]; }, s.f1_mean[l], s.f1_std[l]);
    return s;
}

namespace {

TrainConfig fold_config(const TrainConfig& cfg, std::size_t fold) {
    TrainConfig c = cfg;
    c.seed = derive_seed(cfg.seed, 0xF01D + fold);
    return c;
}

ConfusionCounts add_confusion(const ConfusionCounts& a, const ConfusionCounts& b) {
    ConfusionCounts out = a;
    for (std::size_t g = 0; g < kNumLabels; ++g)
        for (std::size_t p = 0; p < kNumLabels; ++p) out[g][p] += b[g][p];
    return out;
}

}  // namespace

CvResult cross_validate(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                        const std::vector<std::pair<Dataset, Dataset>>& folds) {
    CvResult out;
    ConfusionCounts pooled{};
    for (std::size_t f = 0; f < folds.size(); ++f) {
        auto trained = train(v, fold_config(cfg, f), fv, folds[f].first, {});
        auto pred = predict(trained.params, fv, folds[f].second, false, cfg.workers);
        Metrics m = score(flatten_gold(folds[f].second), flatten(pred));
        pooled = add_confusion(pooled, m.confusion);
        out.per_fold.push_back(std::move(m));
    }
    out.pooled = metrics_from_confusion(pooled);
    return out;
}

CrossGenreResult cross_genre(ModelVariant v, const TrainConfig& cfg, const FeatureVectorizer& fv,
                             const Dataset& d) {
    const auto folds = genre_folds(d);
    CrossGenreResult out;
    ConfusionCounts pooled{};
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const std::string genre = *folds[f].second.genre_inventory.begin();
        auto trained = train(v, fold_config(cfg, f), fv, folds[f].first, {});
        auto pred = predict(trained.params, fv, folds[f].second, false, cfg.workers);
        Metrics m = score(flatten_gold(folds[f].second), flatten(pred));
        pooled = add_confusion(pooled, m.confusion);
        out.per_genre.push_back({genre, std::move(m)});
    }
    out.pooled = metrics_from_confusion(pooled);
    return out;
}

std::vector<std::pair<double, Metrics>> learning_curve(ModelVariant v, const TrainConfig& cfg,
                                                       const FeatureVectorizer& fv,
                                                       const Dataset& train_set,
                                                       const Dataset& test_set,
                                                       const std::vector<double>& fractions) {
    if (fractions.empty()) throw std::runtime_error("learning_curve: no fractions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (fractions[i] <= 0.0 || fractions[i] > 1.0)
            throw std::runtime_error("learning_curve: fractions must lie in (0,1]");
        if (i > 0 && fractions[i] <= fractions[i - 1])
            throw std::runtime_error("learning_curve: fractions must be ascending");
    }

    // one seeded shuffle; prefixes give nested subsets
    std::vector<std::size_t> order(train_set.paragraphs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, 0xC42E));
    rng.shuffle(order);

    std::vector<std::pair<double, Metrics>> out;
    const auto test_gold = flatten_gold(test_set);
    for (double frac : fractions) {
        const auto count = static_cast<std::size_t>(
            std::llround(frac * static_cast<double>(order.size())));
        if (count == 0) throw std::runtime_error("learning_curve: fraction yields zero paragraphs");
        Dataset subset;
        std::vector<std::size_t> take(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(take.begin(), take.end());
        for (std::size_t i : take) subset.paragraphs.push_back(train_set.paragraphs[i]);
        subset.rebuild_genre_inventory();

        auto trained = train(v, cfg, fv, subset, {});
        auto pred = predict(trained.params, fv, test_set, false, cfg.workers);
        out.emplace_back(frac, score(test_gold, flatten(pred)));
    }
    return out;
}

std::vector<LengthBucket> length_buckets(const Dataset& d,
                                         const std::vector<std::vector<SELabel>>& predicted) {
    if (predicted.size() != d.paragraphs.size())
        throw std::runtime_error("length_buckets: prediction count mismatch");

    constexpr std::size_t kLast = 10;  // lengths >= 10 pool into the terminal bucket
    struct Acc {
        ConfusionCounts confusion{};
        std::size_t paragraphs = 0, clauses = 0;
    };
    std::vector<Acc> acc(kLast);

    for (std::size_t i = 0; i < d.paragraphs.size(); ++i) {
        const auto& p = d.paragraphs[i];
        if (predicted[i].size() != p.clauses.size())
            throw std::runtime_error("length_buckets: clause count mismatch");
        const std::size_t len = p.clauses.size();
        Acc& a = acc[std::min(len, kLast) - 1];
        ++a.paragraphs;
        for (std::size_t c = 0; c < p.clauses.size(); ++c) {
            if (!p.clauses[c].gold) throw std::runtime_error("length_buckets: unlabeled clause");
            ++a.confusion[static_cast<std::size_t>(*p.clauses[c].gold)]
                         [static_cast<std::size_t>(predicted[i][c])];
            ++a.clauses;
        }
    }

    std::vector<LengthBucket> out;
    for (std::size_t b = 0; b < kLast; ++b) {
        LengthBucket bucket;
        bucket.key = (b + 1 < kLast) ? std::to_string(b + 1) : "10+";
        bucket.paragraphs = acc[b].paragraphs;
        bucket.clauses = acc[b].clauses;
        bucket.metrics = metrics_from_confusion(acc[b].confusion);
        out.push_back(std::move(bucket));
    }
    return out;
}

namespace {

// splits flat clause-aligned metrics by connective presence
std::pair<Metrics, Metrics> split_by_connective(const Dataset& marked_test,
                                                const std::vector<std::vector<SELabel>>& pred) {
    ConfusionCounts with{}, without{};
    for (std::size_t i = 0; i < marked_test.paragraphs.size(); ++i) {
        const auto& p = marked_test.paragraphs[i];
        for (std::size_t c = 0; c < p.clauses.size(); ++c) {
            bool has_conn = false;
            for (const auto& t : p.clauses[c].tokens) has_conn = has_conn || t.connective_member;
            auto& target = has_conn ? with : without;
            ++target[static_cast<std::size_t>(*p.clauses[c].gold)]
                    [static_cast<std::size_t>(pred[i][c])];
        }
    }
    return {metrics_from_confusion(with), metrics_from_confusion(without)};
}

}  // namespace

AblationResult connective_ablation(ModelVariant v, const TrainConfig& cfg,
                                   const FeatureVectorizer& fv, const Dataset& train_set,
                                   const Dataset& test_set,
                                   const std::vector<std::string>& lexicon, bool retrain_masked) {
    if (lexicon.empty()) throw std::runtime_error("connective_ablation: empty lexicon");

    auto marked_train = mark_connectives(train_set, lexicon);
    auto marked_test = mark_connectives(test_set, lexicon);

    AblationResult out;
    const std::size_t total = marked_train.total_clauses + marked_test.total_clauses;
    out.marked_fraction =
        total == 0 ? 0.0
                   : static_cast<double>(marked_train.marked_clauses + marked_test.marked_clauses) /
                         static_cast<double>(total);

    const auto test_gold = flatten_gold(test_set);

    auto normal = train(v, cfg, fv, marked_train.data, {});
    auto normal_pred = predict(normal.params, fv, marked_test.data, false, cfg.workers);
    out.normal_all = score(test_gold, flatten(normal_pred));
    std::tie(out.normal_connective, out.normal_plain) =
        split_by_connective(marked_test.data, normal_pred);

    std::vector<std::vector<SELabel>> masked_pred;
    if (retrain_masked) {
        TrainOptions opts;
        opts.mask_connectives = true;
        auto masked = train(v, cfg, fv, marked_train.data, opts);
        masked_pred = predict(masked.params, fv, marked_test.data, true, cfg.workers);
    } else {
        masked_pred = predict(normal.params, fv, marked_test.data, true, cfg.workers);
    }
    out.masked_all = score(test_gold, flatten(masked_pred));
    std::tie(out.masked_connective, out.masked_plain) =
        split_by_connective(marked_test.data, masked_pred);
    return out;
}

namespace {
nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["accuracy"] = m.accuracy;
    j["macro_f1"] = m.macro_f1;
    j["total"] = m.total;
    const auto& names = se_label_names();
    for (std::size_t l = 0; l < kNumLabels; ++l) {
        j["per_label"][names[l]] = {{"precision", m.precision[l]},
                                    {"recall", m.recall[l]},
                                    {"f1", m.f1[l]},
                                    {"present", m.present[l]}};
    }
    return j;
}
}  // namespace

void write_metrics_json(const std::string& path, const Metrics& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << metrics_to_json(m).dump(2) << "\n";
}

void write_confusion_tsv(const std::string& path, const Metrics& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto& names = se_label_names();
    out << "gold\\pred";
    for (const auto& n : names) out << "\t" << n;
    out << "\n";
    for (std::size_t g = 0; g < kNumLabels; ++g) {
        out << names[g];
        for (std::size_t p = 0; p < kNumLabels; ++p) out << "\t" << m.confusion[g][p];
        out << "\n";
    }
}

void append_summary_row(const std::string& path, const std::string& experiment, const Metrics& m) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (fresh) {
        out << "experiment\taccuracy\tmacro_f1";
        for (const auto& n : se_label_names()) out << "\tf1_" << n;
        out << "\n";
    }
    out << experiment << "\t" << m.accuracy << "\t" << m.macro_f1;
    for (std::size_t l = 0; l < kNumLabels; ++l) out << "\t" << m.f1[l];
    out << "\n";
}

void write_plot_tsv(const std::string& path,
                    const std::vector<std::pair<std::string, double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [k, v] : rows) out << k << "\t" << v << "\n";
}

}  // namespace sitent
