#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sitent/checkpoint.hpp"
#include "sitent/corpus.hpp"
#include "sitent/embed.hpp"
#include "sitent/eval.hpp"
#include "sitent/model.hpp"
#include "sitent/rng.hpp"
#include "sitent/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sitent;

namespace {

constexpr std::uint64_t kOovStream = 0x00EE;

struct CommonOpts {
    std::string corpus;
    std::string embeddings;
    std::size_t embed_dim = 300;
    std::string lexicon;
    std::string variant = "paragraph";
    std::string out_dir = "out";
    std::string checkpoint;
    TrainConfig cfg;
};

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--variant", o.variant, "Model variant")
        ->check(CLI::IsMember({"clause", "paragraph", "paragraph-crf"}))
        ->capture_default_str();
    cmd->add_option("--hidden", o.cfg.hidden_units, "Bi-LSTM hidden units per direction")
        ->capture_default_str();
    cmd->add_option("--epochs", o.cfg.max_epochs, "Maximum training epochs")->capture_default_str();
    cmd->add_option("--lr", o.cfg.learning_rate, "Adam initial learning rate")->capture_default_str();
    cmd->add_option("--batch-se", o.cfg.batch_se, "Batch size counted in clauses")
        ->capture_default_str();
    cmd->add_option("--dropout", o.cfg.dropout, "Dropout rate at Bi-LSTM inputs and outputs")
        ->capture_default_str();
    cmd->add_option("--clip", o.cfg.clip_norm, "Gradient L2-norm clipping threshold")
        ->capture_default_str();
    cmd->add_option("--l2", o.cfg.l2_lambda, "L2 regularization strength")->capture_default_str();
    cmd->add_option("--runs", o.cfg.runs, "Repeated runs to average over")->capture_default_str();
    cmd->add_option("--workers", o.cfg.workers,
                    "Paragraph-level parallel workers (1 = bit-reproducible)")
        ->capture_default_str();
}

void add_seed_flag(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--seed", o.cfg.seed, "Master random seed")
        ->envname("SITENT_SEED")
        ->capture_default_str();
}

void add_embedding_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--embeddings", o.embeddings,
                    "Pretrained embedding file (absent: every word gets a seeded random vector)");
    cmd->add_option("--embed-dim", o.embed_dim, "Word vector dimension")->capture_default_str();
}

EmbeddingTable make_table(const CommonOpts& o, std::uint64_t seed) {
    const std::uint64_t oov_seed = derive_seed(seed, kOovStream);
    if (o.embeddings.empty()) return EmbeddingTable(o.embed_dim, oov_seed);
    return EmbeddingTable::load(o.embeddings, o.embed_dim, oov_seed);
}

ModelVariant variant_of(const CommonOpts& o) {
    auto v = parse_variant(o.variant);
    if (!v) throw std::runtime_error("unknown variant: " + o.variant);
    return *v;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::ostringstream ss;
    ss << in.rdbuf();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(ss.str());
    return hex.str();
}

void write_manifest(const CommonOpts& o, const std::string& command,
                    const std::map<std::string, std::string>& extra = {}) {
    json m;
    m["command"] = command;
    m["seed"] = o.cfg.seed;
    m["variant"] = o.variant;
    m["config"] = {{"hidden", o.cfg.hidden_units},     {"epochs", o.cfg.max_epochs},
                   {"lr", o.cfg.learning_rate},        {"batch_se", o.cfg.batch_se},
                   {"dropout", o.cfg.dropout},         {"clip", o.cfg.clip_norm},
                   {"l2", o.cfg.l2_lambda},            {"runs", o.cfg.runs},
                   {"workers", o.cfg.workers},         {"embed_dim", o.embed_dim}};
    json inputs;
    if (!o.corpus.empty()) inputs["corpus"] = {{"path", o.corpus}, {"digest", file_digest(o.corpus)}};
    if (!o.embeddings.empty())
        inputs["embeddings"] = {{"path", o.embeddings}, {"digest", file_digest(o.embeddings)}};
    if (!o.lexicon.empty())
        inputs["lexicon"] = {{"path", o.lexicon}, {"digest", file_digest(o.lexicon)}};
    m["inputs"] = inputs;
    for (const auto& [k, v] : extra) m[k] = v;
    fs::create_directories(o.out_dir);
    std::ofstream out(fs::path(o.out_dir) / "manifest.json");
    out << m.dump(2) << "\n";
}

void write_history(const fs::path& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    out << "epoch\ttrain_loss\tdev_accuracy\tdev_macro_f1\n";
    for (const auto& e : history) {
        out << e.epoch << "\t" << e.train_loss << "\t";
        if (e.dev)
            out << e.dev->accuracy << "\t" << e.dev->macro_f1;
        else
            out << "-\t-";
        out << "\n";
    }
}

void write_predictions(const std::string& path, const std::vector<std::vector<SELabel>>& pred) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t p = 0; p < pred.size(); ++p)
        for (std::size_t c = 0; c < pred[p].size(); ++c)
            out << p << ":" << c << "\t" << to_string(pred[p][c]) << "\n";
}

void print_stats(const LabelStats& stats, const Dataset& d, bool by_genre) {
    const auto& names = se_label_names();
    std::cout << "SE type\tcount\tshare\n";
    for (std::size_t l = 0; l < kNumLabels; ++l) {
        const double share = 100.0 * static_cast<double>(stats.counts[l]) /
                             static_cast<double>(stats.total);
        std::cout << names[l] << "\t" << stats.counts[l] << "\t" << std::fixed
                  << std::setprecision(1) << share << "%\n";
    }
    std::cout << "total\t" << stats.total << "\t100.0%\n";
    if (by_genre) {
        std::cout << "\nSE type";
        for (const auto& [genre, _] : stats.genre_percent) std::cout << "\t" << genre;
        std::cout << "\n";
        for (std::size_t l = 0; l < kNumLabels; ++l) {
            std::cout << names[l];
            for (const auto& [_, pct] : stats.genre_percent)
                std::cout << "\t" << std::fixed << std::setprecision(1) << pct[l] << "%";
            std::cout << "\n";
        }
    }
    std::cerr << "paragraphs: " << d.paragraphs.size() << ", clauses: " << d.clause_count()
              << ", tokens: " << d.token_count() << ", genres: " << d.genre_inventory.size()
              << "\n";
    if (d.unknown_pos_tags + d.unknown_ne_tags > 0)
        std::cerr << "tags mapped to fallback: " << d.unknown_pos_tags << " POS, "
                  << d.unknown_ne_tags << " NE\n";
}

json metrics_json(const Metrics& m) {
    json j;
    j["accuracy"] = m.accuracy;
    j["macro_f1"] = m.macro_f1;
    j["total"] = m.total;
    const auto& names = se_label_names();
    for (std::size_t l = 0; l < kNumLabels; ++l) j["f1"][names[l]] = m.f1[l];
    return j;
}

json summary_json(const MetricsSummary& s) {
    json j;
    j["runs"] = s.runs;
    j["accuracy"] = {{"mean", s.accuracy_mean}, {"std", s.accuracy_std}};
    j["macro_f1"] = {{"mean", s.macro_f1_mean}, {"std", s.macro_f1_std}};
    const auto& names = se_label_names();
    for (std::size_t l = 0; l < kNumLabels; ++l)
        j["f1"][names[l]] = {{"mean", s.f1_mean[l]}, {"std", s.f1_std[l]}};
    return j;
}

int cmd_stats(const CommonOpts& o, bool by_genre) {
    const Dataset d = load_corpus(o.corpus);
    print_stats(corpus_stats(d), d, by_genre);
    return 0;
}

int cmd_synth(const CommonOpts& o, const std::string& kind, const SynthOptions& sopt,
              const std::string& out_path) {
    save_corpus(make_synth(kind, sopt), out_path);
    std::cerr << "wrote " << out_path << "\n";
    return 0;
}

int cmd_split(CommonOpts& o, const std::string& kind, double ratio, std::size_t k) {
    const Dataset d = load_corpus(o.corpus);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    if (kind == "holdout") {
        auto [train_set, test_set] = holdout_split(d, ratio, o.cfg.seed);
        save_corpus(train_set, (dir / "train.jsonl").string());
        save_corpus(test_set, (dir / "test.jsonl").string());
    } else if (kind == "kfold") {
        auto folds = kfold_split(d, k, o.cfg.seed);
        for (std::size_t f = 0; f < folds.size(); ++f) {
            save_corpus(folds[f].first, (dir / ("fold" + std::to_string(f) + "_train.jsonl")).string());
            save_corpus(folds[f].second, (dir / ("fold" + std::to_string(f) + "_test.jsonl")).string());
        }
    } else if (kind == "genre") {
        auto folds = genre_folds(d);
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const std::string genre = *folds[f].second.genre_inventory.begin();
            save_corpus(folds[f].first, (dir / (genre + "_train.jsonl")).string());
            save_corpus(folds[f].second, (dir / (genre + "_test.jsonl")).string());
        }
    } else {
        throw std::runtime_error("unknown split kind: " + kind);
    }
    write_manifest(o, "split", {{"kind", kind}});
    return 0;
}

int cmd_train(CommonOpts& o, const std::string& dev_corpus, bool mask_connectives) {
    const Dataset train_set = load_corpus(o.corpus);
    std::optional<Dataset> dev_set;
    if (!dev_corpus.empty()) dev_set = load_corpus(dev_corpus);

    Dataset marked_train = train_set;
    std::optional<Dataset> marked_dev = dev_set;
    if (mask_connectives) {
        if (o.lexicon.empty()) throw std::runtime_error("--mask-connectives needs --lexicon");
        auto lex = load_connective_lexicon(o.lexicon);
        marked_train = mark_connectives(train_set, lex).data;
        if (marked_dev) marked_dev = mark_connectives(*dev_set, lex).data;
    }

    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);

    TrainOptions topts;
    if (marked_dev) topts.dev = &*marked_dev;
    topts.mask_connectives = mask_connectives;
    topts.on_epoch = [](const EpochStats& e) {
        std::cerr << "epoch " << e.epoch << " loss " << e.train_loss;
        if (e.dev) std::cerr << " dev_acc " << e.dev->accuracy << " dev_macro " << e.dev->macro_f1;
        std::cerr << "\n";
        return true;
    };

    auto result = train(variant_of(o), o.cfg, fv, marked_train, topts);

    fs::create_directories(o.out_dir);
    Checkpoint ck;
    ck.params = std::move(result.params);
    ck.config = o.cfg;
    ck.seed = o.cfg.seed;
    ck.epoch = result.best_epoch;
    save_checkpoint((fs::path(o.out_dir) / "model.ckpt").string(), ck);
    write_history(fs::path(o.out_dir) / "history.tsv", result.history);
    write_manifest(o, "train", {{"mask_connectives", mask_connectives ? "true" : "false"}});
    std::cerr << "checkpoint written to " << (fs::path(o.out_dir) / "model.ckpt").string() << "\n";
    return 0;
}

int cmd_eval(CommonOpts& o, bool mask_connectives) {
    const Dataset d = load_corpus(o.corpus);
    Checkpoint ck = load_checkpoint(o.checkpoint);
    o.embed_dim = ck.params.input_dim - pos_inventory().size() - ne_inventory().size();
    const EmbeddingTable table = make_table(o, ck.seed);
    const FeatureVectorizer fv(table);

    Dataset marked = d;
    if (mask_connectives) {
        if (o.lexicon.empty()) throw std::runtime_error("--mask-connectives needs --lexicon");
        marked = mark_connectives(d, load_connective_lexicon(o.lexicon)).data;
    }

    auto pred = predict(ck.params, fv, marked, mask_connectives, o.cfg.workers);
    const Metrics m = score(flatten_gold(marked), flatten(pred));

    fs::create_directories(o.out_dir);
    write_metrics_json((fs::path(o.out_dir) / "metrics.json").string(), m);
    write_confusion_tsv((fs::path(o.out_dir) / "confusion.tsv").string(), m);
    append_summary_row((fs::path(o.out_dir) / "summary.tsv").string(), "eval", m);
    write_manifest(o, "eval");
    std::cout << "accuracy " << m.accuracy << " macro_f1 " << m.macro_f1 << "\n";
    return 0;
}

int cmd_predict(CommonOpts& o, const std::string& out_path) {
    const Dataset d = load_corpus(o.corpus);
    Checkpoint ck = load_checkpoint(o.checkpoint);
    o.embed_dim = ck.params.input_dim - pos_inventory().size() - ne_inventory().size();
    const EmbeddingTable table = make_table(o, ck.seed);
    const FeatureVectorizer fv(table);
    write_predictions(out_path, predict(ck.params, fv, d, false, o.cfg.workers));
    return 0;
}

int cmd_cv(CommonOpts& o, std::size_t k) {
    const Dataset d = load_corpus(o.corpus);
    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);

    std::vector<Metrics> pooled_runs;
    for (std::size_t r = 0; r < o.cfg.runs; ++r) {
        TrainConfig cfg = o.cfg;
        cfg.seed = o.cfg.runs == 1 ? o.cfg.seed : derive_seed(o.cfg.seed, 0x2E50 + r);
        const auto folds = kfold_split(d, k, cfg.seed);
        auto res = cross_validate(variant_of(o), cfg, fv, folds);
        const std::string prefix = o.cfg.runs == 1 ? "" : ("run" + std::to_string(r) + "_");
        for (std::size_t f = 0; f < res.per_fold.size(); ++f)
            write_metrics_json((dir / (prefix + "fold" + std::to_string(f) + ".json")).string(),
                               res.per_fold[f]);
        write_metrics_json((dir / (prefix + "pooled.json")).string(), res.pooled);
        write_confusion_tsv((dir / (prefix + "confusion.tsv")).string(), res.pooled);
        append_summary_row((dir / "summary.tsv").string(), "cv_" + prefix + "pooled", res.pooled);
        pooled_runs.push_back(res.pooled);
    }
    if (o.cfg.runs > 1) {
        std::ofstream out(dir / "summary.json");
        out << summary_json(summarize(pooled_runs)).dump(2) << "\n";
    }
    write_manifest(o, "cv", {{"k", std::to_string(k)}});
    std::cout << "cv pooled macro_f1 " << pooled_runs.front().macro_f1 << "\n";
    return 0;
}

int cmd_crossgenre(CommonOpts& o) {
    const Dataset d = load_corpus(o.corpus);
    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);
    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);

    std::vector<Metrics> pooled_runs;
    std::map<std::string, std::vector<double>> genre_macro;
    for (std::size_t r = 0; r < o.cfg.runs; ++r) {
        TrainConfig cfg = o.cfg;
        cfg.seed = o.cfg.runs == 1 ? o.cfg.seed : derive_seed(o.cfg.seed, 0xCE12 + r);
        auto res = cross_genre(variant_of(o), cfg, fv, d);
        for (const auto& g : res.per_genre) genre_macro[g.genre].push_back(g.metrics.macro_f1);
        const std::string prefix = o.cfg.runs == 1 ? "" : ("run" + std::to_string(r) + "_");
        write_metrics_json((dir / (prefix + "pooled.json")).string(), res.pooled);
        pooled_runs.push_back(res.pooled);
    }
    {
        std::ofstream out(dir / "by_genre.tsv");
        out << "genre\tmacro_f1\n";
        for (const auto& [genre, vals] : genre_macro) {
            double mean = 0.0;
            for (double v : vals) mean += v;
            out << genre << "\t" << mean / static_cast<double>(vals.size()) << "\n";
        }
    }
    if (o.cfg.runs > 1) {
        std::ofstream out(dir / "summary.json");
        out << summary_json(summarize(pooled_runs)).dump(2) << "\n";
    }
    write_manifest(o, "crossgenre");
    std::cout << "crossgenre pooled macro_f1 " << pooled_runs.front().macro_f1 << "\n";
    return 0;
}

int cmd_curve(CommonOpts& o, const std::string& fractions_csv, double ratio) {
    std::vector<double> fractions;
    std::stringstream ss(fractions_csv);
    std::string item;
    while (std::getline(ss, item, ',')) fractions.push_back(std::stod(item));

    const Dataset d = load_corpus(o.corpus);
    auto [train_set, test_set] = holdout_split(d, ratio, o.cfg.seed);
    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);

    auto curve = learning_curve(variant_of(o), o.cfg, fv, train_set, test_set, fractions);

    fs::create_directories(o.out_dir);
    std::vector<std::pair<std::string, double>> rows;
    for (const auto& [frac, m] : curve) {
        std::ostringstream key;
        key << frac;
        rows.emplace_back(key.str(), m.macro_f1);
        write_metrics_json((fs::path(o.out_dir) / ("fraction_" + key.str() + ".json")).string(), m);
    }
    write_plot_tsv((fs::path(o.out_dir) / "curve.tsv").string(), rows);
    write_manifest(o, "curve", {{"fractions", fractions_csv}});
    return 0;
}

int cmd_ablate(CommonOpts& o, double ratio, bool no_retrain) {
    const Dataset d = load_corpus(o.corpus);
    if (o.lexicon.empty()) throw std::runtime_error("ablate needs --lexicon");
    const auto lex = load_connective_lexicon(o.lexicon);
    auto [train_set, test_set] = holdout_split(d, ratio, o.cfg.seed);
    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);

    auto res = connective_ablation(variant_of(o), o.cfg, fv, train_set, test_set, lex, !no_retrain);

    fs::create_directories(o.out_dir);
    json j;
    j["marked_fraction"] = res.marked_fraction;
    j["all"] = {{"normal", metrics_json(res.normal_all)}, {"masked", metrics_json(res.masked_all)}};
    j["connective_clauses"] = {{"normal", metrics_json(res.normal_connective)},
                               {"masked", metrics_json(res.masked_connective)}};
    j["other_clauses"] = {{"normal", metrics_json(res.normal_plain)},
                          {"masked", metrics_json(res.masked_plain)}};
    json deltas;
    deltas["accuracy"] = res.masked_connective.accuracy - res.normal_connective.accuracy;
    deltas["macro_f1"] = res.masked_connective.macro_f1 - res.normal_connective.macro_f1;
    const auto& names = se_label_names();
    for (std::size_t l = 0; l < kNumLabels; ++l)
        deltas["f1"][names[l]] = res.masked_connective.f1[l] - res.normal_connective.f1[l];
    j["connective_clause_deltas"] = deltas;
    std::ofstream out(fs::path(o.out_dir) / "ablation.json");
    out << j.dump(2) << "\n";
    write_manifest(o, "ablate", {{"retrain", no_retrain ? "false" : "true"}});
    std::cout << "connective clauses: normal acc " << res.normal_connective.accuracy
              << ", masked acc " << res.masked_connective.accuracy << "\n";
    return 0;
}

int cmd_reproduce(CommonOpts& o, double ratio) {
    // Benchmark protocol on the licensed corpus: genre-balanced 80:20 split,
    // repeated training of the chosen variant, mean metrics beside the
    // published reference values for this dataset.
    const Dataset d = load_corpus(o.corpus);
    const LabelStats stats = corpus_stats(d);

    auto [train_set, test_set] = holdout_split(d, ratio, o.cfg.seed);
    const EmbeddingTable table = make_table(o, o.cfg.seed);
    const FeatureVectorizer fv(table);

    auto runs = run_repeated(variant_of(o), o.cfg, fv, train_set, test_set);

    const double ref_macro = 77.4, ref_acc = 80.7;  // published reference, paragraph-crf
    const std::size_t ref_state = 18337, ref_generic = 7582;

    fs::create_directories(o.out_dir);
    json report;
    report["protocol"] = {{"split", "holdout"},
                          {"ratio", ratio},
                          {"variant", o.variant},
                          {"runs", o.cfg.runs},
                          {"seed", o.cfg.seed}};
    report["dataset_check"] = {
        {"STATE", {{"count", stats.counts[0]}, {"reference", ref_state}}},
        {"GENERIC", {{"count", stats.counts[3]}, {"reference", ref_generic}}}};
    report["test_metrics"] = summary_json(runs.summary);
    report["reference"] = {{"macro_f1", ref_macro}, {"accuracy", ref_acc}};
    std::ofstream out(fs::path(o.out_dir) / "report.json");
    out << report.dump(2) << "\n";

    std::ofstream md(fs::path(o.out_dir) / "report.md");
    md << "# Benchmark report\n\n";
    md << "| metric | this run (mean over " << runs.summary.runs << ") | published reference |\n";
    md << "|---|---|---|\n";
    md << "| macro-F1 | " << 100.0 * runs.summary.macro_f1_mean << " | " << ref_macro << " |\n";
    md << "| accuracy | " << 100.0 * runs.summary.accuracy_mean << " | " << ref_acc << " |\n";
    md << "\n| label | count in corpus | reference |\n|---|---|---|\n";
    md << "| STATE | " << stats.counts[0] << " | " << ref_state << " |\n";
    md << "| GENERIC | " << stats.counts[3] << " | " << ref_generic << " |\n";
    write_manifest(o, "reproduce");
    std::cout << "macro_f1 " << 100.0 * runs.summary.macro_f1_mean << " (reference " << ref_macro
              << "), accuracy " << 100.0 * runs.summary.accuracy_mean << " (reference " << ref_acc
              << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"situation entity type classification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config file ([subcommand] sections)");

    CommonOpts o;

    auto* stats = app.add_subcommand("stats", "Label and genre statistics of a corpus");
    bool by_genre = false;
    stats->add_option("--corpus", o.corpus, "Corpus file")->required();
    stats->add_flag("--by-genre", by_genre, "Add per-genre percentage columns");

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
    std::string synth_kind = "keyword", synth_out = "synth.jsonl";
    SynthOptions sopt;
    synth->add_option("--kind", synth_kind, "Task kind")
        ->check(CLI::IsMember(synth_kinds()))
        ->capture_default_str();
    synth->add_option("--paragraphs", sopt.paragraphs, "Paragraph count")->capture_default_str();
    synth->add_option("--genres", sopt.genres, "Genre count")->capture_default_str();
    synth->add_option("--min-clauses", sopt.min_clauses, "Min clauses per paragraph")
        ->capture_default_str();
    synth->add_option("--max-clauses", sopt.max_clauses, "Max clauses per paragraph")
        ->capture_default_str();
    synth->add_option("--synth-seed", sopt.seed, "Generator seed")->capture_default_str();
    synth->add_option("--out", synth_out, "Output corpus path")->capture_default_str();

    auto* split = app.add_subcommand("split", "Write train/test splits");
    std::string split_kind = "holdout";
    double ratio = 0.8;
    std::size_t k = 10;
    split->add_option("--corpus", o.corpus)->required();
    split->add_option("--kind", split_kind)->check(CLI::IsMember({"holdout", "kfold", "genre"}));
    split->add_option("--ratio", ratio, "Holdout train fraction")->capture_default_str();
    split->add_option("--k", k, "Fold count")->capture_default_str();
    split->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_seed_flag(split, o);

    auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
    std::string dev_corpus;
    bool mask_conn = false;
    train_cmd->add_option("--corpus", o.corpus)->required();
    train_cmd->add_option("--dev", dev_corpus, "Dev corpus for model selection");
    train_cmd->add_option("--lexicon", o.lexicon, "Connective lexicon");
    train_cmd->add_flag("--mask-connectives", mask_conn,
                        "Exclude connective tokens from max-pooling");
    train_cmd->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(train_cmd, o);
    add_seed_flag(train_cmd, o);
    add_embedding_flags(train_cmd, o);

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled corpus");
    bool eval_mask = false;
    eval_cmd->add_option("--corpus", o.corpus)->required();
    eval_cmd->add_option("--checkpoint", o.checkpoint)->required();
    eval_cmd->add_option("--lexicon", o.lexicon, "Connective lexicon");
    eval_cmd->add_flag("--mask-connectives", eval_mask,
                       "Exclude connective tokens from max-pooling");
    eval_cmd->add_option("--out-dir", o.out_dir)->capture_default_str();
    eval_cmd->add_option("--workers", o.cfg.workers)->capture_default_str();
    eval_cmd->add_option("--embeddings", o.embeddings);
    add_seed_flag(eval_cmd, o);

    auto* predict_cmd = app.add_subcommand("predict", "Write per-clause predicted labels");
    std::string pred_out = "predictions.tsv";
    predict_cmd->add_option("--corpus", o.corpus)->required();
    predict_cmd->add_option("--checkpoint", o.checkpoint)->required();
    predict_cmd->add_option("--out", pred_out)->capture_default_str();
    predict_cmd->add_option("--workers", o.cfg.workers)->capture_default_str();
    predict_cmd->add_option("--embeddings", o.embeddings);
    add_seed_flag(predict_cmd, o);

    auto* cv = app.add_subcommand("cv", "Genre-balanced k-fold cross-validation");
    cv->add_option("--corpus", o.corpus)->required();
    cv->add_option("--k", k, "Fold count")->capture_default_str();
    cv->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(cv, o);
    add_seed_flag(cv, o);
    add_embedding_flags(cv, o);

    auto* crossgenre = app.add_subcommand("crossgenre", "Leave-one-genre-out evaluation");
    crossgenre->add_option("--corpus", o.corpus)->required();
    crossgenre->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(crossgenre, o);
    add_seed_flag(crossgenre, o);
    add_embedding_flags(crossgenre, o);

    auto* curve = app.add_subcommand("curve", "Learning curve over nested training subsets");
    std::string fractions = "0.1,0.3,0.5,1.0";
    curve->add_option("--corpus", o.corpus)->required();
    curve->add_option("--fractions", fractions, "Ascending fractions in (0,1]")
        ->capture_default_str();
    curve->add_option("--ratio", ratio, "Holdout train fraction")->capture_default_str();
    curve->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(curve, o);
    add_seed_flag(curve, o);
    add_embedding_flags(curve, o);

    auto* ablate = app.add_subcommand("ablate", "Connective-masking ablation");
    bool no_retrain = false;
    ablate->add_option("--corpus", o.corpus)->required();
    ablate->add_option("--lexicon", o.lexicon)->required();
    ablate->add_option("--ratio", ratio, "Holdout train fraction")->capture_default_str();
    ablate->add_flag("--no-retrain", no_retrain, "Reuse the normal model, mask at prediction only");
    ablate->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(ablate, o);
    add_seed_flag(ablate, o);
    add_embedding_flags(ablate, o);

    auto* reproduce = app.add_subcommand(
        "reproduce", "Published-benchmark protocol: 80:20 split, repeated runs, report");
    reproduce->add_option("--corpus", o.corpus)->required();
    reproduce->add_option("--ratio", ratio, "Holdout train fraction")->capture_default_str();
    reproduce->add_option("--out-dir", o.out_dir)->capture_default_str();
    add_train_flags(reproduce, o);
    add_seed_flag(reproduce, o);
    add_embedding_flags(reproduce, o);
    reproduce->get_option("--variant")->default_val("paragraph-crf");

    CLI11_PARSE(app, argc, argv);

    try {
        if (stats->parsed()) return cmd_stats(o, by_genre);
        if (synth->parsed()) return cmd_synth(o, synth_kind, sopt, synth_out);
        if (split->parsed()) return cmd_split(o, split_kind, ratio, k);
        if (train_cmd->parsed()) return cmd_train(o, dev_corpus, mask_conn);
        if (eval_cmd->parsed()) return cmd_eval(o, eval_mask);
        if (predict_cmd->parsed()) return cmd_predict(o, pred_out);
        if (cv->parsed()) return cmd_cv(o, k);
        if (crossgenre->parsed()) return cmd_crossgenre(o);
        if (curve->parsed()) return cmd_curve(o, fractions, ratio);
        if (ablate->parsed()) return cmd_ablate(o, ratio, no_retrain);
        if (reproduce->parsed()) return cmd_reproduce(o, ratio);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
