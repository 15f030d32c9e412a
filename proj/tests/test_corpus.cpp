#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "sitent/corpus.hpp"
#include "sitent/synth.hpp"

using namespace sitent;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = "corpus_test_" + std::to_string(counter++) + ".tmp";
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* kTinyCorpus = R"({"doc_id":"d1","genre":"news","clauses":[{"label":"STATE","tokens":[{"w":"It","pos":"PRP","ne":"O"},{"w":"rains","pos":"VBZ","ne":"O"}]},{"label":"EVENT","tokens":[{"w":"He","pos":"PRP","ne":"O"},{"w":"left","pos":"VBD","ne":"O"}]},{"label":"STATE","tokens":[{"w":"quiet","pos":"JJ","ne":"O"}]}]}
)";

// multiset of (doc_id, genre) pairs, for split-preservation checks
std::multiset<std::pair<std::string, std::string>> keys(const Dataset& d) {
    std::multiset<std::pair<std::string, std::string>> out;
    for (const auto& p : d.paragraphs) out.insert({p.doc_id, p.genre});
    return out;
}

Dataset merge(const Dataset& a, const Dataset& b) {
    Dataset out = a;
    for (const auto& p : b.paragraphs) out.paragraphs.push_back(p);
    out.rebuild_genre_inventory();
    return out;
}

}  // namespace

TEST_CASE("load_corpus reads a well-formed file") {
    TempFile f(kTinyCorpus);
    const Dataset d = load_corpus(f.path);
    REQUIRE(d.paragraphs.size() == 1);
    CHECK(d.paragraphs[0].clauses.size() == 3);
    CHECK(d.clause_count() == 3);
    CHECK(d.token_count() == 5);
    CHECK(d.genre_inventory == std::set<std::string>{"news"});
    CHECK(d.paragraphs[0].clauses[0].gold == SELabel::State);
    CHECK(d.paragraphs[0].clauses[1].clause_index == 1);
}

TEST_CASE("load_corpus rejects unknown labels, naming the line") {
    TempFile f(R"({"doc_id":"d","genre":"g","clauses":[{"label":"EVENTS","tokens":[{"w":"x","pos":"NN","ne":"O"}]}]}
)");
    CHECK_THROWS_WITH_AS(load_corpus(f.path),
                         doctest::Contains(":1: unknown SE label \"EVENTS\""), std::runtime_error);
}

TEST_CASE("load_corpus rejects empty clauses and malformed json") {
    TempFile empty(R"({"doc_id":"d","genre":"g","clauses":[{"label":"STATE","tokens":[]}]}
)");
    CHECK_THROWS_AS(load_corpus(empty.path), std::runtime_error);

    TempFile bad("{\"doc_id\": oops\n");
    CHECK_THROWS_WITH_AS(load_corpus(bad.path), doctest::Contains(":1: malformed record"),
                         std::runtime_error);

    CHECK_THROWS_AS(load_corpus("no_such_file.jsonl"), std::runtime_error);
}

TEST_CASE("null labels load as unlabeled clauses") {
    TempFile f(R"({"doc_id":"d","genre":"g","clauses":[{"label":null,"tokens":[{"w":"x","pos":"NN","ne":"O"}]}]}
)");
    const Dataset d = load_corpus(f.path);
    CHECK_FALSE(d.paragraphs[0].clauses[0].gold.has_value());
}

TEST_CASE("save then load round-trips the data model") {
    SynthOptions opt;
    opt.paragraphs = 25;
    opt.seed = 9;
    const Dataset d = synth_keyword(opt);
    save_corpus(d, "roundtrip.tmp");
    const Dataset back = load_corpus("roundtrip.tmp");
    std::remove("roundtrip.tmp");

    REQUIRE(back.paragraphs.size() == d.paragraphs.size());
    for (std::size_t i = 0; i < d.paragraphs.size(); ++i) {
        CHECK(back.paragraphs[i].doc_id == d.paragraphs[i].doc_id);
        CHECK(back.paragraphs[i].genre == d.paragraphs[i].genre);
        REQUIRE(back.paragraphs[i].clauses.size() == d.paragraphs[i].clauses.size());
        for (std::size_t c = 0; c < d.paragraphs[i].clauses.size(); ++c) {
            const auto& a = d.paragraphs[i].clauses[c];
            const auto& b = back.paragraphs[i].clauses[c];
            CHECK(a.gold == b.gold);
            REQUIRE(a.tokens.size() == b.tokens.size());
            for (std::size_t t = 0; t < a.tokens.size(); ++t) {
                CHECK(a.tokens[t].surface == b.tokens[t].surface);
                CHECK(a.tokens[t].pos == b.tokens[t].pos);
                CHECK(a.tokens[t].ne == b.tokens[t].ne);
            }
        }
    }
}

TEST_CASE("corpus_stats counts labels and per-genre percentages") {
    TempFile f(kTinyCorpus);
    const Dataset d = load_corpus(f.path);
    const LabelStats s = corpus_stats(d);
    CHECK(s.counts[static_cast<int>(SELabel::State)] == 2);
    CHECK(s.counts[static_cast<int>(SELabel::Event)] == 1);
    CHECK(s.counts[static_cast<int>(SELabel::Report)] == 0);
    CHECK(s.total == 3);

    double sum = 0.0;
    for (double pct : s.genre_percent.at("news")) sum += pct;
    CHECK(sum == doctest::Approx(100.0));
}

TEST_CASE("corpus_stats errors") {
    Dataset empty;
    CHECK_THROWS_WITH_AS(corpus_stats(empty), doctest::Contains("no labeled clauses"),
                         std::runtime_error);

    TempFile f(R"({"doc_id":"d","genre":"g","clauses":[{"label":null,"tokens":[{"w":"x","pos":"NN","ne":"O"}]}]}
)");
    const Dataset unlabeled = load_corpus(f.path);
    CHECK_THROWS_WITH_AS(corpus_stats(unlabeled), doctest::Contains("unlabeled"),
                         std::runtime_error);
}

TEST_CASE("holdout_split is genre-balanced, partitioning and deterministic") {
    SynthOptions opt;
    opt.paragraphs = 20;  // two genres, 10 paragraphs each
    opt.genres = 2;
    opt.seed = 5;
    const Dataset d = synth_keyword(opt);

    auto [train1, test1] = holdout_split(d, 0.8, 123);
    CHECK(train1.paragraphs.size() == 16);
    CHECK(test1.paragraphs.size() == 4);
    CHECK(keys(merge(train1, test1)) == keys(d));

    std::map<std::string, int> per_genre;
    for (const auto& p : train1.paragraphs) ++per_genre[p.genre];
    CHECK(per_genre["g0"] == 8);
    CHECK(per_genre["g1"] == 8);

    auto [train2, test2] = holdout_split(d, 0.8, 123);
    CHECK(keys(train1) == keys(train2));
    auto [train3, test3] = holdout_split(d, 0.8, 124);
    CHECK(keys(merge(train3, test3)) == keys(d));

    CHECK_THROWS_AS(holdout_split(d, 0.0, 1), std::runtime_error);
    CHECK_THROWS_AS(holdout_split(d, 1.0, 1), std::runtime_error);
}

TEST_CASE("kfold_split partitions evenly per genre") {
    SynthOptions opt;
    opt.paragraphs = 130;  // 13 genres x 10 paragraphs
    opt.genres = 13;
    opt.seed = 2;
    const Dataset d = synth_keyword(opt);

    const auto folds = kfold_split(d, 10, 77);
    REQUIRE(folds.size() == 10);

    Dataset test_union;
    for (const auto& [train_set, test_set] : folds) {
        CHECK(train_set.paragraphs.size() + test_set.paragraphs.size() == d.paragraphs.size());
        CHECK(keys(merge(train_set, test_set)) == keys(d));
        // each fold's test set holds exactly one paragraph per genre
        std::map<std::string, int> per_genre;
        for (const auto& p : test_set.paragraphs) ++per_genre[p.genre];
        CHECK(per_genre.size() == 13);
        for (const auto& [g, n] : per_genre) CHECK(n == 1);
        test_union = merge(test_union, test_set);
    }
    CHECK(keys(test_union) == keys(d));
}

TEST_CASE("kfold_split with k equal to paragraph count") {
    SynthOptions opt;
    opt.paragraphs = 10;
    opt.genres = 1;
    const Dataset d = synth_keyword(opt);
    const auto folds = kfold_split(d, 10, 3);
    for (const auto& [train_set, test_set] : folds) CHECK(test_set.paragraphs.size() == 1);

    CHECK_THROWS_WITH_AS(kfold_split(d, 11, 3), doctest::Contains("exceeds"), std::runtime_error);
    CHECK_THROWS_AS(kfold_split(d, 1, 3), std::runtime_error);
}

TEST_CASE("genre_folds holds out one genre per fold") {
    SynthOptions opt;
    opt.paragraphs = 26;
    opt.genres = 13;
    const Dataset d = synth_keyword(opt);
    const auto folds = genre_folds(d);
    REQUIRE(folds.size() == 13);
    for (const auto& [train_set, test_set] : folds) {
        REQUIRE(test_set.genre_inventory.size() == 1);
        const std::string held = *test_set.genre_inventory.begin();
        CHECK(train_set.genre_inventory.count(held) == 0);
        CHECK(keys(merge(train_set, test_set)) == keys(d));
    }

    SynthOptions single;
    single.paragraphs = 4;
    single.genres = 1;
    CHECK_THROWS_AS(genre_folds(synth_keyword(single)), std::runtime_error);
}

TEST_CASE("mark_connectives flags clause-initial phrases") {
    Paragraph p;
    p.doc_id = "d";
    p.genre = "g";
    Clause c1;
    for (const char* w : {"For", "example", ",", "it", "rains"})
        c1.tokens.push_back({w, "NN", "O", false});
    c1.gold = SELabel::State;
    Clause c2;
    for (const char* w : {"rain", "fell"}) c2.tokens.push_back({w, "NN", "O", false});
    c2.gold = SELabel::Event;
    c2.clause_index = 1;
    p.clauses = {c1, c2};
    Dataset d;
    d.paragraphs.push_back(p);
    d.rebuild_genre_inventory();

    const std::vector<std::string> lexicon = {"for", "for example"};
    const MarkResult res = mark_connectives(d, lexicon);
    const auto& toks = res.data.paragraphs[0].clauses[0].tokens;
    // longest match wins: both tokens of "for example", nothing further
    CHECK(toks[0].connective_member);
    CHECK(toks[1].connective_member);
    CHECK_FALSE(toks[2].connective_member);
    for (const auto& t : res.data.paragraphs[0].clauses[1].tokens)
        CHECK_FALSE(t.connective_member);
    CHECK(res.marked_clauses == 1);
    CHECK(res.total_clauses == 2);
    CHECK(res.fraction() == doctest::Approx(0.5));

    CHECK_THROWS_AS(mark_connectives(d, {}), std::runtime_error);
}

TEST_CASE("connective marks always form a clause prefix") {
    SynthOptions opt;
    opt.paragraphs = 40;
    opt.seed = 31;
    const Dataset d = synth_connective(opt);
    const std::vector<std::string> lexicon = {"for example", "however", "in addition",
                                              "as a result", "on the other hand", "therefore",
                                              "in contrast"};
    const MarkResult res = mark_connectives(d, lexicon);
    CHECK(res.marked_clauses > 0);
    for (const auto& p : res.data.paragraphs) {
        for (const auto& c : p.clauses) {
            bool seen_unmarked = false;
            for (const auto& t : c.tokens) {
                if (t.connective_member) CHECK_FALSE(seen_unmarked);
                if (!t.connective_member) seen_unmarked = true;
            }
        }
    }
}

TEST_CASE("SplitSpec validation") {
    SplitSpec s;
    s.kind = SplitSpec::Kind::Holdout;
    s.ratio = 0.8;
    CHECK_NOTHROW(s.validate());
    s.ratio = 1.2;
    CHECK_THROWS_AS(s.validate(), std::runtime_error);
    s.kind = SplitSpec::Kind::KFold;
    s.k = 1;
    CHECK_THROWS_AS(s.validate(), std::runtime_error);
}

TEST_CASE("unknown tags are counted, expected fallbacks are not") {
    TempFile f(R"({"doc_id":"d","genre":"g","clauses":[{"label":"STATE","tokens":[{"w":"?","pos":".","ne":"O"},{"w":"x","pos":"ZZZ","ne":"WEIRD"}]}]}
)");
    const Dataset d = load_corpus(f.path);
    CHECK(d.unknown_pos_tags == 1);
    CHECK(d.unknown_ne_tags == 1);
}
