#include "sitent/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "sitent/rng.hpp"

namespace sitent {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

const std::array<std::string, kNumLabels>& se_label_names() {
    static const std::array<std::string, kNumLabels> names = {
        "STATE", "EVENT", "REPORT", "GENERIC", "GENERALIZING", "QUESTION", "IMPERATIVE"};
    return names;
}

std::string_view to_string(SELabel l) { return se_label_names()[static_cast<std::size_t>(l)]; }

std::optional<SELabel> parse_se_label(std::string_view s) {
    const auto& names = se_label_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == s) return static_cast<SELabel>(i);
    }
    return std::nullopt;
}

const std::vector<std::string>& pos_inventory() {
    static const std::vector<std::string> tags = {
        "CC", "CD",  "DT",  "EX",  "FW",  "IN",   "JJ",  "JJR", "JJS", "LS",  "MD",  "NN",
        "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB",  "RBR", "RBS", "RP",  "SYM",
        "TO",  "UH",  "VB",  "VBD", "VBG", "VBN",  "VBP", "VBZ", "WDT", "WP",  "WP$", "WRB"};
    return tags;
}

const std::vector<std::string>& ne_inventory() {
    static const std::vector<std::string> tags = {
        "PERSON", "LOCATION", "ORGANIZATION", "DATE", "TIME", "NUMBER", "MISC"};
    return tags;
}

namespace {
std::unordered_map<std::string, int> build_index(const std::vector<std::string>& inv) {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < inv.size(); ++i) m[inv[i]] = static_cast<int>(i);
    return m;
}
}  // namespace

int pos_index(const std::string& tag) {
    static const auto idx = build_index(pos_inventory());
    auto it = idx.find(tag);
    return it == idx.end() ? -1 : it->second;
}

int ne_index(const std::string& tag) {
    static const auto idx = build_index(ne_inventory());
    auto it = idx.find(tag);
    return it == idx.end() ? -1 : it->second;
}

namespace {

// expected fallbacks: punctuation POS tags and the O / untagged NE marker
// encode as all-zero blocks without being reported as unknown symbols
bool pos_expected_fallback(const std::string& tag) {
    static const std::set<std::string> punct = {"",  ".",     ",",     ":",  "``",
                                                "''", "-LRB-", "-RRB-", "$",  "#"};
    return punct.count(tag) > 0;
}

bool ne_expected_fallback(const std::string& tag) { return tag.empty() || tag == "O"; }

}  // namespace

std::size_t Dataset::clause_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.clauses.size();
    return n;
}

std::size_t Dataset::token_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs)
        for (const auto& c : p.clauses) n += c.tokens.size();
    return n;
}

void Dataset::rebuild_genre_inventory() {
    genre_inventory.clear();
    for (const auto& p : paragraphs) genre_inventory.insert(p.genre);
}

void SplitSpec::validate() const {
    if (kind == Kind::Holdout && (ratio <= 0.0 || ratio >= 1.0)) fail("holdout ratio must be in (0,1)");
    if (kind == Kind::KFold && k < 2) fail("k must be >= 2");
}

Dataset load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open corpus file: " + path);

    Dataset d;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(lineno);

        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            fail(where + ": malformed record: " + e.what());
        }
        if (!rec.is_object()) fail(where + ": record is not an object");
        if (!rec.contains("doc_id") || !rec["doc_id"].is_string()) fail(where + ": missing doc_id");
        if (!rec.contains("genre") || !rec["genre"].is_string()) fail(where + ": missing genre");
        if (!rec.contains("clauses") || !rec["clauses"].is_array()) fail(where + ": missing clauses");

        Paragraph para;
        para.doc_id = rec["doc_id"].get<std::string>();
        para.genre = rec["genre"].get<std::string>();
        if (rec["clauses"].empty()) fail(where + ": paragraph has no clauses");

        for (const auto& jc : rec["clauses"]) {
            Clause clause;
            clause.clause_index = para.clauses.size();
            if (!jc.is_object() || !jc.contains("tokens") || !jc["tokens"].is_array())
                fail(where + ": clause " + std::to_string(clause.clause_index) + " has no token list");
            if (jc["tokens"].empty())
                fail(where + ": clause " + std::to_string(clause.clause_index) + " is empty");
            if (jc.contains("label") && !jc["label"].is_null()) {
                if (!jc["label"].is_string())
                    fail(where + ": clause label must be a string or null");
                const std::string ls = jc["label"].get<std::string>();
                auto parsed = parse_se_label(ls);
                if (!parsed) fail(where + ": unknown SE label \"" + ls + "\"");
                clause.gold = *parsed;
            }
            for (const auto& jt : jc["tokens"]) {
                Token t;
                if (!jt.is_object() || !jt.contains("w") || !jt["w"].is_string())
                    fail(where + ": token missing surface field \"w\"");
                t.surface = jt["w"].get<std::string>();
                t.pos = jt.value("pos", std::string());
                t.ne = jt.value("ne", std::string());
                if (pos_index(t.pos) < 0 && !pos_expected_fallback(t.pos)) ++d.unknown_pos_tags;
                if (ne_index(t.ne) < 0 && !ne_expected_fallback(t.ne)) ++d.unknown_ne_tags;
                clause.tokens.push_back(std::move(t));
            }
            para.clauses.push_back(std::move(clause));
        }
        d.paragraphs.push_back(std::move(para));
    }
    d.rebuild_genre_inventory();
    return d;
}

void save_corpus(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write corpus file: " + path);
    for (const auto& p : d.paragraphs) {
        ordered_json rec;
        rec["doc_id"] = p.doc_id;
        rec["genre"] = p.genre;
        rec["clauses"] = ordered_json::array();
        for (const auto& c : p.clauses) {
            ordered_json jc;
            if (c.gold)
                jc["label"] = std::string(to_string(*c.gold));
            else
                jc["label"] = nullptr;
            jc["tokens"] = ordered_json::array();
            for (const auto& t : c.tokens) {
                ordered_json jt;
                jt["w"] = t.surface;
                jt["pos"] = t.pos;
                jt["ne"] = t.ne;
                jc["tokens"].push_back(std::move(jt));
            }
            rec["clauses"].push_back(std::move(jc));
        }
        out << rec.dump() << "\n";
    }
    if (!out) fail("write failed: " + path);
}

LabelStats corpus_stats(const Dataset& d) {
    LabelStats s;
    std::map<std::string, std::array<std::size_t, kNumLabels>> per_genre;
    for (const auto& p : d.paragraphs) {
        for (const auto& c : p.clauses) {
            if (!c.gold) fail("corpus_stats: unlabeled clause in " + p.doc_id);
            const auto li = static_cast<std::size_t>(*c.gold);
            ++s.counts[li];
            ++s.total;
            ++per_genre[p.genre][li];
            ++s.genre_totals[p.genre];
        }
    }
    if (s.total == 0) fail("corpus_stats: no labeled clauses");
    for (const auto& [genre, counts] : per_genre) {
        auto& pct = s.genre_percent[genre];
        const double total = static_cast<double>(s.genre_totals[genre]);
        for (std::size_t i = 0; i < kNumLabels; ++i)
            pct[i] = 100.0 * static_cast<double>(counts[i]) / total;
    }
    return s;
}

namespace {

// paragraph indices keyed by genre, each list in original dataset order
std::map<std::string, std::vector<std::size_t>> indices_by_genre(const Dataset& d) {
    std::map<std::string, std::vector<std::size_t>> by_genre;
    for (std::size_t i = 0; i < d.paragraphs.size(); ++i) by_genre[d.paragraphs[i].genre].push_back(i);
    return by_genre;
}

Dataset subset(const Dataset& d, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    Dataset out;
    out.unknown_pos_tags = 0;
    out.unknown_ne_tags = 0;
    for (std::size_t i : indices) out.paragraphs.push_back(d.paragraphs[i]);
    out.rebuild_genre_inventory();
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> holdout_split(const Dataset& d, double ratio, std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) fail("holdout ratio must be in (0,1)");
    std::vector<std::size_t> train_idx, test_idx;
    for (auto& [genre, idx] : indices_by_genre(d)) {
        auto shuffled = idx;
        Rng rng(derive_seed(seed, fnv1a64(genre)));
        rng.shuffle(shuffled);
        const auto n_train =
            static_cast<std::size_t>(std::llround(ratio * static_cast<double>(shuffled.size())));
        for (std::size_t i = 0; i < shuffled.size(); ++i)
            (i < n_train ? train_idx : test_idx).push_back(shuffled[i]);
    }
    return {subset(d, std::move(train_idx)), subset(d, std::move(test_idx))};
}

std::vector<std::pair<Dataset, Dataset>> kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed) {
    if (k < 2) fail("kfold_split: k must be >= 2");
    if (k > d.paragraphs.size()) fail("kfold_split: k exceeds paragraph count");

    std::vector<std::vector<std::size_t>> fold_idx(k);
    std::size_t genre_ordinal = 0;
    for (auto& [genre, idx] : indices_by_genre(d)) {
        auto shuffled = idx;
        Rng rng(derive_seed(seed, fnv1a64(genre)));
        rng.shuffle(shuffled);
        // round-robin with a rotating start so small genres spread across folds
        const std::size_t offset = genre_ordinal % k;
        for (std::size_t i = 0; i < shuffled.size(); ++i)
            fold_idx[(offset + i) % k].push_back(shuffled[i]);
        ++genre_ordinal;
    }

    std::vector<std::pair<Dataset, Dataset>> folds;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<std::size_t> train_idx;
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            train_idx.insert(train_idx.end(), fold_idx[g].begin(), fold_idx[g].end());
        }
        folds.emplace_back(subset(d, std::move(train_idx)), subset(d, fold_idx[f]));
    }
    return folds;
}

std::vector<std::pair<Dataset, Dataset>> genre_folds(const Dataset& d) {
    if (d.genre_inventory.size() < 2) fail("genre_folds: need at least 2 genres");
    std::vector<std::pair<Dataset, Dataset>> folds;
    auto by_genre = indices_by_genre(d);
    for (const auto& [genre, idx] : by_genre) {
        std::vector<std::size_t> train_idx;
        for (const auto& [other, oidx] : by_genre) {
            if (other == genre) continue;
            train_idx.insert(train_idx.end(), oidx.begin(), oidx.end());
        }
        folds.emplace_back(subset(d, std::move(train_idx)), subset(d, idx));
    }
    return folds;
}

std::vector<std::string> load_connective_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open connective lexicon: " + path);
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        phrases.push_back(lower_ascii(line.substr(b, e - b + 1)));
    }
    return phrases;
}

MarkResult mark_connectives(const Dataset& d, const std::vector<std::string>& lexicon) {
    if (lexicon.empty()) fail("mark_connectives: empty lexicon");

    // lexicon phrases as lowercase token sequences
    std::vector<std::vector<std::string>> phrases;
    std::size_t max_len = 0;
    for (const auto& phrase : lexicon) {
        std::istringstream ss(lower_ascii(phrase));
        std::vector<std::string> toks;
        std::string t;
        while (ss >> t) toks.push_back(t);
        if (toks.empty()) continue;
        max_len = std::max(max_len, toks.size());
        phrases.push_back(std::move(toks));
    }
    // longest phrases first
    std::stable_sort(phrases.begin(), phrases.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });

    MarkResult res;
    res.data = d;
    for (auto& p : res.data.paragraphs) {
        for (auto& c : p.clauses) {
            ++res.total_clauses;
            for (auto& t : c.tokens) t.connective_member = false;
            std::vector<std::string> prefix;
            for (std::size_t i = 0; i < c.tokens.size() && i < max_len; ++i)
                prefix.push_back(lower_ascii(c.tokens[i].surface));
            for (const auto& ph : phrases) {
                if (ph.size() > prefix.size()) continue;
                if (std::equal(ph.begin(), ph.end(), prefix.begin())) {
                    for (std::size_t i = 0; i < ph.size(); ++i) c.tokens[i].connective_member = true;
                    ++res.marked_clauses;
                    break;
                }
            }
        }
    }
    return res;
}

}  // namespace sitent
