#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sitent {

// The closed 7-way situation entity inventory. Enumeration order doubles as
// the deterministic tie-break order everywhere labels are compared.
enum class SELabel : int {
    State = 0,
    Event,
    Report,
    Generic,
    Generalizing,
    Question,
    Imperative,
};

inline constexpr std::size_t kNumLabels = 7;

const std::array<std::string, kNumLabels>& se_label_names();
std::string_view to_string(SELabel l);
std::optional<SELabel> parse_se_label(std::string_view s);

// 36 word-level Penn Treebank tags; anything else (punctuation included)
// maps to the fallback encoding.
const std::vector<std::string>& pos_inventory();
// 7 entity categories; O / untagged is the fallback.
const std::vector<std::string>& ne_inventory();
// index in the inventory, or -1 for fallback symbols
int pos_index(const std::string& tag);
int ne_index(const std::string& tag);

struct Token {
    std::string surface;
    std::string pos;
    std::string ne;
    bool connective_member = false;
};

struct Clause {
    std::vector<Token> tokens;
    std::optional<SELabel> gold;
    std::size_t clause_index = 0;
};

struct Paragraph {
    std::string doc_id;
    std::string genre;
    std::vector<Clause> clauses;
};

struct Dataset {
    std::vector<Paragraph> paragraphs;
    std::set<std::string> genre_inventory;
    // occurrences of tag symbols outside the declared inventories, counted at load
    std::size_t unknown_pos_tags = 0;
    std::size_t unknown_ne_tags = 0;

    std::size_t clause_count() const;
    std::size_t token_count() const;
    void rebuild_genre_inventory();
};

struct SplitSpec {
    enum class Kind { Holdout, KFold, LeaveOneGenreOut };
    Kind kind = Kind::Holdout;
    double ratio = 0.8;
    std::size_t k = 10;
    std::uint64_t seed = 0;
    void validate() const;
};

// Line-delimited JSON, one paragraph per line (see README for the schema).
Dataset load_corpus(const std::string& path);
void save_corpus(const Dataset& d, const std::string& path);

struct LabelStats {
    std::array<std::size_t, kNumLabels> counts{};
    std::size_t total = 0;
    // genre -> share (percent) of that genre's clauses per label
    std::map<std::string, std::array<double, kNumLabels>> genre_percent;
    std::map<std::string, std::size_t> genre_totals;
};

LabelStats corpus_stats(const Dataset& d);

// Paragraph-level splits, genre-balanced and deterministic in the seed.
std::pair<Dataset, Dataset> holdout_split(const Dataset& d, double ratio, std::uint64_t seed);
std::vector<std::pair<Dataset, Dataset>> kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed);
// one (train, test) pair per genre, in sorted genre order
std::vector<std::pair<Dataset, Dataset>> genre_folds(const Dataset& d);

// One lowercase phrase per line, '#' comments and blank lines ignored.
std::vector<std::string> load_connective_lexicon(const std::string& path);

struct MarkResult {
    Dataset data;
    std::size_t marked_clauses = 0;
    std::size_t total_clauses = 0;
    double fraction() const {
        return total_clauses == 0 ? 0.0 : static_cast<double>(marked_clauses) / static_cast<double>(total_clauses);
    }
};

// Flags clause-initial connective phrases (case-insensitive, longest match).
MarkResult mark_connectives(const Dataset& d, const std::vector<std::string>& lexicon);

}  // namespace sitent
