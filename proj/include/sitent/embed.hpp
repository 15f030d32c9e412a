#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "sitent/corpus.hpp"
#include "sitent/tensor.hpp"

namespace sitent {

// Pretrained word vectors plus a seeded out-of-vocabulary policy. Vectors
// are frozen: nothing in here is ever trained.
class EmbeddingTable {
public:
    EmbeddingTable(std::size_t dimension, std::uint64_t oov_seed);

    // Whitespace-separated text, one `<token> <v1> ... <vd>` row per line.
    // An optional `<vocab> <dim>` header line is detected and skipped; rows
    // with the wrong arity are skipped and counted.
    static EmbeddingTable load(const std::string& path, std::size_t dimension, std::uint64_t oov_seed);

    std::size_t dimension() const { return dim_; }
    std::size_t entry_count() const { return entries_.size(); }
    std::size_t skipped_rows() const { return skipped_; }
    bool contains(const std::string& surface) const { return entries_.count(surface) > 0; }

    // exact match, then lowercase match, then a memoized uniform sample in
    // [-0.25, 0.25] per dimension; the same surface always maps to the same
    // vector, independent of lookup order and thread interleaving
    const std::vector<double>& lookup(const std::string& surface) const;

private:
    std::size_t dim_;
    std::uint64_t oov_seed_;
    std::size_t skipped_ = 0;
    std::unordered_map<std::string, std::vector<double>> entries_;
    mutable std::unordered_map<std::string, std::vector<double>> oov_;
    mutable std::unique_ptr<std::mutex> oov_mutex_ = std::make_unique<std::mutex>();
};

// Concatenates the word vector with POS and NE one-hot blocks into the
// per-token feature vector (table dimension + 36 + 7 components).
class FeatureVectorizer {
public:
    explicit FeatureVectorizer(const EmbeddingTable& table) : table_(&table) {}

    std::size_t dim() const { return table_->dimension() + pos_inventory().size() + ne_inventory().size(); }
    const EmbeddingTable& table() const { return *table_; }

    std::vector<double> vectorize(const Token& t) const;

    struct ParagraphFeatures {
        Matrix x;                             // L x dim, token rows in paragraph order
        std::vector<Span> spans;              // one half-open token range per clause
        std::vector<std::uint8_t> connective; // per token, from Token::connective_member
    };

    ParagraphFeatures vectorize_paragraph(const Paragraph& p) const;

private:
    const EmbeddingTable* table_;
};

}  // namespace sitent
