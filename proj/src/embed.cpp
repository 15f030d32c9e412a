#include "sitent/embed.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sitent/rng.hpp"

namespace sitent {

namespace {

std::string lower_ascii(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

bool is_count_header(const std::vector<std::string>& fields) {
    if (fields.size() != 2) return false;
    for (const auto& f : fields) {
        if (f.empty()) return false;
        for (char c : f)
            if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension, std::uint64_t oov_seed)
    : dim_(dimension), oov_seed_(oov_seed) {
    if (dimension == 0) throw std::runtime_error("embedding dimension must be positive");
}

EmbeddingTable EmbeddingTable::load(const std::string& path, std::size_t dimension, std::uint64_t oov_seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);

    EmbeddingTable table(dimension, oov_seed);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::vector<std::string> fields;
        std::string f;
        while (ss >> f) fields.push_back(std::move(f));
        if (fields.empty()) continue;
        if (first && is_count_header(fields)) {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() != dimension + 1) {
            ++table.skipped_;
            continue;
        }
        std::vector<double> vec(dimension);
        bool ok = true;
        for (std::size_t i = 0; i < dimension; ++i) {
            if (!parse_double(fields[i + 1], vec[i])) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++table.skipped_;
            continue;
        }
        table.entries_[fields[0]] = std::move(vec);
    }
    if (table.entries_.empty()) throw std::runtime_error("no usable embedding rows in " + path);
    return table;
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& surface) const {
    auto it = entries_.find(surface);
    if (it != entries_.end()) return it->second;
    auto lowered = lower_ascii(surface);
    if (lowered != surface) {
        it = entries_.find(lowered);
        if (it != entries_.end()) return it->second;
    }
    std::lock_guard<std::mutex> lock(*oov_mutex_);
    auto [oit, inserted] = oov_.try_emplace(surface);
    if (inserted) {
        // vector depends only on (seed, surface), not on lookup order
        Rng rng(derive_seed(oov_seed_, fnv1a64(surface)));
        oit->second.resize(dim_);
        for (double& v : oit->second) v = rng.uniform(-0.25, 0.25);
    }
    return oit->second;
}

std::vector<double> FeatureVectorizer::vectorize(const Token& t) const {
    const std::size_t d = table_->dimension();
    const std::size_t n_pos = pos_inventory().size();
    const std::size_t n_ne = ne_inventory().size();
    std::vector<double> out(d + n_pos + n_ne, 0.0);

    const auto& emb = table_->lookup(t.surface);
    std::copy(emb.begin(), emb.end(), out.begin());
    // fallback symbols leave their one-hot block all zero
    if (int pi = pos_index(t.pos); pi >= 0) out[d + static_cast<std::size_t>(pi)] = 1.0;
    if (int ni = ne_index(t.ne); ni >= 0) out[d + n_pos + static_cast<std::size_t>(ni)] = 1.0;
    return out;
}

FeatureVectorizer::ParagraphFeatures FeatureVectorizer::vectorize_paragraph(const Paragraph& p) const {
    if (p.clauses.empty()) throw std::runtime_error("vectorize_paragraph: empty paragraph");
    std::size_t total = 0;
    for (const auto& c : p.clauses) total += c.tokens.size();

    ParagraphFeatures out;
    out.x = Matrix(total, dim());
    out.connective.resize(total, 0);
    std::size_t row = 0;
    for (const auto& c : p.clauses) {
        if (c.tokens.empty()) throw std::runtime_error("vectorize_paragraph: empty clause");
        Span span{row, row + c.tokens.size()};
        for (const auto& t : c.tokens) {
            auto v = vectorize(t);
            std::copy(v.begin(), v.end(), out.x.row(row));
            out.connective[row] = t.connective_member ? 1 : 0;
            ++row;
        }
        out.spans.push_back(span);
    }
    return out;
}

}  // namespace sitent
