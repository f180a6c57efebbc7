#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pacrr {

/// Term -> dense vector map loaded from word2vec text format.
/// Immutable once built; every vector has `dimension()` entries and is non-zero.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dimension);

    /// Adds a term (case-folded). Throws pacrr::Error on a duplicate term,
    /// a length mismatch, or an all-zero vector.
    void add(std::string_view term, std::vector<double> vector);

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return terms_.size(); }
    bool contains(std::string_view term) const;

    /// Vector for `term`, or an empty span if absent.
    std::span<const double> vector(std::string_view term) const;
    /// Euclidean norm of the stored vector; 0 if absent.
    double norm(std::string_view term) const;

    /// Terms in load order.
    const std::vector<std::string>& terms() const { return terms_; }

private:
    std::optional<std::size_t> index_of(std::string_view term) const;

    std::size_t dimension_ = 0;
    std::vector<std::string> terms_;
    std::vector<std::vector<double>> vectors_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Parses word2vec text format: header "V D", then "term v1 ... vD" per line.
/// Errors name the 1-based line number.
EmbeddingTable load_embeddings(std::istream& in);

/// Writes word2vec text format with round-trip (%.17g) precision.
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

/// Stem-aware cosine similarity:
///   1.0 when the Porter stems agree (checked before any lookup),
///   0.0 when either term is missing from the table,
///   otherwise the cosine of the two vectors, clamped to [-1, 1].
double term_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table);

/// Same as term_similarity with precomputed stems.
double term_similarity_stemmed(std::string_view a, std::string_view stem_a, std::string_view b,
                               std::string_view stem_b, const EmbeddingTable& table);

}  // namespace pacrr
