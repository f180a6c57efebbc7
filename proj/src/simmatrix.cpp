#include "pacrr/simmatrix.hpp"

#include "pacrr/error.hpp"
#include "pacrr/stemmer.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace pacrr {

SimMatrix build_sim_matrix(std::span<const std::string> query_terms, std::span<const std::string> doc_tokens,
                           const EmbeddingTable& table, std::size_t l_q, std::size_t l_d) {
    if (query_terms.empty()) throw Error("similarity matrix needs at least one query term");
    if (query_terms.size() > l_q) {
        throw Error("query has " + std::to_string(query_terms.size()) + " terms but l_q is " + std::to_string(l_q));
    }
    if (l_d == 0) throw Error("l_d must be positive");

    SimMatrix sim;
    sim.values = Matrix(l_q, l_d);
    sim.query_len = query_terms.size();
    sim.doc_len = doc_tokens.size();
    sim.query_terms.assign(query_terms.begin(), query_terms.end());
    const std::size_t kept = std::min(doc_tokens.size(), l_d);
    sim.doc_tokens.assign(doc_tokens.begin(), doc_tokens.begin() + static_cast<std::ptrdiff_t>(kept));

    std::vector<std::string> query_stems;
    for (const auto& t : sim.query_terms) query_stems.push_back(porter_stem(t));
    std::vector<std::string> doc_stems;
    for (const auto& t : sim.doc_tokens) doc_stems.push_back(porter_stem(t));

    for (std::size_t i = 0; i < sim.query_len; ++i) {
        for (std::size_t j = 0; j < kept; ++j) {
            sim.values(i, j) =
                term_similarity_stemmed(sim.query_terms[i], query_stems[i], sim.doc_tokens[j], doc_stems[j], table);
        }
    }
    return sim;
}

void write_sim_csv(std::ostream& out, const SimMatrix& sim) {
    char buf[32];
    for (std::size_t i = 0; i < sim.values.rows(); ++i) {
        for (std::size_t j = 0; j < sim.values.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9g", sim.values(i, j));
            if (j > 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace pacrr
