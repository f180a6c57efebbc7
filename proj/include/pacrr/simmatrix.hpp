#pragma once

#include "pacrr/embedding.hpp"
#include "pacrr/matrix.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pacrr {

/// Fixed-size l_q x l_d query/document similarity matrix. Rows at or past
/// query_len and columns at or past retained_len() are exactly zero.
struct SimMatrix {
    Matrix values;
    std::size_t query_len = 0;
    /// Document length before truncation to l_d.
    std::size_t doc_len = 0;
    std::vector<std::string> query_terms;
    /// First min(doc_len, l_d) document tokens.
    std::vector<std::string> doc_tokens;

    std::size_t retained_len() const { return doc_tokens.size(); }
};

SimMatrix build_sim_matrix(std::span<const std::string> query_terms, std::span<const std::string> doc_tokens,
                           const EmbeddingTable& table, std::size_t l_q, std::size_t l_d);

/// Row-major CSV, 9 significant digits.
void write_sim_csv(std::ostream& out, const SimMatrix& sim);

}  // namespace pacrr
