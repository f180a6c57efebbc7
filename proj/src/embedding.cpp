#include "pacrr/embedding.hpp"

#include "pacrr/error.hpp"
#include "pacrr/kernels.hpp"
#include "pacrr/stemmer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace pacrr {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
    throw Error(what + " at line " + std::to_string(line));
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw Error("embedding dimension must be positive");
}

void EmbeddingTable::add(std::string_view term, std::vector<double> vector) {
    std::string key = lowercase(term);
    if (vector.size() != dimension_) throw Error("inconsistent dimension for term '" + key + "'");
    if (std::all_of(vector.begin(), vector.end(), [](double v) { return v == 0.0; })) {
        throw Error("zero vector for term '" + key + "'");
    }
    if (!std::all_of(vector.begin(), vector.end(), [](double v) { return std::isfinite(v); })) {
        throw Error("non-finite value for term '" + key + "'");
    }
    if (index_.contains(key)) throw Error("duplicate term '" + key + "'");
    const double norm = std::sqrt(kernels::active().dot(vector.data(), vector.data(), vector.size()));
    index_.emplace(key, terms_.size());
    terms_.push_back(std::move(key));
    vectors_.push_back(std::move(vector));
    norms_.push_back(norm);
}

std::optional<std::size_t> EmbeddingTable::index_of(std::string_view term) const {
    const auto it = index_.find(std::string(term));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool EmbeddingTable::contains(std::string_view term) const { return index_of(term).has_value(); }

std::span<const double> EmbeddingTable::vector(std::string_view term) const {
    const auto idx = index_of(term);
    if (!idx) return {};
    return vectors_[*idx];
}

double EmbeddingTable::norm(std::string_view term) const {
    const auto idx = index_of(term);
    return idx ? norms_[*idx] : 0.0;
}

EmbeddingTable load_embeddings(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error("missing header at line 1");
    ++line_no;
    const auto header = split_ws(line);
    std::size_t vocab = 0;
    std::size_t dim = 0;
    if (header.size() != 2 || !parse_number(header[0], vocab) || !parse_number(header[1], dim) || dim == 0) {
        fail_at(line_no, "malformed header");
    }
    EmbeddingTable table(dim);
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != dim + 1) fail_at(line_no, "inconsistent dimension");
        std::vector<double> vec(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            if (!parse_number(fields[k + 1], vec[k])) fail_at(line_no, "malformed line");
        }
        try {
            table.add(fields[0], std::move(vec));
        } catch (const Error& e) {
            fail_at(line_no, e.what());
        }
    }
    if (table.size() != vocab) {
        throw Error("header declares " + std::to_string(vocab) + " terms but file has " +
                    std::to_string(table.size()));
    }
    return table;
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    out << table.size() << ' ' << table.dimension() << '\n';
    char buf[32];
    for (const auto& term : table.terms()) {
        out << term;
        for (double v : table.vector(term)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ' ' << buf;
        }
        out << '\n';
    }
}

double term_similarity_stemmed(std::string_view a, std::string_view stem_a, std::string_view b,
                               std::string_view stem_b, const EmbeddingTable& table) {
    if (stem_a == stem_b) return 1.0;
    const auto va = table.vector(a);
    const auto vb = table.vector(b);
    if (va.empty() || vb.empty()) return 0.0;
    const double cos = kernels::active().dot(va.data(), vb.data(), va.size()) / (table.norm(a) * table.norm(b));
    return std::clamp(cos, -1.0, 1.0);
}

double term_similarity(std::string_view a, std::string_view b, const EmbeddingTable& table) {
    return term_similarity_stemmed(a, porter_stem(a), b, porter_stem(b), table);
}

}  // namespace pacrr
