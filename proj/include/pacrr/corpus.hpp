#pragma once

#include "pacrr/embedding.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pacrr {

struct Document {
    std::string id;
    std::vector<std::string> tokens;
};

struct Query {
    std::string id;
    std::vector<std::string> title_tokens;
    std::vector<std::string> description_tokens;
    /// Filled by select_query_terms; at most l_q entries.
    std::vector<std::string> selected_terms;
};

/// Document frequencies over a collection.
class CorpusStats {
public:
    static CorpusStats from_documents(std::span<const Document> docs);

    std::size_t doc_count() const { return doc_count_; }
    std::size_t doc_freq(std::string_view term) const;

private:
    std::size_t doc_count_ = 0;
    std::unordered_map<std::string, std::size_t> doc_freq_;
};

/// Graded relevance judgments, query id -> doc id -> label.
class Qrels {
public:
    void set(const std::string& query_id, const std::string& doc_id, int label);
    std::optional<int> label(std::string_view query_id, std::string_view doc_id) const;
    /// Judged documents for a query in doc-id order; empty if none.
    std::vector<std::pair<std::string, int>> judged(std::string_view query_id) const;
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    const std::map<std::string, std::map<std::string, int>>& entries() const { return entries_; }

    bool operator==(const Qrels&) const = default;

private:
    std::map<std::string, std::map<std::string, int>> entries_;
};

struct TrainingTriple {
    Query query;
    Document positive;
    Document negative;
};

/// Lowercases and splits on any run of non-alphanumeric characters.
std::vector<std::string> tokenize(std::string_view text);

/// ln((N + 1) / (df + 1)).
double idf(std::string_view term, const CorpusStats& stats);

/// Title then description tokens, deduplicated in first-occurrence order.
std::vector<std::string> candidate_query_terms(const Query& query);

/// Drops lowest-scoring terms (the later one first on ties) until at most
/// `max_terms` remain; survivors keep their order.
std::vector<std::string> drop_lowest(std::vector<std::string> terms,
                                     const std::function<double(const std::string&)>& score,
                                     std::size_t max_terms);

/// Query terms to feed the model: candidate_query_terms reduced to l_q by IDF.
/// Throws pacrr::Error("query has no terms") for an empty query.
std::vector<std::string> select_query_terms(const Query& query, const CorpusStats& stats, std::size_t l_q);

/// Fills selected_terms of every query.
void assign_query_terms(std::span<Query> queries, const CorpusStats& stats, std::size_t l_q);

// File formats. Parsers throw pacrr::Error naming the 1-based line.

/// "id<TAB>title<TAB>description" per line.
std::vector<Query> parse_trec_topics(std::istream& in);
void write_trec_topics(std::ostream& out, std::span<const Query> queries);

/// "qid 0 docid label" per line.
Qrels parse_qrels(std::istream& in);
void write_qrels(std::ostream& out, const Qrels& qrels);

/// JSON lines {"id": ..., "text": ...}; text is tokenized on read.
std::vector<Document> parse_docs_jsonl(std::istream& in);
void write_docs_jsonl(std::ostream& out, std::span<const Document> docs);

/// Every (positive, negative) pair of judged documents with
/// label(positive) > label(negative), for each query in order.
/// Judged documents missing from `docs` are skipped.
std::vector<TrainingTriple> make_triples(std::span<const Query> queries, std::span<const Document> docs,
                                         const Qrels& qrels);

struct SyntheticParams {
    std::size_t vocab_size = 200;
    std::size_t n_queries = 20;
    std::size_t docs_per_query = 10;
    std::size_t doc_len = 64;
    std::size_t terms_per_query = 5;
    std::size_t embedding_dim = 32;
};

struct SyntheticCorpus {
    std::vector<Query> queries;
    std::vector<Document> documents;
    Qrels qrels;
    EmbeddingTable embeddings;
};

/// Deterministic corpus in which relevance is carried by query bigrams.
///
/// Each query has `terms_per_query` distinct terms (title = first two,
/// description = all, in order). Half of each query's documents (rounded
/// up) are relevant (label 1): they hold two non-overlapping copies of
/// adjacent query-term pairs covering at least three distinct terms.
/// The rest (label 0) hold at most one query term and so no query bigram.
/// All other tokens are drawn from the vocabulary minus the query's terms.
/// Vocabulary words have pairwise distinct Porter stems; embeddings are
/// random unit vectors.
SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, const SyntheticParams& params);

}  // namespace pacrr
