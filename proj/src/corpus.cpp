#include "pacrr/corpus.hpp"

#include "pacrr/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

namespace pacrr {

namespace {

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
    throw Error(what + " at line " + std::to_string(line));
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

bool blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string join(std::span<const std::string> tokens) {
    std::string out;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (k > 0) out.push_back(' ');
        out += tokens[k];
    }
    return out;
}

}  // namespace

CorpusStats CorpusStats::from_documents(std::span<const Document> docs) {
    CorpusStats stats;
    stats.doc_count_ = docs.size();
    for (const auto& doc : docs) {
        std::unordered_set<std::string_view> seen;
        for (const auto& t : doc.tokens) {
            if (seen.insert(t).second) ++stats.doc_freq_[t];
        }
    }
    return stats;
}

std::size_t CorpusStats::doc_freq(std::string_view term) const {
    const auto it = doc_freq_.find(std::string(term));
    return it == doc_freq_.end() ? 0 : it->second;
}

void Qrels::set(const std::string& query_id, const std::string& doc_id, int label) {
    entries_[query_id][doc_id] = label;
}

std::optional<int> Qrels::label(std::string_view query_id, std::string_view doc_id) const {
    const auto q = entries_.find(std::string(query_id));
    if (q == entries_.end()) return std::nullopt;
    const auto d = q->second.find(std::string(doc_id));
    if (d == q->second.end()) return std::nullopt;
    return d->second;
}

std::vector<std::pair<std::string, int>> Qrels::judged(std::string_view query_id) const {
    const auto q = entries_.find(std::string(query_id));
    if (q == entries_.end()) return {};
    return {q->second.begin(), q->second.end()};
}

std::size_t Qrels::size() const {
    std::size_t n = 0;
    for (const auto& [q, docs] : entries_) n += docs.size();
    return n;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double idf(std::string_view term, const CorpusStats& stats) {
    const auto n = static_cast<double>(stats.doc_count());
    const auto df = static_cast<double>(stats.doc_freq(term));
    return std::log((n + 1.0) / (df + 1.0));
}

std::vector<std::string> candidate_query_terms(const Query& query) {
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (const auto* list : {&query.title_tokens, &query.description_tokens}) {
        for (const auto& t : *list) {
            if (seen.insert(t).second) terms.push_back(t);
        }
    }
    return terms;
}

std::vector<std::string> drop_lowest(std::vector<std::string> terms,
                                     const std::function<double(const std::string&)>& score,
                                     std::size_t max_terms) {
    std::vector<double> scores;
    scores.reserve(terms.size());
    for (const auto& t : terms) scores.push_back(score(t));
    while (terms.size() > max_terms) {
        std::size_t victim = 0;
        for (std::size_t k = 1; k < terms.size(); ++k) {
            if (scores[k] <= scores[victim]) victim = k;
        }
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(victim));
        scores.erase(scores.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    return terms;
}

std::vector<std::string> select_query_terms(const Query& query, const CorpusStats& stats, std::size_t l_q) {
    if (l_q == 0) throw Error("l_q must be positive");
    auto terms = candidate_query_terms(query);
    if (terms.empty()) throw Error("query has no terms");
    return drop_lowest(std::move(terms), [&](const std::string& t) { return idf(t, stats); }, l_q);
}

void assign_query_terms(std::span<Query> queries, const CorpusStats& stats, std::size_t l_q) {
    for (auto& q : queries) {
        try {
            q.selected_terms = select_query_terms(q, stats, l_q);
        } catch (const Error& e) {
            throw Error("query " + q.id + ": " + e.what());
        }
    }
}

std::vector<Query> parse_trec_topics(std::istream& in) {
    std::vector<Query> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos) {
            fail_at(line_no, "malformed topic line (expected id<TAB>title<TAB>description)");
        }
        Query q;
        q.id = line.substr(0, tab1);
        if (q.id.empty() || split_ws(q.id).size() != 1 || split_ws(q.id)[0].size() != q.id.size()) {
            fail_at(line_no, "malformed topic id");
        }
        q.title_tokens = tokenize(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1));
        q.description_tokens = tokenize(std::string_view(line).substr(tab2 + 1));
        queries.push_back(std::move(q));
    }
    return queries;
}

void write_trec_topics(std::ostream& out, std::span<const Query> queries) {
    for (const auto& q : queries) {
        out << q.id << '\t' << join(q.title_tokens) << '\t' << join(q.description_tokens) << '\n';
    }
}

Qrels parse_qrels(std::istream& in) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        int label = 0;
        if (fields.size() != 4) fail_at(line_no, "malformed qrels line");
        const auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), label);
        if (ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
            fail_at(line_no, "malformed qrels label");
        }
        qrels.set(std::string(fields[0]), std::string(fields[2]), label);
    }
    return qrels;
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
    for (const auto& [qid, docs] : qrels.entries()) {
        for (const auto& [docid, label] : docs) {
            out << qid << " 0 " << docid << ' ' << label << '\n';
        }
    }
}

std::vector<Document> parse_docs_jsonl(std::istream& in) {
    std::vector<Document> docs;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        const auto obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) fail_at(line_no, "malformed JSON");
        const auto id = obj.find("id");
        const auto text = obj.find("text");
        if (id == obj.end() || !id->is_string() || text == obj.end() || !text->is_string()) {
            fail_at(line_no, "document needs string fields \"id\" and \"text\"");
        }
        Document doc{id->get<std::string>(), tokenize(text->get<std::string>())};
        if (!ids.insert(doc.id).second) fail_at(line_no, "duplicate document id '" + doc.id + "'");
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_docs_jsonl(std::ostream& out, std::span<const Document> docs) {
    for (const auto& d : docs) {
        const nlohmann::json obj{{"id", d.id}, {"text", join(d.tokens)}};
        out << obj.dump() << '\n';
    }
}

std::vector<TrainingTriple> make_triples(std::span<const Query> queries, std::span<const Document> docs,
                                         const Qrels& qrels) {
    std::unordered_map<std::string_view, const Document*> by_id;
    for (const auto& d : docs) by_id.emplace(d.id, &d);
    std::vector<TrainingTriple> triples;
    for (const auto& q : queries) {
        std::vector<std::pair<const Document*, int>> judged;
        for (const auto& [docid, label] : qrels.judged(q.id)) {
            if (const auto it = by_id.find(docid); it != by_id.end()) judged.emplace_back(it->second, label);
        }
        for (const auto& [pos, pos_label] : judged) {
            for (const auto& [neg, neg_label] : judged) {
                if (pos_label > neg_label) triples.push_back({q, *pos, *neg});
            }
        }
    }
    return triples;
}

}  // namespace pacrr
