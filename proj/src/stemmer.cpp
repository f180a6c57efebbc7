#include "pacrr/stemmer.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace pacrr {

namespace {

// Works on a private copy of the word; `end_` is one past the last live
// character so suffix removal is just moving it.
class PorterWord {
public:
    explicit PorterWord(std::string_view word) : w_(word), end_(w_.size()) {}

    std::string str() const { return w_.substr(0, end_); }

    void run() {
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5a();
        step5b();
    }

private:
    bool consonant(std::size_t i) const {
        switch (w_[i]) {
            case 'a':
            case 'e':
            case 'i':
            case 'o':
            case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !consonant(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in w_[0, len).
    int measure(std::size_t len) const {
        int m = 0;
        std::size_t i = 0;
        while (i < len && consonant(i)) ++i;
        while (i < len) {
            while (i < len && !consonant(i)) ++i;
            if (i >= len) break;
            while (i < len && consonant(i)) ++i;
            ++m;
        }
        return m;
    }

    bool vowel_in(std::size_t len) const {
        for (std::size_t i = 0; i < len; ++i) {
            if (!consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(std::size_t len) const {
        return len >= 2 && w_[len - 1] == w_[len - 2] && consonant(len - 1);
    }

    // consonant-vowel-consonant ending at len-1, last not w, x or y
    bool cvc(std::size_t len) const {
        if (len < 3) return false;
        if (!consonant(len - 1) || consonant(len - 2) || !consonant(len - 3)) return false;
        const char c = w_[len - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view suffix) const {
        return end_ >= suffix.size() && std::string_view(w_).substr(end_ - suffix.size(), suffix.size()) == suffix;
    }

    std::size_t stem_len(std::string_view suffix) const { return end_ - suffix.size(); }

    void replace(std::string_view suffix, std::string_view with) {
        const std::size_t base = stem_len(suffix);
        w_.replace(base, end_ - base, with);
        end_ = base + with.size();
        w_.resize(end_);
    }

    using Rule = std::pair<std::string_view, std::string_view>;

    // First rule whose suffix matches decides; it fires only if the
    // remaining stem has measure > min_measure.
    template <std::size_t N>
    void apply_first(const std::array<Rule, N>& rules, int min_measure) {
        for (const auto& [suffix, with] : rules) {
            if (ends(suffix)) {
                if (measure(stem_len(suffix)) > min_measure) replace(suffix, with);
                return;
            }
        }
    }

    void step1a() {
        if (ends("sses")) {
            replace("sses", "ss");
        } else if (ends("ies")) {
            replace("ies", "i");
        } else if (ends("ss")) {
            // unchanged
        } else if (ends("s")) {
            replace("s", "");
        }
    }

    void step1b() {
        if (ends("eed")) {
            if (measure(stem_len("eed")) > 0) replace("eed", "ee");
            return;
        }
        bool stripped = false;
        if (ends("ed") && vowel_in(stem_len("ed"))) {
            replace("ed", "");
            stripped = true;
        } else if (ends("ing") && vowel_in(stem_len("ing"))) {
            replace("ing", "");
            stripped = true;
        }
        if (!stripped) return;
        if (ends("at") || ends("bl") || ends("iz")) {
            w_.push_back('e');
            ++end_;
        } else if (double_consonant(end_)) {
            const char c = w_[end_ - 1];
            if (c != 'l' && c != 's' && c != 'z') {
                --end_;
                w_.resize(end_);
            }
        } else if (measure(end_) == 1 && cvc(end_)) {
            w_.push_back('e');
            ++end_;
        }
    }

    void step1c() {
        if (ends("y") && vowel_in(stem_len("y"))) replace("y", "i");
    }

    void step2() {
        static constexpr std::array<Rule, 20> rules{{
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},  {"alli", "al"},     {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},  {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},   {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},   {"iviti", "ive"},   {"biliti", "ble"},
        }};
        apply_first(rules, 0);
    }

    void step3() {
        static constexpr std::array<Rule, 7> rules{{
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        }};
        apply_first(rules, 0);
    }

    void step4() {
        static constexpr std::array<std::string_view, 19> suffixes{
            "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
        };
        // Longest matching suffix wins.
        std::string_view best;
        for (std::string_view s : suffixes) {
            if (ends(s) && s.size() > best.size()) best = s;
        }
        if (best.empty()) return;
        const std::size_t len = stem_len(best);
        if (best == "ion" && (len == 0 || (w_[len - 1] != 's' && w_[len - 1] != 't'))) return;
        if (measure(len) > 1) replace(best, "");
    }

    void step5a() {
        if (!ends("e")) return;
        const std::size_t len = stem_len("e");
        const int m = measure(len);
        if (m > 1 || (m == 1 && !cvc(len))) replace("e", "");
    }

    void step5b() {
        if (measure(end_) > 1 && double_consonant(end_) && w_[end_ - 1] == 'l') {
            --end_;
            w_.resize(end_);
        }
    }

    std::string w_;
    std::size_t end_;
};

}  // namespace

std::string porter_stem(std::string_view term) {
    if (term.size() <= 2) return std::string(term);
    if (!std::all_of(term.begin(), term.end(), [](char c) { return c >= 'a' && c <= 'z'; })) {
        return std::string(term);
    }
    PorterWord word(term);
    word.run();
    return word.str();
}

}  // namespace pacrr
