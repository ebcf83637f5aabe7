#include "natval/wata.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "natval/csv.hpp"
#include "natval/error.hpp"
#include "natval/hash.hpp"
#include "natval/rng.hpp"
#include "natval/stats.hpp"

namespace natval::wata {

namespace {

struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

bool word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

bool alphabetic(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalpha(c); });
}

std::vector<Token> scan(std::string_view text) {
    std::vector<Token> out;
    const std::size_t n = text.size();
    std::size_t i = 0;
    while (i < n) {
        if (!word_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        Token t;
        t.begin = i;
        while (i < n) {
            const auto c = static_cast<unsigned char>(text[i]);
            if (word_char(c)) {
                t.text.push_back(static_cast<char>(std::tolower(c)));
                ++i;
            } else if (c == '-' && i + 1 < n && word_char(static_cast<unsigned char>(text[i + 1]))) {
                t.text.push_back('-');
                ++i;
            } else {
                break;
            }
        }
        // Abbreviation period: "nov." in "sp. nov. from", but not "was." in "was. The".
        if (i + 2 < n && text[i] == '.' && std::isspace(static_cast<unsigned char>(text[i + 1])) &&
            t.text.size() <= 5 && alphabetic(t.text)) {
            std::size_t j = i + 1;
            while (j < n && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j < n && !std::isupper(static_cast<unsigned char>(text[j]))) {
                t.text.push_back('.');
                ++i;
            }
        }
        t.end = i;
        out.push_back(std::move(t));
    }
    return out;
}

bool sentence_break(std::string_view text, std::size_t dot) {
    if (text[dot] != '.' && text[dot] != '!' && text[dot] != '?') return false;
    std::size_t j = dot + 1;
    if (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) return false;
    while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    return j >= text.size() || std::isupper(static_cast<unsigned char>(text[j])) || std::isdigit(static_cast<unsigned char>(text[j]));
}

std::string sentence_around(std::string_view text, std::size_t begin, std::size_t end) {
    std::size_t start = begin;
    while (start > 0 && text[start - 1] != '\n' && !(start >= 2 && sentence_break(text, start - 2) && std::isspace(static_cast<unsigned char>(text[start - 1]))))
        --start;
    std::size_t stop = end;
    while (stop < text.size() && text[stop] != '\n' && !sentence_break(text, stop)) ++stop;
    if (stop < text.size() && text[stop] != '\n') ++stop;
    std::string out(text.substr(start, stop - start));
    const auto first = out.find_first_not_of(" \t");
    return first == std::string::npos ? std::string{} : out.substr(first);
}

}  // namespace

TermSet tokenize(std::string_view text) {
    TermSet out;
    for (auto& t : scan(text)) out.insert(std::move(t.text));
    return out;
}

MedianSplit split_by_median(std::span<const double> scores) {
    if (scores.empty()) throw Error("cannot split an empty score vector");
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    if (*lo == *hi) throw Error("all scores are equal; no median split exists");
    MedianSplit s;
    s.median = stats::median(scores);
    for (std::size_t i = 0; i < scores.size(); ++i) (scores[i] > s.median ? s.high : s.low).push_back(i);
    return s;
}

std::vector<TermStats> enriched_terms(std::span<const TermSet> high, std::span<const TermSet> low,
                                      const EnrichmentConfig& cfg) {
    if (high.empty() || low.empty()) throw Error("both groups must be nonempty");
    if (cfg.min_docs < 1) throw Error("min_docs must be at least 1");

    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& doc : high) {
        for (const auto& term : doc) ++counts[term].first;
    }
    for (const auto& doc : low) {
        for (const auto& term : doc) ++counts[term].second;
    }

    const std::size_t n_high = high.size();
    const std::size_t n_low = low.size();
    std::vector<TermStats> tested;
    for (const auto& [term, c] : counts) {
        if (c.first + c.second < cfg.min_docs || cfg.stop_words.contains(term)) continue;
        TermStats t{term, c.first, c.second, n_high, n_low};
        if (c.first + c.second < n_high + n_low) {
            const auto res = stats::chi_squared_2x2(static_cast<std::int64_t>(c.first),
                                                    static_cast<std::int64_t>(n_high - c.first),
                                                    static_cast<std::int64_t>(c.second),
                                                    static_cast<std::int64_t>(n_low - c.second), cfg.yates);
            t.chi2 = res.statistic;
            t.p = res.p_value;
        }
        tested.push_back(std::move(t));
    }

    std::vector<double> p(tested.size());
    std::transform(tested.begin(), tested.end(), p.begin(), [](const TermStats& t) { return t.p; });
    const auto flags = stats::bh_select(p, cfg.alpha);
    for (std::size_t i = 0; i < tested.size(); ++i) {
        auto& t = tested[i];
        t.bh_significant = flags[i];
        t.selected = flags[i] && t.docs_high * t.n_low > t.docs_low * t.n_high;
    }
    std::stable_sort(tested.begin(), tested.end(), [](const TermStats& a, const TermStats& b) {
        if (a.selected != b.selected) return a.selected;
        return a.chi2 > b.chi2;
    });
    return tested;
}

std::vector<ContextSnippet> sample_contexts(const std::string& term, std::span<const Document> corpus, std::size_t n,
                                            std::uint64_t seed) {
    std::vector<std::pair<std::size_t, Token>> hits;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (auto& tok : scan(corpus[i].text)) {
            if (tok.text == term) {
                hits.emplace_back(i, std::move(tok));
                break;
            }
        }
    }
    if (hits.empty()) throw Error(fmt::format("term '{}' does not occur in the corpus", term));

    std::vector<std::size_t> chosen(hits.size());
    std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    if (hits.size() > n) {
        std::mt19937_64 rng(substream_seed(seed, fnv1a64(term)));
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_below(rng, chosen.size() - i));
            std::swap(chosen[i], chosen[j]);
        }
        chosen.resize(n);
        std::sort(chosen.begin(), chosen.end());
    }

    std::vector<ContextSnippet> out;
    out.reserve(chosen.size());
    for (auto h : chosen) {
        const auto& [doc, tok] = hits[h];
        out.push_back({corpus[doc].id, sentence_around(corpus[doc].text, tok.begin, tok.end)});
    }
    return out;
}

void write_terms_csv(std::ostream& out, const std::vector<TermStats>& terms, std::string_view direction, bool header) {
    if (header)
        csv::write_row(out, {"direction", "term", "docs_high", "docs_low", "n_high", "n_low", "chi2", "p", "selected"});
    for (const auto& t : terms) {
        csv::write_row(out, {std::string(direction), t.term, std::to_string(t.docs_high), std::to_string(t.docs_low),
                             std::to_string(t.n_high), std::to_string(t.n_low), fmt::format("{}", t.chi2),
                             fmt::format("{}", t.p), t.selected ? "1" : "0"});
    }
}

}  // namespace natval::wata
