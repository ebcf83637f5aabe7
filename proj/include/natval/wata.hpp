#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "natval/error.hpp"

namespace natval::wata {

using TermSet = std::set<std::string>;

/// Document-level term presence. Lowercase (ASCII) word tokens; letters, digits and
/// UTF-8 multibyte characters form words, hyphens are kept between word characters,
/// and a trailing period is kept on short alphabetic tokens used as abbreviations
/// (a period followed by space and a non-uppercase character, as in "sp. nov. from").
TermSet tokenize(std::string_view text);

struct Document {
    std::string id;
    /// Title and abstract.
    std::string text;
};

struct MedianSplit {
    double median = 0.0;
    /// Indices into the score vector.
    std::vector<std::size_t> high;
    std::vector<std::size_t> low;
};

/// high = scores strictly above the median, low = the rest. Throws natval::Error
/// when all scores are equal.
MedianSplit split_by_median(std::span<const double> scores);

struct TermStats {
    std::string term;
    std::size_t docs_high = 0;
    std::size_t docs_low = 0;
    std::size_t n_high = 0;
    std::size_t n_low = 0;
    double chi2 = 0.0;
    double p = 1.0;
    bool bh_significant = false;
    /// BH-significant and relatively more frequent in the high group.
    bool selected = false;
};

struct EnrichmentConfig {
    double alpha = 0.05;
    std::size_t min_docs = 5;
    bool yates = false;
    /// Terms dropped before testing; empty by default.
    std::set<std::string> stop_words;
};

/// Chi-squared test of presence for every term seen in at least `min_docs` documents,
/// with Benjamini-Hochberg across the whole tested family. Selected terms come first,
/// ordered by chi2 descending; the remaining tested terms follow in the same order.
std::vector<TermStats> enriched_terms(std::span<const TermSet> high, std::span<const TermSet> low,
                                      const EnrichmentConfig& cfg);

struct ContextSnippet {
    std::string article_id;
    std::string sentence;
};

/// Up to n documents containing the term, sampled uniformly without replacement,
/// each with the sentence around the first occurrence. Throws natval::Error when no
/// document contains the term.
std::vector<ContextSnippet> sample_contexts(const std::string& term, std::span<const Document> corpus, std::size_t n,
                                            std::uint64_t seed);

void write_terms_csv(std::ostream& out, const std::vector<TermStats>& terms, std::string_view direction,
                     bool header = true);

}  // namespace natval::wata
