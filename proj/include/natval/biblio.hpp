#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "natval/corpus.hpp"

namespace natval {

struct CitationInput {
    std::string article_id;
    Panel panel = Panel::A;
    int year = 0;
    std::int64_t citations = 0;
};

/// Normalised log-transformed citation score of one article.
struct NlcsRecord {
    std::string article_id;
    Panel panel = Panel::A;
    int year = 0;
    std::int64_t citations = 0;
    double log_cites = 0.0;
    double nlcs = 0.0;
};

/// ln(1 + c). Throws natval::Error for negative counts.
double log_citation(std::int64_t citations);

/// ln(1 + c) divided by the mean of ln(1 + c) over the article's (panel, year) stratum.
/// A stratum whose counts are all zero gets NLCS 1 throughout. Output order follows input.
std::vector<NlcsRecord> compute_nlcs(std::span<const CitationInput> articles);

void write_nlcs_csv(std::ostream& out, const std::vector<NlcsRecord>& records);

}  // namespace natval
