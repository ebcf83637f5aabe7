#include "natval/biblio.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "natval/csv.hpp"
#include "natval/error.hpp"

namespace natval {

double log_citation(std::int64_t citations) {
    if (citations < 0) throw Error(fmt::format("negative citation count {}", citations));
    return std::log1p(static_cast<double>(citations));
}

std::vector<NlcsRecord> compute_nlcs(std::span<const CitationInput> articles) {
    std::map<std::pair<Panel, int>, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < articles.size(); ++i) strata[{articles[i].panel, articles[i].year}].push_back(i);

    std::vector<NlcsRecord> out(articles.size());
    for (const auto& [key, members] : strata) {
        Eigen::VectorXd logs(static_cast<Eigen::Index>(members.size()));
        for (std::size_t j = 0; j < members.size(); ++j)
            logs(static_cast<Eigen::Index>(j)) = log_citation(articles[members[j]].citations);
        const double mean = logs.mean();
        for (std::size_t j = 0; j < members.size(); ++j) {
            const auto& a = articles[members[j]];
            const double lc = logs(static_cast<Eigen::Index>(j));
            out[members[j]] = NlcsRecord{a.article_id, a.panel, a.year, a.citations, lc, mean > 0.0 ? lc / mean : 1.0};
        }
    }
    return out;
}

void write_nlcs_csv(std::ostream& out, const std::vector<NlcsRecord>& records) {
    csv::write_row(out, {"article_id", "panel", "year", "citations", "nlcs"});
    for (const auto& r : records) {
        csv::write_row(out, {r.article_id, std::string(to_string(r.panel)), std::to_string(r.year),
                             std::to_string(r.citations), fmt::format("{}", r.nlcs)});
    }
}

}  // namespace natval
