#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natval/error.hpp"
#include "natval/gateway.hpp"

namespace natval {

/// A report from which no valid star level could be read. Carries the report for audit.
class ParseFailure : public Error {
public:
    ParseFailure(const std::string& reason, std::string report)
        : Error(reason), report_(std::move(report)) {}
    const std::string& report() const { return report_; }

private:
    std::string report_;
};

/// Star level asserted by a report: the last match of either "<digit>*" or
/// "score of <digit>". Throws ParseFailure when none is found or the digit is outside 1..4.
int extract_score(const std::string& report);

/// Collects probability mass per score key from token alternatives; tokens that are
/// not a bare 1..4 (ignoring surrounding spaces and '*') are dropped.
std::map<int, double> score_distribution(const std::vector<TokenProbability>& tokens);

/// Renormalizes over the keys and returns the expected star level.
/// Throws natval::Error on an empty distribution, zero mass, a key outside 1..4, or
/// a negative probability.
double weighted_score(const std::map<int, double>& distribution);

struct ScoreSample {
    std::string article_id;
    Regime regime = Regime::Quality;
    Variant variant = Variant::Report;
    int run_index = 1;
    /// Report variant only.
    std::optional<int> parsed_score;
    /// ProbabilityOnly variant only.
    std::optional<double> weighted_score;
    /// Non-empty when the response could not be scored.
    std::string failure;
    std::string fingerprint;
    std::string template_version;

    bool usable() const { return parsed_score.has_value() || weighted_score.has_value(); }
    double value() const { return parsed_score ? static_cast<double>(*parsed_score) : weighted_score.value(); }
};

/// Converts one gateway outcome into a sample; parse and transport failures are kept
/// as unusable samples with the reason recorded.
ScoreSample to_sample(const BatchOutcome& outcome);

struct ArticleScoreSummary {
    std::string article_id;
    Regime regime = Regime::Quality;
    /// NaN when no usable run exists for that variant.
    double std_mean = 0.0;
    double prob_mean = 0.0;
    /// Mean over every usable run of both variants.
    double combined = 0.0;
    std::size_t std_runs = 0;
    std::size_t prob_runs = 0;
    std::size_t failures = 0;
    bool incomplete = false;
};

/// Groups samples by (article, regime). Output is sorted by (article_id, regime) so the
/// result does not depend on sample order. Throws natval::Error when a group holds
/// more than `repetitions` samples of one variant.
std::vector<ArticleScoreSummary> aggregate(const std::vector<ScoreSample>& samples, int repetitions);

/// One row per article: panel plus std/prob/combined for each regime.
struct ScoreMatrixRow {
    std::string article_id;
    Panel panel = Panel::A;
    std::map<Regime, ArticleScoreSummary> regimes;

    /// NaN when the regime is missing.
    double std_mean(Regime r) const;
    double prob_mean(Regime r) const;
    double combined(Regime r) const;
    bool complete(Regime r) const;
};

std::vector<ScoreMatrixRow> build_score_matrix(const std::vector<ArticleScoreSummary>& summaries,
                                               const std::map<std::string, Panel>& panels);

/// Columns: article_id, panel, <Regime>_{std,prob,combined} x3, <Regime>_incomplete x3.
/// Missing values are written as empty cells.
void write_score_matrix(std::ostream& out, const std::vector<ScoreMatrixRow>& rows);
std::vector<ScoreMatrixRow> read_score_matrix(std::istream& in);

void write_samples_csv(std::ostream& out, const std::vector<ScoreSample>& samples);

}  // namespace natval
