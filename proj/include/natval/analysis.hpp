#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "natval/promptkit.hpp"
#include "natval/scorer.hpp"
#include "natval/stats.hpp"
#include "natval/wata.hpp"

namespace natval::analysis {

/// Aligned score vectors for one panel. Missing values are NaN; each correlation uses
/// the articles complete for its pair.
struct PanelFamilies {
    Panel panel = Panel::A;
    std::vector<std::string> article_ids;
    std::map<std::string, Eigen::VectorXd> families;
};

/// Family names: "<Regime>.std", "<Regime>.prob", "<Regime>" (combined) and "NLCS".
std::vector<PanelFamilies> collect_families(const std::vector<ScoreMatrixRow>& matrix,
                                            const std::map<std::string, double>& nlcs);

struct CorrelationRow {
    /// "std_vs_prob", "between_regimes" or "vs_nlcs".
    std::string block;
    std::string first;
    std::string second;
    Panel panel = Panel::A;
    std::size_t n = 0;
    std::optional<stats::CorrelationResult> result;
    std::string skip_reason;

    std::string pair() const { return first + "~" + second; }
};

/// Standard-vs-probability pairs for each regime, then every unordered pair among the
/// three combined regime scores and NLCS, per panel. Pairs with fewer than 3 complete
/// articles, or with a constant vector, are kept as rows with a skip reason. Each
/// (pair, panel) bootstraps from its own seed derived from `cfg.seed`.
std::vector<CorrelationRow> correlation_matrix(std::span<const PanelFamilies> panels, const stats::BootstrapConfig& cfg);

struct IndicatorDiff {
    std::string article_id;
    Panel panel = Panel::A;
    double diff = 0.0;
};

struct DiffResult {
    std::vector<IndicatorDiff> diffs;
    std::size_t excluded = 0;
};

/// combined(minuend) - combined(subtrahend) for articles complete in both regimes.
DiffResult indicator_difference(const std::vector<ScoreMatrixRow>& matrix, Regime minuend = Regime::Quality,
                                Regime subtrahend = Regime::ValueCountry);

struct TopBottom {
    /// Highest diffs first.
    std::vector<IndicatorDiff> top;
    /// Lowest diffs first.
    std::vector<IndicatorDiff> bottom;
    std::size_t k = 0;
    bool shrunk = false;
};

/// Orders by (diff, article_id); k above floor(n/2) shrinks to floor(n/2).
TopBottom top_bottom(std::span<const IndicatorDiff> diffs, std::size_t k);

/// Case-insensitive whole-word match of any alias in the title or abstract.
bool mentions_country(std::string_view title, std::string_view abstract, const CountryProfile& profile);
bool mentions_country(const Article& article, const CountryProfile& profile);

/// Fraction of articles mentioning the country. Throws natval::Error on empty input.
double mention_rate(std::span<const Article> articles, const CountryProfile& profile);

struct MentionEntry {
    IndicatorDiff diff;
    bool mentions = false;
};

struct MentionAudit {
    Panel panel = Panel::A;
    /// "top" or "bottom".
    std::string group;
    std::size_t k = 0;
    std::size_t mention_count = 0;
    std::vector<MentionEntry> members;
};

/// Top/bottom-k mention audit per panel. `articles` must cover every diff's article.
std::vector<MentionAudit> audit_mentions(std::span<const IndicatorDiff> diffs,
                                         const std::map<std::string, const Article*>& articles,
                                         const CountryProfile& profile, std::size_t k);

void write_correlations_csv(std::ostream& out, const std::vector<CorrelationRow>& rows);
void write_diffs_csv(std::ostream& out, const std::vector<IndicatorDiff>& diffs);
void write_audit_csv(std::ostream& out, const std::vector<MentionAudit>& audits);

struct WataDirection {
    /// Label of the high group, e.g. "quality_over_value".
    std::string direction;
    std::string note;
    std::vector<wata::TermStats> terms;
};

struct SummaryInput {
    std::string country;
    const std::vector<ScoreMatrixRow>* matrix = nullptr;
    std::map<Panel, double> mention_rates;
    const std::vector<CorrelationRow>* correlations = nullptr;
    const std::vector<MentionAudit>* audits = nullptr;
    const std::vector<WataDirection>* wata = nullptr;
    std::size_t diff_excluded = 0;
};

/// Markdown report: mean-score table by panel, mention rates, the three correlation
/// blocks, the mention audit and WATA selections.
void write_summary_markdown(std::ostream& out, const SummaryInput& in);

}  // namespace natval::analysis
